from footprints.fusion.ensemble import (
    EnsembleConfig,
    confidence_threshold,
    ensemble_merge,
    stitch_tiles,
)
from footprints.fusion.maskio import load_probability_mask, save_probability_mask
from footprints.fusion.postprocess import (
    Polygon,
    PolygonSet,
    classical_segment,
    polygonize,
    rasterize_polygons,
    superpixel_fuse,
)

__all__ = [
    "EnsembleConfig",
    "ensemble_merge",
    "confidence_threshold",
    "stitch_tiles",
    "classical_segment",
    "superpixel_fuse",
    "Polygon",
    "PolygonSet",
    "polygonize",
    "rasterize_polygons",
    "save_probability_mask",
    "load_probability_mask",
]
