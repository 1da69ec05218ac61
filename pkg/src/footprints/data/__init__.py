from footprints.data.cache import Cache, decode_sample, encode_sample, sample_key
from footprints.data.index import (
    ImageSample,
    SceneDescriptor,
    SplitSpec,
    load_dataset_index,
    load_scene,
    split_dataset,
    write_dataset_manifest,
)
from footprints.data.patches import (
    PatchSpec,
    generate_patchset,
    nearest_resize,
    normalize_image,
    sample_patch,
)
from footprints.data.stats import ClassStats, compute_class_stats
from footprints.data.tiles import TileGrid, tile_image
from footprints.data.torchsets import ArraySampleDataset, CacheDataset

__all__ = [
    "Cache",
    "sample_key",
    "encode_sample",
    "decode_sample",
    "ImageSample",
    "SceneDescriptor",
    "SplitSpec",
    "load_dataset_index",
    "load_scene",
    "split_dataset",
    "write_dataset_manifest",
    "PatchSpec",
    "generate_patchset",
    "sample_patch",
    "nearest_resize",
    "normalize_image",
    "ClassStats",
    "compute_class_stats",
    "TileGrid",
    "tile_image",
    "ArraySampleDataset",
    "CacheDataset",
]
