"""Classical-segmentation fusion and polygon shape correction.

classical_segment wraps Otsu, watershed and SLIC; superpixel_fuse keeps the
segments that coincide with the network's mask; polygonize traces
4-connected components into rectilinear rings on the pixel-corner lattice
(so rasterizing them back at zero tolerance reproduces the mask exactly)
and simplifies them with Douglas-Peucker.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy import ndimage as ndi
from skimage import color as sk_color
from skimage import filters as sk_filters
from skimage import morphology as sk_morphology
from skimage import segmentation as sk_segmentation
from skimage import util as sk_util

FOUR_CONNECTED = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=int)

SEGMENT_METHODS = ("otsu", "watershed", "slic")


def _to_gray(image: np.ndarray) -> np.ndarray:
    image = np.asarray(image)
    if image.ndim == 3:
        return sk_color.rgb2gray(image)
    return sk_util.img_as_float(image)


def classical_segment(image: np.ndarray, method: str, params: Optional[dict] = None) -> np.ndarray:
    """Label map from a classical segmentation algorithm.

    A constant image short-circuits to a single label for every method; SLIC
    would otherwise return a purely positional grid.
    """
    if method not in SEGMENT_METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {SEGMENT_METHODS}")
    params = dict(params or {})
    image = np.asarray(image)
    if np.ptp(image) == 0:
        return np.ones(image.shape[:2], dtype=np.int32)

    if method == "otsu":
        gray = _to_gray(image)
        t = sk_filters.threshold_otsu(gray)
        return (gray > t).astype(np.int32)

    if method == "watershed":
        gray = _to_gray(image)
        gradient = sk_filters.sobel(gray)
        markers = params.get("markers")
        if markers is None and params.get("unet_mask") is not None:
            markers = _markers_from_mask(np.asarray(params["unet_mask"]))
        if markers is None:
            minima = sk_morphology.local_minima(gradient)
            markers, _ = ndi.label(minima)
        return sk_segmentation.watershed(gradient, markers).astype(np.int32)

    img = sk_util.img_as_float(image)
    return sk_segmentation.slic(
        img,
        n_segments=int(params.get("n_segments", 100)),
        compactness=float(params.get("compactness", 10.0)),
        start_label=1,
        channel_axis=-1 if img.ndim == 3 else None,
    ).astype(np.int32)


def _markers_from_mask(mask: np.ndarray) -> np.ndarray:
    # seeds: background where the mask is empty, one seed per mask core
    dist = ndi.distance_transform_edt(mask > 0)
    markers = np.zeros(mask.shape, dtype=np.int32)
    markers[dist == 0] = 1
    if dist.max() > 0:
        cores, n = ndi.label(dist > 0.5 * dist.max())
        markers[cores > 0] = cores[cores > 0] + 1
    return markers


def superpixel_fuse(unet_mask: np.ndarray, labels: np.ndarray, overlap_tau: float = 0.5) -> np.ndarray:
    """Union of segments whose fraction inside the mask reaches overlap_tau."""
    unet_mask = np.asarray(unet_mask)
    labels = np.asarray(labels)
    if unet_mask.shape != labels.shape:
        raise ValueError(f"shape mismatch: mask {unet_mask.shape} vs labels {labels.shape}")
    flat = labels.ravel()
    sizes = np.bincount(flat)
    inside = np.bincount(flat, weights=(unet_mask.ravel() > 0).astype(np.float64))
    keep = inside >= overlap_tau * np.maximum(sizes, 1)
    keep &= sizes > 0
    return keep[labels].astype(np.uint8)


@dataclass
class Polygon:
    exterior: np.ndarray  # (V, 2) corner-lattice (row, col) vertices
    holes: List[np.ndarray] = field(default_factory=list)
    area: float = 0.0
    component_id: int = 0

    def to_geojson(self) -> dict:
        rings = [self.exterior] + self.holes
        return {
            "type": "Polygon",
            "coordinates": [
                [[float(c), float(r)] for r, c in ring] + [[float(ring[0][1]), float(ring[0][0])]]
                for ring in rings
            ],
            "properties": {"area": self.area, "component_id": self.component_id},
        }


@dataclass
class PolygonSet:
    polygons: List[Polygon] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.polygons)

    def to_geojson(self) -> dict:
        return {
            "type": "FeatureCollection",
            "features": [
                {"type": "Feature", "geometry": p.to_geojson(), "properties": p.to_geojson()["properties"]}
                for p in self.polygons
            ],
        }


def _shoelace(ring: np.ndarray) -> float:
    # x = col, y = row
    y = ring[:, 0].astype(np.float64)
    x = ring[:, 1].astype(np.float64)
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _boundary_edges(local: np.ndarray, r_off: int, c_off: int) -> Dict[Tuple[int, int], List[Tuple[int, int]]]:
    """Directed unit edges on the corner lattice with the region on a fixed side."""
    pad = np.pad(local, 1)
    up, down = pad[:-2, 1:-1], pad[2:, 1:-1]
    left, right = pad[1:-1, :-2], pad[1:-1, 2:]
    edges: Dict[Tuple[int, int], List[Tuple[int, int]]] = {}

    def add(r0, c0, r1, c1):
        for rr, cc, r2, c2 in zip(r0, c0, r1, c1):
            edges.setdefault((rr, cc), []).append((r2, c2))

    rs, cs = np.nonzero(local & ~up)  # top edge: east
    add(rs + r_off, cs + c_off, rs + r_off, cs + 1 + c_off)
    rs, cs = np.nonzero(local & ~right)  # right edge: south
    add(rs + r_off, cs + 1 + c_off, rs + 1 + r_off, cs + 1 + c_off)
    rs, cs = np.nonzero(local & ~down)  # bottom edge: west
    add(rs + 1 + r_off, cs + 1 + c_off, rs + 1 + r_off, cs + c_off)
    rs, cs = np.nonzero(local & ~left)  # left edge: north
    add(rs + 1 + r_off, cs + c_off, rs + r_off, cs + c_off)
    return edges


_RIGHT_TURN_PRIORITY = 0  # documented choice: hug the region at pinch corners


def _trace_rings(edges: Dict[Tuple[int, int], List[Tuple[int, int]]]) -> List[np.ndarray]:
    """Chain directed edges into closed rings; at ambiguous (pinch) corners
    prefer the sharpest right turn so every ring stays simple."""
    rings = []
    while edges:
        start = next(iter(edges))
        ring = [start]
        current = start
        prev_dir = None
        while True:
            outs = edges[current]
            if len(outs) == 1 or prev_dir is None:
                nxt = outs.pop(0)
            else:
                right = (prev_dir[1], -prev_dir[0])
                ranked = sorted(
                    range(len(outs)),
                    key=lambda i: _turn_rank(prev_dir, right, current, outs[i]),
                )
                nxt = outs.pop(ranked[0])
            if not outs:
                del edges[current]
            prev_dir = (nxt[0] - current[0], nxt[1] - current[1])
            current = nxt
            if current == start:
                break
            ring.append(current)
        rings.append(np.asarray(ring, dtype=np.int64))
    return rings


def _turn_rank(prev_dir, right, current, candidate) -> int:
    d = (candidate[0] - current[0], candidate[1] - current[1])
    if d == right:
        return 0
    if d == prev_dir:
        return 1
    return 2  # left turn


def _rotate_to_corner(ring: np.ndarray) -> np.ndarray:
    dirs = np.diff(np.vstack([ring, ring[:1]]), axis=0)
    prev = np.roll(dirs, 1, axis=0)
    corners = np.nonzero((dirs != prev).any(axis=1))[0]
    if len(corners) == 0:
        return ring
    return np.roll(ring, -corners[0], axis=0)


def _douglas_peucker(points: np.ndarray, tol: float) -> np.ndarray:
    """Classic recursive simplification of an open polyline, endpoints kept."""
    if len(points) <= 2:
        return points
    start, end = points[0].astype(np.float64), points[-1].astype(np.float64)
    seg = end - start
    norm = np.hypot(*seg)
    rel = points[1:-1].astype(np.float64) - start
    if norm == 0:
        dists = np.hypot(rel[:, 0], rel[:, 1])
    else:
        dists = np.abs(seg[0] * rel[:, 1] - seg[1] * rel[:, 0]) / norm
    idx = int(np.argmax(dists))
    if dists[idx] > tol:
        left = _douglas_peucker(points[: idx + 2], tol)
        right = _douglas_peucker(points[idx + 1 :], tol)
        return np.vstack([left[:-1], right])
    return np.vstack([points[0], points[-1]])


def _simplify_ring(ring: np.ndarray, tol: float) -> np.ndarray:
    ring = _rotate_to_corner(ring)
    closed = np.vstack([ring, ring[:1]])
    simplified = _douglas_peucker(closed, tol)
    return simplified[:-1]


def polygonize(mask: np.ndarray, simplify_tol: float = 0.0, min_area: int = 20) -> PolygonSet:
    """Trace 4-connected components into simplified corner-lattice polygons.

    Components smaller than min_area pixels are dropped. At simplify_tol 0
    only collinear vertices are removed, so rasterize_polygons reproduces
    the component mask exactly.
    """
    if simplify_tol < 0:
        raise ValueError(f"simplify_tol must be >= 0, got {simplify_tol}")
    mask = np.asarray(mask)
    if not np.isin(mask, (0, 1)).all():
        raise ValueError("mask must be binary (0/1)")
    labels, n = ndi.label(mask, structure=FOUR_CONNECTED)
    polygons: List[Polygon] = []
    if n == 0:
        return PolygonSet(polygons)
    sizes = np.bincount(labels.ravel())
    slices = ndi.find_objects(labels)
    for cid in range(1, n + 1):
        if sizes[cid] < min_area:
            continue
        sl = slices[cid - 1]
        local = labels[sl] == cid
        edges = _boundary_edges(local, sl[0].start, sl[1].start)
        rings = [(_shoelace_closed(r), r) for r in _trace_rings(edges)]
        exteriors = [(a, r) for a, r in rings if a > 0]
        holes = [(a, r) for a, r in rings if a < 0]
        assigned: Dict[int, List[np.ndarray]] = {i: [] for i in range(len(exteriors))}
        for a, hole in holes:
            assigned[_enclosing_exterior(hole, exteriors)].append(hole)
        for i, (a, ext) in enumerate(exteriors):
            hole_rings = assigned[i]
            area = a + sum(_shoelace_closed(h) for h in hole_rings)
            polygons.append(
                Polygon(
                    exterior=_simplify_ring(ext, simplify_tol),
                    holes=[_simplify_ring(h, simplify_tol) for h in hole_rings],
                    area=float(area),
                    component_id=cid,
                )
            )
    return PolygonSet(polygons)


def _shoelace_closed(ring: np.ndarray) -> float:
    return _shoelace(ring)


def _enclosing_exterior(hole: np.ndarray, exteriors) -> int:
    # bbox containment, smallest enclosing wins; grouping only affects the
    # reported structure, rasterization XORs all rings globally either way
    hr0, hc0 = hole.min(axis=0)
    hr1, hc1 = hole.max(axis=0)
    best, best_area = 0, np.inf
    for i, (a, ext) in enumerate(exteriors):
        er0, ec0 = ext.min(axis=0)
        er1, ec1 = ext.max(axis=0)
        if er0 <= hr0 and ec0 <= hc0 and er1 >= hr1 and ec1 >= hc1 and a < best_area:
            best, best_area = i, a
    return best


def rasterize_polygons(polygon_set: PolygonSet, shape: Tuple[int, int]) -> np.ndarray:
    """Even-odd scanline fill of corner-lattice polygons back to a mask."""
    h, w = shape
    crossings = np.zeros((h, w + 1), dtype=np.int32)
    for polygon in polygon_set.polygons:
        for ring in [polygon.exterior] + polygon.holes:
            closed = np.vstack([ring, ring[:1]])
            for (r0, c0), (r1, c1) in zip(closed[:-1], closed[1:]):
                if c0 == c1 and r0 != r1:  # vertical segments decide parity
                    lo, hi = sorted((int(r0), int(r1)))
                    col = int(c0)
                    if 0 <= col <= w:
                        crossings[max(lo, 0) : min(hi, h), col] += 1
    inside = np.cumsum(crossings, axis=1) % 2
    return inside[:, :w].astype(np.uint8)
