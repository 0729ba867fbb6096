"""Contour sampling, rasterization, and polar 16-point polygon ground truth.

Image coordinate convention: origin at the top-left corner, x to the right,
y downward.  A pixel (i, j) covers the unit square [i, i+1) x [j, j+1) and its
center sits at (i + 0.5, j + 0.5).  Fills are even-odd and a pixel belongs to
a region iff its center does.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import EmptyMaskError, InvalidContourError, ParameterError, ShapeError

CONTROL_POINT_COUNT = 10
VERTEX_COUNT = 16
RAY_STEP = 0.25  # sub-pixel marching step along each ray, in pixels
DEFAULT_MIN_AREA = 16


@dataclass(frozen=True)
class Point:
    """2D point; real-valued during construction, integer in emitted coordinates."""

    x: float
    y: float


@dataclass(frozen=True, eq=False)
class BezierContour:
    """Closed composite cubic Bezier defined by exactly 10 control points.

    Adjacent control points bound one cubic segment whose inner handles are
    Catmull-Rom tangents derived from the neighbouring points, so the curve
    passes through every control point and closes smoothly.
    """

    control_points: np.ndarray  # (10, 2) float64
    sample_count: int = 200

    def __post_init__(self):
        pts = np.asarray(self.control_points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape != (CONTROL_POINT_COUNT, 2):
            raise InvalidContourError(
                f"expected {CONTROL_POINT_COUNT} control points, got shape {pts.shape}"
            )
        if self.sample_count < 1:
            raise ParameterError("sample_count must be positive")
        object.__setattr__(self, "control_points", pts)
        pts.setflags(write=False)


@dataclass(frozen=True, eq=False)
class Mask:
    """Binary foreground mask stored as a read-only (height, width) uint8 grid."""

    pixels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.pixels, dtype=np.uint8)
        if arr.ndim != 2:
            raise ShapeError(f"mask must be 2-D, got shape {arr.shape}")
        if arr.max(initial=0) > 1:
            raise ShapeError("mask values must be 0 or 1")
        object.__setattr__(self, "pixels", arr)
        arr.setflags(write=False)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def area(self) -> int:
        return int(self.pixels.sum())

    def __eq__(self, other) -> bool:
        if not isinstance(other, Mask):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and bool(
            np.array_equal(self.pixels, other.pixels)
        )

    def __hash__(self):
        return hash((self.pixels.shape, self.pixels.tobytes()))


@dataclass(frozen=True)
class Polygon16:
    """16 integer vertices, clockwise on screen, vertex k on the ray at k*22.5 deg."""

    vertices: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if len(self.vertices) != VERTEX_COUNT:
            raise ParameterError(f"polygon needs {VERTEX_COUNT} vertices, got {len(self.vertices)}")
        clean = tuple((int(x), int(y)) for x, y in self.vertices)
        if any(x < 0 or y < 0 for x, y in clean):
            raise ParameterError("polygon coordinates must be non-negative")
        object.__setattr__(self, "vertices", clean)

    @classmethod
    def from_array(cls, arr) -> "Polygon16":
        return cls(tuple((int(x), int(y)) for x, y in np.asarray(arr)))

    def to_array(self) -> np.ndarray:
        return np.array(self.vertices, dtype=np.int64)


def sample_bezier_contour(contour: BezierContour) -> np.ndarray:
    """Sample a closed polyline of contour.sample_count points; first == last."""
    if contour.sample_count < 32:
        raise ParameterError("sample_count must be at least 32")
    cp = contour.control_points
    n = len(cp)
    nxt = np.roll(cp, -1, axis=0)
    prv = np.roll(cp, 1, axis=0)
    nxt2 = np.roll(cp, -2, axis=0)
    # Catmull-Rom handles: segment i runs cp[i] -> cp[i+1]
    h1 = cp + (nxt - prv) / 6.0
    h2 = nxt - (nxt2 - cp) / 6.0

    u = np.linspace(0.0, float(n), contour.sample_count)
    seg = np.minimum(u.astype(np.int64), n - 1)
    t = (u - seg)[:, None]
    s = 1.0 - t
    pts = (s**3) * cp[seg] + 3 * (s**2) * t * h1[seg] + 3 * s * (t**2) * h2[seg] + (t**3) * nxt[seg]
    pts[-1] = pts[0]
    return pts


def _fill_even_odd(polyline: np.ndarray, width: int, height: int) -> np.ndarray:
    """Scanline even-odd fill; a pixel is set iff its center is inside."""
    xs, ys = polyline[:, 0], polyline[:, 1]
    x1, y1 = xs[:-1], ys[:-1]
    x2, y2 = xs[1:], ys[1:]
    keep = y1 != y2  # horizontal edges never cross a scanline
    x1, y1, x2, y2 = x1[keep], y1[keep], x2[keep], y2[keep]
    out = np.zeros((height, width), dtype=np.uint8)
    if x1.size == 0:
        return out
    lo = max(0, int(np.floor(min(y1.min(), y2.min()) - 0.5)))
    hi = min(height, int(np.ceil(max(y1.max(), y2.max()) + 0.5)) + 1)
    if lo >= hi:
        return out
    # Pixels right of the polygon's x extent see an even crossing count, so the
    # parity scan only needs the clipped x window.
    x_lo = max(0, int(np.floor(min(x1.min(), x2.min()) - 0.5)))
    x_hi = min(width, int(np.ceil(max(x1.max(), x2.max()) + 0.5)) + 1)
    if x_lo >= x_hi:
        return out
    yc = np.arange(lo, hi, dtype=np.float64) + 0.5
    crossing = (y1[None, :] <= yc[:, None]) != (y2[None, :] <= yc[:, None])
    rows, cols = np.nonzero(crossing)
    t = (yc[rows] - y1[cols]) / (y2[cols] - y1[cols])
    xc = x1[cols] + t * (x2[cols] - x1[cols])
    # Each crossing toggles every pixel whose center lies to its right:
    # x + 0.5 > xc  <=>  x >= ceil(xc - 0.5).
    start = np.clip(np.ceil(xc - 0.5).astype(np.int64) - x_lo, 0, x_hi - x_lo)
    acc = np.zeros((hi - lo, x_hi - x_lo + 1), dtype=np.uint8)
    np.bitwise_xor.at(acc, (rows, start), 1)
    out[lo:hi, x_lo:x_hi] = np.bitwise_xor.accumulate(acc[:, :-1], axis=1)
    return out


def rasterize(polyline, width: int, height: int) -> Mask:
    """Even-odd fill of a closed polyline; parts outside the image are clipped."""
    if width <= 0 or height <= 0:
        raise ParameterError("image dimensions must be positive")
    poly = np.asarray(polyline, dtype=np.float64)
    if poly.ndim != 2 or poly.shape[1] != 2 or poly.shape[0] < 2:
        raise InvalidContourError(f"polyline must be (n, 2), got shape {poly.shape}")
    if not np.array_equal(poly[0], poly[-1]):
        raise InvalidContourError("polyline is open: first sample must equal last")
    return Mask(_fill_even_odd(poly, width, height))


def polygon_to_mask(poly: Polygon16, width: int, height: int) -> Mask:
    """Fill a 16-gon with the same even-odd pixel-center rule as rasterize."""
    if width <= 0 or height <= 0:
        raise ParameterError("image dimensions must be positive")
    arr = poly.to_array().astype(np.float64)
    closed = np.vstack([arr, arr[:1]])
    return Mask(_fill_even_odd(closed, width, height))


def mask_centroid(mask: Mask) -> Point:
    """Arithmetic mean of foreground pixel centers."""
    ys, xs = np.nonzero(mask.pixels)
    if xs.size == 0:
        raise EmptyMaskError("mask has no foreground pixels")
    return Point(float(xs.mean()) + 0.5, float(ys.mean()) + 0.5)


def mask_iou(a: Mask, b: Mask) -> float:
    """Intersection over union; 1.0 when both masks are empty."""
    if a.pixels.shape != b.pixels.shape:
        raise ShapeError(f"mask shapes differ: {a.pixels.shape} vs {b.pixels.shape}")
    inter = int(np.logical_and(a.pixels, b.pixels).sum())
    union = int(np.logical_or(a.pixels, b.pixels).sum())
    if union == 0:
        return 1.0
    return inter / union


def _ray_origin(component: np.ndarray, centroid: tuple[float, float]) -> tuple[float, float]:
    """Centroid, unless it falls outside the component (severe concavity)."""
    h, w = component.shape
    cx, cy = centroid
    px = min(int(cx), w - 1)
    py = min(int(cy), h - 1)
    if component[py, px]:
        return centroid
    ys, xs = np.nonzero(component)
    d2 = (xs + 0.5 - cx) ** 2 + (ys + 0.5 - cy) ** 2
    i = int(np.argmin(d2))  # row-major first on ties
    return (float(xs[i]) + 0.5, float(ys[i]) + 0.5)


def _polar_vertices(component: np.ndarray, origin: tuple[float, float]) -> np.ndarray:
    """March 16 rays clockwise from +x; vertex = rounded farthest fg->bg crossing.

    The crossing is located by 0.25 px stepping and taken as the midpoint of the
    last foreground sample and the first background sample.  A ray that never
    leaves the foreground uses its image-border intersection instead.
    """
    h, w = component.shape
    ox, oy = origin
    angles = np.arange(VERTEX_COUNT) * (2.0 * np.pi / VERTEX_COUNT)
    dx, dy = np.cos(angles), np.sin(angles)
    with np.errstate(divide="ignore"):
        tx = np.where(dx > 0, (w - ox) / dx, np.where(dx < 0, -ox / dx, np.inf))
        ty = np.where(dy > 0, (h - oy) / dy, np.where(dy < 0, -oy / dy, np.inf))
    t_exit = np.minimum(tx, ty)
    ts = np.arange(0.0, t_exit.max() + RAY_STEP, RAY_STEP)
    px = ox + ts[None, :] * dx[:, None]
    py = oy + ts[None, :] * dy[:, None]
    inbounds = (ts[None, :] <= t_exit[:, None]) & (px >= 0) & (px < w) & (py >= 0) & (py < h)
    ix = np.clip(np.floor(px).astype(np.int64), 0, w - 1)
    iy = np.clip(np.floor(py).astype(np.int64), 0, h - 1)
    fg = inbounds & (component[iy, ix])

    steps = fg.shape[1]
    has_fg = fg.any(axis=1)
    last_fg = steps - 1 - np.argmax(fg[:, ::-1], axis=1)
    last_inb = steps - 1 - np.argmax(inbounds[:, ::-1], axis=1)
    rays = np.arange(VERTEX_COUNT)
    cxp = px[rays, last_fg] + 0.5 * RAY_STEP * dx
    cyp = py[rays, last_fg] + 0.5 * RAY_STEP * dy
    on_border = last_fg == last_inb  # never left the foreground inside the image
    cxp = np.where(on_border, ox + t_exit * dx, cxp)
    cyp = np.where(on_border, oy + t_exit * dy, cyp)
    cxp = np.where(has_fg, cxp, ox)
    cyp = np.where(has_fg, cyp, oy)
    verts = np.empty((VERTEX_COUNT, 2), dtype=np.int64)
    verts[:, 0] = np.clip(np.rint(cxp), 0, w - 1).astype(np.int64)
    verts[:, 1] = np.clip(np.rint(cyp), 0, h - 1).astype(np.int64)
    return verts


def _labeled_components(mask: Mask, min_area: int) -> list[np.ndarray]:
    """Boolean component arrays (4-connectivity) of at least min_area pixels,
    largest first, ties broken by the smallest row-major foreground index."""
    labels, count = ndimage.label(mask.pixels)
    if count == 0:
        return []
    flat = labels.ravel()
    areas = np.bincount(flat, minlength=count + 1)
    keep = [lbl for lbl in range(1, count + 1) if int(areas[lbl]) >= min_area]
    # first row-major index only breaks area ties, so compute it lazily
    tied = {lbl for lbl in keep
            if sum(1 for o in keep if areas[o] == areas[lbl]) > 1}
    first = {lbl: int(np.argmax(flat == lbl)) if lbl in tied else 0 for lbl in keep}
    order = sorted((-int(areas[lbl]), first[lbl], lbl) for lbl in keep)
    return [labels == lbl for _, _, lbl in order]


def connected_components(mask: Mask, min_area: int = DEFAULT_MIN_AREA) -> list[Mask]:
    """Qualifying components as standalone masks, in extraction order."""
    return [Mask(c.astype(np.uint8)) for c in _labeled_components(mask, min_area)]


def extract_polygon_gt(mask: Mask, min_area: int = DEFAULT_MIN_AREA) -> list[Polygon16]:
    """Polar 16-point polygons for every 4-connected component of at least min_area.

    Components are ordered by descending area, ties broken by the smallest
    row-major foreground index.  Returns an empty list when nothing qualifies.
    """
    polygons = []
    for component in _labeled_components(mask, min_area):
        ys, xs = np.nonzero(component)
        centroid = (float(xs.mean()) + 0.5, float(ys.mean()) + 0.5)
        origin = _ray_origin(component, centroid)
        polygons.append(Polygon16.from_array(_polar_vertices(component, origin)))
    return polygons
