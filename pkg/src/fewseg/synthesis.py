"""Pseudo support-query episode synthesis.

A support image is a random Bezier foreground plus 1-5 background subregions,
each filled with Gaussian noise around its own RGB mean.  The query reuses the
support contour after jitter, rotation, scaling, and translation, and its noise
means are constrained relative to the support's so the pair depicts the "same"
category.  Every episode is a pure function of (seed, step params, size).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .curriculum import MAX_RGB_DISTANCE, StepParams
from .errors import (
    InfeasibleConstraintError,
    LayoutGenerationError,
    ParameterError,
    ShapeError,
)
from .geometry import (
    BezierContour,
    Mask,
    Polygon16,
    extract_polygon_gt,
    mask_iou,
    rasterize,
    sample_bezier_contour,
)

DEFAULT_SIGMA = 20.0
AREA_FRACTION_MIN = 0.02
AREA_FRACTION_MAX = 0.60
LAYOUT_ATTEMPTS = 50
REJECTION_CAP = 10_000
PAIR_ATTEMPTS = 8
MAX_SUBREGIONS = 5
# SeedSequence stream tags so independent consumers of one pair seed never collide
STREAM_GENERATE = 0
STREAM_HINTS = 1


def derive_rng(*keys: int) -> np.random.Generator:
    """Deterministic random stream for a tuple of non-negative integer keys.

    Streams are keyed by SeedSequence entropy and drawn from SFC64; both are
    stable across runs for a fixed numpy version, which is what the dataset
    determinism and parity digests rely on.
    """
    return np.random.Generator(np.random.SFC64(np.random.SeedSequence([int(k) for k in keys])))


def derive_pair_seed(master_seed: int, index: int) -> int:
    """Per-pair seed split off a master seed; documented contract for datasets."""
    ss = np.random.SeedSequence([int(master_seed), int(index)])
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class NoiseSpec:
    """Per-channel Gaussian noise: RGB mean in [0, 255], shared sigma > 0."""

    mean: tuple[float, float, float]
    sigma: float = DEFAULT_SIGMA

    def __post_init__(self):
        mean = tuple(float(v) for v in self.mean)
        if len(mean) != 3 or any(v < 0 or v > 255 for v in mean):
            raise ParameterError("mean must be three values in [0, 255]")
        if self.sigma <= 0:
            raise ParameterError("sigma must be positive")
        object.__setattr__(self, "mean", mean)


@dataclass(frozen=True, eq=False)
class RegionLayout:
    """Foreground contour and mask plus a disjoint partition of the background."""

    contour: BezierContour
    polyline: np.ndarray  # (n, 2) closed
    foreground: Mask
    subregions: tuple[Mask, ...]

    def __post_init__(self):
        if not (1 <= len(self.subregions) <= MAX_SUBREGIONS):
            raise ParameterError(f"subregion count must be in [1, {MAX_SUBREGIONS}]")


@dataclass(frozen=True, eq=False)
class PseudoPair:
    """One synthetic episode and everything needed to reproduce or audit it.

    Polygon lists derive deterministically from the masks and are extracted
    lazily on first access.
    """

    support_image: np.ndarray  # (h, w, 3) uint8
    query_image: np.ndarray
    support_mask: Mask
    query_mask: Mask
    support_fg_mean: np.ndarray  # (3,)
    support_bg_means: tuple[np.ndarray, ...]
    query_fg_mean: np.ndarray
    query_bg_means: tuple[np.ndarray, ...]
    step: StepParams
    seed: int
    min_area: int = 16

    def __post_init__(self):
        if self.support_image.shape != self.query_image.shape:
            raise ShapeError("support and query image sizes differ")
        self.support_image.setflags(write=False)
        self.query_image.setflags(write=False)
        _audit_means(self)

    @property
    def width(self) -> int:
        return self.support_image.shape[1]

    @property
    def height(self) -> int:
        return self.support_image.shape[0]

    def _polygons(self, attr: str, mask: Mask) -> tuple[Polygon16, ...]:
        cache = self.__dict__.get(attr)
        if cache is None:
            cache = tuple(extract_polygon_gt(mask, self.min_area))
            object.__setattr__(self, attr, cache)
        return cache

    @property
    def support_polygons(self) -> tuple[Polygon16, ...]:
        return self._polygons("_support_polygons", self.support_mask)

    @property
    def query_polygons(self) -> tuple[Polygon16, ...]:
        return self._polygons("_query_polygons", self.query_mask)


def _audit_means(pair: PseudoPair) -> None:
    """Re-check the four distance constraints on the stored means."""
    a, b, c, d = pair.step.a, pair.step.b, pair.step.c, pair.step.d
    eps = 1e-9
    for m_sb in pair.support_bg_means:
        dist = float(np.linalg.norm(m_sb - pair.support_fg_mean))
        if not (a - eps <= dist <= b + eps):
            raise ParameterError(f"support bg mean violates [a, b]: {dist}")
    base = float(np.linalg.norm(pair.query_fg_mean - pair.support_fg_mean))
    if not (c - eps <= base <= d + eps):
        raise ParameterError(f"query fg mean violates [c, d]: {base}")
    for m_qb in pair.query_bg_means:
        dist = float(np.linalg.norm(m_qb - pair.query_fg_mean))
        if not (a - eps <= dist <= b + eps):
            raise ParameterError(f"query bg mean violates [a, b]: {dist}")
        if not float(np.linalg.norm(m_qb - pair.support_fg_mean)) > base:
            raise ParameterError("query bg mean not farther from support fg than query fg")


def _random_contour(rng: np.random.Generator, width: int, height: int,
                    margin: float) -> BezierContour:
    """10 uniform control points inside the margin box, sorted by angle.

    Angle-sorting around the centroid keeps the composite curve simple instead
    of self-intersecting, which the even-odd fill would punch holes into.
    """
    x0, x1 = margin * width, (1.0 - margin) * width
    y0, y1 = margin * height, (1.0 - margin) * height
    pts = np.column_stack([rng.uniform(x0, x1, 10), rng.uniform(y0, y1, 10)])
    center = pts.mean(axis=0)
    order = np.argsort(np.arctan2(pts[:, 1] - center[1], pts[:, 0] - center[0]))
    return BezierContour(pts[order])


def _partition_background(rng: np.random.Generator, background: np.ndarray,
                          width: int, height: int) -> tuple[Mask, ...]:
    """Split the background into 1-5 subregions using random closed contours."""
    k = int(rng.integers(1, MAX_SUBREGIONS + 1))
    remaining = background.copy()
    pieces = []
    for _ in range(k - 1):
        cut = rasterize(sample_bezier_contour(_random_contour(rng, width, height, 0.0)),
                        width, height)
        piece = remaining & cut.pixels.astype(bool)
        if piece.any():
            pieces.append(Mask(piece.astype(np.uint8)))
            remaining &= ~piece
    if remaining.any():
        pieces.append(Mask(remaining.astype(np.uint8)))
    return tuple(pieces)


def make_support_layout(rng: np.random.Generator, width: int, height: int) -> RegionLayout:
    """Foreground contour in the central 80% with area in [2%, 60%] of the image."""
    if min(width, height) < 64:
        raise ParameterError("image side must be at least 64")
    total = width * height
    for _ in range(LAYOUT_ATTEMPTS):
        contour = _random_contour(rng, width, height, margin=0.10)
        polyline = sample_bezier_contour(contour)
        fg = rasterize(polyline, width, height)
        if AREA_FRACTION_MIN * total <= fg.area <= AREA_FRACTION_MAX * total:
            background = ~fg.pixels.astype(bool)
            subregions = _partition_background(rng, background, width, height)
            return RegionLayout(contour, polyline, fg, subregions)
    raise LayoutGenerationError(
        f"no contour met the area bounds in {LAYOUT_ATTEMPTS} attempts"
    )


def perturb_layout(support: RegionLayout, rng: np.random.Generator,
                   width: int, height: int, *,
                   jitter_sigma: float = 1.0,
                   rotation_range: tuple[float, float] = (0.0, 2.0 * np.pi),
                   scale_range: tuple[float, float] = (0.5, 1.5)) -> RegionLayout:
    """Jitter, rotate, scale, and re-place the support contour; re-partition bg.

    The keyword knobs exist for tests; defaults match the generation contract.
    """
    cp = support.contour.control_points
    jittered = cp + jitter_sigma * rng.standard_normal(cp.shape)
    angle = float(rng.uniform(*rotation_range))
    scale = float(rng.uniform(*scale_range))
    center = jittered.mean(axis=0)
    rot = np.array([[np.cos(angle), -np.sin(angle)],
                    [np.sin(angle), np.cos(angle)]])
    placed = (jittered - center) @ rot.T * scale + center

    polyline = sample_bezier_contour(BezierContour(placed, support.contour.sample_count))
    minx, miny = polyline.min(axis=0)
    maxx, maxy = polyline.max(axis=0)
    bw, bh = maxx - minx, maxy - miny
    if bw > width or bh > height:
        raise LayoutGenerationError("perturbed contour does not fit inside the image")
    # uniform placement of the bounding box inside the image
    tx = float(rng.uniform(0.0, width - bw)) - minx
    ty = float(rng.uniform(0.0, height - bh)) - miny
    shifted = placed + np.array([tx, ty])
    contour = BezierContour(shifted, support.contour.sample_count)
    polyline = polyline + np.array([tx, ty])
    fg = rasterize(polyline, width, height)
    background = ~fg.pixels.astype(bool)
    subregions = _partition_background(rng, background, width, height)
    return RegionLayout(contour, polyline, fg, subregions)


def _validate_interval(lo: float, hi: float) -> None:
    if lo < 0 or lo > hi or hi > MAX_RGB_DISTANCE:
        raise ParameterError(
            f"distance interval [{lo}, {hi}] must satisfy 0 <= lo <= hi <= {MAX_RGB_DISTANCE}"
        )


def _sample_in_shell(rng: np.random.Generator, center: np.ndarray,
                     lo: float, hi: float) -> np.ndarray:
    """Uniform RGB mean whose distance to center lies in [lo, hi]."""
    if lo == 0.0 and hi == 0.0:
        return center.copy()
    for _ in range(REJECTION_CAP):
        candidate = rng.uniform(0.0, 255.0, 3)
        if lo <= float(np.linalg.norm(candidate - center)) <= hi:
            return candidate
    raise InfeasibleConstraintError(
        f"no mean at distance [{lo}, {hi}] from {center} in {REJECTION_CAP} draws"
    )


def sample_support_means(rng: np.random.Generator, a: float, b: float,
                         count: int) -> tuple[np.ndarray, list[np.ndarray]]:
    """Foreground mean uniform in the RGB cube; one [a, b]-distant mean per subregion."""
    _validate_interval(a, b)
    m_sf = rng.uniform(0.0, 255.0, 3)
    return m_sf, [_sample_in_shell(rng, m_sf, a, b) for _ in range(count)]


def sample_query_means(rng: np.random.Generator, m_sf: np.ndarray,
                       a: float, b: float, c: float, d: float,
                       count: int) -> tuple[np.ndarray, list[np.ndarray]]:
    """Query means: fg at [c, d] from support fg; bg at [a, b] from query fg and
    strictly farther from support fg than the query fg is."""
    _validate_interval(a, b)
    _validate_interval(c, d)
    m_sf = np.asarray(m_sf, dtype=np.float64)
    m_qf = _sample_in_shell(rng, m_sf, c, d)
    base = float(np.linalg.norm(m_qf - m_sf))

    bg = []
    for _ in range(count):
        if a == 0.0 and b == 0.0:
            candidate = m_qf.copy()
            if not float(np.linalg.norm(candidate - m_sf)) > base:
                raise InfeasibleConstraintError(
                    "a = b = 0 forces the query bg mean onto the query fg mean, "
                    "violating the strict support-distance constraint"
                )
            bg.append(candidate)
            continue
        for _ in range(REJECTION_CAP):
            candidate = rng.uniform(0.0, 255.0, 3)
            if (a <= float(np.linalg.norm(candidate - m_qf)) <= b
                    and float(np.linalg.norm(candidate - m_sf)) > base):
                bg.append(candidate)
                break
        else:
            raise InfeasibleConstraintError(
                f"no query bg mean satisfied both constraints in {REJECTION_CAP} draws"
            )
    return m_qf, bg


def fill_regions(layout: RegionLayout, fg: NoiseSpec, bg: list[NoiseSpec],
                 rng: np.random.Generator) -> np.ndarray:
    """Per-pixel i.i.d. Gaussian noise per region, rounded and clipped to uint8."""
    if len(bg) != len(layout.subregions):
        raise ParameterError(
            f"need one background spec per subregion: {len(bg)} != {len(layout.subregions)}"
        )
    h, w = layout.foreground.pixels.shape
    field = rng.standard_normal((h, w, 3), dtype=np.float32)
    # region index image: 0 = foreground, i+1 = subregion i
    label = np.zeros((h, w), dtype=np.uint8)
    for i, sub in enumerate(layout.subregions):
        np.putmask(label, sub.pixels, i + 1)
    specs = [fg] + list(bg)
    means = np.array([s.mean for s in specs], dtype=np.float32)
    sigmas = np.array([s.sigma for s in specs], dtype=np.float32)
    if np.all(sigmas == sigmas[0]):
        np.multiply(field, sigmas[0], out=field)
    else:
        np.multiply(field, sigmas[label][:, :, None], out=field)
    np.add(field, means[label], out=field)
    np.rint(field, out=field)
    np.clip(field, 0.0, 255.0, out=field)
    return field.astype(np.uint8)


def generate_pair(seed: int, step: StepParams, width: int, height: int, *,
                  sigma: float = DEFAULT_SIGMA, min_area: int = 16) -> PseudoPair:
    """Deterministic episode for (seed, step, size); retries with derived sub-seeds."""
    last_error: Exception | None = None
    for attempt in range(PAIR_ATTEMPTS):
        rng = derive_rng(seed, STREAM_GENERATE, attempt)
        try:
            support = make_support_layout(rng, width, height)
            m_sf, m_sb = sample_support_means(rng, step.a, step.b, len(support.subregions))
            support_image = fill_regions(
                support, NoiseSpec(tuple(m_sf), sigma),
                [NoiseSpec(tuple(m), sigma) for m in m_sb], rng)
            query = perturb_layout(support, rng, width, height)
            m_qf, m_qb = sample_query_means(rng, m_sf, step.a, step.b, step.c, step.d,
                                            len(query.subregions))
            query_image = fill_regions(
                query, NoiseSpec(tuple(m_qf), sigma),
                [NoiseSpec(tuple(m), sigma) for m in m_qb], rng)
        except (LayoutGenerationError, InfeasibleConstraintError) as exc:
            last_error = exc
            continue
        return PseudoPair(
            support_image=support_image,
            query_image=query_image,
            support_mask=support.foreground,
            query_mask=query.foreground,
            support_fg_mean=m_sf,
            support_bg_means=tuple(m_sb),
            query_fg_mean=m_qf,
            query_bg_means=tuple(m_qb),
            step=step,
            seed=int(seed),
            min_area=min_area,
        )
    assert last_error is not None
    last_error.args = (f"pair generation failed after {PAIR_ATTEMPTS} attempts: "
                       f"{last_error}",)
    raise last_error


def midpoint_threshold_iou(pair: PseudoPair) -> float:
    """Difficulty probe: nearest-mean segmentation of the query vs its true mask.

    Assigns a pixel to the foreground iff it is strictly closer to the query fg
    mean than to every query bg mean, which is exactly thresholding along each
    fg/bg mean pair at the midpoint plane.
    """
    img = pair.query_image.astype(np.float64)
    d_fg = ((img - pair.query_fg_mean) ** 2).sum(axis=2)
    d_bg = np.full(d_fg.shape, np.inf)
    for m_qb in pair.query_bg_means:
        np.minimum(d_bg, ((img - m_qb) ** 2).sum(axis=2), out=d_bg)
    predicted = Mask((d_fg < d_bg).astype(np.uint8))
    return mask_iou(predicted, pair.query_mask)


def pair_digest(pair: PseudoPair) -> str:
    """Canonical SHA-256 of a pair's content; the cross-interface parity contract.

    Hashes, in order: a version tag; width, height, n, m as int64; the seed as
    uint64; a, b, c, d as float64; both images and both masks as C-order bytes;
    each polygon list as an int64 count followed by int64 (x, y) rows; the
    support and query fg means, then each bg mean list as a count plus float64
    rows.  All integers little-endian.
    """
    h = hashlib.sha256()
    h.update(b"pseudo-pair-v1")
    h.update(np.array([pair.width, pair.height, pair.step.n, pair.step.m],
                      dtype=np.int64).tobytes())
    h.update(np.array([pair.seed], dtype=np.uint64).tobytes())
    h.update(np.array([pair.step.a, pair.step.b, pair.step.c, pair.step.d],
                      dtype=np.float64).tobytes())
    h.update(np.ascontiguousarray(pair.support_image).tobytes())
    h.update(np.ascontiguousarray(pair.query_image).tobytes())
    h.update(np.ascontiguousarray(pair.support_mask.pixels).tobytes())
    h.update(np.ascontiguousarray(pair.query_mask.pixels).tobytes())
    for polys in (pair.support_polygons, pair.query_polygons):
        h.update(np.array([len(polys)], dtype=np.int64).tobytes())
        for poly in polys:
            h.update(poly.to_array().astype(np.int64).tobytes())
    h.update(np.asarray(pair.support_fg_mean, dtype=np.float64).tobytes())
    h.update(np.array([len(pair.support_bg_means)], dtype=np.int64).tobytes())
    for m in pair.support_bg_means:
        h.update(np.asarray(m, dtype=np.float64).tobytes())
    h.update(np.asarray(pair.query_fg_mean, dtype=np.float64).tobytes())
    h.update(np.array([len(pair.query_bg_means)], dtype=np.int64).tobytes())
    for m in pair.query_bg_means:
        h.update(np.asarray(m, dtype=np.float64).tobytes())
    return h.hexdigest()
