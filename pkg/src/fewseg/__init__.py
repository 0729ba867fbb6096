"""Few-shot segmentation data tooling: synthesis, schedules, polygons,
instructions, parsing, and evaluation."""

from .curriculum import (
    ScheduleConfig,
    StepParams,
    image_schedule,
    mask_schedule,
    sample_hint_indices,
    step_params,
)
from .evaluation import (
    EpisodeRecord,
    MatchResult,
    Report,
    aggregate,
    match_predictions,
    score_episode,
)
from .geometry import (
    BezierContour,
    Mask,
    Point,
    Polygon16,
    connected_components,
    extract_polygon_gt,
    mask_centroid,
    mask_iou,
    polygon_to_mask,
    rasterize,
    sample_bezier_contour,
)
from .instruction import (
    CoordToken,
    PolygonTuple,
    RenderedInstruction,
    ShotExample,
    encode_polygon,
    encode_polygon_tuple,
    parse_polygon_output,
    render_incontext_instruction,
    render_multishot_instruction,
    render_pretrain_instruction,
    render_task_instruction,
)
from .synthesis import (
    NoiseSpec,
    PseudoPair,
    RegionLayout,
    derive_pair_seed,
    derive_rng,
    fill_regions,
    generate_pair,
    make_support_layout,
    midpoint_threshold_iou,
    pair_digest,
    perturb_layout,
    sample_query_means,
    sample_support_means,
)
from .tablegen import (
    Attribute,
    CorrespondingTable,
    Region,
    RefinementProvenance,
    build_table,
    cosine,
    fetch_attributes,
    refine_table,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
