"""Bipartite alignment of predicted polygons to ground-truth objects and mIoU."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import ParameterError, ShapeError
from .geometry import Mask, Polygon16, mask_iou, polygon_to_mask
from .instruction import PolygonTuple


@dataclass(frozen=True)
class MatchResult:
    """Optimal partial bijection between predictions and ground-truth objects."""

    assignments: tuple[tuple[int, int, float], ...]  # (pred index, gt index, IoU)
    unmatched_predictions: tuple[int, ...]
    unmatched_gts: tuple[int, ...]
    mean_iou: float  # over gts; unmatched gts contribute 0


@dataclass(frozen=True)
class EpisodeRecord:
    """Per-episode scores: one IoU per ground-truth object plus their mean."""

    object_ious: tuple[float, ...]
    episode_iou: float
    num_predictions: int
    num_gts: int

    def to_dict(self) -> dict:
        return {
            "object_ious": list(self.object_ious),
            "episode_iou": self.episode_iou,
            "num_predictions": self.num_predictions,
            "num_gts": self.num_gts,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EpisodeRecord":
        return cls(
            object_ious=tuple(data["object_ious"]),
            episode_iou=data["episode_iou"],
            num_predictions=data["num_predictions"],
            num_gts=data["num_gts"],
        )


def match_predictions(preds: Sequence[Polygon16], gts: Sequence[Mask],
                      width: int, height: int) -> MatchResult:
    """Assignment minimizing total (1 - IoU); fully disjoint pairs stay unmatched."""
    for gt in gts:
        if gt.pixels.shape != (height, width):
            raise ShapeError(
                f"ground-truth mask shape {gt.pixels.shape} != ({height}, {width})")
    pred_masks = [polygon_to_mask(p, width, height) for p in preds]
    n_pred, n_gt = len(pred_masks), len(gts)
    if n_pred == 0 or n_gt == 0:
        return MatchResult((), tuple(range(n_pred)), tuple(range(n_gt)), 0.0)

    iou = np.zeros((n_pred, n_gt))
    for i, pm in enumerate(pred_masks):
        for j, gt in enumerate(gts):
            iou[i, j] = mask_iou(pm, gt)
    rows, cols = linear_sum_assignment(1.0 - iou)

    assignments = tuple(
        (int(i), int(j), float(iou[i, j]))
        for i, j in zip(rows, cols) if iou[i, j] > 0.0
    )
    matched_preds = {i for i, _, _ in assignments}
    matched_gts = {j for _, j, _ in assignments}
    mean_iou = sum(v for _, _, v in assignments) / n_gt
    return MatchResult(
        assignments=assignments,
        unmatched_predictions=tuple(i for i in range(n_pred) if i not in matched_preds),
        unmatched_gts=tuple(j for j in range(n_gt) if j not in matched_gts),
        mean_iou=float(mean_iou),
    )


def score_episode(parsed: PolygonTuple, gt_masks: Sequence[Mask],
                  size: int) -> EpisodeRecord:
    """Rasterize the parsed predictions, match them, and record per-object IoU."""
    result = match_predictions(list(parsed.objects), list(gt_masks), size, size)
    per_gt = {j: v for _, j, v in result.assignments}
    object_ious = tuple(per_gt.get(j, 0.0) for j in range(len(gt_masks)))
    return EpisodeRecord(
        object_ious=object_ious,
        episode_iou=result.mean_iou,
        num_predictions=len(parsed.objects),
        num_gts=len(gt_masks),
    )


@dataclass(frozen=True)
class Report:
    """Per-fold and overall mean IoU across episode records."""

    fold_means: dict[str, float]
    fold_counts: dict[str, int]
    overall: float
    count: int

    def to_dict(self) -> dict:
        return {
            "folds": {
                fold: {"mean_iou": self.fold_means[fold], "episodes": self.fold_counts[fold]}
                for fold in self.fold_means
            },
            "overall_mean_iou": self.overall,
            "episodes": self.count,
        }

    def to_text(self) -> str:
        lines = ["fold\tepisodes\tmean_iou"]
        for fold in self.fold_means:
            lines.append(f"{fold}\t{self.fold_counts[fold]}\t{self.fold_means[fold]:.4f}")
        lines.append(f"overall\t{self.count}\t{self.overall:.4f}")
        return "\n".join(lines)


def aggregate(records: Sequence[EpisodeRecord],
              folds: Sequence[str] | None = None) -> Report:
    """Mean episode IoU per fold and overall."""
    if not records:
        raise ParameterError("cannot aggregate zero records")
    if folds is None:
        folds = ["all"] * len(records)
    if len(folds) != len(records):
        raise ParameterError("need one fold label per record")
    by_fold: dict[str, list[float]] = {}
    for record, fold in zip(records, folds):
        by_fold.setdefault(str(fold), []).append(record.episode_iou)
    fold_means = {fold: float(np.mean(vals)) for fold, vals in sorted(by_fold.items())}
    fold_counts = {fold: len(vals) for fold, vals in sorted(by_fold.items())}
    overall = float(np.mean([r.episode_iou for r in records]))
    return Report(fold_means=fold_means, fold_counts=fold_counts,
                  overall=overall, count=len(records))
