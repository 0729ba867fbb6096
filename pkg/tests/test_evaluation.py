from itertools import permutations

import numpy as np
import pytest

from fewseg.errors import ParameterError, ShapeError
from fewseg.evaluation import EpisodeRecord, aggregate, match_predictions, score_episode
from fewseg.geometry import (
    Mask,
    Polygon16,
    connected_components,
    extract_polygon_gt,
    mask_iou,
    polygon_to_mask,
    rasterize,
)
from fewseg.instruction import PolygonTuple


def blob_polygon(cx, cy, r):
    verts = []
    for k in range(16):
        angle = k * 2 * np.pi / 16
        verts.append((int(round(cx + r * np.cos(angle))),
                      int(round(cy + r * np.sin(angle)))))
    return Polygon16(tuple(verts))


def blob_mask(cx, cy, r, side):
    return polygon_to_mask(blob_polygon(cx, cy, r), side, side)


def brute_force_best_iou(iou_matrix):
    """Max total IoU over all partial bijections (permutation oracle)."""
    n_pred, n_gt = iou_matrix.shape
    small, large = (n_pred, n_gt) if n_pred <= n_gt else (n_gt, n_pred)
    best = 0.0
    for perm in permutations(range(large), small):
        total = 0.0
        for i, j in enumerate(perm):
            total += iou_matrix[i, j] if n_pred <= n_gt else iou_matrix[j, i]
        best = max(best, total)
    return best


class TestMatchPredictions:
    def test_identical_pair_matches_at_one(self):
        poly = blob_polygon(40, 40, 20)
        gt = polygon_to_mask(poly, 96, 96)
        result = match_predictions([poly], [gt], 96, 96)
        assert result.assignments == ((0, 0, 1.0),)
        assert result.mean_iou == 1.0
        assert result.unmatched_predictions == ()
        assert result.unmatched_gts == ()

    def test_empty_predictions(self):
        gts = [blob_mask(30, 30, 10, 96), blob_mask(70, 70, 10, 96)]
        result = match_predictions([], gts, 96, 96)
        assert result.assignments == ()
        assert result.unmatched_gts == (0, 1)
        assert result.mean_iou == 0.0

    def test_disjoint_pair_left_unmatched(self):
        pred = blob_polygon(20, 20, 8)
        gt = blob_mask(70, 70, 8, 96)
        result = match_predictions([pred], [gt], 96, 96)
        assert result.assignments == ()
        assert result.unmatched_predictions == (0,)
        assert result.unmatched_gts == (0,)

    def test_optimality_against_permutation_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(30):
            n_pred = int(rng.integers(1, 5))
            n_gt = int(rng.integers(1, 5))
            preds = [blob_polygon(rng.uniform(20, 76), rng.uniform(20, 76),
                                  rng.uniform(6, 16)) for _ in range(n_pred)]
            gts = [blob_mask(rng.uniform(20, 76), rng.uniform(20, 76),
                             rng.uniform(6, 16), 96) for _ in range(n_gt)]
            iou = np.array([[mask_iou(polygon_to_mask(p, 96, 96), g) for g in gts]
                            for p in preds])
            result = match_predictions(preds, gts, 96, 96)
            total = sum(v for _, _, v in result.assignments)
            assert total == pytest.approx(brute_force_best_iou(iou), abs=1e-9)

    def test_permutation_equivariance(self):
        rng = np.random.default_rng(1)
        preds = [blob_polygon(30, 30, 10), blob_polygon(60, 60, 12), blob_polygon(45, 70, 9)]
        gts = [blob_mask(31, 29, 10, 96), blob_mask(61, 59, 12, 96), blob_mask(44, 71, 9, 96)]
        base = match_predictions(preds, gts, 96, 96)
        perm = [2, 0, 1]
        shuffled = match_predictions([preds[i] for i in perm],
                                     [gts[i] for i in perm], 96, 96)
        assert sum(v for _, _, v in shuffled.assignments) == pytest.approx(
            sum(v for _, _, v in base.assignments))

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            match_predictions([blob_polygon(10, 10, 4)],
                              [Mask(np.zeros((10, 10), np.uint8))], 96, 96)


class TestScoreEpisode:
    def test_round_trip_prediction(self):
        gt = blob_mask(48, 48, 30, 96)
        polys = extract_polygon_gt(gt)
        record = score_episode(PolygonTuple(tuple(polys)), connected_components(gt), 96)
        assert record.episode_iou >= 0.90

    def test_degenerate_prediction_scores_zero(self):
        collinear = Polygon16(tuple((5 + k, 5 + k) for k in range(16)))
        gt = blob_mask(48, 48, 20, 96)
        record = score_episode(PolygonTuple((collinear,)), [gt], 96)
        assert record.episode_iou == 0.0
        assert record.object_ious == (0.0,)

    def test_spurious_prediction_never_raises_mean(self):
        gt = blob_mask(48, 48, 20, 96)
        good = extract_polygon_gt(gt)[0]
        clean = score_episode(PolygonTuple((good,)), [gt], 96)
        spurious = blob_polygon(15, 15, 6)
        noisy = score_episode(PolygonTuple((good, spurious)), [gt], 96)
        assert noisy.episode_iou <= clean.episode_iou
        assert 0.0 <= noisy.episode_iou <= 1.0

    def test_record_round_trip(self):
        gt = blob_mask(48, 48, 20, 96)
        record = score_episode(PolygonTuple((blob_polygon(48, 48, 20),)), [gt], 96)
        assert EpisodeRecord.from_dict(record.to_dict()) == record


class TestAggregate:
    def rec(self, iou):
        return EpisodeRecord(object_ious=(iou,), episode_iou=iou,
                             num_predictions=1, num_gts=1)

    def test_single_record(self):
        report = aggregate([self.rec(0.8)])
        assert report.overall == pytest.approx(0.8)
        assert report.fold_means == {"all": pytest.approx(0.8)}

    def test_two_folds(self):
        report = aggregate([self.rec(1.0), self.rec(0.0)], ["fold0", "fold1"])
        assert report.fold_means["fold0"] == 1.0
        assert report.fold_means["fold1"] == 0.0
        assert report.overall == 0.5

    def test_report_formats(self):
        report = aggregate([self.rec(0.25), self.rec(0.75)], ["a", "a"])
        text = report.to_text()
        assert "overall" in text and "0.5000" in text
        payload = report.to_dict()
        assert payload["episodes"] == 2
        assert payload["folds"]["a"]["episodes"] == 2

    def test_empty_rejected(self):
        with pytest.raises(ParameterError):
            aggregate([])

    def test_fold_length_mismatch(self):
        with pytest.raises(ParameterError):
            aggregate([self.rec(0.5)], ["a", "b"])
