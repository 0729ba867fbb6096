"""Acceptance gate: one test per primary criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -s` to see the lines as they pass.
The dataset-scale checks (constraint audit, determinism, monotonicity) take a
few minutes combined; everything is deterministic.
"""

import json
import shutil
import sys
import time
from itertools import permutations
from pathlib import Path

import numpy as np
import pytest

from fewseg.backends import ScriptedOracle
from fewseg.curriculum import ScheduleConfig, StepParams, image_schedule, mask_schedule
from fewseg.dataset import GenConfig, generate_dataset, load_manifest
from fewseg.errors import PolygonParseError
from fewseg.evaluation import match_predictions
from fewseg.geometry import (
    BezierContour,
    Mask,
    Polygon16,
    connected_components,
    extract_polygon_gt,
    mask_iou,
    polygon_to_mask,
    rasterize,
    sample_bezier_contour,
)
from fewseg.instruction import (
    ShotExample,
    encode_polygon,
    encode_polygon_tuple,
    parse_polygon_output,
    render_incontext_instruction,
    render_multishot_instruction,
    render_pretrain_instruction,
    render_task_instruction,
)
from fewseg.synthesis import generate_pair, midpoint_threshold_iou
from fewseg.tablegen import (
    Attribute,
    Region,
    ambiguity_prompt,
    build_table,
    discriminative_prompt,
    refine_table,
)
from test_instruction import make_fake_pair, run_polygon, strip, table_for
from test_tablegen import VectorEmbedder, basis, one_round_setup, square_polygon

FIXTURES = Path(__file__).parent / "fixtures"
CFG = ScheduleConfig()
AVAILABLE_CORES = __import__("os").cpu_count() or 1


def ok(name: str, detail: str = "") -> None:
    sys.stderr.write(f"ACCEPTANCE PASS: {name}" + (f" ({detail})" if detail else "") + "\n")


def checkpoint_step(n: int) -> StepParams:
    a, b, c, d = image_schedule(n, CFG)
    m = mask_schedule(n, CFG) if n < CFG.total_steps else 0
    return StepParams(n=n, a=a, b=b, c=c, d=d, m=m)


def test_schedule_exactness():
    start = time.perf_counter()
    assert image_schedule(0, CFG) == (100.0, 150.0, 0.0, 50.0)
    assert image_schedule(CFG.total_steps // 2, CFG) == (50.0, 100.0, 25.0, 75.0)
    assert image_schedule(CFG.total_steps, CFG) == (0.0, 50.0, 50.0, 100.0)
    seg = CFG.total_steps // 30
    half = CFG.total_steps // 2
    for n in range(CFG.total_steps):
        expected = max(0, 15 - n // seg) if n < half else 0
        assert mask_schedule(n, CFG) == expected
    elapsed = time.perf_counter() - start
    assert elapsed < 1.0
    ok("schedule exactness", f"60k steps exhaustive in {elapsed:.2f} s")


def test_constraint_audit_10k_pairs():
    checkpoints = [0, CFG.total_steps // 4, CFG.total_steps // 2,
                   3 * CFG.total_steps // 4, CFG.total_steps]
    per_checkpoint = 2_000
    start = time.perf_counter()
    violations = 0
    for n in checkpoints:
        step = checkpoint_step(n)
        for i in range(per_checkpoint):
            pair = generate_pair(n * 1_000_000 + i, step, 384, 384)
            base = float(np.linalg.norm(pair.query_fg_mean - pair.support_fg_mean))
            if not (step.c - 1e-9 <= base <= step.d + 1e-9):
                violations += 1
            for mean in pair.support_bg_means:
                dist = float(np.linalg.norm(mean - pair.support_fg_mean))
                if not (step.a - 1e-9 <= dist <= step.b + 1e-9):
                    violations += 1
            for mean in pair.query_bg_means:
                dist = float(np.linalg.norm(mean - pair.query_fg_mean))
                if not (step.a - 1e-9 <= dist <= step.b + 1e-9):
                    violations += 1
                if not float(np.linalg.norm(mean - pair.support_fg_mean)) > base:
                    violations += 1
    elapsed = time.perf_counter() - start
    assert violations == 0
    assert elapsed < 300.0
    ok("constraint audit", f"10,000 pairs, 0 violations, {elapsed:.0f} s single-core")


def test_gen_determinism_1000_pairs(tmp_path):
    config_text = "seed = 7\ncount = 1000\nsize = 384\n"
    config = GenConfig(seed=7, count=1_000, size=384)
    out1, out2 = tmp_path / "run1", tmp_path / "run2"
    start = time.perf_counter()
    generate_dataset(config, out1)
    first_run = time.perf_counter() - start
    generate_dataset(config, out2)

    m1 = (out1 / "manifest.json").read_bytes()
    m2 = (out2 / "manifest.json").read_bytes()
    assert m1 == m2
    manifest = load_manifest(out1, verify_files=False)
    mismatched = 0
    for record in manifest.pairs:
        for rel in record.files.values():
            if (out1 / rel).read_bytes() != (out2 / rel).read_bytes():
                mismatched += 1
    assert mismatched == 0
    # the stated budget is 60 s on 8 cores; scale for the cores this box has
    budget = 60.0 * 8 / min(AVAILABLE_CORES, 8)
    assert first_run < budget
    shutil.rmtree(out1)
    shutil.rmtree(out2)
    ok("gen determinism", f"1,000 pairs byte-identical twice, "
                          f"{first_run:.0f} s on {AVAILABLE_CORES} cores "
                          f"(budget {budget:.0f} s)")


def test_polygon_fidelity():
    side = 384
    yy, xx = np.mgrid[0:side, 0:side]
    rng = np.random.default_rng(202)
    worst_disk = 1.0
    for r in (50, 55, 60, 75, 100, 150):
        for _ in range(4):
            cx = 192 + rng.uniform(-2, 2)
            cy = 192 + rng.uniform(-2, 2)
            disk = Mask((((xx + 0.5 - cx) ** 2 + (yy + 0.5 - cy) ** 2) <= r * r)
                        .astype(np.uint8))
            poly = extract_polygon_gt(disk)[0]
            iou = mask_iou(polygon_to_mask(poly, side, side), disk)
            worst_disk = min(worst_disk, iou)
    assert worst_disk >= 0.95

    ious = []
    for _ in range(100):
        r = rng.uniform(55, 140)
        center = rng.uniform(150, 230, 2)
        radii = r * rng.uniform(0.9, 1.1, 10)
        angles = np.sort(rng.uniform(0, 2 * np.pi, 10))
        pts = np.column_stack([center[0] + radii * np.cos(angles),
                               center[1] + radii * np.sin(angles)])
        mask = rasterize(sample_bezier_contour(BezierContour(pts)), side, side)
        component = connected_components(mask)[0]
        poly = extract_polygon_gt(mask)[0]
        ious.append(mask_iou(polygon_to_mask(poly, side, side), component))
    ious = np.array(ious)
    assert ious.min() >= 0.80
    assert ious.mean() >= 0.90
    ok("polygon fidelity", f"disk worst {worst_disk:.3f} >= 0.95; "
                           f"bezier mean {ious.mean():.3f} min {ious.min():.3f}")


def test_parser_round_trip_fuzz_and_malformed_corpus():
    rng = np.random.default_rng(99)
    mismatches = 0
    for case in range(10_000):
        count = 1 if case % 3 else int(rng.integers(2, 5))
        polys = [Polygon16(tuple(map(tuple, rng.integers(0, 384, (16, 2)))))
                 for _ in range(count)]
        text = encode_polygon_tuple(polys)
        parsed = parse_polygon_output(text)
        if list(parsed.objects) != polys:
            mismatches += 1
    assert mismatches == 0

    cases = json.loads((FIXTURES / "malformed_outputs.json").read_text())
    assert len(cases) >= 20
    for case in cases:
        with pytest.raises(PolygonParseError) as err:
            parse_polygon_output(case["text"])
        assert case["expect"] in str(err.value)
        assert isinstance(err.value.position, int)
        assert "offset" in str(err.value)
    ok("parser", f"10,000 round-trips exact; {len(cases)} malformed fixtures "
                 "rejected with offsets")


def test_eq1_oracle_equivalence_1000_instances():
    rng = np.random.default_rng(4)
    for _ in range(1_000):
        dim = int(rng.integers(3, 11))
        n_regions = int(rng.integers(2, 7))
        n_attrs = int(rng.integers(2, 9))
        regions = []
        for i in range(n_regions):
            v = rng.standard_normal(dim)
            regions.append(Region(f"r{i}", square_polygon(i), v / np.linalg.norm(v)))
        attrs = []
        for j in range(n_attrs):
            v = rng.standard_normal(dim)
            attrs.append(Attribute(f"a{j}", v / np.linalg.norm(v)))
        alpha = float(rng.uniform(-0.6, 0.6))
        table = build_table(regions, attrs, alpha)
        for region in regions:
            expected = tuple(
                a.text for a in attrs
                if float(np.dot(region.embedding, a.embedding))
                / (float(np.linalg.norm(region.embedding))
                   * float(np.linalg.norm(a.embedding))) > alpha)
            assert table.rows[region.id] == expected
    ok("eq1 oracle equivalence", "1,000 randomized instances identical")


def test_refinement_loop_paths():
    embedder, regions, attrs = one_round_setup()
    oracle = ScriptedOracle({ambiguity_prompt("turtle", ["spotted shell"]): "no"})
    fast = refine_table("turtle", regions, attrs, embedder, oracle)
    assert fast.provenance.iterations == 0
    assert fast.provenance.status == "resolved"

    embedder, regions, attrs = one_round_setup()
    oracle = ScriptedOracle.from_fixture(FIXTURES / "oracle" / "turtle_one_round.json")
    one = refine_table("turtle", regions, attrs, embedder, oracle)
    assert one.provenance.iterations == 1
    assert one.provenance.status == "resolved"

    embedder, regions, attrs = one_round_setup()
    embedder.mapping.update({"webbed feet": basis(5), "smoother carapace": basis(6),
                             "lighter build": basis(7)})
    classes = ["tortoise", "terrapin"]
    oracle = ScriptedOracle({
        ambiguity_prompt("turtle", ["spotted shell"]):
            "the following classes also have them: tortoise, terrapin",
        discriminative_prompt("turtle", classes): "turtle has webbed feet",
        discriminative_prompt("turtle", classes, ["webbed feet"]):
            "turtle has smoother carapace",
        discriminative_prompt("turtle", classes, ["webbed feet", "smoother carapace"]):
            "turtle has lighter build",
    })
    capped = refine_table("turtle", regions, attrs, embedder, oracle)
    assert capped.provenance.iterations == 3
    assert capped.provenance.status == "unresolved"
    for table in (fast, one, capped):
        datts = table.provenance.discriminative_attributes
        assert len(datts) == len(set(datts))  # never requested or stored twice
    ok("refinement loop", "0-iteration, 1-iteration, and 3-cap paths verified")


def test_matching_optimality_500_instances():
    rng = np.random.default_rng(31)
    side = 64

    def blob(cx, cy, r):
        verts = [(int(round(cx + r * np.cos(k * np.pi / 8))),
                  int(round(cy + r * np.sin(k * np.pi / 8)))) for k in range(16)]
        return Polygon16(tuple(verts))

    for _ in range(500):
        n_pred = int(rng.integers(1, 7))
        n_gt = int(rng.integers(1, 7))
        preds = [blob(rng.uniform(12, 52), rng.uniform(12, 52), rng.uniform(4, 12))
                 for _ in range(n_pred)]
        gts = [polygon_to_mask(blob(rng.uniform(12, 52), rng.uniform(12, 52),
                                    rng.uniform(4, 12)), side, side)
               for _ in range(n_gt)]
        iou = np.array([[mask_iou(polygon_to_mask(p, side, side), g) for g in gts]
                        for p in preds])
        result = match_predictions(preds, gts, side, side)
        total = sum(v for _, _, v in result.assignments)
        small, large = sorted((n_pred, n_gt))
        best = 0.0
        for perm in permutations(range(large), small):
            cand = sum((iou[i, j] if n_pred <= n_gt else iou[j, i])
                       for i, j in enumerate(perm))
            best = max(best, cand)
        assert total == pytest.approx(best, abs=1e-9)
    ok("matching optimality", "500 instances equal the permutation oracle")


def test_template_goldens():
    gt = run_polygon([(10 * k + 10, 2 * k + 10) for k in range(16)])
    task = render_task_instruction("owl", 384, [gt])
    assert task.text == (FIXTURES / "instructions" / "task_owl.txt").read_text("utf-8")

    table = table_for({"r0": ["broad wings"], "r1": ["sharp talons"]})
    polys = {"r0": strip(20, 30), "r1": strip(100, 60)}
    attrs = ["broad wings", "sharp talons", "speckled feathers"]
    incontext = render_incontext_instruction("owl", attrs, table, polys)
    assert incontext.text == (FIXTURES / "instructions" / "incontext_owl.txt").read_text("utf-8")

    pair = make_fake_pair(64, strip(30, 20), run_polygon([(8 + 2 * k, 40) for k in range(16)]))
    pretrain = render_pretrain_instruction(pair, (0, 5, 10), 3)
    assert pretrain.text == (FIXTURES / "instructions" / "pretrain.txt").read_text("utf-8")

    shots = [
        ShotExample(gt_polygons=(strip(10, 50),),
                    table=table_for({"s1r0": ["broad wings"]}),
                    region_polygons={"s1r0": strip(12, 52)}),
        ShotExample(gt_polygons=(strip(100, 80), strip(200, 90)),
                    table=table_for({"s2r0": ["sharp talons"]}),
                    region_polygons={"s2r0": strip(210, 95)}),
    ]
    multishot = render_multishot_instruction("owl", attrs, shots, 384)
    assert multishot.text == (FIXTURES / "instructions" / "multishot_2shot.txt").read_text("utf-8")
    ok("template goldens", "all four instruction kinds byte-exact")


def test_difficulty_monotonicity():
    checkpoints = [0, CFG.total_steps // 4, CFG.total_steps // 2,
                   3 * CFG.total_steps // 4, CFG.total_steps - 1]
    per_checkpoint = 500
    means = []
    for n in checkpoints:
        step = checkpoint_step(n)
        vals = [midpoint_threshold_iou(generate_pair(n * 2_000_000 + i, step, 384, 384))
                for i in range(per_checkpoint)]
        means.append(float(np.mean(vals)))
    assert all(means[i] >= means[i + 1] for i in range(len(means) - 1)), means
    ok("difficulty monotonicity",
       " -> ".join(f"{m:.3f}" for m in means) + " non-increasing")
