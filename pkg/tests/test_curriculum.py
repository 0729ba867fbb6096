import numpy as np
import pytest
from hypothesis import given, strategies as st

from fewseg.curriculum import (
    ScheduleConfig,
    StepParams,
    image_schedule,
    mask_schedule,
    sample_hint_indices,
    step_params,
)
from fewseg.errors import ParameterError

CFG = ScheduleConfig()


class TestImageSchedule:
    def test_boundaries(self):
        assert image_schedule(0, CFG) == (100.0, 150.0, 0.0, 50.0)
        assert image_schedule(CFG.total_steps, CFG) == (0.0, 50.0, 50.0, 100.0)
        assert image_schedule(CFG.total_steps // 2, CFG) == (50.0, 100.0, 25.0, 75.0)

    def test_out_of_range(self):
        with pytest.raises(ParameterError):
            image_schedule(-1, CFG)
        with pytest.raises(ParameterError):
            image_schedule(CFG.total_steps + 1, CFG)

    @given(st.integers(min_value=0, max_value=60_000))
    def test_linear_formulas(self, n):
        a, b, c, d = image_schedule(n, CFG)
        assert a == pytest.approx(100.0 - n * 100.0 / 60_000)
        assert b - a == pytest.approx(50.0)
        assert c == pytest.approx(n * 50.0 / 60_000)
        assert d - c == pytest.approx(50.0)

    def test_monotone_and_constant_width(self):
        prev_a, prev_c = np.inf, -np.inf
        for n in range(0, CFG.total_steps + 1, 500):
            a, b, c, d = image_schedule(n, CFG)
            assert a <= prev_a and c >= prev_c
            assert b - a == pytest.approx(CFG.b0 - CFG.a0)
            assert d - c == pytest.approx(CFG.d_final - CFG.c_final)
            prev_a, prev_c = a, c


class TestMaskSchedule:
    def test_paper_endpoints(self):
        assert mask_schedule(0, CFG) == 15
        assert mask_schedule(CFG.total_steps // 2, CFG) == 0

    def test_decrement_rule_example(self):
        assert mask_schedule(3_999, CFG) == 14

    def test_exhaustive_decrement_rule(self):
        seg = CFG.total_steps // 30
        half = CFG.total_steps // 2
        values = set()
        prev = 16
        zero_from = None
        for n in range(CFG.total_steps):
            m = mask_schedule(n, CFG)
            expected = 0 if n >= half else max(0, 15 - n // seg)
            assert m == expected
            assert m <= prev
            prev = m
            values.add(m)
            if m == 0 and zero_from is None:
                zero_from = n
        assert values == set(range(16))
        assert zero_from == half  # reaches 0 exactly at the halfway step

    def test_out_of_range(self):
        with pytest.raises(ParameterError):
            mask_schedule(CFG.total_steps, CFG)


class TestStepParams:
    def test_composition_at_boundaries(self):
        p = step_params(0, CFG)
        assert (p.a, p.b, p.c, p.d, p.m) == (100.0, 150.0, 0.0, 50.0, 15)

    def test_last_step(self):
        p = step_params(CFG.total_steps - 1, CFG)
        assert p.a == pytest.approx(100.0 / 60_000, rel=1e-9)
        assert p.m == 0

    def test_formula_evaluation(self):
        p = step_params(2_000, CFG)
        assert p.m == 14
        assert round(p.a, 2) == 96.67

    def test_invariants_enforced(self):
        with pytest.raises(ParameterError):
            StepParams(n=0, a=10.0, b=5.0, c=0.0, d=1.0, m=0)
        with pytest.raises(ParameterError):
            StepParams(n=0, a=0.0, b=1.0, c=0.0, d=1.0, m=16)


class TestScheduleConfig:
    def test_defaults_valid(self):
        ScheduleConfig()

    def test_divisibility(self):
        with pytest.raises(ParameterError):
            ScheduleConfig(total_steps=1_000)

    def test_bounds(self):
        with pytest.raises(ParameterError):
            ScheduleConfig(a0=200.0, b0=100.0)
        with pytest.raises(ParameterError):
            ScheduleConfig(c_final=100.0, d_final=500.0)


class TestHintIndices:
    def test_counts_and_ranges(self):
        rng = np.random.default_rng(0)
        for m in range(16):
            picked = sample_hint_indices(rng, m)
            assert len(picked) == m
            assert len(set(picked)) == m
            assert all(0 <= i < 16 for i in picked)
            assert list(picked) == sorted(picked)

    def test_rejects_bad_m(self):
        with pytest.raises(ParameterError):
            sample_hint_indices(np.random.default_rng(0), 16)
