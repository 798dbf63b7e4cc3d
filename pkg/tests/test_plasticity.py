"""Unit tests of the p-metric plasticity core."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hebbnet.plasticity import (
    LearningActivation,
    PMetricConfig,
    lyapunov,
    norm_flow_rate,
    p_inner,
    p_norm_p,
    plasticity_increment,
    q_value,
)

RNG = np.random.default_rng(1234)


class TestPInner:
    def test_p2_is_dot_product(self):
        for _ in range(50):
            w = RNG.standard_normal(8)
            x = RNG.standard_normal(8)
            assert p_inner(w, x, 2.0) == pytest.approx(float(w @ x), abs=1e-12)

    def test_hand_case_p3(self):
        # direct evaluation of the definition: |2|^1*2*1 + |-1|^1*(-1)*1
        expected = abs(2.0) ** 1 * 2.0 * 1.0 + abs(-1.0) ** 1 * (-1.0) * 1.0
        assert expected == 3.0
        assert p_inner(np.array([2.0, -1.0]), np.array([1.0, 1.0]), 3.0) == pytest.approx(3.0)

    def test_zero_vector(self):
        w = RNG.standard_normal(5)
        assert p_inner(w, np.zeros(5), 3.5) == 0.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            p_inner(np.ones(3), np.ones(4), 2.0)

    def test_p_below_two_rejected(self):
        with pytest.raises(ValueError):
            p_inner(np.ones(3), np.ones(3), 1.5)


class TestPNormP:
    @pytest.mark.parametrize("p", [2.0, 3.0, 4.0, 6.5])
    def test_unit_basis_vector(self, p):
        e = np.zeros(7)
        e[3] = 1.0
        assert p_norm_p(e, p) == pytest.approx(1.0)

    def test_two_unit_entries_p4(self):
        assert p_norm_p(np.array([1.0, 1.0]), 4.0) == pytest.approx(2.0)

    @settings(deadline=None, max_examples=60)
    @given(
        st.lists(st.floats(-3, 3, allow_nan=False), min_size=1, max_size=12),
        st.floats(2.0, 6.0),
    )
    def test_consistent_with_self_inner(self, entries, p):
        w = np.array(entries)
        assert p_norm_p(w, p) == pytest.approx(p_inner(w, w, p), rel=1e-12, abs=1e-12)


class TestQValue:
    def test_on_sphere_denominator_is_one(self):
        w = RNG.standard_normal(6)
        p = 4.0
        w /= p_norm_p(w, p) ** (1.0 / p)
        v = RNG.standard_normal(6)
        assert q_value(w, v, p) == pytest.approx(p_inner(w, v, p), rel=1e-12)

    def test_zero_input(self):
        assert q_value(RNG.standard_normal(4), np.zeros(4), 3.0) == 0.0

    def test_hand_case(self):
        assert q_value(np.array([1.0, 0.0]), np.array([0.5, 2.0]), 2.0) == pytest.approx(0.5)

    def test_zero_norm_row_rejected(self):
        with pytest.raises(ValueError, match="singular"):
            q_value(np.zeros(4), np.ones(4), 2.0)


class TestPlasticityIncrement:
    @pytest.mark.parametrize("p", [2.0, 3.0, 4.0])
    def test_fixed_point_on_sphere(self, p):
        cfg = PMetricConfig(p=p, R=1.3)
        for _ in range(20):
            v = RNG.uniform(0.0, 1.0, size=10) + 1e-3
            w = cfg.R * v / p_norm_p(v, p) ** (1.0 / p)
            inc = plasticity_increment(w, v, g=0.7, cfg=cfg)
            assert np.max(np.abs(inc)) < 1e-12

    def test_zero_gate(self):
        cfg = PMetricConfig(p=3.0)
        inc = plasticity_increment(RNG.standard_normal(5), RNG.standard_normal(5), 0.0, cfg)
        assert np.all(inc == 0.0)

    def test_oja_reduction(self):
        # p=2, R=1, unit row, gate y = w.v: increment must equal y*(v - y*w)
        cfg = PMetricConfig(p=2.0, R=1.0)
        for _ in range(50):
            w = RNG.standard_normal(9)
            w /= np.linalg.norm(w)
            v = RNG.standard_normal(9)
            y = float(w @ v)
            expected = y * (v - y * w)
            got = plasticity_increment(w, v, g=y, cfg=cfg)
            assert np.max(np.abs(got - expected)) < 1e-12


class TestNormFlowRate:
    def test_zero_on_sphere(self):
        cfg = PMetricConfig(p=4.0, R=1.0)
        w = RNG.standard_normal(6)
        w /= p_norm_p(w, 4.0) ** 0.25
        v = RNG.uniform(0, 1, size=6)
        assert norm_flow_rate(w, v, g=1.0, cfg=cfg) == pytest.approx(0.0, abs=1e-12)

    def test_sign_inside_sphere(self):
        cfg = PMetricConfig(p=3.0, R=1.0)
        for _ in range(20):
            w = RNG.uniform(0.05, 0.4, size=5)
            v = RNG.uniform(0.1, 1.0, size=5)
            assert p_norm_p(w, 3.0) < 1.0
            assert p_inner(w, v, 3.0) > 0.0
            assert norm_flow_rate(w, v, g=1.0, cfg=cfg) > 0.0

    @pytest.mark.parametrize("p", [2.0, 3.0, 4.0])
    def test_matches_finite_difference(self, p):
        cfg = PMetricConfig(p=p, R=1.0)
        eps = 1e-6
        for g in (1.0, -0.4, 0.7):
            w = RNG.uniform(0.3, 1.2, size=8) * RNG.choice([-1.0, 1.0], size=8)
            v = RNG.uniform(0.0, 1.0, size=8)
            inc = plasticity_increment(w, v, g, cfg)
            fd = (p_norm_p(w + eps * inc, p) - p_norm_p(w, p)) / eps
            rate = norm_flow_rate(w, v, g, cfg)
            assert fd == pytest.approx(rate, rel=1e-3)


class TestSphereAttraction:
    @pytest.mark.parametrize("factor", [0.25, 4.0])
    @pytest.mark.parametrize("gate_power", [1, 2, 3])
    def test_deviation_decreases_monotonically(self, factor, gate_power):
        p, dt = 3.0, 1e-3
        cfg = PMetricConfig(p=p, R=1.0)
        rng = np.random.default_rng(42 + gate_power)
        v = rng.uniform(0.1, 1.0, size=12)
        w = rng.uniform(0.1, 1.0, size=12)
        w *= (factor * cfg.R**p / p_norm_p(w, p)) ** (1.0 / p)
        deviation = abs(p_norm_p(w, p) - cfg.R**p)
        # monotone per step down to 1e-9; below that, second-order Euler
        # effects dominate and the deviation just dithers near zero
        for _ in range(20000):
            if deviation < 1e-9:
                break
            g = q_value(w, v, p) ** gate_power
            if g * p_inner(w, v, p) <= 0.0:
                break
            w = w + dt * plasticity_increment(w, v, g, cfg)
            new_deviation = abs(p_norm_p(w, p) - cfg.R**p)
            assert new_deviation <= deviation + 1e-12
            deviation = new_deviation
        assert deviation < 1e-9


class TestLyapunov:
    def test_single_unit_linear_gate(self):
        w = RNG.standard_normal(7)
        w /= np.linalg.norm(w)
        v = RNG.standard_normal(7)
        cfg = PMetricConfig(p=2.0, R=1.0)
        assert lyapunov(w, v, cfg, "linear") == pytest.approx(float(w @ v) ** 2 / 2.0)

    def test_zero_input_linear_gate(self):
        W = RNG.standard_normal((3, 5))
        assert lyapunov(W, np.zeros(5), PMetricConfig(p=3.0), "linear") == 0.0

    def test_zero_row_rejected(self):
        W = np.zeros((2, 4))
        W[0] = 1.0
        with pytest.raises(ValueError, match="singular"):
            lyapunov(W, np.ones(4), PMetricConfig(), "linear")

    def test_rank_gate_rejected(self):
        act = LearningActivation(form="rank_based")
        with pytest.raises(ValueError):
            lyapunov(np.ones((1, 3)), np.ones(3), PMetricConfig(), act)

    def test_threshold_antiderivative_matches_quadrature(self):
        # Independent oracle: integrate the gate numerically from 0 to Q.
        act = LearningActivation(form="threshold", delta=0.4, h_star=0.8)

        def gate(h):
            return np.where(h >= act.h_star, 1.0, np.where(h > 0, -act.delta, 0.0))

        cfg = PMetricConfig(p=2.0)
        for q_target in (-0.5, 0.3, 0.8, 2.1):
            w = np.array([1.0, 0.0])
            v = np.array([q_target, 0.0])  # Q = w.v for unit w, p=2
            grid = np.linspace(0.0, q_target, 20001)
            quadrature = np.trapezoid(gate(grid), grid)
            assert lyapunov(w, v, cfg, act) == pytest.approx(quadrature, abs=5e-4)

    def test_nondecreasing_along_euler_flow(self):
        cfg = PMetricConfig(p=3.0, R=1.0)
        rng = np.random.default_rng(5)
        W = rng.standard_normal((4, 6))
        v = rng.uniform(0.1, 1.0, size=6)
        dt = 1e-3
        previous = lyapunov(W, v, cfg, "linear")
        for _ in range(500):
            for mu in range(W.shape[0]):
                g = q_value(W[mu], v, cfg.p)
                W[mu] += dt * plasticity_increment(W[mu], v, g, cfg)
            current = lyapunov(W, v, cfg, "linear")
            assert current >= previous - 1e-10
            previous = current


class TestConfigs:
    def test_pmetric_validation(self):
        with pytest.raises(ValueError):
            PMetricConfig(p=1.0)
        with pytest.raises(ValueError):
            PMetricConfig(R=0.0)

    def test_activation_validation(self):
        with pytest.raises(ValueError):
            LearningActivation(form="nope")
        with pytest.raises(ValueError):
            LearningActivation(delta=-0.1)
        with pytest.raises(ValueError):
            LearningActivation(k=1)
        with pytest.raises(ValueError):
            LearningActivation(form="threshold", h_star=0.0)
