"""Unit tests of the rank-based unsupervised trainer."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_blobs
from hebbnet.data import Batch, minibatches
from hebbnet.plasticity import PMetricConfig, p_norm_p, plasticity_increment
from hebbnet.trainer import (
    UnsupConfig,
    accumulate_increments,
    batch_update,
    lr_schedule,
    rank_activations,
    rank_units,
    train_unsupervised,
)

RNG = np.random.default_rng(7)


def single_batch(dataset):
    return next(minibatches(dataset, len(dataset), seed=0, epoch=0))


class TestRankUnits:
    def test_basic_order(self):
        assert rank_units(np.array([0.1, 0.9, 0.5])).tolist() == [1, 2, 0]

    def test_all_equal_gives_identity(self):
        assert rank_units(np.zeros(5)).tolist() == [0, 1, 2, 3, 4]

    def test_singleton(self):
        assert rank_units(np.array([3.0])).tolist() == [0]

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            rank_units(np.array([1.0, np.nan]))

    @settings(deadline=None, max_examples=60)
    @given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=1, max_size=20))
    def test_is_descending_permutation(self, values):
        currents = np.array(values)
        order = rank_units(currents)
        assert sorted(order.tolist()) == list(range(len(values)))
        ranked = currents[order]
        assert np.all(np.diff(ranked) <= 0)
        # ties broken by smaller index
        for a, b in zip(order, order[1:]):
            if currents[a] == currents[b]:
                assert a < b


class TestRankActivations:
    def test_hand_case(self):
        g = rank_activations(np.array([3, 1, 4, 0, 2]), delta=0.4, k=2)
        assert g.tolist() == [0.0, -0.4, 0.0, 1.0, 0.0]

    def test_zero_delta_leaves_only_winner(self):
        g = rank_activations(np.array([2, 0, 1]), delta=0.0, k=2)
        assert g[2] == 1.0 and np.count_nonzero(g) == 1

    def test_k_exceeding_units(self):
        with pytest.raises(ValueError):
            rank_activations(np.array([0]), delta=0.4, k=2)


class TestLrSchedule:
    def test_peak_at_first_epoch(self):
        assert lr_schedule(0, 100, 0.04) == pytest.approx(0.04)

    def test_zero_at_last_epoch(self):
        assert lr_schedule(99, 100, 0.04) == pytest.approx(0.0)

    def test_midpoint(self):
        assert lr_schedule(50, 101, 0.02) == pytest.approx(0.01)

    def test_single_epoch(self):
        assert lr_schedule(0, 1, 0.04) == pytest.approx(0.04)

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            lr_schedule(100, 100, 0.04)
        with pytest.raises(ValueError):
            lr_schedule(-1, 100, 0.04)


class TestBatchUpdate:
    def test_fixed_point_winner_gives_zero_update(self):
        cfg = UnsupConfig(p=4.0, delta=0.0, k=2, hidden=2, epochs=1, batch=1, lr0=0.04)
        v = RNG.uniform(0.1, 1.0, size=16)
        W = np.zeros((2, 16))
        W[0] = v / p_norm_p(v, 4.0) ** 0.25  # on the sphere, aligned with v
        data = _dataset_of([v])
        dW, stats = batch_update(W, single_batch(data), cfg)
        assert stats.degenerate
        assert np.all(dW == 0.0)

    def test_duplicate_examples_double_raw_accumulation(self):
        cfg = UnsupConfig(p=3.0, delta=0.4, k=2, hidden=5, epochs=1, batch=2, lr0=0.01)
        W = RNG.standard_normal((5, 8))
        v = RNG.uniform(0.0, 1.0, size=8)
        one = _dataset_of([v])
        two = _dataset_of([v, v])
        dW1, s1 = batch_update(W, single_batch(one), cfg)
        dW2, s2 = batch_update(W, single_batch(two), cfg)
        assert s2.pre_scale_max_abs == pytest.approx(2.0 * s1.pre_scale_max_abs, rel=1e-12)
        # after max-abs rescaling the applied updates coincide
        assert np.allclose(dW1, dW2, atol=1e-12)

    def test_single_unit_reduces_to_plasticity_increment(self):
        cfg = UnsupConfig(p=4.0, delta=0.0, k=2, hidden=1, epochs=1, batch=1, lr0=0.05)
        W = RNG.standard_normal((1, 10))
        v = RNG.uniform(0.0, 1.0, size=10)
        dW, stats = batch_update(W, single_batch(_dataset_of([v])), cfg)
        expected = plasticity_increment(W[0], v, 1.0, PMetricConfig(p=4.0, R=1.0))
        assert np.allclose(dW[0], expected * (cfg.lr0 / np.max(np.abs(expected))), atol=1e-12)

    def test_k_exceeding_units_with_delta_rejected(self):
        cfg = UnsupConfig(p=2.0, delta=0.4, k=5, hidden=3, epochs=1, batch=1, lr0=0.01)
        W = RNG.standard_normal((3, 4))
        with pytest.raises(ValueError):
            batch_update(W, single_batch(_dataset_of([np.ones(4)])), cfg)

    def test_row_locality_for_fixed_gates(self):
        # with the ranking fixed externally, each row's raw increment depends
        # only on that row and the examples
        V = RNG.uniform(0.0, 1.0, size=(6, 9))
        G = np.zeros((6, 4))
        G[np.arange(6), RNG.integers(0, 4, size=6)] = 1.0
        G[np.arange(6), (RNG.integers(0, 4, size=6) + 1) % 4] = -0.4
        W1 = RNG.standard_normal((4, 9))
        W2 = W1.copy()
        W2[1] += RNG.standard_normal(9)  # perturb a different row
        W2[3] = 0.0
        raw1 = accumulate_increments(W1, V, G, R=1.0, p=4.0)
        raw2 = accumulate_increments(W2, V, G, R=1.0, p=4.0)
        assert np.allclose(raw1[0], raw2[0], atol=1e-12)
        assert np.allclose(raw1[2], raw2[2], atol=1e-12)


class TestTrainUnsupervised:
    def test_zero_epochs_returns_initialization(self):
        d = make_blobs(50, n_features=20, seed=3)
        cfg = UnsupConfig(hidden=6, epochs=0, batch=10, seed=123)
        W, history = train_unsupervised(d, cfg)
        expected = np.random.default_rng(123).standard_normal((6, 20))
        assert np.array_equal(W, expected)
        assert len(history) == 0

    def test_deterministic_replay(self):
        d = make_blobs(80, n_features=25, seed=4)
        cfg = UnsupConfig(hidden=8, epochs=3, batch=16, lr0=0.04, seed=5)
        W1, h1 = train_unsupervised(d, cfg)
        W2, h2 = train_unsupervised(d, cfg)
        assert np.array_equal(W1, W2)
        assert h1.records == h2.records

    def test_history_one_record_per_epoch(self):
        d = make_blobs(40, n_features=16, seed=6)
        cfg = UnsupConfig(hidden=4, epochs=5, batch=8, seed=1)
        _, history = train_unsupervised(d, cfg)
        assert [r.epoch for r in history] == list(range(5))
        assert history.records[0].lr == pytest.approx(0.04)
        assert history.records[-1].lr == pytest.approx(0.0)

    def test_converges_to_sphere_and_diversifies(self):
        d = make_blobs(600, n_features=36, seed=8, noise=0.05)
        cfg = UnsupConfig(p=4.0, delta=0.4, k=2, hidden=12, epochs=30, batch=50,
                          lr0=0.04, seed=2)
        W, history = train_unsupervised(d, cfg)
        assert history.records[-1].sphere_deviation < 1e-2
        # per-epoch deviation eventually decreasing
        deviations = [r.sphere_deviation for r in history]
        assert deviations[-1] < deviations[0]
        # no two rows nearly identical
        normed = W / np.linalg.norm(W, axis=1, keepdims=True)
        corr = normed @ normed.T
        np.fill_diagonal(corr, 0.0)
        assert np.max(corr) < 0.99

    def test_on_epoch_sees_live_weights(self):
        d = make_blobs(30, n_features=9, seed=9)
        cfg = UnsupConfig(hidden=3, epochs=2, batch=10, seed=0)
        seen = []
        W, _ = train_unsupervised(d, cfg, on_epoch=lambda rec, weights: seen.append -
                                  0 if False else seen.append((rec.epoch, weights.copy())))
        assert [e for e, _ in seen] == [0, 1]
        assert np.array_equal(seen[-1][1], W)


def _dataset_of(vectors):
    from hebbnet.data import Dataset

    arr = np.array(vectors, dtype=float)
    return Dataset(examples=arr, labels=np.zeros(len(arr), dtype=int), n_classes=10)
