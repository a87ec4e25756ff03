import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mcauc.losses import (
    DegenerateBatchError,
    aauc_binary,
    aauc_binary_grad,
    aauc_ovo_loss,
    aauc_ovr_loss,
    pair_count_cost,
    sigmoid,
    softmax_ce_loss,
    stable_sigmoid,
)
from mcauc.metrics import UndefinedMetricError, auc_ovo, auc_ovr, binary_auc
from oracles import approx_auc, central_diff, max_rel_err

SIGMA_3 = 1.0 / (1.0 + math.exp(-3.0))


class TestSigmoid:
    def test_zero(self):
        assert stable_sigmoid(0.0) == 0.5
        assert sigmoid(np.array([0.0]))[0] == 0.5

    def test_three(self):
        assert stable_sigmoid(3.0) == pytest.approx(0.9525741268, abs=1e-10)

    def test_large_negative(self):
        v = stable_sigmoid(-1000.0)
        assert 0.0 <= v < 1e-300

    @given(st.floats(-1e4, 1e4))
    def test_symmetry(self, x):
        assert abs(stable_sigmoid(-x) - (1.0 - stable_sigmoid(x))) <= 1e-15
        assert sigmoid(np.array([x]))[0] == pytest.approx(stable_sigmoid(x), abs=1e-15)

    @pytest.mark.parametrize("bad", [math.inf, -math.inf, math.nan])
    def test_nonfinite(self, bad):
        with pytest.raises(ValueError):
            stable_sigmoid(bad)


class TestBinarySurrogate:
    def test_single_pair(self):
        assert aauc_binary([0.8], [0.5], 10) == pytest.approx(SIGMA_3, abs=1e-12)

    def test_tie(self):
        assert aauc_binary([0.4], [0.4], 10) == 0.5

    def test_large_delta_limit(self):
        assert abs(aauc_binary([0.9, 0.8], [0.1, 0.2], 1e4) - binary_auc([0.9, 0.8], [0.1, 0.2])) <= 1e-3

    def test_matches_loop(self):
        rng = np.random.default_rng(0)
        pos, neg = rng.random(7), rng.random(5)
        assert aauc_binary(pos, neg, 10) == pytest.approx(approx_auc(pos, neg, 10), abs=1e-14)

    def test_empty(self):
        with pytest.raises(UndefinedMetricError):
            aauc_binary([], [0.1])

    @pytest.mark.parametrize("delta", [0.0, -1.0, math.inf])
    def test_bad_delta(self, delta):
        with pytest.raises(ValueError):
            aauc_binary([0.2], [0.1], delta)

    def test_grad_closed_form(self):
        gp, gn = aauc_binary_grad([0.8], [0.5], 10)
        assert gp[0] == pytest.approx(0.451766, abs=1e-6)
        assert gp[0] == pytest.approx(10 * SIGMA_3 * (1 - SIGMA_3), rel=1e-12)
        assert gn[0] == -gp[0]

    def test_grad_tie(self):
        gp, _ = aauc_binary_grad([0.3, 0.3], [0.3], 8.0)
        # each target has one pair of weight 1/(2*1), sigma'(0) = 1/4
        np.testing.assert_allclose(gp, 8.0 / 4 / 2, rtol=1e-15)

    def test_grad_finite_differences_and_shift(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            pos, neg = rng.random(int(rng.integers(1, 8))), rng.random(int(rng.integers(1, 8)))
            gp, gn = aauc_binary_grad(pos, neg, 10)
            assert abs(gp.sum() + gn.sum()) <= 1e-12
            assert max_rel_err(gp, central_diff(lambda p: aauc_binary(p, neg, 10), pos)) <= 1e-4
            assert max_rel_err(gn, central_diff(lambda n: aauc_binary(pos, n, 10), neg)) <= 1e-4

    def test_monotone(self):
        rng = np.random.default_rng(2)
        pos, neg = rng.random(4), rng.random(4)
        base = aauc_binary(pos, neg)
        up = pos.copy()
        up[1] += 0.05
        dn = neg.copy()
        dn[2] += 0.05
        assert aauc_binary(up, neg) > base > aauc_binary(pos, dn)


def _batch(rng, n=12, c=3):
    y = np.r_[np.arange(c), rng.integers(0, c, n - c)]
    return rng.random((n, c)), y


class TestMulticlassSurrogates:
    def test_ovo_two_class_reduction(self):
        rng = np.random.default_rng(3)
        s, y = _batch(rng, n=10, c=2)
        sym = 0.5 * (aauc_binary(s[y == 0, 0], s[y == 1, 0]) + aauc_binary(s[y == 1, 1], s[y == 0, 1]))
        assert aauc_ovo_loss(s, y).value == 1.0 - sym

    def test_ovr_equals_ovo_two_complementary_columns(self):
        p1 = np.array([0.7, 0.2, 0.55, 0.4])
        s = np.c_[1 - p1, p1]
        y = np.array([1, 0, 1, 0])
        # both reduce to the mean of the two directed terms on the 2 x 2 pair grid
        hand = 1 - 0.5 * (approx_auc([0.8, 0.6], [0.3, 0.45], 10) + approx_auc([0.7, 0.55], [0.2, 0.4], 10))
        assert aauc_ovo_loss(s, y).value == pytest.approx(hand, abs=1e-14)
        assert aauc_ovr_loss(s, y).value == pytest.approx(hand, abs=1e-14)

    @pytest.mark.parametrize("fn", [aauc_ovo_loss, aauc_ovr_loss])
    def test_uniform(self, fn):
        assert fn(np.full((6, 3), 1 / 3), [0, 1, 2, 0, 1, 2]).value == 0.5

    def test_ovo_separated_large_delta(self):
        y = np.array([0, 1, 2, 0, 1, 2])
        s = 0.05 + 0.9 * np.eye(3)[y]
        assert auc_ovo(s, y) == 1.0
        assert aauc_ovo_loss(s, y, 1e4).value <= 1e-3

    @pytest.mark.parametrize("fn", [aauc_ovo_loss, aauc_ovr_loss])
    def test_grad_finite_differences(self, fn):
        rng = np.random.default_rng(4)
        for _ in range(10):
            s, y = _batch(rng)
            res = fn(s, y, 10)
            num = central_diff(lambda m: fn(m, y, 10).value, s)
            assert max_rel_err(res.grad, num) <= 1e-4

    def test_ovo_missing_class_renormalises(self):
        rng = np.random.default_rng(5)
        s = rng.random((8, 4))
        y = np.array([0, 1, 3, 0, 1, 3, 0, 3])
        res = aauc_ovo_loss(s, y)
        terms = []
        for i, j in [(0, 1), (0, 3), (1, 3)]:
            terms.append(0.5 * (approx_auc(s[y == i, i], s[y == j, i], 10) + approx_auc(s[y == j, j], s[y == i, j], 10)))
        assert res.value == pytest.approx(1 - sum(terms) / 3, abs=1e-14)
        assert np.all(res.grad[:, 2] == 0)

    def test_ovr_missing_class(self):
        rng = np.random.default_rng(6)
        s = rng.random((6, 3))
        y = np.array([0, 2, 0, 2, 2, 0])
        res = aauc_ovr_loss(s, y)
        expect = 1 - 0.5 * (approx_auc(s[y == 0, 0], s[y != 0, 0], 10) + approx_auc(s[y == 2, 2], s[y != 2, 2], 10))
        assert res.value == pytest.approx(expect, abs=1e-14)
        assert np.all(res.grad[:, 1] == 0)

    @pytest.mark.parametrize("fn", [aauc_ovo_loss, aauc_ovr_loss])
    def test_degenerate(self, fn):
        with pytest.raises(DegenerateBatchError, match="degenerate batch"):
            fn(np.random.default_rng(0).random((4, 3)), [1, 1, 1, 1])

    @pytest.mark.parametrize("fn", [aauc_ovo_loss, aauc_ovr_loss])
    def test_bounds_and_monotone(self, fn):
        rng = np.random.default_rng(7)
        for _ in range(30):
            s, y = _batch(rng, n=9)
            v = fn(s, y).value
            assert 0.0 <= v <= 1.0
            r = int(rng.integers(0, 9))
            bumped = s.copy()
            bumped[r, y[r]] += 0.1
            assert fn(bumped, y).value <= v

    def test_shift_invariance_of_subterm(self):
        rng = np.random.default_rng(8)
        pos, neg = rng.random(5), rng.random(6)
        assert aauc_binary(pos + 0.37, neg + 0.37) == pytest.approx(aauc_binary(pos, neg), abs=1e-12)

    @pytest.mark.parametrize("fn, exact", [(aauc_ovo_loss, auc_ovo), (aauc_ovr_loss, auc_ovr)])
    def test_large_delta_matches_exact(self, fn, exact):
        rng = np.random.default_rng(9)
        for _ in range(20):
            n, c = 15, 3
            s = np.stack([rng.permutation(101)[:n] / 100 for _ in range(c)], axis=1)
            y = np.r_[np.arange(c), rng.integers(0, c, n - c)]
            assert abs((1 - fn(s, y, 1e4).value) - exact(s, y)) <= 1e-3


class TestCrossEntropy:
    def test_confident(self):
        logits = np.array([[50.0, 0, 0], [0, 0, 50.0]])
        assert softmax_ce_loss(logits, [0, 2]).value < 1e-20

    def test_uniform(self):
        assert softmax_ce_loss(np.zeros((4, 3)), [0, 1, 2, 0]).value == pytest.approx(math.log(3), abs=1e-12)
        assert math.log(3) == pytest.approx(1.0986123, abs=1e-7)

    def test_grad_finite_differences(self):
        rng = np.random.default_rng(10)
        z = rng.standard_normal((5, 3))
        y = np.array([0, 2, 1, 1, 0])
        res = softmax_ce_loss(z, y)
        assert max_rel_err(res.grad, central_diff(lambda m: softmax_ce_loss(m, y).value, z)) <= 1e-4

    def test_huge_logits_stable(self):
        assert math.isfinite(softmax_ce_loss(np.array([[1e4, -1e4]]), [1]).value)

    def test_nonfinite(self):
        with pytest.raises(ValueError):
            softmax_ce_loss(np.array([[np.inf, 0.0]]), [0])


class TestPairCountCost:
    def test_three_classes(self):
        assert pair_count_cost(3, "ovo") == 6
        assert pair_count_cost(3, "ovr") == 3

    def test_two_classes(self):
        assert pair_count_cost(2, "ovo") == 2

    def test_invalid(self):
        with pytest.raises(ValueError):
            pair_count_cost(1, "ovo")
        with pytest.raises(ValueError):
            pair_count_cost(3, "both")
