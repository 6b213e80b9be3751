import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from modradon.core import (
    SampleSeq,
    Threshold,
    anti_diff,
    anti_diff_bilateral,
    forward_diff,
    modulo_fold,
    round_to_2lambda,
)
from modradon.errors import DomainError, SizeError


class TestModuloFold:
    def test_identity_below_threshold(self):
        assert modulo_fold(0.3, Threshold(1.0)) == 0.3

    def test_threshold_maps_to_negative_edge(self):
        for lam in (1.0, 0.37, 2.5e-4):
            assert modulo_fold(lam, Threshold(lam)) == -lam

    def test_direct_values(self):
        assert modulo_fold(2.5, Threshold(1.0)) == 0.5
        assert modulo_fold(-2.5, Threshold(1.0)) == -0.5

    def test_array_input(self):
        out = modulo_fold(np.array([0.3, 2.5, -2.5]), Threshold(1.0))
        np.testing.assert_array_equal(out, [0.3, 0.5, -0.5])

    def test_nonfinite_rejected(self):
        with pytest.raises(DomainError):
            modulo_fold(np.inf, Threshold(1.0))
        with pytest.raises(DomainError):
            modulo_fold(np.array([0.0, np.nan]), Threshold(1.0))

    def test_bad_threshold(self):
        with pytest.raises(DomainError):
            Threshold(0.0)
        with pytest.raises(DomainError):
            Threshold(-1.0)

    @given(
        t=st.floats(-1e6, 1e6, allow_nan=False),
        lam=st.floats(1e-4, 1e3, allow_nan=False),
    )
    @settings(max_examples=300)
    def test_decomposition_property(self, t, lam):
        y = modulo_fold(t, Threshold(lam))
        assert -lam <= y < lam
        resid = t - y
        grid = 2.0 * lam * np.round(resid / (2.0 * lam))
        assert abs(resid - grid) <= 1e-12 * max(1.0, abs(t))


class TestForwardDiff:
    def test_constant_is_zero(self):
        d = forward_diff(SampleSeq(0, np.full(10, 3.7)), 1)
        np.testing.assert_array_equal(d.values, np.zeros(9))

    def test_squares(self):
        a = SampleSeq(0, [0.0, 1.0, 4.0, 9.0])
        np.testing.assert_array_equal(forward_diff(a, 1).values, [1.0, 3.0, 5.0])
        np.testing.assert_array_equal(forward_diff(a, 2).values, [2.0, 2.0])

    def test_order_n_is_iterated_order_one(self):
        rng = np.random.default_rng(3)
        a = SampleSeq(-5, rng.normal(size=20))
        for n in (2, 3, 4):
            once = forward_diff(a, n)
            iterated = a
            for _ in range(n):
                iterated = forward_diff(iterated, 1)
            np.testing.assert_allclose(once.values, iterated.values, atol=1e-12)
            assert once.base_index == a.base_index

    def test_too_short(self):
        with pytest.raises(SizeError):
            forward_diff(SampleSeq(0, [1.0, 2.0]), 2)

    def test_bad_order(self):
        with pytest.raises(DomainError):
            forward_diff(SampleSeq(0, [1.0, 2.0]), 0)


class TestAntiDiff:
    def test_cumulative_sums(self):
        out = anti_diff(SampleSeq(-1, [1.0, 3.0, 5.0]))
        assert out.base_index == -1
        np.testing.assert_array_equal(out.values, [0.0, 1.0, 4.0, 9.0])

    def test_zeros(self):
        out = anti_diff(SampleSeq(4, np.zeros(6)))
        np.testing.assert_array_equal(out.values, np.zeros(7))

    @given(st.lists(st.integers(-50, 50), min_size=2, max_size=30))
    def test_inverts_difference_up_to_base_value(self, vals):
        a = SampleSeq(-3, np.array(vals, dtype=float))
        rt = anti_diff(forward_diff(a, 1))
        np.testing.assert_array_equal(rt.values, a.values - a.values[0])


class TestAntiDiffBilateral:
    def test_ones(self):
        out = anti_diff_bilateral(SampleSeq(-2, [1.0, 1.0, 1.0, 1.0]))
        assert out.base_index == -2
        np.testing.assert_array_equal(out.values, [-2.0, -1.0, 0.0, 1.0, 2.0])

    def test_zeros(self):
        out = anti_diff_bilateral(SampleSeq(-3, np.zeros(7)))
        np.testing.assert_array_equal(out.values, np.zeros(8))

    def test_inverts_difference_up_to_value_at_zero(self):
        rng = np.random.default_rng(11)
        a = SampleSeq(-6, rng.normal(size=15))
        rt = anti_diff_bilateral(forward_diff(a, 1))
        at0 = a.at(0)
        np.testing.assert_allclose(rt.values, a.values - at0, atol=1e-12)

    def test_requires_index_zero(self):
        with pytest.raises(DomainError):
            anti_diff_bilateral(SampleSeq(2, [1.0, 2.0]))
        with pytest.raises(DomainError):
            anti_diff_bilateral(SampleSeq(-4, [1.0, 2.0]))


class TestRoundTo2Lambda:
    def test_grid_fixed_points(self):
        thr = Threshold(0.3)
        for m in (-7, -1, 0, 1, 2, 10):
            assert round_to_2lambda(2 * 0.3 * m, thr) == 2 * 0.3 * m

    def test_zero(self):
        assert round_to_2lambda(0.0, Threshold(1.0)) == 0.0

    def test_interior_value(self):
        lam = 0.4
        assert round_to_2lambda(2.3 * lam, Threshold(lam)) == 2 * lam

    @given(
        x=st.floats(-1e3, 1e3, allow_nan=False),
        lam=st.floats(1e-3, 10.0, allow_nan=False),
    )
    @settings(max_examples=200)
    def test_idempotent_and_on_grid(self, x, lam):
        thr = Threshold(lam)
        y = round_to_2lambda(x, thr)
        m = y / (2 * lam)
        assert abs(m - round(m)) < 1e-9
        assert round_to_2lambda(y, thr) == y


class TestSampleSeq:
    def test_indexing(self):
        a = SampleSeq(-3, [1.0, 2.0, 3.0, 4.0])
        assert len(a) == 4
        assert a.end_index == 0
        assert a.at(-3) == 1.0
        assert a.at(0) == 4.0
        np.testing.assert_array_equal(a.indices(), [-3, -2, -1, 0])

    def test_window(self):
        a = SampleSeq(-3, [1.0, 2.0, 3.0, 4.0])
        w = a.window(-2, -1)
        assert w.base_index == -2
        np.testing.assert_array_equal(w.values, [2.0, 3.0])
        with pytest.raises(DomainError):
            a.window(-4, 0)

    def test_empty_rejected(self):
        with pytest.raises(SizeError):
            SampleSeq(0, [])
