from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from hetrcm import rng
from hetrcm.errors import ConvergenceError, ParameterError
from hetrcm.params import Boundary, BoxDomain, ModelParams
from hetrcm.quadrature import gauss_kronrod


class TestRng:
    def test_pure_function_of_key(self):
        a = rng.uniform(np.uint64(9), "edge", np.uint64(3), np.uint64(8))
        b = rng.uniform(np.uint64(9), "edge", np.uint64(3), np.uint64(8))
        assert a == b

    def test_broadcast_matches_scalar(self):
        i = np.arange(20, dtype=np.uint64)
        batch = rng.uniform(np.uint64(4), "cloud", i[:, None], np.arange(3, dtype=np.uint64))
        for k in (0, 7, 19):
            for lane in range(3):
                assert batch[k, lane] == rng.uniform(np.uint64(4), "cloud", np.uint64(k),
                                                     np.uint64(lane))

    def test_streams_and_seeds_differ(self):
        i = np.arange(1000, dtype=np.uint64)
        a = rng.uniform(np.uint64(1), "edge", i)
        assert not np.array_equal(a, rng.uniform(np.uint64(1), "site", i))
        assert not np.array_equal(a, rng.uniform(np.uint64(2), "edge", i))

    def test_open_unit_interval_and_uniformity(self):
        u = rng.uniform(np.uint64(0), "test", np.arange(200000, dtype=np.uint64))
        assert u.min() > 0 and u.max() < 1
        assert stats.kstest(u, "uniform").pvalue > 1e-3
        assert abs(np.corrcoef(u[:-1], u[1:])[0, 1]) < 4 / math.sqrt(u.size)

    def test_extreme_hashes_stay_inside(self):
        ends = rng.to_unit(np.array([0, 2**64 - 1], dtype=np.uint64))
        assert 0 < ends[0] and ends[1] < 1

    def test_check_seed(self):
        assert rng.check_seed(2**64 - 1) == 2**64 - 1
        with pytest.raises(ValueError):
            rng.check_seed(-1)
        with pytest.raises(TypeError):
            rng.check_seed(1.5)


class TestGaussKronrod:
    def test_polynomial_exact(self):
        val, err = gauss_kronrod(lambda x: 3 * x ** 2, 0.0, 2.0)
        assert val == pytest.approx(8.0, rel=1e-15) and err < 1e-12

    def test_peaked_integrand(self):
        val, _ = gauss_kronrod(lambda x: np.exp(-1e4 * (x - 0.3) ** 2), 0.0, 1.0)
        assert val == pytest.approx(math.sqrt(math.pi / 1e4), rel=1e-11)

    def test_budget_exhausted(self):
        with pytest.raises(ConvergenceError):
            gauss_kronrod(lambda x: np.sign(np.sin(1e3 * x)), 0.0, 1.0, max_panels=16)


class TestParams:
    @pytest.mark.parametrize("field,value", [("nu", 0), ("lam", -1), ("alpha", math.inf),
                                             ("tau", "3"), ("nu", True)])
    def test_rejects_invalid(self, field, value):
        kwargs = dict(d=1, nu=1, lam=1, alpha=2, tau=3)
        kwargs[field] = value
        with pytest.raises(ParameterError) as info:
            ModelParams(**kwargs)
        assert info.value.field == field

    def test_rejects_bad_dimension(self):
        with pytest.raises(ParameterError):
            ModelParams(0, 1, 1, 2, 3)

    def test_finite_degree_predicate(self):
        assert ModelParams(1, 1, 1, 2, 3).finite_degree
        assert not ModelParams(2, 1, 1, Fraction(4), Fraction(1, 2)).finite_degree
        assert not ModelParams(2, 1, 1, 2, 3).finite_degree

    def test_domain(self):
        dom = BoxDomain(3, 2, "free")
        assert dom.boundary is Boundary.FREE and dom.volume == 8.0
        with pytest.raises(ParameterError):
            BoxDomain(2, 0.0)


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2**64 - 1), idx=st.integers(0, 2**63))
def test_uniform_range_property(seed, idx):
    u = float(rng.uniform(np.uint64(seed), "edge", np.uint64(idx)))
    assert 0 < u < 1
