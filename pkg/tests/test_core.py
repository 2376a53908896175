import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from randsub.core import (
    CriticalValue,
    InferenceConfig,
    NotPositiveDefinite,
    Sample,
    SymmetricMatrix,
    default_block_size,
    invert_spd,
    normal_cdf,
    normal_quantile,
)


def random_spd(rng, dim, cond=100.0):
    q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    evals = np.geomspace(1.0, cond, dim)
    return (q * evals) @ q.T


class TestInvertSpd:
    def test_identity(self):
        inv = invert_spd(np.eye(3), 1e-10)
        np.testing.assert_array_equal(inv.array, np.eye(3))

    def test_diagonal(self):
        inv = invert_spd(np.diag([2.0, 4.0]))
        np.testing.assert_allclose(inv.array, np.diag([0.5, 0.25]), rtol=0, atol=1e-15)

    def test_multiply_back(self):
        m = random_spd(np.random.default_rng(3), 4)
        inv = invert_spd(SymmetricMatrix.from_dense(m))
        assert np.abs(m @ inv.array - np.eye(4)).max() < 1e-10

    def test_constant_column_is_degenerate(self):
        x = np.column_stack([np.arange(5.0), np.ones(5)])
        cov = np.cov(x.T, bias=True)
        with pytest.raises(NotPositiveDefinite):
            invert_spd(cov)

    def test_tolerance_is_scale_free(self):
        m = np.diag([1.0, 1e-12])
        with pytest.raises(NotPositiveDefinite):
            invert_spd(m * 1e6)
        invert_spd(np.diag([1.0, 1e-6]) * 1e-20)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 6), st.integers(0, 2 ** 32 - 1))
    def test_double_inverse(self, dim, seed):
        m = random_spd(np.random.default_rng(seed), dim, cond=1e5)
        back = invert_spd(invert_spd(m)).array
        assert np.linalg.norm(back - m) / np.linalg.norm(m) < 1e-8


def test_symmetric_matrix_is_exactly_symmetric():
    a = np.array([[1.0, 2.0], [2.0 + 1e-9, 5.0]])
    s = SymmetricMatrix.from_dense(a).array
    assert (s == s.T).all()


class TestNormal:
    def test_cdf_at_zero(self):
        assert normal_cdf(0.0) == 0.5

    def test_quantile_reference(self):
        assert normal_quantile(0.95) == pytest.approx(1.6448536269514722, abs=1e-15)

    @pytest.mark.parametrize("x", [0.5, 1.0, 2.0])
    def test_symmetry(self, x):
        assert normal_cdf(-x) + normal_cdf(x) == pytest.approx(1.0, abs=1e-15)

    def test_round_trip(self):
        p = np.concatenate([np.geomspace(1e-8, 0.5, 200), 1 - np.geomspace(1e-8, 0.5, 200)])
        assert np.abs(normal_cdf(normal_quantile(p)) - p).max() < 1e-12

    @pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5, float("nan")])
    def test_quantile_domain(self, p):
        with pytest.raises(ValueError):
            normal_quantile(p)


class TestSample:
    def test_vector_becomes_column(self):
        s = Sample([1.0, 2.0, 3.0])
        assert (s.n, s.m) == (3, 1)

    @pytest.mark.parametrize("bad", [np.nan, np.inf, -np.inf])
    def test_rejects_non_finite(self, bad):
        with pytest.raises(ValueError, match="row 1"):
            Sample([[0.0, 1.0], [bad, 2.0], [3.0, 4.0]])

    def test_needs_two_rows(self):
        with pytest.raises(ValueError):
            Sample([[1.0, 2.0]])

    def test_immutable(self):
        src = np.arange(6.0).reshape(3, 2)
        s = Sample(src)
        src[0, 0] = 99.0
        assert s.data[0, 0] == 0.0
        with pytest.raises(ValueError):
            s.data[0, 0] = 1.0
        with pytest.raises(AttributeError):
            s.n = 5


class TestConfig:
    def test_defaults_bind_to_n(self):
        cfg = InferenceConfig().resolve(500)
        assert (cfg.R, cfg.b_n, cfg.L, cfg.S, cfg.beta) == (500, 7, 1000, 1000, 0.005)
        assert cfg.critical_value is CriticalValue.PERMUTATION

    def test_cube_roots_exact(self):
        assert [default_block_size(n) for n in (2, 7, 8, 26, 27, 1000, 3000)] == [2, 2, 2, 2, 3, 10, 14]

    def test_block_larger_than_sample(self):
        with pytest.raises(ValueError):
            InferenceConfig(b_n=6).resolve(5)

    @pytest.mark.parametrize("kwargs", [dict(alpha=0.0), dict(alpha=1.0), dict(beta=0.05),
                                        dict(beta=-0.01), dict(b_n=1), dict(R=0), dict(L=0),
                                        dict(seed=-1), dict(critical_value="bootstrap")])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            InferenceConfig(**kwargs)

    def test_method_parse(self):
        assert InferenceConfig(critical_value="normal").critical_value is CriticalValue.ASYMPTOTIC_NORMAL
