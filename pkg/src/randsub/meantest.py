"""Randomized subsampling inference on a population mean.

The U-type statistic for a hypothesized mean ``mu`` and one permutation
prefix ``p`` of length ``b`` is::

    U(mu; p) = 1 / (m b) * sum_{i != j} (x[p_i] - mu)' Sigma^-1 (x[p_j] - mu)

with ``Sigma`` the ``1/n`` sample covariance.  ``S_n`` sums ``U`` over a
bundle of ``R`` prefixes and divides by ``sqrt(R)``; ``T_n`` subtracts the
bias adjustment ``sqrt(R) b / n``.  The test rejects when ``T_n`` exceeds a
critical value.

Implementation note
-------------------
With ``w_i`` the whitened centered rows (``w_i' w_j = (x_i - xbar)' Sigma^-1
(x_j - xbar)``) and ``e`` the whitened shift ``mu - xbar``, the off-diagonal
sum for one prefix is ``|s|^2 - q - 2 (b - 1) e's + b (b - 1) |e|^2`` where
``s`` and ``q`` are the sum of ``w`` and of ``|w|^2`` over the prefix.  A
bundle is therefore summarized by two numbers (``A = sum_r |s_r|^2 - q_r``
and ``B = sum_r s_r``) and ``S_n`` at any ``mu`` follows in closed form.
This is what lets a whole grid of hypotheses share one set of draws.
"""

from __future__ import annotations

import math
from itertools import permutations
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .core import (
    CriticalValue,
    InferenceConfig,
    Sample,
    SymmetricMatrix,
    cholesky_lower,
    invert_spd,
    normal_quantile,
)
from .permute import Purpose, RngStream, draw_bundle, iter_bundles

__all__ = [
    "ConfidenceFunctionCurve",
    "MeanTestResult",
    "QuadraticKernel",
    "bias_adjustment",
    "confidence_function",
    "confidence_set",
    "default_mean_grid",
    "enumerate_prefixes",
    "mean_test",
    "order_statistic_critical_value",
    "permutation_critical_value",
    "s_statistic",
    "sample_covariance",
    "sample_mean",
    "t_statistic",
    "u_statistic",
]


def _as_sample(X) -> Sample:
    return X if isinstance(X, Sample) else Sample(X)


def _as_vector(mu, m: int) -> np.ndarray:
    vec = np.atleast_1d(np.asarray(mu, dtype=float))
    if vec.shape != (m,):
        raise ValueError(f"hypothesized mean must have length {m}, got shape {vec.shape}")
    return vec


def sample_mean(X) -> np.ndarray:
    return _as_sample(X).data.mean(axis=0)


def sample_covariance(X) -> SymmetricMatrix:
    """``1/n``-normalized covariance matrix (not ``1/(n-1)``)."""
    data = _as_sample(X).data
    centered = data - data.mean(axis=0)
    return SymmetricMatrix.from_dense(centered.T @ centered / data.shape[0])


def bias_adjustment(R: int, b: int, n: int) -> float:
    return math.sqrt(R) * b / n


def u_statistic(X, mu, Sigma_inv, prefix) -> float:
    """U-type statistic for a single permutation prefix."""
    data = _as_sample(X).data
    m = data.shape[1]
    A = np.asarray(Sigma_inv, dtype=float).reshape(m, m)
    prefix = np.asarray(prefix)
    b = prefix.shape[0]
    if b < 2:
        raise ValueError("prefix must have at least two entries")
    z = data[prefix] - _as_vector(mu, m)
    total = z.sum(axis=0)
    off_diagonal = total @ A @ total - np.einsum("ij,jk,ik->", z, A, z)
    return float(off_diagonal / (m * b))


class QuadraticKernel:
    """Whitened rows of a data matrix, ready for bundle summaries.

    ``rows`` are centered at their mean before whitening; ``Sigma`` defaults
    to the ``1/n`` covariance of ``rows``.  Use :meth:`shift` to express a
    hypothesized center relative to that mean.
    """

    def __init__(self, rows, rel_tol: float = 1e-10):
        rows = np.asarray(rows, dtype=float)
        if rows.ndim == 1:
            rows = rows[:, None]
        self.n, self.m = rows.shape
        self.center = rows.mean(axis=0)
        centered = rows - self.center
        self.sigma = SymmetricMatrix.from_dense(centered.T @ centered / self.n)
        self.sigma_inv = invert_spd(self.sigma, rel_tol)
        # Sigma^-1 = F F'  =>  z' Sigma^-1 z = |z F|^2
        self._factor = cholesky_lower(self.sigma_inv, rel_tol=0.0)
        self.white = centered @ self._factor
        self.sq = np.einsum("ij,ij->i", self.white, self.white)

    def shift(self, mu) -> np.ndarray:
        """Whitened offset of ``mu`` from the row mean, shape ``(m,)``."""
        return (_as_vector(mu, self.m) - self.center) @ self._factor

    def summarize(self, bundles: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Per-bundle sums ``A`` (shape ``(k,)``) and ``B`` (shape ``(k, m)``)."""
        bundles = np.asarray(bundles)
        if bundles.ndim == 2:
            bundles = bundles[None]
        sums = self.white[bundles].sum(axis=2)  # (k, R, m)
        A = np.einsum("krm,krm->k", sums, sums) - self.sq[bundles].sum(axis=(1, 2))
        return A, sums.sum(axis=1)

    def s_values(self, A, B, shift, R: int, b: int) -> np.ndarray:
        """``S_n`` for each summarized bundle at whitened shift(s).

        ``shift`` may be ``(m,)`` or ``(g, m)``; the result then has shape
        ``(k,)`` or ``(g, k)``.
        """
        e = np.asarray(shift, dtype=float)
        A = np.asarray(A, dtype=float)
        cross = e @ np.asarray(B, dtype=float).T
        norm2 = np.einsum("...m,...m->...", e, e)
        if e.ndim == 2:
            norm2 = norm2[:, None]
        total = A - 2.0 * (b - 1) * cross + R * b * (b - 1) * norm2
        return total / (self.m * b * math.sqrt(R))

    def bundle_s_values(self, rng: RngStream, R: int, b: int, count: int,
                        shift=None) -> np.ndarray:
        """Draw ``count`` bundles from ``rng`` and return their ``S_n`` values."""
        shift = np.zeros(self.m) if shift is None else shift
        out = [self.s_values(*self.summarize(chunk), shift, R, b)
               for chunk in iter_bundles(rng, self.n, b, R, count)]
        return np.concatenate(out, axis=-1) if out else np.empty(0)

    def bundle_summaries(self, rng: RngStream, R: int, b: int, count: int):
        As, Bs = [], []
        for chunk in iter_bundles(rng, self.n, b, R, count):
            A, B = self.summarize(chunk)
            As.append(A)
            Bs.append(B)
        return np.concatenate(As), np.concatenate(Bs, axis=0)


def _bundle_shape(bundle) -> tuple[np.ndarray, int, int]:
    bundle = np.asarray(bundle)
    if bundle.ndim != 2:
        raise ValueError("bundle must be an (R, b) integer array")
    R, b = bundle.shape
    if R < 1 or b < 2:
        raise ValueError("bundle needs R >= 1 prefixes of length >= 2")
    return bundle, R, b


def s_statistic(X, mu, bundle) -> float:
    sample = _as_sample(X)
    bundle, R, b = _bundle_shape(bundle)
    kernel = QuadraticKernel(sample.data)
    A, B = kernel.summarize(bundle)
    return float(kernel.s_values(A, B, kernel.shift(mu), R, b)[0])


def t_statistic(X, mu, bundle) -> float:
    sample = _as_sample(X)
    bundle, R, b = _bundle_shape(bundle)
    return s_statistic(sample, mu, bundle) - bias_adjustment(R, b, sample.n)


def order_statistic_critical_value(values, alpha: float) -> float:
    """Smallest ``c`` among ``values`` with exceedance fraction at most ``alpha``.

    Returns the ``ceil(L (1 - alpha))``-th smallest value; ties resolve to
    the larger candidate.
    """
    v = np.sort(np.asarray(values, dtype=float))
    L = v.shape[0]
    if L < 1:
        raise ValueError("need at least one draw")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    # round away binary noise such as 1000 * 0.955 = 955.0000000000001
    k = math.ceil(round(L * (1.0 - alpha), 9))
    if k < 1:
        raise ValueError(f"level {alpha} unattainable with L={L} draws")
    return float(v[k - 1])


def permutation_critical_value(X, cfg: InferenceConfig, rng: RngStream,
                               alpha: float | None = None) -> float:
    """Permutation critical value from ``cfg.L`` bundles with ``mu`` at the sample mean."""
    sample = _as_sample(X)
    cfg = cfg.resolve(sample.n)
    kernel = QuadraticKernel(sample.data, cfg.rel_tol)
    draws = kernel.bundle_s_values(rng, cfg.R, cfg.b_n, cfg.L)
    return order_statistic_critical_value(draws, cfg.alpha if alpha is None else alpha)


@dataclass(frozen=True)
class MeanTestResult:
    statistic: float
    critical_value: float
    reject: bool
    method: CriticalValue
    S_n: float
    bias_adjustment: float

    @property
    def diagnostics(self) -> dict:
        return {"S_n": self.S_n, "bias_adjustment": self.bias_adjustment}


def _critical_value(kernel: QuadraticKernel, cfg: InferenceConfig, level: float,
                    rng: RngStream) -> float:
    if cfg.critical_value is CriticalValue.ASYMPTOTIC_NORMAL:
        return normal_quantile(1.0 - level)
    draws = kernel.bundle_s_values(rng, cfg.R, cfg.b_n, cfg.L)
    return order_statistic_critical_value(draws, level)


def mean_test(X, mu, cfg: InferenceConfig, rng: RngStream) -> MeanTestResult:
    """One randomized test of ``H0: E X = mu`` at level ``cfg.alpha``.

    The test bundle comes from ``rng.substream(Purpose.TEST)`` and the
    permutation draws from ``rng.substream(Purpose.CRITICAL)``.
    """
    sample = _as_sample(X)
    cfg = cfg.resolve(sample.n)
    kernel = QuadraticKernel(sample.data, cfg.rel_tol)
    bundle = draw_bundle(rng.substream(Purpose.TEST), sample.n, cfg.b_n, cfg.R)
    A, B = kernel.summarize(bundle)
    s = float(kernel.s_values(A, B, kernel.shift(mu), cfg.R, cfg.b_n)[0])
    bias = bias_adjustment(cfg.R, cfg.b_n, sample.n)
    c = _critical_value(kernel, cfg, cfg.alpha, rng.substream(Purpose.CRITICAL))
    t = s - bias
    return MeanTestResult(t, c, bool(t > c), cfg.critical_value, s, bias)


def _q_values(kernel: QuadraticKernel, grid: np.ndarray, cfg: InferenceConfig,
              level: float, rng: RngStream) -> tuple[np.ndarray, float]:
    c = _critical_value(kernel, cfg, level, rng.substream(Purpose.CRITICAL))
    A, B = kernel.bundle_summaries(rng.substream(Purpose.CONFIDENCE), cfg.R, cfg.b_n, cfg.S)
    shifts = np.stack([kernel.shift(mu) for mu in grid])
    t = kernel.s_values(A, B, shifts, cfg.R, cfg.b_n) - bias_adjustment(cfg.R, cfg.b_n, kernel.n)
    return np.mean(t <= c, axis=1), c


def confidence_function(X, mu, cfg: InferenceConfig, rng: RngStream,
                        level: float | None = None) -> float:
    """Fraction of ``cfg.S`` randomized tests at level ``level`` that keep ``mu``.

    ``level`` defaults to ``cfg.alpha``.
    """
    sample = _as_sample(X)
    cfg = cfg.resolve(sample.n)
    kernel = QuadraticKernel(sample.data, cfg.rel_tol)
    grid = _as_vector(mu, sample.m)[None]
    q, _ = _q_values(kernel, grid, cfg, cfg.alpha if level is None else level, rng)
    return float(q[0])


@dataclass(frozen=True)
class ConfidenceFunctionCurve:
    grid: np.ndarray
    values: np.ndarray
    alpha: float
    beta: float
    critical_value: float
    members: np.ndarray = field(repr=False)

    def interval(self) -> tuple[float, float] | None:
        """Hull of the member grid points (univariate grids only)."""
        if self.grid.shape[1] != 1 or not self.members.any():
            return None
        pts = self.grid[self.members, 0]
        return float(pts.min()), float(pts.max())

    def is_contiguous(self) -> bool:
        idx = np.flatnonzero(self.members)
        return idx.size == 0 or bool(np.all(np.diff(idx) == 1))


def default_mean_grid(X, cfg: InferenceConfig, points: int = 401,
                      half_width_units: float = 8.0) -> np.ndarray:
    """Equispaced univariate grid around the sample mean.

    The unit is the local-power scale ``sd * R**-0.25 * b**-0.5``.
    """
    sample = _as_sample(X)
    if sample.m != 1:
        raise ValueError("a default grid exists only for univariate data; pass a grid")
    cfg = cfg.resolve(sample.n)
    sd = math.sqrt(sample_covariance(sample).array[0, 0])
    unit = sd * cfg.R ** -0.25 * cfg.b_n ** -0.5
    center = float(sample_mean(sample)[0])
    return np.linspace(center - half_width_units * unit, center + half_width_units * unit,
                       points)[:, None]


def _as_grid(grid, m: int) -> np.ndarray:
    g = np.asarray(grid, dtype=float)
    if g.ndim == 1:
        g = g[:, None] if m == 1 else g[None]
    if g.ndim != 2 or g.shape[1] != m or g.shape[0] == 0:
        raise ValueError(f"grid must be a non-empty array of {m}-vectors")
    return g


def confidence_set(X, grid: Sequence | np.ndarray | None, cfg: InferenceConfig,
                   rng: RngStream) -> ConfidenceFunctionCurve:
    """Evaluate ``q(mu; alpha - beta)`` on a grid and flag ``q >= 1 - alpha``.

    All grid points share the same confidence-function bundles and the same
    critical value.
    """
    sample = _as_sample(X)
    cfg = cfg.resolve(sample.n)
    g = default_mean_grid(sample, cfg) if grid is None else _as_grid(grid, sample.m)
    kernel = QuadraticKernel(sample.data, cfg.rel_tol)
    q, c = _q_values(kernel, g, cfg, cfg.alpha - cfg.beta, rng)
    members = q >= 1.0 - cfg.alpha
    return ConfidenceFunctionCurve(g, q, cfg.alpha, cfg.beta, c, members)


def enumerate_prefixes(n: int, b: int) -> Iterable[tuple[int, ...]]:
    """All ordered ``b``-tuples of distinct indices (small ``n`` only)."""
    return permutations(range(n), b)
