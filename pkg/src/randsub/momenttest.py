"""Test inversion for models defined by moment restrictions ``E g(X; theta) = 0``.

For a candidate ``theta`` the moment rows ``g_i(theta)`` play the role of the
data in :mod:`randsub.meantest`: the covariance is taken around their mean
``gbar(theta)``, the test statistic uses the uncentered rows (hypothesized
mean zero) and the permutation critical value uses the rows centered at
``gbar(theta)``.

Grid sweeps never abort on a degenerate ``theta``; such points get
``q = nan``, are flagged in ``degenerate`` and are excluded from the set.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import CriticalValue, InferenceConfig, NotPositiveDefinite, Sample, normal_quantile
from .meantest import (
    QuadraticKernel,
    bias_adjustment,
    order_statistic_critical_value,
)
from .permute import Purpose, RngStream

__all__ = [
    "MomentModel",
    "ParamGridResult",
    "centered_s_statistic",
    "confidence_function_theta",
    "confidence_set_theta",
    "critical_value_theta",
    "linear_iv_model",
    "mean_model",
    "moment_matrix",
    "profiled_confidence_function",
    "s_statistic_theta",
    "t_statistic_theta",
]


@dataclass(frozen=True)
class MomentModel:
    """``g(row, theta) -> m``-vector of moment values."""

    g: Callable[[np.ndarray, np.ndarray], np.ndarray]
    dim_theta: int
    dim_moment: int
    vectorized: bool = field(default=False)
    name: str = "custom"

    def evaluate(self, data: np.ndarray, theta: np.ndarray) -> np.ndarray:
        if self.vectorized:
            out = np.asarray(self.g(data, theta), dtype=float)
            return out.reshape(data.shape[0], self.dim_moment)
        return np.array([np.asarray(self.g(row, theta), dtype=float).reshape(self.dim_moment)
                         for row in data])


def mean_model(dim: int) -> MomentModel:
    """``g(x; theta) = x - theta``."""
    return MomentModel(lambda x, theta: x - theta, dim, dim, vectorized=True, name="mean")


def linear_iv_model(n_regressors: int, n_instruments: int) -> MomentModel:
    """``g((y, x, z); theta) = z (y - x' theta)``.

    Rows are laid out as ``[y, x_1..x_k, z_1..z_l]``.
    """
    k, l = n_regressors, n_instruments

    def g(data, theta):
        y = data[:, 0]
        x = data[:, 1:1 + k]
        z = data[:, 1 + k:1 + k + l]
        resid = y - x @ theta
        return z * resid[:, None]

    return MomentModel(g, k, l, vectorized=True, name="linear_iv")


def _data(X) -> np.ndarray:
    return X.data if isinstance(X, Sample) else Sample(X).data


def _theta(theta, model: MomentModel) -> np.ndarray:
    t = np.atleast_1d(np.asarray(theta, dtype=float))
    if t.shape != (model.dim_theta,):
        raise ValueError(f"theta must have length {model.dim_theta}, got shape {t.shape}")
    return t


def moment_matrix(X, model: MomentModel, theta) -> np.ndarray:
    """``n x m`` matrix whose row ``i`` is ``g(X_i; theta)``."""
    data = _data(X)
    G = model.evaluate(data, _theta(theta, model))
    finite = np.isfinite(G).all(axis=1)
    if not finite.all():
        row = int(np.flatnonzero(~finite)[0])
        raise ValueError(f"moment function returned a non-finite value at row {row}")
    return G


def _kernel(X, model, theta, rel_tol=1e-10) -> QuadraticKernel:
    return QuadraticKernel(moment_matrix(X, model, theta), rel_tol)


def _bundle(bundle):
    bundle = np.asarray(bundle)
    if bundle.ndim != 2 or bundle.shape[0] < 1 or bundle.shape[1] < 2:
        raise ValueError("bundle must be an (R, b) array with R >= 1 and b >= 2")
    return bundle, bundle.shape[0], bundle.shape[1]


def _zero_shift(kernel: QuadraticKernel) -> np.ndarray:
    return kernel.shift(np.zeros(kernel.m))


def s_statistic_theta(X, model, theta, bundle) -> float:
    bundle, R, b = _bundle(bundle)
    kernel = _kernel(X, model, theta)
    A, B = kernel.summarize(bundle)
    return float(kernel.s_values(A, B, _zero_shift(kernel), R, b)[0])


def t_statistic_theta(X, model, theta, bundle) -> float:
    bundle, R, b = _bundle(bundle)
    return s_statistic_theta(X, model, theta, bundle) - bias_adjustment(R, b, _data(X).shape[0])


def centered_s_statistic(X, model, theta, bundle) -> float:
    """Statistic with moment rows centered at ``gbar(theta)``."""
    bundle, R, b = _bundle(bundle)
    kernel = _kernel(X, model, theta)
    A, B = kernel.summarize(bundle)
    return float(kernel.s_values(A, B, np.zeros(kernel.m), R, b)[0])


def critical_value_theta(X, model, theta, cfg: InferenceConfig, rng: RngStream,
                         alpha: float | None = None) -> float:
    n = _data(X).shape[0]
    cfg = cfg.resolve(n)
    kernel = _kernel(X, model, theta, cfg.rel_tol)
    draws = kernel.bundle_s_values(rng, cfg.R, cfg.b_n, cfg.L)
    return order_statistic_critical_value(draws, cfg.alpha if alpha is None else alpha)


def _q_at(kernel: QuadraticKernel, cfg: InferenceConfig, level: float,
          rng: RngStream) -> tuple[float, float]:
    if cfg.critical_value is CriticalValue.ASYMPTOTIC_NORMAL:
        c = normal_quantile(1.0 - level)
    else:
        draws = kernel.bundle_s_values(rng.substream(Purpose.CRITICAL), cfg.R, cfg.b_n, cfg.L)
        c = order_statistic_critical_value(draws, level)
    t = kernel.bundle_s_values(rng.substream(Purpose.CONFIDENCE), cfg.R, cfg.b_n, cfg.S,
                               shift=_zero_shift(kernel))
    t = t - bias_adjustment(cfg.R, cfg.b_n, kernel.n)
    return float(np.mean(t <= c)), c


def confidence_function_theta(X, model, theta, cfg: InferenceConfig, rng: RngStream,
                              level: float | None = None) -> float:
    """Fraction of ``cfg.S`` randomized tests that keep ``theta``.

    Stream layout matches :func:`randsub.meantest.confidence_function`, so
    the mean model reproduces it draw for draw.
    """
    n = _data(X).shape[0]
    cfg = cfg.resolve(n)
    kernel = _kernel(X, model, theta, cfg.rel_tol)
    q, _ = _q_at(kernel, cfg, cfg.alpha if level is None else level, rng)
    return q


@dataclass(frozen=True)
class ParamGridResult:
    grid: np.ndarray
    q_values: np.ndarray
    critical_values: np.ndarray
    members: np.ndarray
    degenerate: np.ndarray


def _grid(grid, model) -> np.ndarray:
    g = np.asarray(grid, dtype=float)
    if g.ndim == 1:
        g = g[:, None] if model.dim_theta == 1 else g[None]
    if g.ndim != 2 or g.shape[1] != model.dim_theta or g.shape[0] == 0:
        raise ValueError(f"grid must be a non-empty array of {model.dim_theta}-vectors")
    return g


def confidence_set_theta(X, model, grid, cfg: InferenceConfig,
                         rng: RngStream) -> ParamGridResult:
    """Evaluate ``q(theta; alpha - beta)`` over a parameter grid.

    Every grid point reuses the same streams (common random numbers), so
    results do not depend on the order in which points are visited and the
    curve is smooth in ``theta``.  Critical values are computed per point.
    """
    n = _data(X).shape[0]
    cfg = cfg.resolve(n)
    g = _grid(grid, model)
    q = np.full(g.shape[0], np.nan)
    crit = np.full(g.shape[0], np.nan)
    bad = np.zeros(g.shape[0], dtype=bool)
    for i, theta in enumerate(g):
        try:
            kernel = _kernel(X, model, theta, cfg.rel_tol)
        except NotPositiveDefinite:
            bad[i] = True
            continue
        q[i], crit[i] = _q_at(kernel, cfg, cfg.alpha - cfg.beta, rng)
    members = np.zeros(g.shape[0], dtype=bool)
    members[~bad] = q[~bad] >= 1.0 - cfg.alpha
    return ParamGridResult(g, q, crit, members, bad)


def profiled_confidence_function(X, model, theta1, grid_theta2, cfg: InferenceConfig,
                                 rng: RngStream, level: float | None = None,
                                 split: int | None = None) -> float:
    """Confidence function for a subvector ``theta1``, profiling out ``theta2``.

    ``theta = (theta1, theta2)`` with ``theta1`` first.  Both infima over
    ``theta2`` are minima over the supplied finite grid: the critical value
    is the smallest pooled permutation draw ``c`` whose largest exceedance
    fraction over the grid is at most the level, and the returned value is
    the smallest acceptance fraction over the grid.  Degenerate ``theta2``
    points are skipped.  The same bundles are used at every grid point.
    """
    n = _data(X).shape[0]
    cfg = cfg.resolve(n)
    level = cfg.alpha if level is None else level
    t1 = np.atleast_1d(np.asarray(theta1, dtype=float))
    split = t1.shape[0] if split is None else split
    grid2 = np.asarray(grid_theta2, dtype=float)
    if grid2.ndim == 1:
        grid2 = grid2[:, None] if model.dim_theta - split == 1 else grid2[None]
    if grid2.shape[0] == 0:
        raise ValueError("theta2 grid must be non-empty")

    kernels = []
    for t2 in grid2:
        try:
            kernels.append(_kernel(X, model, np.concatenate([t1, t2]), cfg.rel_tol))
        except NotPositiveDefinite:
            continue
    if not kernels:
        raise NotPositiveDefinite("moment covariance degenerate at every theta2 grid point")

    if cfg.critical_value is CriticalValue.ASYMPTOTIC_NORMAL:
        c = normal_quantile(1.0 - level)
    else:
        draws = np.stack([k.bundle_s_values(rng.substream(Purpose.CRITICAL), cfg.R, cfg.b_n,
                                            cfg.L) for k in kernels])
        c = _profiled_critical_value(draws, level)

    qs = []
    for k in kernels:
        t = k.bundle_s_values(rng.substream(Purpose.CONFIDENCE), cfg.R, cfg.b_n, cfg.S,
                              shift=_zero_shift(k))
        qs.append(np.mean(t - bias_adjustment(cfg.R, cfg.b_n, n) <= c))
    return float(min(qs))


def _profiled_critical_value(draws: np.ndarray, level: float) -> float:
    """Smallest pooled candidate ``c`` with ``min_k frac(draws[k] > c) <= level``.

    ``draws`` has shape ``(grid, L)``.  With a single grid row this is the
    ordinary order-statistic critical value.
    """
    if draws.shape[0] == 1:
        return order_statistic_critical_value(draws[0], level)
    L = draws.shape[1]
    limit = round(level * L, 9)
    sorted_rows = np.sort(draws, axis=1)
    candidates = np.unique(draws)
    # exceedances of each candidate, per grid row
    exceed = L - np.stack([np.searchsorted(row, candidates, side="right") for row in sorted_rows])
    ok = exceed.min(axis=0) <= limit
    return float(candidates[np.argmax(ok)])
