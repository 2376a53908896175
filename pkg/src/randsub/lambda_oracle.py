"""Restricted lambda-coefficient for Gaussian designs with known covariance.

The function class is restricted to unit-norm linear functionals of the
variables.  For two disjoint index blocks the largest covariance between
such functionals is the spectral norm of the cross-covariance block, so
everything is computable exactly from the covariance matrix.  Each node
carries a scalar variable.

Only convergence rates are meaningful here; the coefficient is not scale
free and constants are never compared.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .permute import RngStream, draw_prefixes

__all__ = [
    "LambdaMethod",
    "LambdaReport",
    "bipartitions",
    "dependency_bound",
    "lambda_k",
    "pair_dependence",
    "set_dependence",
    "spectral_norms",
]

MAX_SET_SIZE = 12
MAX_K = 8
MAX_EXACT_N = 10


class LambdaMethod(enum.Enum):
    EXACT = "exact"
    MONTE_CARLO = "montecarlo"


@dataclass(frozen=True)
class LambdaReport:
    k: int
    lambda_value: float
    n: int
    bound: float
    method: LambdaMethod
    mc_se: float = 0.0


def _cov(cov) -> np.ndarray:
    a = np.asarray(cov, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("covariance must be a square matrix")
    return a


def pair_dependence(cov, A1, A2) -> float:
    """Spectral norm of the cross-covariance block ``cov[A1, A2]``."""
    a = _cov(cov)
    A1, A2 = list(A1), list(A2)
    if not A1 or not A2:
        raise ValueError("index sets must be non-empty")
    if set(A1) & set(A2):
        raise ValueError("index sets must be disjoint")
    return float(spectral_norms(a[np.ix_(A1, A2)][None])[0])


def _gram(block: np.ndarray) -> np.ndarray:
    """``block @ block.T`` per batch entry, each entry summed in sorted order."""
    prod = block[:, :, None, :] * block[:, None, :, :]
    return np.sort(prod, axis=-1).sum(axis=-1)


def _top_eigenvalue(g: np.ndarray) -> np.ndarray:
    p = g.shape[1]
    if p == 1:
        return g[:, 0, 0]
    if p == 2:
        a, d, off = g[:, 0, 0], g[:, 1, 1], g[:, 0, 1]
        return 0.5 * ((a + d) + np.sqrt((a - d) ** 2 + 4.0 * off * off))
    # canonical row order so relabelled blocks hit LAPACK identically
    key = np.sort(g, axis=-1)
    order = np.lexsort(tuple(key[:, :, c] for c in range(p - 1, -1, -1))
                       + (np.einsum("kii->ki", g),))
    g = np.take_along_axis(np.take_along_axis(g, order[:, :, None], 1), order[:, None, :], 2)
    return np.linalg.eigvalsh(g)[:, -1]


def spectral_norms(blocks: np.ndarray) -> np.ndarray:
    """Largest singular value of each ``(p, q)`` block in a batch.

    Computed from the smaller Gram matrix with sorted summation, so the
    result is bit-identical under row and column relabelling for blocks
    with at most two rows or columns.
    """
    p, q = blocks.shape[1:]
    if p < q:
        top = _top_eigenvalue(_gram(blocks))
    elif q < p:
        top = _top_eigenvalue(_gram(blocks.transpose(0, 2, 1)))
    else:
        top = np.maximum(_top_eigenvalue(_gram(blocks)),
                         _top_eigenvalue(_gram(blocks.transpose(0, 2, 1))))
    return np.sqrt(np.maximum(top, 0.0))


def bipartitions(size: int) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    """Unordered splits of positions ``0..size-1`` into two non-empty parts."""
    out = []
    rest = tuple(range(1, size))
    # position 0 always sits in the first part, which makes each split unique
    for r in range(0, size - 1):
        for extra in combinations(rest, r):
            first = (0, *extra)
            second = tuple(i for i in range(size) if i not in first)
            out.append((first, second))
    return out


def set_dependence(cov, A) -> float:
    """Variance for a singleton, else the weakest bipartition dependence."""
    a = _cov(cov)
    A = list(A)
    if not A:
        raise ValueError("index set must be non-empty")
    if len(A) > MAX_SET_SIZE:
        raise ValueError(f"sets larger than {MAX_SET_SIZE} are not supported")
    if len(set(A)) != len(A):
        raise ValueError("index set has repeated entries")
    return float(_batched_set_dependence(a, np.array([A], dtype=np.int64))[0])


def _batched_set_dependence(a: np.ndarray, tuples: np.ndarray) -> np.ndarray:
    """:func:`set_dependence` for each row of ``tuples``, vectorized."""
    k = tuples.shape[1]
    if k == 1:
        return a[tuples[:, 0], tuples[:, 0]]
    best = np.full(tuples.shape[0], np.inf)
    for p1, p2 in bipartitions(k):
        block = a[tuples[:, list(p1)][:, :, None], tuples[:, list(p2)][:, None, :]]
        np.minimum(best, spectral_norms(block), out=best)
    return best


def dependency_bound(n: int, k: int, max_degree: int, constant: float = 1.0) -> float:
    """Rate ``C n^(floor(k/2) - k) d^floor((k+1)/2)`` for dependency graphs."""
    return constant * float(n) ** (k // 2 - k) * float(max_degree) ** ((k + 1) // 2)


def lambda_k(cov, k: int, mode: LambdaMethod | str = LambdaMethod.EXACT,
             rng: RngStream | None = None, num_draws: int = 100_000,
             max_degree: int | None = None) -> LambdaReport:
    """Permutation average of :func:`set_dependence` over the first ``k`` indices.

    Exact mode averages over all ``k``-subsets; this equals the average over
    permutations because the set dependence only depends on the unordered
    set ``{pi(1), ..., pi(k)}`` and every subset is hit by the same number of
    permutations.  Monte Carlo mode averages over ``num_draws`` uniform
    prefixes and reports the standard error.

    ``bound`` is the dependency-graph rate with unit constant, evaluated at
    ``max_degree`` (defaults to the number of nonzero off-diagonal entries
    in the densest row of ``cov``).
    """
    a = _cov(cov)
    n = a.shape[0]
    mode = LambdaMethod(mode) if not isinstance(mode, LambdaMethod) else mode
    if not 1 <= k <= MAX_K:
        raise ValueError(f"k must lie in [1, {MAX_K}], got {k}")
    if k > n:
        raise ValueError(f"k={k} exceeds n={n}")
    if max_degree is None:
        off = a.copy()
        np.fill_diagonal(off, 0.0)
        max_degree = int((off != 0).sum(axis=1).max(initial=0))
    bound = dependency_bound(n, k, max_degree)

    if mode is LambdaMethod.EXACT:
        if n > MAX_EXACT_N:
            raise ValueError(f"exact enumeration supports n <= {MAX_EXACT_N}; use Monte Carlo")
        subsets = np.array(list(combinations(range(n), k)), dtype=np.int64)
        values = _batched_set_dependence(a, subsets)
        # fsum is exactly rounded, so the result does not depend on enumeration order
        value = math.fsum(values.tolist()) / len(values)
        return LambdaReport(k, value, n, bound, mode)

    if rng is None:
        raise ValueError("Monte Carlo mode needs an RngStream")
    if num_draws < 2:
        raise ValueError("need at least two Monte Carlo draws")
    values = np.empty(num_draws)
    chunk = 50_000
    for start in range(0, num_draws, chunk):
        stop = min(num_draws, start + chunk)
        values[start:stop] = _batched_set_dependence(a, draw_prefixes(rng, n, k, stop - start))
    se = float(values.std(ddof=1) / math.sqrt(num_draws))
    return LambdaReport(k, float(values.mean()), n, bound, mode, se)
