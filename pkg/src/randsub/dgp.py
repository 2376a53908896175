"""Data-generating processes for the Monte Carlo designs.

* :func:`iid_normal` -- independent standard normals.
* :func:`dependency_graph_mix` -- edge-by-edge mixing on a graph; only
  linked nodes end up correlated.
* :func:`network_gaussian` -- Gaussian vector with correlation
  ``exp(-rho * D)`` in shortest-path distance ``D``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .core import Sample
from .graphgen import DistanceMatrix, Graph, UNREACHABLE
from .permute import RngStream

__all__ = [
    "MixingParams",
    "NetworkCovParams",
    "NetworkFactor",
    "dependency_graph_mix",
    "iid_normal",
    "mixing_covariance",
    "network_correlation",
    "network_factor",
    "network_gaussian",
]

log = logging.getLogger(__name__)

EIGEN_FLOOR = 1e-10


@dataclass(frozen=True)
class MixingParams:
    c: float

    def __post_init__(self):
        if not 0.0 <= self.c <= 1.0:
            raise ValueError(f"mixing strength c must lie in [0, 1], got {self.c}")


@dataclass(frozen=True)
class NetworkCovParams:
    rho: float

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError(f"decay rate rho must be positive, got {self.rho}")


def iid_normal(n: int, rng: RngStream) -> Sample:
    if n < 2:
        raise ValueError("n must be at least 2")
    return Sample(rng.generator.standard_normal(n)[:, None])


def _c(params) -> float:
    return params.c if isinstance(params, MixingParams) else MixingParams(float(params)).c


def dependency_graph_mix(g: Graph, params: MixingParams | float, rng: RngStream) -> Sample:
    """Sequential edge mixing starting from i.i.d. standard normals.

    Edges ``(i, j)``, ``i < j``, are visited in lexicographic order.  At each
    edge a fresh ``Z ~ N(0, 1)`` is drawn and both endpoints are replaced by
    ``sqrt(1 - c^2) * current + c * Z``.  Updated values feed later steps.
    """
    c = _c(params)
    gen = rng.generator
    y = gen.standard_normal(g.n)
    edges = g.edges()
    z = gen.standard_normal(len(edges))
    if c > 0.0:
        keep = math.sqrt(1.0 - c * c)
        for (i, j), shock in zip(edges, z):
            y[i] = keep * y[i] + c * shock
            y[j] = keep * y[j] + c * shock
    return Sample(y[:, None])


def mixing_covariance(g: Graph, params: MixingParams | float) -> np.ndarray:
    """Exact covariance matrix of :func:`dependency_graph_mix` on ``g``.

    Every step is linear, so node ``i`` ends as ``k**d_i * y0_i`` plus, for
    each incident edge ``s``, ``c * k**a`` times the shock ``Z_s``, where
    ``k = sqrt(1 - c^2)``, ``d_i`` is the degree and ``a`` counts the edges
    of ``i`` visited after ``s``.  Two nodes share only the shock of the edge
    joining them, so off-diagonal entries are nonzero on edges only.
    """
    c = _c(params)
    keep2 = 1.0 - c * c
    edges = g.edges()
    remaining = g.degrees().copy()
    cov = np.zeros((g.n, g.n))
    diag = keep2 ** remaining.astype(float)
    for i, j in edges:
        remaining[i] -= 1
        remaining[j] -= 1
        wi = c * math.sqrt(keep2 ** remaining[i])
        wj = c * math.sqrt(keep2 ** remaining[j])
        cov[i, j] = cov[j, i] = wi * wj
        diag[i] += wi * wi
        diag[j] += wj * wj
    cov[np.diag_indices(g.n)] = diag
    return cov


def network_correlation(dist: DistanceMatrix, params: NetworkCovParams | float) -> np.ndarray:
    """Target matrix ``exp(-rho D)``; unreachable pairs get 0."""
    rho = params.rho if isinstance(params, NetworkCovParams) else NetworkCovParams(float(params)).rho
    d = dist.values
    out = np.where(d == UNREACHABLE, 0.0, np.exp(-rho * d.astype(float)))
    np.fill_diagonal(out, 1.0)
    return out


@dataclass(frozen=True)
class NetworkFactor:
    """Factor ``F`` with ``F F'`` equal to the repaired correlation matrix."""

    factor: np.ndarray
    target: np.ndarray
    repaired: np.ndarray

    @property
    def relative_perturbation(self) -> float:
        return float(np.linalg.norm(self.repaired - self.target) / np.linalg.norm(self.target))

    def draw(self, rng: RngStream) -> Sample:
        z = rng.generator.standard_normal(self.factor.shape[1])
        return Sample((self.factor @ z)[:, None])


def network_factor(dist: DistanceMatrix, params: NetworkCovParams | float) -> NetworkFactor:
    """Eigenvalue-repaired factor of the network correlation matrix.

    ``exp(-rho D)`` need not be positive semidefinite on a graph metric.
    Eigenvalues below ``1e-10`` are raised to ``1e-10`` and the result is
    rescaled to unit diagonal.
    """
    target = network_correlation(dist, params)
    if target.shape[0] == 0:
        raise ValueError("empty distance matrix")
    evals, evecs = np.linalg.eigh(target)
    clipped = np.maximum(evals, EIGEN_FLOOR)
    factor = evecs * np.sqrt(clipped)
    scale = 1.0 / np.sqrt(np.einsum("ij,ij->i", factor, factor))
    factor = factor * scale[:, None]
    repaired = factor @ factor.T
    out = NetworkFactor(factor, target, repaired)
    if evals.min() < EIGEN_FLOOR:
        log.info("network correlation repaired: min eigenvalue %.3e, relative change %.3e",
                 evals.min(), out.relative_perturbation)
    return out


def network_gaussian(dist: DistanceMatrix, params: NetworkCovParams | float,
                     rng: RngStream) -> Sample:
    """One draw of the network-dependent Gaussian vector.

    Builds the factor on every call; use :func:`network_factor` and
    :meth:`NetworkFactor.draw` when sampling repeatedly on one graph.
    A single node yields an ``n = 1`` vector, returned as a plain array.
    """
    fac = network_factor(dist, params)
    if fac.factor.shape[0] < 2:
        return rng.generator.standard_normal(fac.factor.shape[1]) @ fac.factor.T
    return fac.draw(rng)
