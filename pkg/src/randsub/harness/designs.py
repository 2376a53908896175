"""Sample generation for each simulation design.

The graph (and, for network designs, the covariance factor) is built once
per experiment from the graph stream of replication 0 and then held fixed;
only the data vary across replications.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dgp import MixingParams, NetworkFactor, dependency_graph_mix, iid_normal, mixing_covariance, network_factor
from ..graphgen import Graph, all_pairs_distances, barabasi_albert, erdos_renyi
from ..permute import Purpose, RngStream
from .experiment import Design, ExperimentSpec

__all__ = ["DesignContext", "build_context", "design_covariance", "make_graph"]


def make_graph(spec: ExperimentSpec, n: int | None = None) -> Graph | None:
    n = spec.n if n is None else n
    rng = RngStream.for_replication(spec.seed, 0, Purpose.GRAPH)
    if spec.design in (Design.DEP_GRAPH_ER, Design.NETWORK_ER):
        return erdos_renyi(n, spec.lambda_graph, rng)
    if spec.design is Design.DEP_GRAPH_BA:
        return barabasi_albert(n, spec.m_attach, rng)
    return None


@dataclass
class DesignContext:
    spec: ExperimentSpec
    graph: Graph | None
    factor: NetworkFactor | None = None

    def draw(self, rep: int) -> np.ndarray:
        """Sample of replication ``rep`` as an ``(n, 1)`` array."""
        rng = RngStream.for_replication(self.spec.seed, rep, Purpose.DATA)
        design = self.spec.design
        if design is Design.IID:
            return iid_normal(self.spec.n, rng).data
        if design is Design.NETWORK_ER:
            return self.factor.draw(rng).data
        return dependency_graph_mix(self.graph, MixingParams(self.spec.c), rng).data


def build_context(spec: ExperimentSpec, graph: Graph | None = None) -> DesignContext:
    """Fixed ingredients of ``spec``; ``graph`` replaces the generated one."""
    if graph is None:
        graph = make_graph(spec)
    elif not spec.design.uses_graph:
        raise ValueError("design IID takes no graph")
    elif graph.n != spec.n:
        raise ValueError(f"graph has {graph.n} nodes but n={spec.n}")
    factor = None
    if spec.design is Design.NETWORK_ER:
        factor = network_factor(all_pairs_distances(graph), spec.rho)
    return DesignContext(spec, graph, factor)


def design_covariance(spec: ExperimentSpec, n: int) -> np.ndarray:
    """Population covariance of the design at size ``n``."""
    if spec.design is Design.IID:
        return np.eye(n)
    graph = make_graph(spec, n)
    if spec.design is Design.NETWORK_ER:
        return network_factor(all_pairs_distances(graph), spec.rho).repaired
    return mixing_covariance(graph, spec.c)
