"""Network measures on the undirected projection of a forma mentis network:
average shortest path length, diameter, mean local clustering and modularity.

Distances are unweighted and taken over the largest connected component;
``component_coverage`` reports the share of nodes that component holds.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Dict, Hashable, List, Mapping, Set, Tuple

import networkx as nx
from scipy.sparse.csgraph import shortest_path

from .errors import EmptyGraph, NodeNotFound, NoEdges, PartialPartition
from .seeding import derive_seed

logger = logging.getLogger(__name__)

Partition = Dict[Hashable, int]

DEFAULT_RESTARTS = 10


@dataclass(frozen=True)
class NetworkMetrics:
    aspl: float
    diameter: int
    mean_cc: float
    modularity: float
    component_coverage: float
    n_nodes: int
    n_edges: int

    def to_dict(self) -> Dict[str, Any]:
        # fixed key order
        return {
            "aspl": self.aspl,
            "diameter": self.diameter,
            "mean_cc": self.mean_cc,
            "modularity": self.modularity,
            "component_coverage": self.component_coverage,
            "n_nodes": self.n_nodes,
            "n_edges": self.n_edges,
        }


# ---------------------------
# Clustering
# ---------------------------

def local_clustering(g: nx.Graph, i: Hashable) -> float:
    """Linked neighbour pairs over possible neighbour pairs; 0 below degree 2."""
    if i not in g:
        raise NodeNotFound(i)
    return float(nx.clustering(g, i))


def mean_clustering(g: nx.Graph) -> float:
    """Mean of C_i over all nodes, degree-0/1 nodes counted as 0."""
    if g.number_of_nodes() == 0:
        raise EmptyGraph("mean clustering of an empty graph")
    return float(nx.average_clustering(g, count_zeros=True))


# ---------------------------
# Distances
# ---------------------------

def largest_component(g: nx.Graph) -> Set[Hashable]:
    """Largest connected component; ties go to the component with the smallest node label."""
    components = list(nx.connected_components(g))
    return min(components, key=lambda c: (-len(c), min(str(n) for n in c)))


def distance_metrics(g: nx.Graph) -> Tuple[float, int, float]:
    """(aspl, diameter, coverage) over the largest connected component.

    A component of one node has aspl 0 and diameter 0.
    """
    n = g.number_of_nodes()
    if n < 2:
        raise EmptyGraph(f"distance metrics need at least 2 nodes, got {n}", n_nodes=n)
    component = largest_component(g)
    coverage = len(component) / n
    size = len(component)
    if size < 2:
        return 0.0, 0, coverage
    nodes = sorted(component, key=str)
    adjacency = nx.to_scipy_sparse_array(g, nodelist=nodes, weight=None, format="csr")
    dist = shortest_path(adjacency, method="D", directed=False, unweighted=True)
    aspl = float(dist.sum() / (size * (size - 1)))
    diameter = int(dist.max())
    return aspl, diameter, coverage


# ---------------------------
# Modularity
# ---------------------------

def _communities(g: nx.Graph, p: Mapping[Hashable, int]) -> List[Set[Hashable]]:
    missing = [n for n in g.nodes if n not in p]
    extra = [n for n in p if n not in g]
    if missing or extra:
        raise PartialPartition(
            f"partition must cover exactly the graph's nodes ({len(missing)} missing, {len(extra)} unknown)",
            missing=[str(n) for n in missing[:10]],
            unknown=[str(n) for n in extra[:10]],
        )
    groups: Dict[int, Set[Hashable]] = {}
    for node in g.nodes:
        groups.setdefault(p[node], set()).add(node)
    return [groups[k] for k in sorted(groups)]


def modularity_of(g: nx.Graph, p: Mapping[Hashable, int]) -> float:
    """Q = sum_c (e_cc / m - (d_c / 2m)^2). Edgeless graphs score 0."""
    communities = _communities(g, p)
    if g.number_of_edges() == 0:
        return 0.0
    return float(nx.community.modularity(g, communities))


def _canonical_partition(communities: List[Set[Hashable]]) -> Partition:
    ordered = sorted(communities, key=lambda c: min(str(n) for n in c))
    return {node: index for index, community in enumerate(ordered) for node in community}


def detect_communities(g: nx.Graph, seed: int, restarts: int = DEFAULT_RESTARTS) -> Tuple[Partition, float]:
    """Best Louvain partition over ``restarts`` seeded runs.

    Run r uses a seed derived from (seed, r); ties keep the earliest run.
    """
    if g.number_of_edges() == 0:
        raise NoEdges("community detection needs at least one edge")
    if restarts < 1:
        raise ValueError(f"restarts must be >= 1, got {restarts}")
    best: Tuple[Partition, float] = ({}, float("-inf"))
    for run in range(restarts):
        communities = nx.community.louvain_communities(g, seed=derive_seed(seed, run))
        partition = _canonical_partition(communities)
        q = modularity_of(g, partition)
        if q > best[1]:
            best = (partition, q)
    logger.debug("Louvain best of %d runs: %d communities, Q=%.4f", restarts, len(set(best[0].values())), best[1])
    return best


def compute_metrics(g: nx.Graph, seed: int = 0, restarts: int = DEFAULT_RESTARTS) -> NetworkMetrics:
    aspl, diameter, coverage = distance_metrics(g)
    if g.number_of_edges():
        _, q = detect_communities(g, seed, restarts)
    else:
        q = 0.0
    return NetworkMetrics(
        aspl=aspl,
        diameter=diameter,
        mean_cc=mean_clustering(g),
        modularity=q,
        component_coverage=coverage,
        n_nodes=g.number_of_nodes(),
        n_edges=g.number_of_edges(),
    )
