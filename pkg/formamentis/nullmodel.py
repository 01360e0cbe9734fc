"""Degree-preserving null ensembles and empirical p-values.

Each replicate is the observed graph randomized by accepted double-edge
swaps, so replicates stay simple and keep every node's degree. Replicate r is
seeded from (spec.seed, r), which makes results independent of the number of
worker processes.
"""

from __future__ import annotations

import functools
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from .errors import NullReplicateError, TooFewEdges
from .export import write_json
from .metrics import DEFAULT_RESTARTS, detect_communities, distance_metrics, mean_clustering
from .seeding import derive_seed

logger = logging.getLogger(__name__)

Metric = Callable[[nx.Graph], float]

# max attempted swaps per requested swap before a degree sequence is treated as rigid
TRIES_PER_SWAP = 100


@dataclass(frozen=True)
class NullEnsembleSpec:
    n_samples: int = 500
    seed: int = 0
    swap_factor: int = 10

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError(f"n_samples must be >= 1, got {self.n_samples}")
        if self.swap_factor < 1:
            raise ValueError(f"swap_factor must be >= 1, got {self.swap_factor}")
        if self.seed < 0:
            raise ValueError(f"seed must be >= 0, got {self.seed}")


@dataclass(frozen=True)
class NullTestReport:
    metric_name: str
    empirical: float
    ensemble_mean: float
    ensemble_sd: float
    p_value: float
    n_samples: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "metric_name": self.metric_name,
            "empirical": self.empirical,
            "ensemble_mean": self.ensemble_mean,
            "ensemble_sd": self.ensemble_sd,
            "p_value": self.p_value,
            "n_samples": self.n_samples,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "NullTestReport":
        return cls(
            metric_name=str(data["metric_name"]),
            empirical=float(data["empirical"]),
            ensemble_mean=float(data["ensemble_mean"]),
            ensemble_sd=float(data["ensemble_sd"]),
            p_value=float(data["p_value"]),
            n_samples=int(data["n_samples"]),
        )


# ---------------------------
# Metric registry
# ---------------------------

def aspl_metric(g: nx.Graph) -> float:
    return distance_metrics(g)[0]


def diameter_metric(g: nx.Graph) -> float:
    return float(distance_metrics(g)[1])


def modularity_metric(g: nx.Graph, seed: int = 0, restarts: int = DEFAULT_RESTARTS) -> float:
    return detect_communities(g, seed, restarts)[1]


METRICS: Dict[str, Metric] = {
    "aspl": aspl_metric,
    "diameter": diameter_metric,
    "mean_cc": mean_clustering,
    "modularity": modularity_metric,
}


def resolve_metric(name: str, seed: int = 0, restarts: int = DEFAULT_RESTARTS) -> Metric:
    if name not in METRICS:
        raise ValueError(f"unknown metric {name!r}; choose from {sorted(METRICS)}")
    if name == "modularity":
        return functools.partial(modularity_metric, seed=seed, restarts=restarts)
    return METRICS[name]


# ---------------------------
# Randomization
# ---------------------------

def _swap_edge_list(edges: List[Tuple[int, int]], nswap: int, max_tries: int, rng: np.random.Generator) -> int:
    """Double-edge swaps in place on ``edges`` (pairs stored low, high).

    (a, b), (c, d) -> (a, d), (c, b); draws that would add a self-loop or an
    existing edge are rejected. Returns the number of accepted swaps.
    """
    m = len(edges)
    present = set(edges)
    swaps = tries = 0
    batch = max(1024, 2 * nswap)
    while swaps < nswap and tries < max_tries:
        size = min(batch, max_tries - tries)
        first = rng.integers(0, m, size).tolist()
        second = rng.integers(0, m, size).tolist()
        flips = rng.integers(0, 2, size).tolist()
        tries += size
        for i, j, flip in zip(first, second, flips):
            if i == j:
                continue
            a, b = edges[i]
            c, d = edges[j]
            if flip:
                c, d = d, c
            if a == d or c == b:
                continue
            new_i = (a, d) if a < d else (d, a)
            new_j = (c, b) if c < b else (b, c)
            if new_i in present or new_j in present:
                continue
            present.remove(edges[i])
            present.remove(edges[j])
            present.add(new_i)
            present.add(new_j)
            edges[i] = new_i
            edges[j] = new_j
            swaps += 1
            if swaps == nswap:
                break
    return swaps


def randomize_degree_preserving(g: nx.Graph, seed: int, swap_factor: int = 10) -> nx.Graph:
    """Copy of ``g`` after swap_factor x |E| accepted double-edge swaps.

    Degree sequences that admit fewer distinct simple graphs (down to a single
    one, e.g. complete graphs) stop after TRIES_PER_SWAP attempts per requested
    swap; the result still has the input's degrees and edge count. Node
    attributes are kept, edge attributes are not.
    """
    m = g.number_of_edges()
    if m < 2:
        raise TooFewEdges(f"degree-preserving randomization needs >= 2 edges, got {m}", n_edges=m)
    if g.number_of_nodes() < 4:
        logger.debug("Graph with %d nodes admits no double-edge swap", g.number_of_nodes())
        return g.copy()

    nodes = list(g.nodes)
    index = {node: i for i, node in enumerate(nodes)}
    edges = []
    for u, v in g.edges():
        a, b = index[u], index[v]
        edges.append((a, b) if a < b else (b, a))
    nswap = swap_factor * m
    swaps = _swap_edge_list(edges, nswap, nswap * TRIES_PER_SWAP, np.random.default_rng(seed))
    if swaps < nswap:
        logger.debug("Swap budget exhausted after %d of %d swaps; degree sequence is (nearly) rigid", swaps, nswap)

    randomized = nx.Graph()
    randomized.graph.update(g.graph)
    randomized.add_nodes_from(g.nodes(data=True))
    randomized.add_edges_from((nodes[a], nodes[b]) for a, b in edges)
    return randomized


# ---------------------------
# Ensembles
# ---------------------------

def _replicate_values(
    task: Tuple[nx.Graph, Dict[str, Metric], int, int, int]
) -> Tuple[int, Optional[Dict[str, float]], Optional[str]]:
    g, metrics, seed, swap_factor, index = task
    try:
        replicate = randomize_degree_preserving(g, derive_seed(seed, index), swap_factor)
        return index, {name: float(metric(replicate)) for name, metric in metrics.items()}, None
    except Exception as e:  # reported back with the replicate index
        return index, None, f"{type(e).__name__}: {e}"


def ensemble_table(
    g: nx.Graph, metrics: Mapping[str, Metric], spec: NullEnsembleSpec, workers: int = 1
) -> Dict[str, List[float]]:
    """Every metric on every replicate, each column in replicate order.

    Each replicate is randomized once and measured with all ``metrics``.
    """
    m = g.number_of_edges()
    if m < 2:
        raise TooFewEdges(f"degree-preserving randomization needs >= 2 edges, got {m}", n_edges=m)
    metrics = dict(metrics)
    tasks = [(g, metrics, spec.seed, spec.swap_factor, r) for r in range(spec.n_samples)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_replicate_values, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    else:
        results = [_replicate_values(t) for t in tasks]

    table: Dict[str, List[float]] = {name: [] for name in metrics}
    for index, values, error in results:
        if error is not None:
            raise NullReplicateError(index, RuntimeError(error))
        for name in metrics:
            table[name].append(values[name])
    return table


def ensemble_values(g: nx.Graph, metric: Metric, spec: NullEnsembleSpec, workers: int = 1) -> List[float]:
    """Metric value of every replicate, in replicate order."""
    return ensemble_table(g, {"value": metric}, spec, workers)["value"]


def null_ensemble(
    g: nx.Graph,
    spec: NullEnsembleSpec,
    metrics: Sequence[str] = tuple(METRICS),
    workers: int = 1,
    restarts: int = DEFAULT_RESTARTS,
) -> Dict[str, List[float]]:
    """Ensemble table for registered metric names."""
    return ensemble_table(g, {name: resolve_metric(name, spec.seed, restarts) for name in metrics}, spec, workers)


def empirical_p_value(empirical: float, values: Sequence[float]) -> float:
    """(1 + #{v >= empirical}) / (n + 1), upper tail."""
    exceed = sum(1 for v in values if v >= empirical)
    return (1 + exceed) / (len(values) + 1)


def _summarize(values: Sequence[float]) -> Tuple[float, float]:
    ordered = np.sort(np.asarray(values, dtype=float))
    mean = float(ordered.mean())
    sd = float(ordered.std(ddof=1)) if len(ordered) > 1 else 0.0
    return mean, sd


def report_from_values(metric_name: str, empirical: float, values: Sequence[float]) -> NullTestReport:
    mean, sd = _summarize(values)
    return NullTestReport(
        metric_name=metric_name,
        empirical=empirical,
        ensemble_mean=mean,
        ensemble_sd=sd,
        p_value=empirical_p_value(empirical, values),
        n_samples=len(values),
    )


def _log_report(report: NullTestReport) -> NullTestReport:
    logger.info(
        "Null test %s: empirical %.4f vs ensemble %.4f +/- %.4f, p=%.4f (%d replicates)",
        report.metric_name,
        report.empirical,
        report.ensemble_mean,
        report.ensemble_sd,
        report.p_value,
        report.n_samples,
    )
    return report


def null_test(
    g: nx.Graph,
    metric: Metric,
    spec: NullEnsembleSpec,
    metric_name: Optional[str] = None,
    workers: int = 1,
) -> NullTestReport:
    name = metric_name or getattr(metric, "__name__", "metric")
    empirical = float(metric(g))
    return _log_report(report_from_values(name, empirical, ensemble_values(g, metric, spec, workers)))


def null_reports(
    g: nx.Graph, table: Mapping[str, Sequence[float]], seed: int = 0, restarts: int = DEFAULT_RESTARTS
) -> Dict[str, NullTestReport]:
    """One report per column of ``table``, empirical values measured on ``g``."""
    return {
        name: _log_report(report_from_values(name, float(resolve_metric(name, seed, restarts)(g)), values))
        for name, values in table.items()
    }


def null_test_all(
    g: nx.Graph,
    spec: NullEnsembleSpec,
    metrics: Sequence[str] = tuple(METRICS),
    workers: int = 1,
    restarts: int = DEFAULT_RESTARTS,
) -> Dict[str, NullTestReport]:
    return null_reports(g, null_ensemble(g, spec, metrics, workers, restarts), spec.seed, restarts)


def clustering_distribution(g: nx.Graph, spec: NullEnsembleSpec, workers: int = 1) -> List[float]:
    """Mean clustering of each replicate, in replicate order."""
    return ensemble_values(g, mean_clustering, spec, workers)


def write_distribution(values: Sequence[float], empirical: float, path: Path, metric_name: str = "mean_cc") -> Tuple[Path, Path]:
    """One value per line at ``path`` plus a JSON sidecar with the empirical marker."""
    path.write_text("".join(f"{v:.6g}\n" for v in values), encoding="utf-8")
    mean, sd = _summarize(values) if values else (0.0, 0.0)
    sidecar = path.with_suffix(".json")
    payload = {
        "metric_name": metric_name,
        "empirical": empirical,
        "ensemble_mean": mean,
        "ensemble_sd": sd,
        "p_value": empirical_p_value(empirical, values),
        "n_samples": len(values),
        "values_file": path.name,
    }
    write_json(payload, sidecar)
    return path, sidecar
