"""Group-level forma mentis networks and semantic frames.

Edges run from a cue to each association given for it; parallel answers
collapse into one edge weighted by the number of distinct participants.
Nodes carry their valence label and a colour (blue/grey/red); edges carry a
colour derived from both endpoint labels.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Mapping, Optional, Set, Tuple, Union

import networkx as nx

from .errors import MissingLabel, NotACue
from .models import Group, Source
from .normalize import NormalizedCohort
from .valence import Valence, ValenceLabel

logger = logging.getLogger(__name__)


class EdgeColor(str, Enum):
    BLUE = "blue"
    RED = "red"
    GREY = "grey"
    PURPLE = "purple"


NODE_COLORS = {
    Valence.POSITIVE: EdgeColor.BLUE,
    Valence.NEGATIVE: EdgeColor.RED,
    Valence.NEUTRAL: EdgeColor.GREY,
}

LabelLike = Union[ValenceLabel, Valence]


def _valence(label: LabelLike) -> Valence:
    return label.label if isinstance(label, ValenceLabel) else Valence(label)


def color_edge(a: LabelLike, b: LabelLike) -> EdgeColor:
    """Blue for two positives, red for two negatives, purple for a polar pair, grey otherwise."""
    pair = {_valence(a), _valence(b)}
    if Valence.NEUTRAL in pair:
        return EdgeColor.GREY
    if pair == {Valence.POSITIVE}:
        return EdgeColor.BLUE
    if pair == {Valence.NEGATIVE}:
        return EdgeColor.RED
    return EdgeColor.PURPLE


def color_node(label: LabelLike) -> EdgeColor:
    return NODE_COLORS[_valence(label)]


class FormaMentisNetwork:
    """Immutable directed cue -> association network.

    Node attributes: ``label`` (ValenceLabel), ``is_cue`` (bool), ``color``.
    Edge attributes: ``weight`` (distinct participants), ``color``.
    """

    def __init__(self, graph: nx.DiGraph, group: Optional[Group] = None, source: Optional[Source] = None):
        self.graph = nx.freeze(graph)
        self.group = group
        self.source = source

    @property
    def cues(self) -> List[str]:
        return [n for n, is_cue in self.graph.nodes(data="is_cue") if is_cue]

    def label(self, word: str) -> ValenceLabel:
        return self.graph.nodes[word]["label"]

    def is_cue(self, word: str) -> bool:
        return word in self.graph and bool(self.graph.nodes[word]["is_cue"])

    def __len__(self) -> int:
        return self.graph.number_of_nodes()

    def __repr__(self) -> str:
        return (
            f"FormaMentisNetwork(group={self.group and self.group.value}, source={self.source and self.source.value}, "
            f"nodes={self.graph.number_of_nodes()}, edges={self.graph.number_of_edges()})"
        )


@dataclass(frozen=True)
class SemanticFrame:
    cue: str
    cue_label: ValenceLabel
    neighbors: Tuple[Tuple[str, ValenceLabel], ...]
    graph: nx.DiGraph

    @property
    def edges(self) -> List[Tuple[str, str]]:
        return [(self.cue, word) for word, _ in self.neighbors]


# ---------------------------
# Construction
# ---------------------------

def _cell(cohort: NormalizedCohort) -> Tuple[Optional[Group], Optional[Source]]:
    groups = {r.group for r in cohort.records}
    sources = {r.source for r in cohort.records}
    return (groups.pop() if len(groups) == 1 else None, sources.pop() if len(sources) == 1 else None)


def build_graph(
    nodes: Mapping[str, Tuple[ValenceLabel, bool]],
    edges: Mapping[Tuple[str, str], int],
) -> nx.DiGraph:
    """Assemble an attributed DiGraph with nodes and edges in sorted order."""
    graph = nx.DiGraph()
    for word in sorted(nodes):
        label, is_cue = nodes[word]
        graph.add_node(word, label=label, is_cue=is_cue, color=color_node(label))
    for (cue, word) in sorted(edges):
        color = color_edge(nodes[cue][0], nodes[word][0])
        graph.add_edge(cue, word, weight=edges[(cue, word)], color=color)
    return graph


def build_network(
    cohort: NormalizedCohort,
    labels: Mapping[str, ValenceLabel],
    group: Optional[Group] = None,
    source: Optional[Source] = None,
) -> FormaMentisNetwork:
    """Link each cue to every association given for it in a filtered cohort."""
    producers: Dict[Tuple[str, str], Set[str]] = defaultdict(set)
    cues: Set[str] = set()
    words: Set[str] = set()
    self_loops = 0
    for record in cohort.records:
        for response in record.responses:
            cues.add(response.cue)
            for entry in response.associations:
                if entry.text == response.cue:
                    self_loops += 1
                    logger.debug("Dropped self-loop %s -> %s (participant %s)", response.cue, entry.text, record.participant_id)
                    continue
                words.add(entry.text)
                producers[(response.cue, entry.text)].add(record.participant_id)
    if self_loops:
        logger.info("Dropped %d self-loop answers", self_loops)

    nodes: Dict[str, Tuple[ValenceLabel, bool]] = {}
    for word in cues | words:
        if word not in labels:
            raise MissingLabel(word)
        nodes[word] = (labels[word], word in cues)
    edges = {pair: len(who) for pair, who in producers.items()}

    cell_group, cell_source = _cell(cohort)
    net = FormaMentisNetwork(build_graph(nodes, edges), group or cell_group, source or cell_source)
    logger.info("Built %r", net)
    return net


# ---------------------------
# Frames and projections
# ---------------------------

def semantic_frame(net: FormaMentisNetwork, cue: str) -> SemanticFrame:
    """Star subgraph of a cue and its out-neighbours; no neighbour-neighbour links."""
    if not net.is_cue(cue):
        raise NotACue(cue)
    graph = nx.DiGraph()
    cue_attrs = net.graph.nodes[cue]
    graph.add_node(cue, **cue_attrs)
    neighbors = []
    for word in sorted(net.graph.successors(cue)):
        attrs = net.graph.nodes[word]
        graph.add_node(word, **attrs)
        graph.add_edge(cue, word, **net.graph.edges[cue, word])
        neighbors.append((word, attrs["label"]))
    return SemanticFrame(cue=cue, cue_label=cue_attrs["label"], neighbors=tuple(neighbors), graph=graph)


def frame_valence_profile(frame: SemanticFrame) -> Dict[str, object]:
    """Counts and shares of positive, neutral and negative neighbours of a cue."""
    counts = {v.value: 0 for v in Valence}
    for _, label in frame.neighbors:
        counts[label.label.value] += 1
    total = len(frame.neighbors)
    shares = {k: (c / total if total else 0.0) for k, c in counts.items()}
    return {
        "cue": frame.cue,
        "cue_valence": frame.cue_label.label.value,
        "n_neighbors": total,
        "counts": counts,
        "shares": shares,
    }


def undirected_projection(net: FormaMentisNetwork) -> nx.Graph:
    """Same nodes; {u, v} iff u -> v or v -> u; weights and attributes dropped."""
    graph = nx.Graph()
    graph.add_nodes_from(net.graph.nodes)
    graph.add_edges_from(net.graph.edges)
    return graph


def network_summary(net: FormaMentisNetwork) -> Dict[str, object]:
    return {
        "group": net.group.value if net.group else None,
        "source": net.source.value if net.source else None,
        "n_nodes": net.graph.number_of_nodes(),
        "n_edges": net.graph.number_of_edges(),
        "n_cues": len(net.cues),
        "n_components": nx.number_weakly_connected_components(net.graph) if len(net) else 0,
        "valence_counts": {
            v.value: sum(1 for _, label in net.graph.nodes(data="label") if label.label is v) for v in Valence
        },
    }
