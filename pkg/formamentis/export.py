"""Serialization of networks, frames and reports.

- canonical JSON: sorted keys, floats at 6 significant digits, trailing newline;
- GraphML through networkx with plain string/int attributes;
- DOT written directly, nodes and edges in sorted order.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Dict, Iterable, Mapping, Optional, Tuple

import networkx as nx

from .errors import InputNotFound, ValidationError
from .models import Group, Source
from .network import FormaMentisNetwork, SemanticFrame, build_graph
from .valence import Valence, ValenceLabel

FLOAT_DIGITS = ".6g"


def canonical(obj: Any) -> Any:
    """Round floats for presentation; recurse into containers."""
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, float):
        return float(format(obj, FLOAT_DIGITS))
    if hasattr(obj, "item") and callable(obj.item):  # numpy scalars
        return canonical(obj.item())
    if isinstance(obj, Mapping):
        return {str(k): canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [canonical(v) for v in obj]
    if hasattr(obj, "value"):  # enums
        return obj.value
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj: Any, sort_keys: bool = True) -> str:
    return json.dumps(canonical(obj), indent=2, sort_keys=sort_keys, ensure_ascii=False) + "\n"


def write_json(obj: Any, path: Path, sort_keys: bool = True) -> Path:
    path.write_text(dumps(obj, sort_keys=sort_keys), encoding="utf-8")
    return path


def read_json(path: Path) -> Any:
    if not path.is_file():
        raise InputNotFound(str(path))
    return json.loads(path.read_text(encoding="utf-8"))


# ---------------------------
# Graph payloads
# ---------------------------

def _node_payload(word: str, attrs: Mapping[str, Any]) -> Dict[str, Any]:
    label: ValenceLabel = attrs["label"]
    return {
        "id": word,
        "valence": label.label.value,
        "is_cue": int(bool(attrs["is_cue"])),
        "color": attrs["color"].value,
        "h": label.h_statistic,
        "p": label.p_value,
        "n_word": label.n_word,
        "n_rest": label.n_rest,
    }


def _edge_payload(u: str, v: str, attrs: Mapping[str, Any]) -> Dict[str, Any]:
    return {"source": u, "target": v, "weight": int(attrs.get("weight", 1)), "color": attrs["color"].value}


def graph_to_dict(graph: nx.DiGraph, meta: Optional[Mapping[str, Any]] = None) -> Dict[str, Any]:
    return {
        **dict(meta or {}),
        "directed": True,
        "nodes": [_node_payload(n, graph.nodes[n]) for n in sorted(graph.nodes)],
        "edges": [_edge_payload(u, v, graph.edges[u, v]) for u, v in sorted(graph.edges)],
    }


def network_to_dict(net: FormaMentisNetwork) -> Dict[str, Any]:
    meta = {
        "group": net.group.value if net.group else None,
        "source": net.source.value if net.source else None,
    }
    return graph_to_dict(net.graph, meta)


def frame_to_dict(frame: SemanticFrame) -> Dict[str, Any]:
    return graph_to_dict(frame.graph, {"cue": frame.cue})


def network_from_dict(data: Mapping[str, Any]) -> FormaMentisNetwork:
    try:
        nodes: Dict[str, Tuple[ValenceLabel, bool]] = {}
        for node in data["nodes"]:
            label = ValenceLabel(
                word=node["id"],
                label=Valence(node["valence"]),
                h_statistic=float(node.get("h", 0.0)),
                p_value=float(node.get("p", 1.0)),
                n_word=int(node.get("n_word", 0)),
                n_rest=int(node.get("n_rest", 0)),
            )
            nodes[node["id"]] = (label, bool(int(node["is_cue"])))
        edges = {(e["source"], e["target"]): int(e.get("weight", 1)) for e in data["edges"]}
    except (KeyError, TypeError, ValueError) as e:
        raise ValidationError(f"malformed network document: {e}")
    group = Group(data["group"]) if data.get("group") else None
    source = Source(data["source"]) if data.get("source") else None
    return FormaMentisNetwork(build_graph(nodes, edges), group, source)


def _plain_graph(graph: nx.DiGraph) -> nx.DiGraph:
    plain = nx.DiGraph()
    for n in sorted(graph.nodes):
        attrs = graph.nodes[n]
        plain.add_node(
            n,
            valence=attrs["label"].label.value,
            is_cue=int(bool(attrs["is_cue"])),
            color=attrs["color"].value,
            p=float(attrs["label"].p_value),
        )
    for u, v in sorted(graph.edges):
        attrs = graph.edges[u, v]
        plain.add_edge(u, v, weight=int(attrs.get("weight", 1)), color=attrs["color"].value)
    return plain


def write_graphml(graph: nx.DiGraph, path: Path) -> Path:
    nx.write_graphml(_plain_graph(graph), str(path), encoding="utf-8", prettyprint=True)
    return path


def read_graphml(path: Path) -> FormaMentisNetwork:
    if not path.is_file():
        raise InputNotFound(str(path))
    raw = nx.read_graphml(str(path))
    data = {
        "nodes": [
            {"id": n, "valence": a["valence"], "is_cue": a["is_cue"], "p": a.get("p", 1.0)}
            for n, a in raw.nodes(data=True)
        ],
        "edges": [{"source": u, "target": v, "weight": a.get("weight", 1)} for u, v, a in raw.edges(data=True)],
    }
    return network_from_dict(data)


def _dot_id(value: str) -> str:
    return '"' + str(value).replace("\\", "\\\\").replace('"', '\\"') + '"'


def _dot_attrs(attrs: Mapping[str, Any]) -> str:
    return "[" + ", ".join(f"{k}={_dot_id(v)}" for k, v in attrs.items()) + "]"


def to_dot(graph: nx.DiGraph, name: str = "forma_mentis") -> str:
    lines = [f"digraph {_dot_id(name)} {{"]
    for n in sorted(graph.nodes):
        attrs = graph.nodes[n]
        lines.append(
            "\t"
            + _dot_id(n)
            + " "
            + _dot_attrs(
                {
                    "valence": attrs["label"].label.value,
                    "is_cue": int(bool(attrs["is_cue"])),
                    "color": attrs["color"].value,
                }
            )
            + ";"
        )
    for u, v in sorted(graph.edges):
        attrs = graph.edges[u, v]
        lines.append(
            "\t"
            + f"{_dot_id(u)} -> {_dot_id(v)} "
            + _dot_attrs({"weight": int(attrs.get("weight", 1)), "color": attrs["color"].value})
            + ";"
        )
    lines.append("}")
    return "\n".join(lines) + "\n"


def write_dot(graph: nx.DiGraph, path: Path, name: str = "forma_mentis") -> Path:
    path.write_text(to_dot(graph, name), encoding="utf-8")
    return path


def load_network(path: Path) -> FormaMentisNetwork:
    """Read a network from its JSON or GraphML export."""
    if path.suffix.lower() == ".graphml":
        return read_graphml(path)
    return network_from_dict(read_json(path))


def write_graph(graph: nx.DiGraph, stem: Path, formats: Iterable[str], meta: Optional[Mapping[str, Any]] = None) -> Dict[str, Path]:
    """Write ``graph`` as ``stem.<fmt>`` for each of json, graphml, dot."""
    written: Dict[str, Path] = {}
    for fmt in formats:
        path = stem.with_suffix("." + fmt)
        if fmt == "json":
            write_json(graph_to_dict(graph, meta), path)
        elif fmt == "graphml":
            write_graphml(graph, path)
        elif fmt == "dot":
            write_dot(graph, path, name=stem.name)
        else:
            raise ValueError(f"unknown graph format {fmt!r}")
        written[fmt] = path
    return written
