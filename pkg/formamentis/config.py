"""Configuration loading for the forma mentis pipeline."""

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import yaml
from dotenv import load_dotenv

from .errors import ConfigError
from .ingest import ColumnMapping
from .models import DEFAULT_CUES, Group, Source
from .nullmodel import METRICS, NullEnsembleSpec
from .valence import BLANK_POLICIES

load_dotenv()

CONFIG_DIR = Path(__file__).parent.parent / "fmn_config"
DEFAULT_CONFIG_PATH = CONFIG_DIR / "default.yaml"

INPUT_FORMATS = ("tabular", "transcript")
GRAPH_FORMATS = ("json", "graphml", "dot")


def env_flag(name: str) -> bool:
    return os.getenv(name, "").strip().lower() in ("1", "true", "yes", "y", "on")


def env_int(name: str, default: int) -> int:
    raw = os.getenv(name, "").strip()
    if not raw:
        return default
    try:
        return int(raw)
    except ValueError:
        return default


def _load_yaml(path: Path) -> Dict[str, Any]:
    """Load YAML configuration file."""
    if not path.exists():
        return {}
    with open(path, "r", encoding="utf-8") as f:
        data = yaml.safe_load(f) or {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping", path=str(path))
    return data


def merge_configs(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    """
    Merge two config dicts where `override` wins.

    - For nested dicts, merge recursively.
    - For lists/scalars, override value replaces base.
    """
    result: Dict[str, Any] = dict(base or {})
    for key, val in (override or {}).items():
        if key in result and isinstance(result[key], dict) and isinstance(val, dict):
            result[key] = merge_configs(result[key], val)
        else:
            result[key] = val
    return result


@dataclass(frozen=True)
class InputSpec:
    path: Path
    format: str
    source: Source = Source.HUMAN
    group: Optional[Group] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "path": str(self.path),
            "format": self.format,
            "source": self.source.value,
            "group": self.group.value if self.group else None,
        }


@dataclass(frozen=True)
class RunConfig:
    inputs: List[InputSpec] = field(default_factory=list)
    cues: List[str] = field(default_factory=lambda: list(DEFAULT_CUES))
    columns: ColumnMapping = field(default_factory=ColumnMapping)
    groups: List[Group] = field(default_factory=list)
    sources: List[Source] = field(default_factory=list)
    max_blank_fraction: float = 0.25
    lemma_map: Optional[Path] = None
    min_participants: int = 2
    alpha: float = 0.1
    min_n: int = 3
    blank_rating_policy: str = "impute"
    community_restarts: int = 10
    null: NullEnsembleSpec = field(default_factory=NullEnsembleSpec)
    null_metrics: List[str] = field(default_factory=lambda: list(METRICS))
    output_dir: Path = Path("fmn_output")
    graph_formats: List[str] = field(default_factory=lambda: list(GRAPH_FORMATS))
    manifest_timings: bool = False
    workers: int = 1

    def manifest_dict(self) -> Dict[str, Any]:
        """Every field that can change results; output_dir and workers cannot."""
        return {
            "inputs": [i.to_dict() for i in self.inputs],
            "cues": list(self.cues),
            "columns": dict(self.columns.__dict__),
            "groups": [g.value for g in self.groups],
            "sources": [s.value for s in self.sources],
            "max_blank_fraction": self.max_blank_fraction,
            "lemma_map": str(self.lemma_map) if self.lemma_map else None,
            "min_participants": self.min_participants,
            "alpha": self.alpha,
            "min_n": self.min_n,
            "blank_rating_policy": self.blank_rating_policy,
            "community_restarts": self.community_restarts,
            "null": {
                "n_samples": self.null.n_samples,
                "seed": self.null.seed,
                "swap_factor": self.null.swap_factor,
            },
            "null_metrics": list(self.null_metrics),
            "graph_formats": list(self.graph_formats),
            "manifest_timings": self.manifest_timings,
        }


def _enum_list(values: Any, enum, key: str) -> list:
    try:
        return [enum.parse(v) for v in (values or [])]
    except ValueError as e:
        raise ConfigError(f"{key}: {e}", key=key)


def _parse_inputs(raw: Any, base_dir: Path) -> List[InputSpec]:
    specs = []
    for index, item in enumerate(raw or []):
        if not isinstance(item, dict) or "path" not in item:
            raise ConfigError(f"inputs[{index}] needs a 'path'", index=index)
        fmt = str(item.get("format", "tabular")).lower()
        if fmt not in INPUT_FORMATS:
            raise ConfigError(f"inputs[{index}].format must be one of {INPUT_FORMATS}", index=index)
        try:
            source = Source.parse(item.get("source", "human"))
            group = Group.parse(item["group"]) if item.get("group") else None
        except ValueError as e:
            raise ConfigError(f"inputs[{index}]: {e}", index=index)
        if fmt == "transcript" and group is None:
            raise ConfigError(f"inputs[{index}]: transcripts need a group", index=index)
        path = Path(item["path"])
        if not path.is_absolute():
            path = base_dir / path
        specs.append(InputSpec(path=path, format=fmt, source=source, group=group))
    return specs


def _check(condition: bool, message: str, **details: Any) -> None:
    if not condition:
        raise ConfigError(message, **details)


def build_config(data: Dict[str, Any], base_dir: Path = Path(".")) -> RunConfig:
    """Validate a merged config mapping into a RunConfig."""
    null = dict(data.get("null") or {})
    seed = null.get("seed")
    if seed is None:
        seed = env_int("FMN_SEED", 0)
    workers = data.get("workers")
    if workers is None:
        workers = env_int("FMN_WORKERS", 1)

    try:
        spec = NullEnsembleSpec(
            n_samples=int(null.get("n_samples", 500)),
            seed=int(seed),
            swap_factor=int(null.get("swap_factor", 10)),
        )
        alpha = float(data.get("alpha", 0.1))
        max_blank = float(data.get("max_blank_fraction", 0.25))
        min_participants = int(data.get("min_participants", 2))
        min_n = int(data.get("min_n", 3))
        restarts = int(data.get("community_restarts", 10))
        workers = int(workers)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"invalid configuration value: {e}")

    _check(0.0 <= alpha <= 1.0, f"alpha must be in [0, 1], got {alpha}", key="alpha")
    _check(0.0 <= max_blank <= 1.0, f"max_blank_fraction must be in [0, 1], got {max_blank}", key="max_blank_fraction")
    _check(min_participants >= 1, "min_participants must be >= 1", key="min_participants")
    _check(min_n >= 1, "min_n must be >= 1", key="min_n")
    _check(restarts >= 1, "community_restarts must be >= 1", key="community_restarts")
    _check(workers >= 1, "workers must be >= 1", key="workers")

    policy = str(data.get("blank_rating_policy", "impute"))
    _check(policy in BLANK_POLICIES, f"blank_rating_policy must be one of {BLANK_POLICIES}", key="blank_rating_policy")
    metrics = list(data.get("null_metrics") or [])
    unknown = [m for m in metrics if m not in METRICS]
    _check(not unknown, f"unknown null metrics: {unknown}", key="null_metrics")
    formats = list(data.get("graph_formats") or [])
    _check(all(f in GRAPH_FORMATS for f in formats), f"graph_formats must be drawn from {GRAPH_FORMATS}", key="graph_formats")
    cues = [str(c).strip().lower() for c in (data.get("cues") or DEFAULT_CUES)]
    _check(len(cues) == len(set(cues)), "cue list has duplicates", key="cues")

    lemma_map = data.get("lemma_map")
    if lemma_map:
        lemma_map = Path(lemma_map)
        if not lemma_map.is_absolute():
            lemma_map = base_dir / lemma_map

    return RunConfig(
        inputs=_parse_inputs(data.get("inputs"), base_dir),
        cues=cues,
        columns=ColumnMapping.from_dict(data.get("columns")),
        groups=_enum_list(data.get("groups"), Group, "groups"),
        sources=_enum_list(data.get("sources"), Source, "sources"),
        max_blank_fraction=max_blank,
        lemma_map=lemma_map or None,
        min_participants=min_participants,
        alpha=alpha,
        min_n=min_n,
        blank_rating_policy=policy,
        community_restarts=restarts,
        null=spec,
        null_metrics=metrics,
        output_dir=Path(data.get("output_dir") or "fmn_output"),
        graph_formats=formats,
        manifest_timings=bool(data.get("manifest_timings", False)),
        workers=workers,
    )


def load_config(path: Optional[Path] = None, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """default.yaml, then the user file, then flag overrides.

    Relative input paths resolve against the user file's directory.
    """
    merged = _load_yaml(DEFAULT_CONFIG_PATH)
    base_dir = Path(".")
    if path is not None:
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}", path=str(path))
        merged = merge_configs(merged, _load_yaml(path))
        base_dir = path.parent
    merged = merge_configs(merged, overrides or {})
    return build_config(merged, base_dir)
