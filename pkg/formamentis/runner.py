"""Pipeline orchestration: ingest -> normalize -> label -> build -> metrics -> null tests -> exports."""

from __future__ import annotations

import hashlib
import logging
import re
import shutil
import tempfile
import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

import networkx as nx
import pandas as pd

from . import __version__
from .config import RunConfig
from .errors import EmptyCohort, ValidationError
from .export import frame_to_dict, write_dot, write_graph, write_json
from .ingest import blank_fraction, exclude_sparse_participants, load_inputs
from .metrics import NetworkMetrics, compute_metrics
from .models import Group, ParticipantRecord, Source
from .network import (
    FormaMentisNetwork,
    build_network,
    frame_valence_profile,
    network_summary,
    semantic_frame,
    undirected_projection,
)
from .normalize import LemmaMap, NormalizedCohort, cohort_words, filter_idiosyncratic, normalize_cohort
from .nullmodel import (
    NullTestReport,
    null_ensemble,
    report_from_values,
    write_distribution,
)
from .summary import render_run_summary
from .valence import ValenceLabel, label_cohort, write_label_report

logger = logging.getLogger(__name__)

# Each stage includes the outputs of the ones before it.
STAGES = ("ingest", "label", "build", "all")

MANIFEST_NAME = "manifest.json"


@dataclass
class CellResult:
    source: Source
    group: Group
    counts: Dict[str, int] = field(default_factory=dict)
    network: Optional[FormaMentisNetwork] = None
    labels: Dict[str, ValenceLabel] = field(default_factory=dict)
    metrics: Optional[NetworkMetrics] = None
    nulltests: Dict[str, NullTestReport] = field(default_factory=dict)

    @property
    def name(self) -> str:
        return f"{self.source.value}_{self.group.value}"

    def summary_dict(self) -> Dict[str, Any]:
        return {
            "source": self.source.value,
            "group": self.group.value,
            "counts": dict(self.counts),
            "metrics": self.metrics.to_dict() if self.metrics else {},
            "nulltests": {k: v.to_dict() for k, v in self.nulltests.items()},
        }


def file_digest(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _input_files(path: Path, fmt: str) -> List[Path]:
    if path.is_dir():
        return sorted(path.glob("*.txt")) if fmt == "transcript" else sorted(p for p in path.iterdir() if p.is_file())
    return [path]


def _safe_name(word: str) -> str:
    return re.sub(r"[^0-9A-Za-z_-]+", "_", word) or "_"


def split_cells(
    records: Sequence[ParticipantRecord],
    groups: Sequence[Group] = (),
    sources: Sequence[Source] = (),
) -> Dict[Tuple[Source, Group], List[ParticipantRecord]]:
    """(source, group) -> records, in enum order, restricted to the selectors when given."""
    cells: Dict[Tuple[Source, Group], List[ParticipantRecord]] = {}
    for source in Source:
        if sources and source not in sources:
            continue
        for group in Group:
            if groups and group not in groups:
                continue
            members = [r for r in records if r.source is source and r.group is group]
            if members:
                cells[(source, group)] = members
    return cells


class Pipeline:
    """Runs every stage for each (source, group) cell and writes the output tree."""

    def __init__(self, config: RunConfig):
        self.config = config
        self.timings: Dict[str, float] = {}
        self._lemma_map: Optional[LemmaMap] = None

    @contextmanager
    def _stage(self, name: str) -> Iterator[None]:
        logger.info("Stage %s: start", name)
        start = time.perf_counter()
        try:
            yield
        finally:
            elapsed = time.perf_counter() - start
            self.timings[name] = self.timings.get(name, 0.0) + elapsed
            logger.info("Stage %s: %.2fs", name, elapsed)

    @property
    def lemma_map(self) -> LemmaMap:
        if self._lemma_map is None:
            self._lemma_map = LemmaMap.load(self.config.lemma_map)
        return self._lemma_map

    # -------------------------
    # Cell stages
    # -------------------------
    def prepare_cohort(self, cell: CellResult, records: Sequence[ParticipantRecord]) -> Tuple[NormalizedCohort, List[ParticipantRecord], List[ParticipantRecord]]:
        """Exclusion, normalization and the idiosyncrasy filter for one cell."""
        cfg = self.config
        kept, dropped = exclude_sparse_participants(records, cfg.max_blank_fraction, cfg.cues)
        cell.counts.update(parsed=len(records), excluded=len(dropped), kept=len(kept))
        if not kept:
            raise EmptyCohort(f"every participant of {cell.name} was excluded", cell=cell.name)
        normalized = normalize_cohort(kept, self.lemma_map)
        filtered = filter_idiosyncratic(normalized, cfg.min_participants)
        cell.counts.update(
            slots=sum(1 for e in normalized.provenance_log if e.stage == 0),
            removed_normalize=sum(1 for e in normalized.provenance_log if e.normalized is None),
            removed_idiosyncratic=len(filtered.provenance_log) - len(normalized.provenance_log),
            associations=filtered.association_count(),
            words=len(cohort_words(filtered)),
        )
        return filtered, kept, dropped

    def build(self, cell: CellResult, cohort: NormalizedCohort) -> FormaMentisNetwork:
        cfg = self.config
        cell.labels = label_cohort(cohort, cfg.alpha, cfg.min_n, cfg.blank_rating_policy)
        cell.network = build_network(cohort, cell.labels, cell.group, cell.source)
        summary = network_summary(cell.network)
        cell.counts.update(nodes=summary["n_nodes"], edges=summary["n_edges"], cues=summary["n_cues"])
        return cell.network

    def measure(self, cell: CellResult, g: nx.Graph) -> List[float]:
        """Metrics and null tests on the undirected projection.

        One ensemble serves every null metric; its mean clustering column is
        returned for the distribution file.
        """
        cfg = self.config
        spec = cfg.null
        cell.metrics = compute_metrics(g, spec.seed, cfg.community_restarts)
        observed = cell.metrics.to_dict()
        names = list(cfg.null_metrics)
        if "mean_cc" not in names:
            names.append("mean_cc")
        table = null_ensemble(g, spec, names, cfg.workers, cfg.community_restarts)
        for name in cfg.null_metrics:
            cell.nulltests[name] = report_from_values(name, float(observed[name]), table[name])
            logger.info(
                "%s %s: empirical %.4f, random %.4f, p=%.4f",
                cell.name,
                name,
                cell.nulltests[name].empirical,
                cell.nulltests[name].ensemble_mean,
                cell.nulltests[name].p_value,
            )
        return table["mean_cc"]

    # -------------------------
    # Writers
    # -------------------------
    def _write_exclusions(self, cell_dir: Path, kept: Sequence[ParticipantRecord], dropped: Sequence[ParticipantRecord]) -> None:
        cues = self.config.cues
        payload = {
            "max_blank_fraction": self.config.max_blank_fraction,
            "kept": [r.participant_id for r in kept],
            "dropped": [
                {"participant_id": r.participant_id, "blank_fraction": blank_fraction(r, cues)} for r in dropped
            ],
        }
        write_json(payload, cell_dir / "exclusions.json")

    def _write_provenance(self, cell_dir: Path, cohort: NormalizedCohort) -> None:
        columns = ["participant_id", "cue", "position", "raw", "normalized", "reason", "stage"]
        frame = pd.DataFrame([asdict(e) for e in cohort.provenance_log], columns=columns)
        frame["normalized"] = frame["normalized"].fillna("")
        frame.to_csv(cell_dir / "provenance.csv", index=False, lineterminator="\n")

    def _write_frames(self, cell_dir: Path, net: FormaMentisNetwork) -> None:
        frames_dir = cell_dir / "frames"
        frames_dir.mkdir()
        for cue in sorted(net.cues):
            frame = semantic_frame(net, cue)
            stem = frames_dir / _safe_name(cue)
            payload = frame_to_dict(frame)
            payload["profile"] = frame_valence_profile(frame)
            write_json(payload, stem.with_suffix(".json"))
            write_dot(frame.graph, stem.with_suffix(".dot"), name=cue)

    def _write_measures(self, cell_dir: Path, cell: CellResult, cc_values: Sequence[float]) -> None:
        write_json(cell.metrics.to_dict(), cell_dir / "metrics.json", sort_keys=False)
        write_json({k: v.to_dict() for k, v in cell.nulltests.items()}, cell_dir / "nulltests.json")
        write_distribution(cc_values, cell.metrics.mean_cc, cell_dir / "cc_distribution.txt")

    def _manifest(self, cells: Sequence[CellResult]) -> Dict[str, Any]:
        inputs = []
        for spec in self.config.inputs:
            for path in _input_files(spec.path, spec.format):
                inputs.append({"path": str(path), "sha256": file_digest(path)})
        if self.config.lemma_map:
            inputs.append({"path": str(self.config.lemma_map), "sha256": file_digest(self.config.lemma_map)})
        manifest: Dict[str, Any] = {
            "tool": "formamentis",
            "version": __version__,
            "config": self.config.manifest_dict(),
            "inputs": inputs,
            "cells": [{"cell": c.name, "counts": dict(c.counts)} for c in cells],
        }
        if self.config.manifest_timings:
            manifest["timings"] = dict(self.timings)
        return manifest

    # -------------------------
    # Entry point
    # -------------------------
    def _prepare_output(self) -> Path:
        out = self.config.output_dir
        if out.exists() and not (out / MANIFEST_NAME).is_file():
            if out.is_file() or any(out.iterdir()):
                raise ValidationError(f"output directory {out} exists and is not a previous run", path=str(out))
        out.parent.mkdir(parents=True, exist_ok=True)
        return Path(tempfile.mkdtemp(prefix=f".{out.name}.", dir=out.parent))

    def _publish(self, staging: Path) -> None:
        out = self.config.output_dir
        if out.exists():
            shutil.rmtree(out)
        staging.rename(out)

    def run(self, until: str = "all") -> Path:
        """Run stages up to ``until`` and publish the tree at config.output_dir."""
        if until not in STAGES:
            raise ValueError(f"until must be one of {STAGES}, got {until!r}")
        cfg = self.config
        if not cfg.inputs:
            raise ValidationError("no inputs configured")

        staging = self._prepare_output()
        try:
            with self._stage("ingest"):
                records = load_inputs(cfg)
                cells = split_cells(records, cfg.groups, cfg.sources)
            if not cells:
                raise EmptyCohort("no participants in the selected groups and sources")

            results: List[CellResult] = []
            for (source, group), members in cells.items():
                cell = CellResult(source=source, group=group)
                cell_dir = staging / cell.name
                cell_dir.mkdir()
                logger.info("Cell %s: %d participants", cell.name, len(members))

                with self._stage("normalize"):
                    cohort, kept, dropped = self.prepare_cohort(cell, members)
                self._write_exclusions(cell_dir, kept, dropped)
                results.append(cell)
                if until == "ingest":
                    continue

                with self._stage("label"):
                    net = self.build(cell, cohort)
                self._write_provenance(cell_dir, cohort)
                write_label_report(cell.labels, cell_dir / "labels.csv")
                if until == "label":
                    continue

                with self._stage("export"):
                    meta = {"group": group.value, "source": source.value}
                    write_graph(net.graph, cell_dir / "network", cfg.graph_formats, meta)
                    self._write_frames(cell_dir, net)
                if until == "build":
                    continue

                g = undirected_projection(net)
                with self._stage("metrics"):
                    cc_values = self.measure(cell, g)
                with self._stage("distribution"):
                    self._write_measures(cell_dir, cell, cc_values)

            manifest = self._manifest(results)
            write_json(manifest, staging / MANIFEST_NAME)
            if until == "all":
                (staging / "summary.md").write_text(
                    render_run_summary([c.summary_dict() for c in results], manifest), encoding="utf-8"
                )
            self._publish(staging)
        except BaseException:
            shutil.rmtree(staging, ignore_errors=True)
            raise

        logger.info("Wrote %d cells to %s", len(results), cfg.output_dir)
        return cfg.output_dir
