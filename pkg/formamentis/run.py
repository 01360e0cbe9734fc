"""Command-line entry point: ``python -m formamentis.run <command>``.

Exit status: 0 success, 2 invalid input or configuration (JSON error report
on stderr), 3 anything else.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import traceback
from pathlib import Path
from typing import Any, Dict, List, Optional

from . import __version__
from .config import GRAPH_FORMATS, INPUT_FORMATS, env_flag, load_config
from .errors import FormaMentisError, ValidationError
from .export import dumps, frame_to_dict, load_network, to_dot, write_graphml, write_json
from .metrics import compute_metrics, mean_clustering
from .models import DEFAULT_CUES, Group
from .network import semantic_frame, undirected_projection
from .nullmodel import null_ensemble, null_reports, write_distribution
from .prompts import build_all_prompts, build_persona_prompt
from .runner import Pipeline
from .summary import compare_reports, load_report, render_comparison

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_INTERNAL = 3


def configure_logging(debug: bool = False) -> None:
    logging.basicConfig(
        level=logging.DEBUG if debug else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )


def _csv(value: str) -> List[str]:
    return [v.strip() for v in value.split(",") if v.strip()]


# ---------------------------
# Config flags
# ---------------------------

def _add_config_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="YAML file merged over fmn_config/default.yaml")
    p.add_argument("--input", action="append", dest="inputs", metavar="PATH", help="input file or transcript directory (repeatable)")
    p.add_argument("--format", choices=INPUT_FORMATS, default="tabular", help="format of every --input")
    p.add_argument("--source", default="human", help="source tag for --input (human|simulated)")
    p.add_argument("--group", help="group tag for transcript --input (trainee|expert|academic)")
    p.add_argument("--cues", type=_csv, help="comma-separated cue list")
    p.add_argument("--groups", type=_csv, help="only these groups")
    p.add_argument("--sources", type=_csv, help="only these sources")
    p.add_argument("--alpha", type=float)
    p.add_argument("--min-participants", type=int)
    p.add_argument("--max-blank-fraction", type=float)
    p.add_argument("--min-n", type=int)
    p.add_argument("--blank-rating-policy", choices=("impute", "exclude"))
    p.add_argument("--lemma-map", type=Path)
    p.add_argument("--n-samples", type=int)
    p.add_argument("--seed", type=int, help="null-model seed (default: FMN_SEED or 0)")
    p.add_argument("--swap-factor", type=int)
    p.add_argument("--community-restarts", type=int)
    p.add_argument("--null-metrics", type=_csv)
    p.add_argument("--output-dir", type=Path)
    p.add_argument("--graph-formats", type=_csv)
    p.add_argument("--workers", type=int, help="worker processes (default: FMN_WORKERS or 1)")
    p.add_argument("--manifest-timings", action="store_true", default=None)


def overrides_from_args(args: argparse.Namespace) -> Dict[str, Any]:
    """Flags that were given, shaped like the YAML config."""
    overrides: Dict[str, Any] = {}
    if getattr(args, "inputs", None):
        overrides["inputs"] = [
            {"path": str(Path(p).resolve()), "format": args.format, "source": args.source, "group": args.group}
            for p in args.inputs
        ]
    plain = (
        "cues",
        "groups",
        "sources",
        "alpha",
        "min_participants",
        "max_blank_fraction",
        "min_n",
        "blank_rating_policy",
        "community_restarts",
        "null_metrics",
        "graph_formats",
        "workers",
        "manifest_timings",
    )
    for name in plain:
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    if getattr(args, "lemma_map", None) is not None:
        overrides["lemma_map"] = str(args.lemma_map.resolve())
    if getattr(args, "output_dir", None) is not None:
        overrides["output_dir"] = str(args.output_dir)
    null = {k: getattr(args, k) for k in ("n_samples", "seed", "swap_factor") if getattr(args, k, None) is not None}
    if null:
        overrides["null"] = null
    return overrides


def _config(args: argparse.Namespace):
    return load_config(args.config, overrides_from_args(args))


def _emit(text: str, out: Optional[Path]) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text, encoding="utf-8")
        print(out)


# ---------------------------
# Commands
# ---------------------------

def cmd_pipeline(args: argparse.Namespace) -> int:
    config = _config(args)
    until = "all" if args.command == "pipeline" else args.command
    out = Pipeline(config).run(until=until)
    print(out)
    return EXIT_OK


def cmd_metrics(args: argparse.Namespace) -> int:
    config = _config(args)
    net = load_network(args.network)
    metrics = compute_metrics(undirected_projection(net), config.null.seed, config.community_restarts)
    _emit(dumps(metrics.to_dict(), sort_keys=False), args.out)
    return EXIT_OK


def cmd_nulltest(args: argparse.Namespace) -> int:
    config = _config(args)
    g = undirected_projection(load_network(args.network))
    names = list(config.null_metrics)
    if args.distribution and "mean_cc" not in names:
        names.append("mean_cc")
    table = null_ensemble(g, config.null, names, config.workers, config.community_restarts)
    reports = null_reports(g, {name: table[name] for name in config.null_metrics}, config.null.seed, config.community_restarts)
    _emit(dumps({k: v.to_dict() for k, v in reports.items()}), args.out)
    if args.distribution:
        empirical = reports["mean_cc"].empirical if "mean_cc" in reports else mean_clustering(g)
        for path in write_distribution(table["mean_cc"], empirical, args.distribution):
            print(path)
    return EXIT_OK


def cmd_frames(args: argparse.Namespace) -> int:
    net = load_network(args.network)
    frame = semantic_frame(net, args.cue.strip().lower())
    out = args.out or Path(f"{frame.cue}.{args.format}")
    if args.format == "json":
        write_json(frame_to_dict(frame), out)
    elif args.format == "dot":
        out.write_text(to_dot(frame.graph, name=frame.cue), encoding="utf-8")
    else:
        write_graphml(frame.graph, out)
    print(out)
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    label_a, label_b = args.labels or (args.report_a.stem, args.report_b.stem)
    if label_a == label_b:
        label_a, label_b = f"{label_a} (a)", f"{label_b} (b)"
    comparison = compare_reports(load_report(args.report_a), load_report(args.report_b), label_a, label_b)
    text = dumps(comparison, sort_keys=False) if args.json else render_comparison(comparison)
    _emit(text, args.out)
    return EXIT_OK


def cmd_prompt(args: argparse.Namespace) -> int:
    cues = args.cues or list(DEFAULT_CUES)
    if args.group:
        print(build_persona_prompt(Group.parse(args.group), cues))
        return EXIT_OK
    for name, prompt in build_all_prompts(cues).items():
        print(f"# {name}")
        print(prompt)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="formamentis", description="Behavioural forma mentis network toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--debug", action="store_true", help="debug logging and tracebacks (also FMN_DEBUG)")
    sub = parser.add_subparsers(dest="command", required=True)

    stages = {
        "pipeline": "run every stage and write the full output tree",
        "ingest": "parse inputs and apply the exclusion rule",
        "label": "normalize, filter and write valence labels",
        "build": "build networks and semantic frames",
    }
    for name, help_text in stages.items():
        p = sub.add_parser(name, help=help_text)
        _add_config_args(p)
        p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("metrics", help="network measures of a saved network")
    p.add_argument("network", type=Path)
    p.add_argument("--out", type=Path)
    _add_config_args(p)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("nulltest", help="degree-preserving null tests of a saved network")
    p.add_argument("network", type=Path)
    p.add_argument("--out", type=Path)
    p.add_argument("--distribution", type=Path, help="also write the mean clustering ensemble here")
    _add_config_args(p)
    p.set_defaults(func=cmd_nulltest)

    p = sub.add_parser("frames", help="export the semantic frame of one cue")
    p.add_argument("network", type=Path)
    p.add_argument("--cue", required=True)
    p.add_argument("--format", choices=GRAPH_FORMATS, default="json")
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_frames)

    p = sub.add_parser("compare", help="side-by-side table of two metrics or null-test reports")
    p.add_argument("report_a", type=Path)
    p.add_argument("report_b", type=Path)
    p.add_argument("--labels", nargs=2, metavar=("A", "B"))
    p.add_argument("--json", action="store_true")
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("prompt", help="print persona instructions for simulated transcripts")
    p.add_argument("--group", choices=[g.value for g in Group])
    p.add_argument("--cues", type=_csv)
    p.set_defaults(func=cmd_prompt)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    debug = args.debug or env_flag("FMN_DEBUG")
    configure_logging(debug)

    try:
        return args.func(args)
    except ValidationError as e:
        print(json.dumps({"error": e.to_dict()}, default=str), file=sys.stderr)
        return EXIT_VALIDATION
    except FormaMentisError as e:
        print(json.dumps({"error": e.to_dict()}, default=str), file=sys.stderr)
        if debug or env_flag("FMN_STRICT"):
            traceback.print_exc()
        return EXIT_INTERNAL
    except Exception as e:
        print(json.dumps({"error": {"code": "internal_error", "message": f"{type(e).__name__}: {e}"}}), file=sys.stderr)
        if debug or env_flag("FMN_STRICT"):
            traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
