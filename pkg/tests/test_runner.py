import csv
import json
import logging

import pytest

from formamentis.config import load_config
from formamentis.errors import EmptyCohort, ValidationError
from formamentis.models import DEFAULT_CUES, Group, Source
from formamentis.normalize import IDIOSYNCRATIC, NON_LETTER
from formamentis.prompts import ANSWER_LINE
from formamentis.run import main
from formamentis.runner import MANIFEST_NAME, Pipeline, split_cells

CELL = "human_trainee"


@pytest.fixture(autouse=True)
def restore_logging(monkeypatch):
    for name in ("FMN_SEED", "FMN_WORKERS", "FMN_DEBUG", "FMN_STRICT"):
        monkeypatch.delenv(name, raising=False)
    root = logging.getLogger()
    handlers, level = list(root.handlers), root.level
    yield
    root.handlers[:] = handlers
    root.setLevel(level)


def _config(path, out, **extra):
    overrides = {
        "inputs": [{"path": str(path), "format": "tabular"}],
        "output_dir": str(out),
        "null": {"n_samples": 20, "seed": 42, "swap_factor": 5},
        "community_restarts": 3,
    }
    overrides.update(extra)
    return load_config(overrides=overrides)


def _tree(root):
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


@pytest.fixture
def finished_run(tmp_path, cohort_csv):
    out = tmp_path / "run"
    Pipeline(_config(cohort_csv, out)).run()
    return out


# ---------------------------
# Pipeline
# ---------------------------

class TestPipeline:
    def test_output_tree(self, finished_run):
        files = set(_tree(finished_run))
        cell_files = {
            "exclusions.json",
            "provenance.csv",
            "labels.csv",
            "network.json",
            "network.graphml",
            "network.dot",
            "metrics.json",
            "nulltests.json",
            "cc_distribution.txt",
            "cc_distribution.json",
        }
        frames = {f"frames/{cue}.{ext}" for cue in DEFAULT_CUES for ext in ("json", "dot")}
        expected = {MANIFEST_NAME, "summary.md"} | {f"{CELL}/{name}" for name in cell_files | frames}
        assert files == expected

    def test_reports(self, finished_run):
        cell = finished_run / CELL
        assert len((cell / "cc_distribution.txt").read_text(encoding="utf-8").splitlines()) == 20
        metrics = json.loads((cell / "metrics.json").read_text(encoding="utf-8"))
        assert list(metrics)[:4] == ["aspl", "diameter", "mean_cc", "modularity"]
        nulltests = json.loads((cell / "nulltests.json").read_text(encoding="utf-8"))
        assert set(nulltests) == {"aspl", "diameter", "mean_cc", "modularity"}
        assert nulltests["mean_cc"]["empirical"] == metrics["mean_cc"]
        assert all(0 < r["p_value"] <= 1 for r in nulltests.values())

        manifest = json.loads((finished_run / MANIFEST_NAME).read_text(encoding="utf-8"))
        assert manifest["config"]["null"] == {"n_samples": 20, "seed": 42, "swap_factor": 5}
        assert len(manifest["inputs"]) == 1 and len(manifest["inputs"][0]["sha256"]) == 64
        assert "timings" not in manifest
        counts = manifest["cells"][0]["counts"]
        assert (counts["parsed"], counts["excluded"], counts["kept"]) == (12, 0, 12)
        with open(cell / "labels.csv", newline="", encoding="utf-8") as f:
            assert counts["words"] == sum(1 for _ in csv.DictReader(f))

        frame = json.loads((cell / "frames" / "art.json").read_text(encoding="utf-8"))
        assert frame["cue"] == "art"
        assert all(e["source"] == "art" for e in frame["edges"])
        assert frame["profile"]["n_neighbors"] == len(frame["edges"])

        summary = (finished_run / "summary.md").read_text(encoding="utf-8")
        assert "| Human Trainee | 12 | 0 | 12 |" in summary

    def test_provenance_accounts_for_every_slot(self, finished_run):
        with open(finished_run / CELL / "provenance.csv", newline="", encoding="utf-8") as f:
            rows = list(csv.DictReader(f))
        reasons = {(r["participant_id"], r["raw"]): r["reason"] for r in rows}
        assert reasons[("p04", "3d")] == NON_LETTER
        assert reasons[("p02", "zeppelin")] == IDIOSYNCRATIC
        assert sum(1 for r in rows if r["stage"] == "0") == 12 * 30

    def test_deterministic_across_workers(self, tmp_path, cohort_csv):
        one = Pipeline(_config(cohort_csv, tmp_path / "one", workers=1)).run()
        two = Pipeline(_config(cohort_csv, tmp_path / "two", workers=2)).run()
        assert _tree(one) == _tree(two)

    def test_blank_ratings_give_neutral_labels(self, tmp_path, blank_ratings_csv):
        out = Pipeline(_config(blank_ratings_csv, tmp_path / "labels")).run(until="label")
        with open(out / CELL / "labels.csv", newline="", encoding="utf-8") as f:
            labels = list(csv.DictReader(f))
        assert labels and {row["label"] for row in labels} == {"neutral"}
        assert not (out / "summary.md").exists()
        assert not (out / CELL / "network.json").exists()

    def test_ingest_stage_only(self, tmp_path, cohort_csv):
        out = Pipeline(_config(cohort_csv, tmp_path / "ingest")).run(until="ingest")
        assert set(_tree(out)) == {MANIFEST_NAME, f"{CELL}/exclusions.json"}
        exclusions = json.loads((out / CELL / "exclusions.json").read_text(encoding="utf-8"))
        assert len(exclusions["kept"]) == 12 and exclusions["dropped"] == []

    def test_failure_leaves_no_output(self, tmp_path, cohort_csv):
        out = tmp_path / "failed"
        with pytest.raises(EmptyCohort):
            Pipeline(_config(cohort_csv, out, min_participants=100)).run()
        assert not out.exists()
        assert list(tmp_path.glob(".failed.*")) == []

    def test_rerun_replaces_previous_run(self, tmp_path, cohort_csv):
        out = tmp_path / "run"
        Pipeline(_config(cohort_csv, out)).run(until="ingest")
        Pipeline(_config(cohort_csv, out)).run(until="label")
        assert (out / CELL / "labels.csv").exists()

    def test_refuses_foreign_directory(self, tmp_path, cohort_csv):
        out = tmp_path / "notes"
        out.mkdir()
        (out / "todo.txt").write_text("keep me", encoding="utf-8")
        with pytest.raises(ValidationError):
            Pipeline(_config(cohort_csv, out)).run()
        assert (out / "todo.txt").read_text(encoding="utf-8") == "keep me"

    def test_requires_inputs(self, tmp_path):
        with pytest.raises(ValidationError):
            Pipeline(load_config(overrides={"output_dir": str(tmp_path / "x")})).run()

    def test_unknown_stage(self, tmp_path, cohort_csv):
        with pytest.raises(ValueError):
            Pipeline(_config(cohort_csv, tmp_path / "x")).run(until="export")


def test_split_cells_selectors(cohort_records):
    assert list(split_cells(cohort_records)) == [(Source.HUMAN, Group.TRAINEE)]
    assert split_cells(cohort_records, groups=[Group.EXPERT]) == {}


# ---------------------------
# Command line
# ---------------------------

class TestCli:
    def test_pipeline_and_network_commands(self, tmp_path, cohort_csv, capsys):
        out = tmp_path / "cli"
        code = main(
            [
                "pipeline",
                "--input", str(cohort_csv),
                "--output-dir", str(out),
                "--n-samples", "5",
                "--seed", "3",
                "--community-restarts", "2",
            ]
        )
        assert code == 0
        assert capsys.readouterr().out.strip() == str(out)
        network = out / CELL / "network.json"

        frame_path = tmp_path / "art.dot"
        assert main(["frames", str(network), "--cue", "Art", "--format", "dot", "--out", str(frame_path)]) == 0
        assert frame_path.read_text(encoding="utf-8").startswith('digraph "art" {')

        assert main(["frames", str(network), "--cue", "beauty"]) == 2
        assert json.loads(capsys.readouterr().err.strip().splitlines()[-1])["error"]["code"] == "not_a_cue"

        assert main(["metrics", str(network), "--seed", "3", "--community-restarts", "2"]) == 0
        metrics = json.loads(capsys.readouterr().out)
        assert metrics == json.loads((out / CELL / "metrics.json").read_text(encoding="utf-8"))

        dist = tmp_path / "cc.txt"
        code = main(
            ["nulltest", str(network), "--n-samples", "3", "--null-metrics", "mean_cc", "--distribution", str(dist)]
        )
        assert code == 0
        printed = capsys.readouterr().out
        assert json.loads(printed[: printed.rindex("}") + 1])["mean_cc"]["n_samples"] == 3
        assert len(dist.read_text(encoding="utf-8").splitlines()) == 3

    def test_compare(self, finished_run, tmp_path, capsys):
        report = finished_run / CELL / "nulltests.json"
        assert main(["compare", str(report), str(report), "--labels", "human", "simulated"]) == 0
        text = capsys.readouterr().out
        assert text.splitlines()[0].startswith("Metric")
        assert "simulated empirical" in text

        assert main(["compare", str(report), str(report), "--json"]) == 0
        comparison = json.loads(capsys.readouterr().out)
        assert comparison["labels"] == ["nulltests (a)", "nulltests (b)"]
        assert {row["difference"] for row in comparison["rows"]} == {0.0}

        other = tmp_path / "other.json"
        other.write_text(json.dumps({"assortativity": 0.1}), encoding="utf-8")
        assert main(["compare", str(report), str(other)]) == 2
        assert "metric_mismatch" in capsys.readouterr().err

    def test_missing_network(self, tmp_path, capsys):
        assert main(["metrics", str(tmp_path / "absent.json")]) == 2
        assert "input_not_found" in capsys.readouterr().err

    def test_invalid_flag_value(self, tmp_path, cohort_csv, capsys):
        assert main(["pipeline", "--input", str(cohort_csv), "--output-dir", str(tmp_path / "x"), "--alpha", "2"]) == 2
        assert "config_error" in capsys.readouterr().err

    def test_ingest_command(self, tmp_path, cohort_csv):
        out = tmp_path / "ingest"
        assert main(["ingest", "--input", str(cohort_csv), "--output-dir", str(out)]) == 0
        assert (out / CELL / "exclusions.json").exists()

    def test_prompt(self, capsys):
        assert main(["prompt", "--group", "expert", "--cues", "art,life"]) == 0
        text = capsys.readouterr().out
        assert ANSWER_LINE in text
        assert "'art', 'life'" in text

    def test_prompt_for_every_group(self, capsys):
        assert main(["prompt", "--cues", "art,life"]) == 0
        text = capsys.readouterr().out
        headers = [line for line in text.splitlines() if line.startswith("# ")]
        assert headers == ["# trainee", "# expert", "# academic"]
        assert text.count(ANSWER_LINE) == 3
