from pathlib import Path

import pytest

from formamentis.config import build_config, env_flag, load_config, merge_configs
from formamentis.errors import ConfigError
from formamentis.models import DEFAULT_CUES, Group, Source


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    for name in ("FMN_SEED", "FMN_WORKERS", "FMN_DEBUG", "FMN_STRICT"):
        monkeypatch.delenv(name, raising=False)


def test_defaults():
    config = load_config()
    assert config.cues == list(DEFAULT_CUES)
    assert config.alpha == 0.1
    assert config.min_participants == 2
    assert config.max_blank_fraction == 0.25
    assert config.blank_rating_policy == "impute"
    assert (config.null.n_samples, config.null.seed, config.null.swap_factor) == (500, 0, 10)
    assert config.null_metrics == ["aspl", "diameter", "mean_cc", "modularity"]
    assert config.graph_formats == ["json", "graphml", "dot"]
    assert config.workers == 1
    assert config.inputs == []


def test_environment_defaults(monkeypatch):
    monkeypatch.setenv("FMN_SEED", "17")
    monkeypatch.setenv("FMN_WORKERS", "3")
    config = load_config()
    assert config.null.seed == 17
    assert config.workers == 3
    # explicit values win over the environment
    assert load_config(overrides={"null": {"seed": 5}, "workers": 2}).null.seed == 5


@pytest.mark.parametrize("value, expected", [("1", True), ("yes", True), ("On", True), ("0", False), ("", False)])
def test_env_flag(monkeypatch, value, expected):
    monkeypatch.setenv("FMN_DEBUG", value)
    assert env_flag("FMN_DEBUG") is expected


def test_yaml_file_merges_over_defaults(tmp_path):
    data_dir = tmp_path / "data"
    data_dir.mkdir()
    path = tmp_path / "study.yaml"
    path.write_text(
        "\n".join(
            [
                "inputs:",
                "  - path: data/cohort.csv",
                "  - path: data/gpt",
                "    format: transcript",
                "    source: simulated",
                "    group: Academic",
                "null:",
                "  n_samples: 50",
                "groups: [trainee, expert]",
                "lemma_map: lemmas.tsv",
                "",
            ]
        ),
        encoding="utf-8",
    )
    config = load_config(path)
    assert config.null.n_samples == 50
    assert config.null.swap_factor == 10
    assert config.inputs[0].path == tmp_path / "data" / "cohort.csv"
    assert config.inputs[0].format == "tabular"
    assert config.inputs[1].group is Group.ACADEMIC
    assert config.inputs[1].source is Source.SIMULATED
    assert config.groups == [Group.TRAINEE, Group.EXPERT]
    assert config.lemma_map == tmp_path / "lemmas.tsv"


def test_flag_overrides_win(tmp_path):
    path = tmp_path / "study.yaml"
    path.write_text("alpha: 0.05\nmin_n: 4\n", encoding="utf-8")
    config = load_config(path, overrides={"alpha": 0.2})
    assert config.alpha == 0.2
    assert config.min_n == 4


@pytest.mark.parametrize(
    "overrides",
    [
        {"alpha": 1.5},
        {"max_blank_fraction": -0.1},
        {"null_metrics": ["assortativity"]},
        {"null": {"n_samples": 0}},
        {"min_participants": 0},
        {"blank_rating_policy": "drop"},
        {"graph_formats": ["svg"]},
        {"groups": ["student"]},
        {"inputs": [{"path": "gpt", "format": "transcript"}]},
        {"inputs": [{"path": "x.csv", "format": "xlsx"}]},
        {"cues": ["art", "Art"]},
        {"alpha": "high"},
    ],
)
def test_invalid_values(overrides):
    with pytest.raises(ConfigError):
        load_config(overrides=overrides)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.yaml")


def test_non_mapping_file(tmp_path):
    path = tmp_path / "list.yaml"
    path.write_text("- a\n- b\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config(path)


def test_merge_configs():
    base = {"null": {"n_samples": 500, "swap_factor": 10}, "cues": ["art", "life"], "alpha": 0.1}
    merged = merge_configs(base, {"null": {"n_samples": 20}, "cues": ["art"]})
    assert merged == {"null": {"n_samples": 20, "swap_factor": 10}, "cues": ["art"], "alpha": 0.1}
    assert base["null"]["n_samples"] == 500


def test_manifest_dict_ignores_placement():
    a = build_config({"output_dir": "a", "workers": 1})
    b = build_config({"output_dir": "b", "workers": 4})
    assert a.manifest_dict() == b.manifest_dict()
    assert "output_dir" not in a.manifest_dict()
    assert "workers" not in a.manifest_dict()
    assert a.output_dir == Path("a")
