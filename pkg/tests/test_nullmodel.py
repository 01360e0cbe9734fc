import json
import time

import networkx as nx
import pytest
from scipy import stats

from formamentis.errors import TooFewEdges
from formamentis.metrics import mean_clustering
from formamentis.nullmodel import (
    METRICS,
    NullEnsembleSpec,
    NullTestReport,
    clustering_distribution,
    empirical_p_value,
    ensemble_table,
    ensemble_values,
    null_ensemble,
    null_reports,
    null_test,
    null_test_all,
    randomize_degree_preserving,
    report_from_values,
    resolve_metric,
    write_distribution,
)


def constant_metric(g):
    return 0.25


def _assert_degree_preserving(original, randomized):
    assert dict(randomized.degree) == dict(original.degree)
    assert randomized.number_of_edges() == original.number_of_edges()
    assert nx.number_of_selfloops(randomized) == 0
    assert not randomized.is_multigraph()


class TestRandomize:
    def test_preserves_degrees(self):
        g = nx.gnm_random_graph(100, 250, seed=1)
        for seed in range(30):
            _assert_degree_preserving(g, randomize_degree_preserving(g, seed))

    @pytest.mark.slow
    def test_preserves_degrees_many_replicates(self):
        g = nx.gnm_random_graph(100, 250, seed=1)
        for seed in range(500):
            _assert_degree_preserving(g, randomize_degree_preserving(g, seed))

    def test_input_untouched(self):
        g = nx.gnm_random_graph(30, 60, seed=2)
        edges = sorted(g.edges)
        randomize_degree_preserving(g, 0)
        assert sorted(g.edges) == edges

    def test_randomizes(self):
        g = nx.gnm_random_graph(30, 60, seed=2)
        assert set(randomize_degree_preserving(g, 0).edges) != set(g.edges)

    def test_too_few_edges(self):
        with pytest.raises(TooFewEdges):
            randomize_degree_preserving(nx.path_graph(2), 0)

    def test_complete_graph_is_rigid(self):
        g = nx.complete_graph(5)
        assert set(randomize_degree_preserving(g, 0).edges) == set(g.edges)

    def test_triangle_plus_edge_can_become_a_path(self):
        g = nx.Graph([(0, 1), (1, 2), (0, 2), (3, 4)])
        shapes = set()
        for seed in range(20):
            replicate = randomize_degree_preserving(g, seed)
            _assert_degree_preserving(g, replicate)
            shapes.add(sum(nx.triangles(replicate).values()) > 0)
        # the degree sequence admits both a triangle plus an edge and a 5-path
        assert False in shapes

    def test_four_cycle_stays_a_four_cycle(self):
        g = nx.cycle_graph(4)
        for seed in range(10):
            assert nx.is_isomorphic(randomize_degree_preserving(g, seed), g)

    def test_keeps_node_order_and_attributes(self):
        g = nx.gnm_random_graph(12, 20, seed=5)
        nx.set_node_attributes(g, "grey", "color")
        replicate = randomize_degree_preserving(g, 1)
        assert list(replicate.nodes) == list(g.nodes)
        assert dict(replicate.nodes(data="color")) == dict(g.nodes(data="color"))

    def test_same_seed_same_replicate(self):
        g = nx.gnm_random_graph(40, 90, seed=8)
        assert sorted(randomize_degree_preserving(g, 11).edges) == sorted(randomize_degree_preserving(g, 11).edges)


class TestEnsemble:
    def test_spec_validation(self):
        with pytest.raises(ValueError):
            NullEnsembleSpec(n_samples=0)
        with pytest.raises(ValueError):
            NullEnsembleSpec(swap_factor=0)

    def test_workers_do_not_change_values(self):
        g = nx.gnm_random_graph(30, 70, seed=3)
        spec = NullEnsembleSpec(n_samples=8, seed=42, swap_factor=5)
        assert ensemble_values(g, mean_clustering, spec, workers=1) == ensemble_values(g, mean_clustering, spec, workers=2)

    def test_seed_changes_values(self):
        g = nx.gnm_random_graph(30, 70, seed=3)
        a = ensemble_values(g, mean_clustering, NullEnsembleSpec(n_samples=5, seed=1))
        b = ensemble_values(g, mean_clustering, NullEnsembleSpec(n_samples=5, seed=2))
        assert a != b

    def test_too_few_edges(self):
        with pytest.raises(TooFewEdges):
            ensemble_values(nx.path_graph(2), mean_clustering, NullEnsembleSpec(n_samples=3))

    def test_constant_metric_has_p_one(self):
        g = nx.gnm_random_graph(20, 40, seed=4)
        report = null_test(g, constant_metric, NullEnsembleSpec(n_samples=10))
        assert report.p_value == 1.0
        assert report.ensemble_sd == 0.0
        assert report.metric_name == "constant_metric"

    def test_table_matches_single_metric_ensembles(self):
        g = nx.gnm_random_graph(30, 70, seed=3)
        spec = NullEnsembleSpec(n_samples=6, seed=9, swap_factor=5)
        table = ensemble_table(g, {"mean_cc": mean_clustering, "aspl": METRICS["aspl"]}, spec)
        assert list(table) == ["mean_cc", "aspl"]
        assert table["mean_cc"] == ensemble_values(g, mean_clustering, spec)
        assert table["aspl"] == ensemble_values(g, METRICS["aspl"], spec)

    def test_each_replicate_randomized_once(self, monkeypatch):
        import formamentis.nullmodel as nullmodel

        calls = []
        original = nullmodel.randomize_degree_preserving

        def counting(g, seed, swap_factor=10):
            calls.append(seed)
            return original(g, seed, swap_factor)

        monkeypatch.setattr(nullmodel, "randomize_degree_preserving", counting)
        g = nx.gnm_random_graph(25, 60, seed=6)
        reports = null_test_all(g, NullEnsembleSpec(n_samples=6, seed=3), restarts=2)
        assert len(reports) == 4
        assert len(calls) == 6

    def test_null_reports_use_table_columns(self):
        g = nx.gnm_random_graph(25, 60, seed=6)
        spec = NullEnsembleSpec(n_samples=5, seed=2)
        table = null_ensemble(g, spec, ["mean_cc", "diameter"])
        reports = null_reports(g, table, spec.seed)
        assert reports["mean_cc"] == report_from_values("mean_cc", mean_clustering(g), table["mean_cc"])
        assert reports["diameter"].n_samples == 5


class TestClusteringDistribution:
    def test_complete_graph_is_all_ones(self):
        values = clustering_distribution(nx.complete_graph(5), NullEnsembleSpec(n_samples=20, seed=1))
        assert values == [1.0] * 20

    def test_bridge_graph_varies(self):
        g = nx.disjoint_union(nx.complete_graph(5), nx.complete_graph(5))
        g.add_edge(0, 5)
        values = clustering_distribution(g, NullEnsembleSpec(n_samples=30, seed=1))
        assert len(values) == 30
        assert report_from_values("mean_cc", mean_clustering(g), values).ensemble_sd > 0


@pytest.mark.slow
def test_ensemble_runtime_budget():
    g = nx.gnm_random_graph(300, 600, seed=0)
    start = time.perf_counter()
    values = ensemble_values(g, mean_clustering, NullEnsembleSpec(n_samples=500, seed=0))
    elapsed = time.perf_counter() - start
    assert len(values) == 500
    assert elapsed < 10


class TestPValue:
    def test_upper_tail(self):
        assert empirical_p_value(0.2, [0.1, 0.2, 0.3]) == pytest.approx(0.75)

    def test_bounds_and_monotone(self):
        values = [0.1, 0.4, 0.4, 0.7, 0.9]
        ps = [empirical_p_value(x, values) for x in (0.0, 0.4, 0.5, 0.95)]
        assert ps == sorted(ps, reverse=True)
        assert ps[0] == 1.0
        assert ps[-1] == pytest.approx(1 / 6)

    def test_report_summary(self):
        report = report_from_values("x", 0.5, [1.0, 2.0, 3.0])
        assert report.ensemble_mean == pytest.approx(2.0)
        assert report.ensemble_sd == pytest.approx(1.0)
        assert report.p_value == 1.0
        assert NullTestReport.from_dict(report.to_dict()) == report


def test_null_test_all():
    g = nx.gnm_random_graph(25, 60, seed=6)
    reports = null_test_all(g, NullEnsembleSpec(n_samples=6, seed=3), restarts=2)
    assert list(reports) == list(METRICS)
    for name, report in reports.items():
        assert report.metric_name == name
        assert report.n_samples == 6
        assert 1 / 7 <= report.p_value <= 1.0


def test_resolve_metric():
    with pytest.raises(ValueError):
        resolve_metric("assortativity")
    g = nx.gnm_random_graph(20, 40, seed=7)
    assert resolve_metric("modularity", seed=4, restarts=2)(g) == resolve_metric("modularity", seed=4, restarts=2)(g)
    assert resolve_metric("mean_cc") is mean_clustering


def test_write_distribution(tmp_path):
    path, sidecar = write_distribution([0.125, 0.5, 0.25], 0.3, tmp_path / "cc_distribution.txt")
    assert path.read_text(encoding="utf-8") == "0.125\n0.5\n0.25\n"
    meta = json.loads(sidecar.read_text(encoding="utf-8"))
    assert sidecar.name == "cc_distribution.json"
    assert meta["empirical"] == 0.3
    assert meta["p_value"] == pytest.approx(0.5)
    assert meta["n_samples"] == 3
    assert meta["values_file"] == "cc_distribution.txt"


@pytest.mark.slow
def test_p_values_uniform_when_graph_is_itself_random():
    base = nx.gnm_random_graph(24, 60, seed=0)
    p_values = []
    for trial in range(200):
        g = randomize_degree_preserving(base, trial, swap_factor=5)
        spec = NullEnsembleSpec(n_samples=29, seed=1000 + trial, swap_factor=5)
        p_values.append(null_test(g, mean_clustering, spec).p_value)
    assert stats.kstest(p_values, "uniform").statistic < 0.15
