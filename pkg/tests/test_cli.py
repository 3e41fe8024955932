import json
import os

import pytest

from homgibbs.cli import experiments, store
from homgibbs.cli.main import EXIT_MISMATCH, EXIT_OK, EXIT_USAGE, start_cli
from homgibbs.utils.config import log, set_quiet


def _response(capsys):
    return json.loads(capsys.readouterr().out.strip().splitlines()[-1])


def _read(out_dir, name):
    with open(os.path.join(out_dir, name), 'r', encoding='utf-8') as f:
        return json.load(f)


def test_list(capsys):
    assert start_cli(['list', '--quiet']) == EXIT_OK
    data = _response(capsys)["data"]
    assert 'hinge-activities' in data["experiments"]
    assert 'hinge-symmetric' in data["families"]


def test_classify_writes_report_and_manifest(capsys, out_dir):
    assert start_cli(['classify', 'hinge', '--out', out_dir, '--quiet']) == EXIT_OK
    assert _response(capsys)["status"] == "success"
    report = _read(out_dir, 'classify.json')
    assert report["dismantlable"] and report["cop_win"] and report["fertile"]
    manifest = _read(out_dir, 'manifest.json')
    assert set(manifest["outputs"]) == {'classify.json', 'graph.dot'}
    assert manifest["inputs_sha256"] == store.sha256_hex(store.canonical_json(manifest["config"]))


def test_manifest_is_reproducible(out_dir):
    args = ['classify', 'K3', '--out', out_dir, '--quiet']
    assert start_cli(args) == EXIT_OK
    with open(os.path.join(out_dir, 'manifest.json'), 'rb') as f:
        first = f.read()
    assert start_cli(args) == EXIT_OK
    with open(os.path.join(out_dir, 'manifest.json'), 'rb') as f:
        assert f.read() == first


def test_solve_hinge(out_dir):
    args = ['solve', 'hinge', '--r', '2', '--lambda', '49,18,49', '--starts', '60',
            '--threads', '1', '--out', out_dir, '--quiet']
    assert start_cli(args) == EXIT_OK
    data = _read(out_dir, 'solutions.json')
    assert data["counts"]["invariant"] >= 3
    assert _read(out_dir, 'manifest.json')["seed"] == 0


@pytest.mark.parametrize("args, field", [
    (['solve', 'hinge', '--r', '2', '--lambda', '1,2'], 'lambda'),
    (['solve', 'hinge', '--r', '2', '--lambda', '1,-2,3'], 'lambda[1]'),
    (['solve', 'Q7', '--r', '2', '--lambda', '1,1,1'], 'graph'),
    (['solve', 'hinge', '--r', '0', '--lambda', '1,1,1'], 'r'),
    (['homspace', '--board', 'grid_box:x', '--graph', 'K3'], 'board'),
    (['sample', 'hinge', '--r', '2', '--weights', '1,0,1'], 'weights[1]'),
    (['reproduce', 'no-such-experiment'], 'experiment'),
])
def test_config_errors_name_the_field(capsys, args, field):
    assert start_cli(args + ['--quiet']) == EXIT_USAGE
    response = _response(capsys)
    assert response["status"] == "error"
    assert response["field"] == field


def test_usage_error():
    assert start_cli(['solve', 'hinge']) == EXIT_USAGE


def test_homspace_counts_isolated_colorings(out_dir):
    args = ['homspace', '--board', 'cycle:3', '--graph', 'K3', '--lambda', '1,1,1', '--out', out_dir, '--quiet']
    assert start_cli(args) == EXIT_OK
    data = _read(out_dir, 'homspace.json')
    assert data["count"] == 6
    assert data["isolated"] == 6
    assert data["gibbs_check"]["max_violation"] == 0


def test_sample_hinge(out_dir):
    args = ['sample', 'hinge', '--r', '2', '--weights', '4,2,1', '--depth', '3', '--out', out_dir, '--quiet']
    assert start_cli(args) == EXIT_OK
    data = _read(out_dir, 'sample.json')
    assert data["activities_integer"] == [49, 18, 49]
    assert data["stationary"][0] == "24/41"
    assert os.path.exists(os.path.join(out_dir, 'sample.dot'))


def test_frozen_coloring_command(out_dir):
    assert start_cli(['frozen', '--r', '2', '--depth', '3', '--out', out_dir, '--quiet']) == EXIT_OK
    data = _read(out_dir, 'frozen.json')
    assert data["extensions_of_boundary"] == 1
    assert data["interior_forced"]


def test_lra_command(out_dir):
    assert start_cli(['lra', 'K3', '--r', '2', '--depth', '4', '--out', out_dir, '--quiet']) == EXIT_OK
    assert _read(out_dir, 'lra.json')["long_range_action"]


def test_mcmc_run_writes_series_and_image(out_dir):
    args = ['mcmc', 'run', '--board', 'grid_box:3,2', '--graph', 'hard_core', '--lambda', '2,1',
            '--sweeps', '50', '--init', 'even', '--render', out_dir, '--out', out_dir,
            '--seed', '1', '--quiet']
    assert start_cli(args) == EXIT_OK
    with open(os.path.join(out_dir, 'series.csv'), 'r', encoding='utf-8') as f:
        lines = f.read().splitlines()
    assert lines[0].startswith('sweep,occupied,even,odd')
    assert len(lines) == 51
    manifest = _read(out_dir, 'manifest.json')
    assert 'replica_0.png' in manifest["outputs"]
    assert manifest["seed"] == 1


def test_reproduce_single_bundle(out_dir):
    assert start_cli(['reproduce', 'hinge-activities', '--out', out_dir, '--quiet']) == EXIT_OK
    assert _read(out_dir, 'hinge-activities.json')["passed"]


def test_reproduce_reports_mismatch(monkeypatch, out_dir):
    def broken(fast=False, seed=0, threads=1):
        return experiments._result('hinge-activities', False, 1, 2)

    monkeypatch.setitem(experiments.BUNDLES, 'hinge-activities', broken)
    assert start_cli(['reproduce', 'hinge-activities', '--out', out_dir, '--quiet']) == EXIT_MISMATCH


@pytest.mark.parametrize("bundle_id", [
    'hinge-activities', 'conditional-symmetry', 'stationary-fractions', 'dichotomy',
    'weak-square-isolation', 'frozen-rigidity', 'scaling-gauge', 'detailed-balance',
    'coloring-threshold',
    pytest.param('hinge-multiplicity', marks=pytest.mark.slow),
    pytest.param('sterile-uniqueness', marks=pytest.mark.slow),
    pytest.param('r1-uniqueness', marks=pytest.mark.slow),
    pytest.param('hardcore-bimodality', marks=pytest.mark.slow),
])
def test_fast_bundles_pass(bundle_id):
    result = experiments.run_bundle(bundle_id, fast=True)
    assert result["id"] == bundle_id
    assert result["passed"], result["observed"]


def test_bundle_errors_are_reported(monkeypatch):
    def explode(fast=False, seed=0, threads=1):
        raise RuntimeError("boom")

    monkeypatch.setitem(experiments.BUNDLES, 'dichotomy', explode)
    results = experiments.run_bundles(['hinge-activities', 'dichotomy'], fast=True, threads=2)
    assert [r["id"] for r in results] == ['hinge-activities', 'dichotomy']
    assert results[0]["passed"]
    assert not results[1]["passed"]


def test_bundles_share_the_thread_budget(monkeypatch):
    seen = []

    def record(fast=False, seed=0, threads=1):
        seen.append(threads)
        return experiments._result('dichotomy', True, None, threads)

    monkeypatch.setitem(experiments.BUNDLES, 'dichotomy', record)
    experiments.run_bundles(['dichotomy'], threads=3)
    assert seen == [3]
    seen.clear()
    experiments.run_bundles(['dichotomy', 'dichotomy'], threads=4)
    assert seen == [2, 2]


def test_homspace_marginals(out_dir):
    args = ['homspace', '--board', 'path:2', '--graph', 'hard_core', '--lambda', '1,1',
            '--report', 'marginals', '--out', out_dir, '--quiet']
    assert start_cli(args) == EXIT_OK
    data = _read(out_dir, 'homspace.json')
    assert data["count"] == 3
    assert "components" not in data
    assert data["marginals"][0] == pytest.approx([1 / 3, 2 / 3])
    assert data["marginals"][1] == pytest.approx([1 / 3, 2 / 3])
    with open(os.path.join(out_dir, 'marginals.csv'), 'r', encoding='utf-8') as f:
        assert len(f.read().splitlines()) == 3
    assert 'marginals.csv' in _read(out_dir, 'manifest.json')["outputs"]


@pytest.mark.parametrize("args, field", [
    (['homspace', '--board', 'path:2', '--graph', 'hard_core', '--report', 'marginals'], 'lambda'),
    (['homspace', '--board', 'path:2', '--graph', 'hard_core', '--report', 'entropy'], 'report'),
])
def test_homspace_report_errors(capsys, args, field):
    assert start_cli(args + ['--quiet']) == EXIT_USAGE
    assert _response(capsys)["field"] == field


def test_stdout_carries_only_the_response(capsys, out_dir):
    try:
        args = ['solve', 'hard_core', '--r', '2', '--lambda', '1,1', '--starts', '10',
                '--threads', '1', '--out', out_dir]
        assert start_cli(args) == EXIT_OK
        captured = capsys.readouterr()
    finally:
        set_quiet(True)
    lines = captured.out.strip().splitlines()
    assert len(lines) == 1
    assert json.loads(lines[0])["status"] == "success"


def test_log_goes_to_stderr(capsys):
    set_quiet(False)
    try:
        log("状态")
    finally:
        set_quiet(True)
    captured = capsys.readouterr()
    assert captured.out == ""
    assert "状态" in captured.err
