from collections import Counter

import numpy as np
import pytest
from PIL import Image

from homgibbs import graphs, homspace, mcmc
from homgibbs.utils import render as render_utils
from homgibbs.utils.errors import ConfigError, GraphError, InfeasibleError


@pytest.fixture
def box():
    return graphs.grid_box(3, 2)


def test_single_site_occupation(hard_core):
    stats = mcmc.run(graphs.path_board(1), hard_core, (1.0, 1.0), sweeps=20000, seed=4, burn_in=0)
    assert stats.updates == 20000
    assert abs(stats.occupied_series().mean() - 0.5) < 0.02


def test_fast_path_matches_general_kernel(box, hard_core):
    fast = mcmc.run(box, hard_core, (2.0, 1.0), init='even', sweeps=300, seed=11, fast_path=True)
    slow = mcmc.run(box, hard_core, (2.0, 1.0), init='even', sweeps=300, seed=11, fast_path=False)
    assert np.array_equal(fast.final_spins, slow.final_spins)
    assert np.array_equal(fast.counts, slow.counts)


def test_runs_are_reproducible(box, hinge):
    a = mcmc.run(box, hinge, (2.0, 1.0, 2.0), sweeps=200, seed=7)
    b = mcmc.run(box, hinge, (2.0, 1.0, 2.0), sweeps=200, seed=7)
    c = mcmc.run(box, hinge, (2.0, 1.0, 2.0), sweeps=200, seed=8)
    assert np.array_equal(a.counts, b.counts)
    assert not np.array_equal(a.counts, c.counts)


def test_chunking_does_not_change_the_trajectory(monkeypatch, box, hard_core):
    whole = mcmc.run(box, hard_core, (3.0, 1.0), sweeps=50, seed=2)
    monkeypatch.setattr(mcmc, 'MAX_BLOCK', 2 * box.n_sites * 3)
    pieces = mcmc.run(box, hard_core, (3.0, 1.0), sweeps=50, seed=2)
    assert np.array_equal(whole.counts, pieces.counts)


def test_replicas_independent_of_thread_count(box, hard_core):
    one = mcmc.run_replicas(box, hard_core, (1.0, 1.0), sweeps=100, seed=5, replicas=4, threads=1)
    many = mcmc.run_replicas(box, hard_core, (1.0, 1.0), sweeps=100, seed=5, replicas=4, threads=3)
    for a, b in zip(one, many):
        assert a.stream == b.stream
        assert np.array_equal(a.final_spins, b.final_spins)


@pytest.mark.parametrize("h, lam", [
    (graphs.hinge(), (3.0, 1.0, 0.5)),
    (graphs.complete(3), (1.0, 2.0, 1.0)),
    (graphs.complete(4), (1.0, 1.0, 1.0, 1.0)),
])
def test_chain_stays_on_homomorphisms(h, lam):
    board = graphs.cycle_board(10)
    stats = mcmc.run(board, h, lam, sweeps=200, seed=1)
    assert homspace.is_homomorphism(board, h, stats.final_spins)


def test_debug_check_every(monkeypatch, box, hinge):
    monkeypatch.setitem(mcmc.MCMC_CONFIG, 'debug_check_every', 10)
    stats = mcmc.run(box, hinge, (1.0, 1.0, 1.0), sweeps=40, seed=0)
    assert stats.sweeps == 40


def test_pinned_sites_do_not_move(box, hard_core):
    pinned = mcmc.pin_boundary(box, parity=0)
    stats = mcmc.run(box, hard_core, (4.0, 1.0), sweeps=100, seed=3, pinned=pinned)
    for u, s in pinned.items():
        assert stats.final_spins[u] == s
    assert stats.updates == 100 * (box.n_sites - len(pinned))


def test_single_step_updates_a_free_site(box, hard_core):
    state = mcmc.new_chain(box, hard_core, (1.0, 1.0), init='even', seed=0)
    mcmc.step(state)
    assert state.steps_done == 1
    assert mcmc.check_valid(state)


# ----------------- 初始构型 -----------------

def test_sublattice_init(box, hard_core):
    spins = mcmc.init_sublattice(box, hard_core, parity=0)
    par = box.parity()
    assert np.all(spins[par == 0] == 0)
    assert np.all(spins[par == 1] == 1)


def test_constant_init_uses_looped_node(box, hinge, hard_core):
    assert np.all(mcmc.init_constant(box, hard_core) == 1)
    assert np.all(mcmc.init_constant(box, hinge, graphs.RED) == graphs.RED)
    with pytest.raises(InfeasibleError):
        mcmc.init_constant(box, graphs.complete(3))


def test_greedy_init_fails_without_homomorphisms():
    with pytest.raises(InfeasibleError):
        mcmc.init_greedy(graphs.cycle_board(5), graphs.complete(2), attempts=5)


def test_init_from_file(tmp_path, box, hard_core):
    path = tmp_path / "init.json"
    spins = mcmc.init_sublattice(box, hard_core, parity=1)
    path.write_text('{"spins": %s}' % spins.tolist())
    loaded = mcmc.resolve_init(box, hard_core, str(path))
    assert np.array_equal(loaded, spins)


def test_init_length_checked(box, hard_core):
    with pytest.raises(GraphError):
        mcmc.resolve_init(box, hard_core, [1, 1, 1])


def test_lambda_must_match_graph(box, hard_core):
    with pytest.raises(GraphError):
        mcmc.run(box, hard_core, (1.0, 1.0, 1.0), sweeps=1)
    with pytest.raises(GraphError):
        mcmc.run(box, hard_core, (0.0, 1.0), sweeps=1)


# ----------------- 统计量 -----------------

def test_parity_statistic_starts_at_full_sublattice(box, hard_core):
    stats = mcmc.run(box, hard_core, (50.0, 1.0), init='even', sweeps=1, seed=0)
    rho = mcmc.parity_statistic(stats)
    assert rho[0] > 0.8


def test_parity_statistic_needs_bipartite_board(hard_core):
    stats = mcmc.run(graphs.complete_board(3), hard_core, (1.0, 1.0), sweeps=5, seed=0)
    assert not stats.bipartite
    with pytest.raises(GraphError):
        mcmc.parity_statistic(stats)


def test_bimodality_averages_the_late_sweeps(box, hard_core):
    runs = mcmc.run_replicas(box, hard_core, (1.0, 1.0), init='even', sweeps=50, seed=3, replicas=4)
    report = mcmc.bimodality_report(runs)
    assert report["statistic"] == 'late_mean'
    for stats, value in zip(runs, report["rho"]):
        rho = mcmc.parity_statistic(stats)
        k = max(1, int(0.1 * len(rho)))
        assert value == pytest.approx(np.mean(rho[-k:]))
    final = mcmc.bimodality_report(runs, statistic='final')
    assert final["rho"] == [float(mcmc.parity_statistic(s)[-1]) for s in runs]


def test_bimodality_statistic_checked(box, hard_core):
    runs = mcmc.run_replicas(box, hard_core, (1.0, 1.0), sweeps=5, seed=0, replicas=2)
    with pytest.raises(ConfigError):
        mcmc.bimodality_report(runs, statistic='median')


def test_autocorrelation_time():
    assert mcmc.autocorrelation_time(np.ones(100)) == 1.0
    noise = np.random.default_rng(0).normal(size=5000)
    assert 0.5 <= mcmc.autocorrelation_time(noise) < 1.5
    walk = np.cumsum(np.random.default_rng(1).normal(size=5000))
    assert mcmc.autocorrelation_time(walk) > 10


def test_encode_state():
    assert mcmc.encode_state([1, 0, 1], 2) == 5
    assert mcmc.encode_state([2, 1], 3) == 7


def test_chi_square_rejects_impossible_states():
    report = mcmc.chi_square_check(Counter({0: 5, 9: 1}), {0: 1.0})
    assert report["p_value"] == 0.0
    assert report["stray"] == 1


def test_state_histogram_needs_codes(box, hard_core):
    stats = mcmc.run(box, hard_core, (1.0, 1.0), sweeps=5, seed=0)
    with pytest.raises(GraphError):
        mcmc.state_histogram(stats)


def test_chain_matches_exact_measure_on_an_edge(hard_core):
    report = mcmc.exactness_check(graphs.complete_board(2), hard_core, (2, 1), sweeps=2 * 10**5, seed=0)
    assert report["states"] == 3
    assert report["stray"] == 0
    assert report["p_value"] > 0.001


@pytest.mark.slow
def test_chain_matches_exact_measure_on_a_path(hinge):
    report = mcmc.exactness_check(graphs.path_board(3), hinge, (2, 1, 3), sweeps=5 * 10**5, seed=1)
    assert report["states"] == 17
    assert report["p_value"] > 0.001


def test_boundary_influence_on_smallest_box():
    rows = mcmc.boundary_influence_decay([1], 5.0)
    row = rows[0]
    assert row["method"] == 'exact'
    assert row["p_even"] == pytest.approx(5 / 6)
    assert row["p_odd"] == 0.0
    assert row["influence"] == pytest.approx(5 / 6)


@pytest.mark.slow
def test_hard_core_bimodality_low_and_high():
    board = graphs.grid_box(10, 2)
    low = mcmc.hard_core_bimodality(board, 0.5, replicas=30, sweeps=500, seed=0, threads=2)
    high = mcmc.hard_core_bimodality(board, 8.0, replicas=30, sweeps=500, seed=0, threads=2)
    assert low["n_runs"] == 30
    assert low["dip_fraction"] >= 0.6
    assert high["dip_fraction"] <= 0.2


@pytest.mark.slow
def test_widom_rowlinson_dominance():
    report = mcmc.wr_dominance(graphs.grid_box(5, 2), [0.2, 12.0], replicas=8, sweeps=400, seed=0, threads=2)
    low, high = report["rows"]
    assert low["mean_abs"] < 0.5
    assert high["polarized_fraction"] >= 0.75
    assert report["onset_window"] == [0.2, 12.0]


# ----------------- 绘图 -----------------

def test_render_checkerboard(tmp_path, hard_core):
    board = graphs.grid_box(2, 2)
    spins = mcmc.init_sublattice(board, hard_core, parity=0)
    path = str(tmp_path / "even.png")
    ok, _ = mcmc.render(board, hard_core, spins, path, block=1)
    assert ok
    with Image.open(path) as image:
        assert image.size == (5, 5)
        rgb = image.convert('RGB')
        assert rgb.getpixel((0, 0)) == render_utils.EVEN_COLOR
        assert rgb.getpixel((1, 0)) == render_utils.BACKGROUND


def test_render_hides_blank_spins(tmp_path, hinge):
    board = graphs.grid_box(1, 2)
    spins = mcmc.init_constant(board, hinge, graphs.YELLOW)
    image = render_utils.config_image(board, hinge, spins, block=2, blank=[graphs.YELLOW])
    assert image.size == (6, 6)
    assert image.getpixel((0, 0)) == render_utils.BACKGROUND


def test_render_rejects_unknown_format(tmp_path, hard_core):
    board = graphs.grid_box(1, 2)
    spins = mcmc.init_constant(board, hard_core)
    ok, msg = mcmc.render(board, hard_core, spins, str(tmp_path / "x.gif"))
    assert not ok


def test_render_needs_grid(hard_core):
    with pytest.raises(ValueError):
        render_utils.config_image(graphs.path_board(3), hard_core, [1, 1, 1])
