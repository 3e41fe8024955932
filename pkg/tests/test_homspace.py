from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from homgibbs import classify, graphs, homspace
from homgibbs.utils.errors import CapExceededError, GraphError, InfeasibleError


@pytest.fixture
def k2_hard_core(hard_core):
    return homspace.enumerate_homs(graphs.complete_board(2), hard_core)


def test_hard_core_on_edge(k2_hard_core):
    assert k2_hard_core.maps.tolist() == [[0, 1], [1, 0], [1, 1]]
    mu = homspace.lambda_measure(k2_hard_core, (2, 1))
    assert mu == [Fraction(2, 5), Fraction(2, 5), Fraction(1, 5)]


def test_float_measure_matches_exact(k2_hard_core):
    exact = homspace.lambda_measure(k2_hard_core, (2, 1))
    approx = homspace.lambda_measure(k2_hard_core, (2.0, 1.0), exact=False)
    assert np.allclose(approx, [float(x) for x in exact])


@pytest.mark.parametrize("board, expected", [
    (graphs.path_board(3), 5),
    (graphs.cycle_board(4), 7),
    (graphs.tree(2, 1), 9),
    (graphs.grid_box(1, 2), 63),
])
def test_hard_core_counts(hard_core, board, expected):
    assert homspace.count_homs(board, hard_core) == expected


@pytest.mark.parametrize("board", [graphs.path_board(3), graphs.cycle_board(4), graphs.complete_board(3)])
@pytest.mark.parametrize("h", [graphs.hinge(), graphs.complete(3), graphs.cycle(4)])
def test_backtracking_matches_brute_force(board, h):
    fast = homspace.enumerate_homs(board, h)
    slow = homspace.enumerate_brute(board, h)
    assert fast.maps.tolist() == slow.maps.tolist()


def test_proper_colorings_of_triangle_are_isolated():
    hs = homspace.enumerate_homs(graphs.cycle_board(3), graphs.complete(3))
    assert len(hs) == 6
    assert len(homspace.isolated_maps(hs)) == 6
    assert len(homspace.components(hs)) == 6
    assert not homspace.is_connected(hs)


def test_edge_colorings_are_connected():
    hs = homspace.enumerate_homs(graphs.path_board(2), graphs.complete(3))
    assert len(hs) == 6
    assert homspace.is_connected(hs)
    assert homspace.mixing_radius_probe(hs)["m"] >= 1


def test_dismantlable_target_gives_connected_space(hinge):
    hs = homspace.enumerate_homs(graphs.grid_box(1, 2), hinge)
    assert homspace.is_connected(hs)
    assert homspace.isolated_maps(hs) == []


def test_weak_square_projection_is_isolated():
    h = graphs.complete(3)
    g = graphs.weak_square(h)
    for which in (1, 2):
        spins = graphs.projection(h, which)
        assert homspace.is_homomorphism(g, h, spins)
        assert homspace.is_isolated_map(g, h, spins)


def test_isolated_check_rejects_non_homomorphism():
    with pytest.raises(InfeasibleError):
        homspace.is_isolated_map(graphs.path_board(2), graphs.complete(2), [0, 0])


DISMANTLABLE = [h for h in graphs.enumerate_corpus(4) if classify.dismantle(h) is not None]
SMALL_BOARDS = [graphs.path_board(2), graphs.path_board(3), graphs.path_board(4), graphs.cycle_board(3),
                graphs.cycle_board(4), graphs.complete_board(3), graphs.complete_board(4)]


@pytest.mark.parametrize("board", SMALL_BOARDS, ids=lambda b: f"{b.kind}{b.n_sites}")
def test_dismantlable_targets_give_connected_spaces(board):
    assert DISMANTLABLE
    for h in DISMANTLABLE:
        hs = homspace.enumerate_homs(board, h)
        assert len(hs) > 0
        assert homspace.is_connected(hs), (h.edges(), h.loops)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(graphs.enumerate_corpus(4)), st.sampled_from([1, 2]))
def test_weak_square_projections_are_homomorphisms(h, which):
    g = graphs.weak_square(h)
    assert homspace.is_homomorphism(g, h, graphs.projection(h, which))


def test_pinned_enumeration(hard_core):
    hs = homspace.enumerate_homs(graphs.path_board(3), hard_core, pinned={1: 0})
    assert hs.maps.tolist() == [[1, 0, 1]]


def test_candidate_cap():
    with pytest.raises(CapExceededError):
        homspace.enumerate_homs(graphs.path_board(10), graphs.complete(3, looped=True), max_candidates=10)


def test_empty_space_has_no_measure():
    hs = homspace.enumerate_homs(graphs.cycle_board(3), graphs.complete(2))
    assert hs.empty
    with pytest.raises(InfeasibleError):
        homspace.lambda_measure(hs, (1, 1))


def test_measure_rejects_wrong_length(k2_hard_core):
    with pytest.raises(GraphError):
        homspace.lambda_measure(k2_hard_core, (1, 1, 1))


@settings(max_examples=20, deadline=None)
@given(st.lists(st.integers(min_value=1, max_value=9), min_size=3, max_size=3))
def test_lambda_measure_is_one_site_gibbs(lam):
    """λ 测度在每个站点上都满足单点条件。"""
    hs = homspace.enumerate_homs(graphs.path_board(3), graphs.hinge())
    mu = homspace.lambda_measure(hs, lam)
    assert sum(mu) == 1
    assert homspace.check_one_site_gibbs(hs, lam, mu)["max_violation"] == 0


def test_point_mass_on_isolated_map_is_gibbs():
    h = graphs.complete(3)
    spins = [0, 1, 2]
    assert homspace.check_point_mass(graphs.cycle_board(3), h, (1, 2, 3), spins)["max_violation"] == 0


def test_point_mass_on_flexible_map_is_not_gibbs(hinge):
    report = homspace.check_point_mass(graphs.path_board(2), hinge, (1, 1, 1), [1, 1])
    assert report["max_violation"] > 0


def test_occupation_profile_on_single_site(hard_core):
    hs = homspace.enumerate_homs(graphs.path_board(1), hard_core)
    assert homspace.occupation_profile(hs, (3, 1), occupied=[0]) == [Fraction(3, 4)]


def test_tree_marginal_agrees_with_enumeration(hinge):
    board = graphs.tree(2, 2)
    leaves = {int(u): graphs.GREEN for u in np.flatnonzero(board.depth == 2)}
    lam = (2.0, 1.0, 3.0)
    by_tree = homspace.boundary_influence(board, hinge, lam, leaves, target=0, use_tree_dp=True)
    by_enum = homspace.boundary_influence(board, hinge, lam, leaves, target=0, use_tree_dp=False)
    assert np.allclose(by_tree, [float(x) for x in by_enum])
    assert by_tree[graphs.RED] > 0


def test_tree_extension_count_matches_backtracking(hinge):
    board = graphs.tree(2, 2)
    assert homspace.tree_extension_count(board, hinge) == homspace._backtrack(board, hinge, None, None, False)


def test_tree_feasible_spins_with_pinned_leaves():
    board = graphs.tree(2, 1)
    h = graphs.complete(3)
    pinned = {1: 1, 2: 2, 3: 1}
    assert homspace.tree_feasible_spins(board, h, pinned) == [0]


def test_infeasible_boundary(hard_core):
    with pytest.raises(InfeasibleError):
        homspace.boundary_influence(graphs.path_board(2), hard_core, (1, 1), {0: 0, 1: 0}, target=0)
