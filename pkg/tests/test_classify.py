import pytest
from hypothesis import given, settings, strategies as st

from homgibbs import classify, graphs
from homgibbs.utils.errors import NotConnectedError


def test_hinge_is_dismantlable_cop_win_and_fertile(hinge):
    report = classify.classify(hinge)
    assert report.dismantlable
    assert report.cop_win
    assert report.fertile
    assert report.witness == {"condition": "a", "looped_node": 0, "non_neighbor": 2}


def test_hard_core_folds_onto_vacant(hard_core):
    folds = classify.dismantle(hard_core)
    assert folds is not None
    assert folds.steps == [(0, 1)]
    assert folds.final_node == 1
    assert classify.cop_win(hard_core)
    assert classify.is_sterile(hard_core)


@pytest.mark.parametrize("h", [graphs.complete(3), graphs.cycle(4), graphs.star(2), graphs.cycle(5)])
def test_loopless_graphs_are_not_dismantlable(h):
    assert classify.dismantle(h) is None
    assert not classify.cop_win(h)


@pytest.mark.parametrize("h", [
    graphs.hard_core(),
    graphs.complete(3, looped=True),
    graphs.complete(2),
    graphs.star(2),
    graphs.cycle(4),
    graphs.complete_multipartite([1, 2], looped_universal=1),
    graphs.single_looped_node(),
])
def test_sterile_family(h):
    fertile, witness = classify.is_fertile(h)
    assert not fertile
    assert witness is None


def test_path_is_fertile_by_transitivity():
    h = graphs.path(4)
    fertile, witness = classify.is_fertile(h)
    assert fertile
    assert witness["condition"] == "b"
    i, j, k = witness["triple"]
    assert not h.adj(i, j) and not h.adj(j, k) and h.adj(i, k)


def test_fold_replay_ends_at_looped_node(hinge):
    folds = classify.dismantle(hinge)
    final = classify.apply_folds(hinge, folds)
    assert final.q == 1
    assert final.is_looped(0)


def test_fold_pairs_include_hinge_ends(hinge):
    pairs = classify.fold_pairs(hinge)
    assert (graphs.GREEN, graphs.YELLOW) in pairs
    assert (graphs.RED, graphs.YELLOW) in pairs
    assert (graphs.YELLOW, graphs.GREEN) not in pairs


def test_disconnected_graph_rejected():
    h = graphs.ConstraintGraph.from_edges(3, [(0, 1)], loops=[2])
    with pytest.raises(NotConnectedError):
        classify.cop_win(h)
    with pytest.raises(NotConnectedError):
        classify.classify(h)


def test_dismantlable_iff_cop_win_on_corpus():
    report = classify.cross_check_corpus(max_nodes=4)
    assert report["graphs"] == 64
    assert report["mismatches"] == []
    assert report["dismantlable"] == report["cop_win"]


@pytest.mark.slow
def test_dismantlable_iff_cop_win_on_five_nodes():
    report = classify.cross_check_corpus(max_nodes=5, threads=2)
    assert report["mismatches"] == []


def test_hinge_is_a_minimal_fertile_graph(hinge):
    found = {graphs.canonical_form(h) for h in classify.minimal_fertile_search(max_nodes=3)}
    assert graphs.canonical_form(hinge) in found
    assert graphs.canonical_form(graphs.hard_core()) not in found


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_fertility_ignores_node_names(data):
    h = data.draw(st.sampled_from(graphs.enumerate_corpus(4)))
    perm = data.draw(st.permutations(range(h.q)))
    renamed = graphs.relabel(h, perm)
    assert classify.is_fertile(renamed)[0] == classify.is_fertile(h)[0]
    assert (classify.dismantle(renamed) is None) == (classify.dismantle(h) is None)
