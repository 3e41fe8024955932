import json

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from homgibbs import graphs
from homgibbs.utils.errors import CapExceededError, GraphError


def test_hinge_structure(hinge):
    assert hinge.q == 3
    assert hinge.loops == [0, 1, 2]
    assert hinge.edges() == [(0, 1), (1, 2)]
    assert not hinge.adj(graphs.GREEN, graphs.RED)
    assert hinge.labels == graphs.HINGE_LABELS


def test_hard_core_structure(hard_core):
    assert hard_core.q == 2
    assert hard_core.loops == [1]
    assert hard_core.adj(0, 1)
    assert not hard_core.is_looped(0)


def test_adjacency_is_symmetric(hinge):
    m = hinge.adjacency_matrix()
    assert np.array_equal(m, m.T)


def test_double_turns_loops_into_edges(hinge):
    h2 = graphs.double(hinge)
    assert h2.q == 6
    assert h2.loops == []
    for i in range(3):
        assert h2.adj(i, 3 + i)
    assert h2.adj(graphs.GREEN, 3 + graphs.YELLOW)
    assert not h2.adj(graphs.GREEN, 3 + graphs.RED)
    assert graphs.is_bipartite(h2)[0]


@pytest.mark.parametrize("h, expected", [
    (graphs.complete(2), True),
    (graphs.complete(3), False),
    (graphs.cycle(4), True),
    (graphs.hinge(), False),
])
def test_is_bipartite(h, expected):
    assert graphs.is_bipartite(h)[0] == expected


def test_weak_square_of_triangle():
    h = graphs.complete(3)
    g = graphs.weak_square(h)
    assert g.n_sites == 9
    assert g.adj(0 * 3 + 1, 1 * 3 + 0)
    assert g.adj(0 * 3 + 0, 1 * 3 + 1)
    assert not g.adj(0 * 3 + 1, 0 * 3 + 2)
    pi1 = graphs.projection(h, 1)
    assert all(h.adj(pi1[a], pi1[b]) for a, b in g.edges())


def test_grid_box_shape():
    g = graphs.grid_box(2, 2)
    assert g.n_sites == 25
    assert g.n_edges() == 40
    centre = int(np.flatnonzero(np.abs(g.coords).sum(axis=1) == 0)[0])
    assert g.degree(centre) == 4
    assert g.parity()[centre] == 0


def test_tree_shape():
    t = graphs.tree(2, 3)
    assert t.n_sites == graphs.tree_size(2, 3) == 22
    assert t.degree(0) == 3
    assert len(t.children(0)) == 3
    assert len(t.children(1)) == 2
    assert [int(np.sum(t.depth == d)) for d in range(4)] == [1, 3, 6, 12]
    assert t.n_edges() == 21


def test_path_tree_size():
    assert graphs.tree_size(1, 4) == graphs.tree(1, 4).n_sites == 9


def test_site_cap():
    with pytest.raises(CapExceededError):
        graphs.grid_box(10, 2, max_sites=100)


@pytest.mark.parametrize("text, q", [
    ("K3", 3), ("K3L", 3), ("C5", 5), ("C4L", 4), ("P3", 3), ("S3", 4), ("hinge", 3), ("hard_core", 2),
])
def test_parse_standard(text, q):
    assert graphs.parse_standard(text).q == q


def test_parse_standard_rejects_unknown():
    with pytest.raises(GraphError):
        graphs.parse_standard("X9")


def test_unknown_constructor():
    with pytest.raises(GraphError):
        graphs.make_standard("no_such_graph")


def test_complete_multipartite_is_sterile_shape():
    h = graphs.complete_multipartite([1, 2], looped_universal=1)
    assert h.q == 4
    assert h.loops == [3]
    assert not h.adj(1, 2)
    assert all(h.adj(3, j) for j in range(4))


@settings(max_examples=30, deadline=None)
@given(st.permutations(range(4)))
def test_canonical_form_is_relabeling_invariant(perm):
    h = graphs.ConstraintGraph.from_edges(4, [(0, 1), (1, 2), (2, 3)], loops=[1, 3])
    assert graphs.canonical_form(graphs.relabel(h, perm)) == graphs.canonical_form(h)


def test_canonical_form_separates_loop_patterns():
    a = graphs.ConstraintGraph.from_edges(3, [(0, 1), (1, 2)], loops=[0])
    b = graphs.ConstraintGraph.from_edges(3, [(0, 1), (1, 2)], loops=[1])
    assert graphs.canonical_form(a) != graphs.canonical_form(b)


@pytest.mark.parametrize("max_nodes, expected", [(1, 1), (2, 4), (3, 14), (4, 64)])
def test_corpus_sizes(max_nodes, expected):
    corpus = graphs.enumerate_corpus(max_nodes)
    assert len(corpus) == expected
    assert all(graphs.is_connected(h) and h.n_edges() >= 1 for h in corpus)


def test_to_networkx_matches(hinge):
    nxg = graphs.to_networkx(hinge)
    assert nxg.number_of_nodes() == 3
    assert nx.number_of_selfloops(nxg) == 3


def test_components_and_connectivity():
    h = graphs.ConstraintGraph.from_edges(4, [(0, 1), (2, 3)])
    assert graphs.components(h) == [[0, 1], [2, 3]]
    assert not graphs.is_connected(h)


def test_json_round_trip_keeps_loops(tmp_path, hinge):
    path = str(tmp_path / "hinge.json")
    ok, _ = graphs.save(hinge, path)
    assert ok
    assert graphs.load(path) == hinge


def test_board_file_rejects_loops(tmp_path):
    path = tmp_path / "b.json"
    path.write_text(json.dumps({"type": "board", "q": 2, "edges": [[0, 1]], "loops": [0]}))
    with pytest.raises(GraphError):
        graphs.load(str(path))


def test_asymmetric_adjacency_rejected(tmp_path):
    path = tmp_path / "h.json"
    path.write_text(json.dumps({"type": "constraint", "q": 3, "adjacency": [[0, 1, 0], [0, 0, 1], [0, 1, 0]]}))
    with pytest.raises(GraphError):
        graphs.load(str(path))


def test_edge_lists_are_undirected(tmp_path):
    path = tmp_path / "h.json"
    path.write_text(json.dumps({"type": "constraint", "q": 2, "edges": [[0, 1]]}))
    h = graphs.load(str(path))
    assert h.adj(1, 0)
    path.write_text(json.dumps({"type": "constraint", "q": 3, "edges": [[0, 1], [1, 0], [1, 2]]}))
    h = graphs.load(str(path))
    assert h.n_edges() == 2
    assert h == graphs.path(3)
    path.write_text(json.dumps({"type": "board", "q": 3, "edges": [[0, 1], [1, 0], [2, 1]]}))
    assert graphs.load(str(path)).n_edges() == 2


def test_export_dot_lists_loops(hinge):
    dot = graphs.export_dot(hinge, 'H')
    assert "0 -- 0;" in dot
    assert "0 -- 1;" in dot
