import itertools
import json
import os
from collections import deque

import networkx as nx
import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .utils.config import MAX_BOARD_SITES
from .utils.errors import CapExceededError, GraphError

HARD_CORE_LABELS = ('occupied', 'vacant')
HINGE_LABELS = ('green', 'yellow', 'red')
GREEN, YELLOW, RED = 0, 1, 2

# 规范型只对小图做全排列
CANONICAL_MAX_NODES = 7


class ConstraintGraph:
    """
    约束图 H：节点 0..q-1，允许自环。
    邻接同时存成位行 rows（第 i 行的第 j 位表示 i∼j）和边表。
    """

    __slots__ = ('q', 'rows', 'labels')

    def __init__(self, q, rows, labels=None):
        if q < 1:
            raise GraphError(f"节点数必须至少为 1，收到 {q}")
        rows = tuple(int(r) for r in rows)
        if len(rows) != q:
            raise GraphError("位行数量与节点数不一致")
        full = (1 << q) - 1
        for i, row in enumerate(rows):
            if row & ~full:
                raise GraphError(f"节点 {i} 的邻接引用了不存在的节点")
            for j in range(q):
                if (row >> j) & 1 and not (rows[j] >> i) & 1:
                    raise GraphError(f"邻接不对称: ({i},{j}) 存在而 ({j},{i}) 不存在")
        if labels is not None:
            labels = tuple(str(x) for x in labels)
            if len(labels) != q:
                raise GraphError("标签数量与节点数不一致")
        object.__setattr__(self, 'q', q)
        object.__setattr__(self, 'rows', rows)
        object.__setattr__(self, 'labels', labels)

    def __setattr__(self, name, value):
        raise AttributeError("ConstraintGraph 构造后不可修改")

    @classmethod
    def from_edges(cls, q, edges=(), loops=(), labels=None):
        rows = [0] * q
        for i, j in list(edges) + [(k, k) for k in loops]:
            if not (0 <= i < q and 0 <= j < q):
                raise GraphError(f"边 ({i},{j}) 超出节点范围 0..{q - 1}")
            rows[i] |= 1 << j
            rows[j] |= 1 << i
        return cls(q, rows, labels)

    def adj(self, i, j):
        return bool((self.rows[i] >> j) & 1)

    def is_looped(self, i):
        return self.adj(i, i)

    @property
    def loops(self):
        return [i for i in range(self.q) if self.is_looped(i)]

    def neighbors(self, i):
        row = self.rows[i]
        return [j for j in range(self.q) if (row >> j) & 1]

    def degree(self, i):
        return bin(self.rows[i]).count('1')

    def edges(self):
        """不含自环的边，每条只列一次 (i<j)。"""
        return [(i, j) for i in range(self.q) for j in range(i + 1, self.q) if self.adj(i, j)]

    def n_edges(self):
        return len(self.edges()) + len(self.loops)

    def adjacency_matrix(self):
        return np.array([[self.adj(i, j) for j in range(self.q)] for i in range(self.q)], dtype=bool)

    def label(self, i):
        return self.labels[i] if self.labels else str(i)

    def __eq__(self, other):
        return isinstance(other, ConstraintGraph) and self.q == other.q and self.rows == other.rows

    def __hash__(self):
        return hash((self.q, self.rows))

    def __repr__(self):
        return f"ConstraintGraph(q={self.q}, edges={self.edges()}, loops={self.loops})"


class Board:
    """
    棋盘 G：无自环的有限图，邻接用 CSR 形式 (indptr, indices) 保存。
    coords / parent / depth 是可选的几何与树元数据。
    """

    def __init__(self, n_sites, indptr, indices, coords=None, parent=None, depth=None,
                 kind='custom', params=None, labels=None):
        self.n_sites = int(n_sites)
        self.indptr = _frozen(np.asarray(indptr, dtype=np.int64))
        self.indices = _frozen(np.asarray(indices, dtype=np.int64))
        self.coords = _frozen(np.asarray(coords)) if coords is not None else None
        self.parent = _frozen(np.asarray(parent, dtype=np.int64)) if parent is not None else None
        self.depth = _frozen(np.asarray(depth, dtype=np.int64)) if depth is not None else None
        self.kind = kind
        self.params = dict(params or {})
        self.labels = tuple(labels) if labels is not None else None

    @classmethod
    def from_edges(cls, n_sites, edges, **kwargs):
        """由边表建立棋盘，拒绝自环和越界站点。"""
        _check_site_cap(n_sites)
        edges = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
        if len(edges):
            if edges.min() < 0 or edges.max() >= n_sites:
                raise GraphError("边引用了不存在的站点")
            if np.any(edges[:, 0] == edges[:, 1]):
                raise GraphError("棋盘不允许自环")
        both = np.concatenate([edges, edges[:, ::-1]]) if len(edges) else edges
        both = np.unique(both, axis=0) if len(both) else both
        matrix = csr_matrix(
            (np.ones(len(both), dtype=np.int8), (both[:, 0], both[:, 1])) if len(both)
            else (np.zeros(0, dtype=np.int8), (np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64))),
            shape=(n_sites, n_sites),
        )
        matrix.sort_indices()
        return cls(n_sites, matrix.indptr, matrix.indices, **kwargs)

    def neighbors(self, u):
        return self.indices[self.indptr[u]:self.indptr[u + 1]]

    def degree(self, u):
        return int(self.indptr[u + 1] - self.indptr[u])

    def edges(self):
        out = []
        for u in range(self.n_sites):
            for v in self.neighbors(u):
                if u < v:
                    out.append((u, int(v)))
        return out

    def n_edges(self):
        return len(self.indices) // 2

    def adj(self, u, v):
        return bool(np.any(self.neighbors(u) == v))

    def parity(self):
        """站点奇偶：网格用坐标和，树用深度，其余用二部划分；非二部图返回 None。"""
        if self.kind == 'grid' and self.coords is not None:
            return (np.abs(self.coords).sum(axis=1) % 2).astype(np.int8)
        if self.depth is not None:
            return (self.depth % 2).astype(np.int8)
        ok, parts = is_bipartite(self)
        if not ok:
            return None
        side = np.zeros(self.n_sites, dtype=np.int8)
        side[list(parts[1])] = 1
        return side

    def children(self, u):
        if self.parent is None:
            raise GraphError("只有树棋盘有父子结构")
        return [int(v) for v in self.neighbors(u) if self.parent[v] == u]

    def grid_shape(self):
        if self.kind != 'grid':
            return None
        n, d = self.params['n'], self.params['d']
        return (2 * n + 1,) * d

    def __eq__(self, other):
        return (isinstance(other, Board) and self.n_sites == other.n_sites
                and np.array_equal(self.indptr, other.indptr)
                and np.array_equal(self.indices, other.indices))

    def __repr__(self):
        return f"Board(kind={self.kind}, n_sites={self.n_sites}, n_edges={self.n_edges()})"


def _frozen(arr):
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


def _check_site_cap(n_sites, max_sites=None):
    cap = MAX_BOARD_SITES if max_sites is None else max_sites
    if n_sites > cap:
        raise CapExceededError(f"棋盘站点数 {n_sites} 超过上限 {cap}")


# ----------------- 约束图构造器 -----------------

def hard_core():
    return ConstraintGraph.from_edges(2, [(0, 1)], loops=[1], labels=HARD_CORE_LABELS)


def hinge():
    return ConstraintGraph.from_edges(3, [(GREEN, YELLOW), (YELLOW, RED)],
                                      loops=[GREEN, YELLOW, RED], labels=HINGE_LABELS)


def complete(q, looped=False):
    _check_size(q, 'q')
    edges = itertools.combinations(range(q), 2)
    return ConstraintGraph.from_edges(q, edges, loops=range(q) if looped else ())


def cycle(k, looped=False):
    """k 个节点的环；k=1 时是一个节点（looped 决定是否带环），k=2 时是一条边。"""
    _check_size(k, 'k')
    edges = {tuple(sorted((i, (i + 1) % k))) for i in range(k) if k > 1}
    return ConstraintGraph.from_edges(k, edges, loops=range(k) if looped else ())


def path(k, looped=False):
    _check_size(k, 'k')
    return ConstraintGraph.from_edges(k, [(i, i + 1) for i in range(k - 1)],
                                      loops=range(k) if looped else ())


def single_looped_node():
    return ConstraintGraph.from_edges(1, loops=[0])


def star(k):
    _check_size(k, 'k')
    return ConstraintGraph.from_edges(k + 1, [(0, i) for i in range(1, k + 1)])


def complete_multipartite(parts, looped_universal=0):
    """
    完全多部图，另加 looped_universal 个与所有节点相邻的带环节点。
    这是满足不育条件的标准族。
    """
    sizes = [int(p) for p in parts]
    if any(s < 1 for s in sizes) or looped_universal < 0:
        raise GraphError("各部大小必须为正")
    owner = [k for k, s in enumerate(sizes) for _ in range(s)]
    q = len(owner) + looped_universal
    edges = [(i, j) for i in range(len(owner)) for j in range(i + 1, len(owner)) if owner[i] != owner[j]]
    extra = list(range(len(owner), q))
    edges += [(i, j) for j in extra for i in range(q) if i != j]
    return ConstraintGraph.from_edges(q, edges, loops=extra)


_STANDARD = {
    'hard_core': hard_core,
    'hinge': hinge,
    'widom_rowlinson': hinge,
    'K_q': complete,
    'complete_looped': lambda q: complete(q, looped=True),
    'cycle': cycle,
    'path': path,
    'single_looped_node': single_looped_node,
    'star': star,
    'complete_multipartite': complete_multipartite,
}


def make_standard(name, *args, **kwargs):
    """按名字构造标准约束图，例如 make_standard('K_q', 3) 或 make_standard('cycle', 4, looped=True)。"""
    builder = _STANDARD.get(name)
    if builder is None:
        raise GraphError(f"未知的约束图名称: {name}")
    try:
        return builder(*args, **kwargs)
    except TypeError as e:
        raise GraphError(f"{name} 的参数无效: {e}") from e


def parse_standard(text):
    """
    解析命令行里的简写：hinge、hard_core、K3、K3L（全带环）、C5、C4L、P3、P3L、S3、single_looped_node。
    """
    text = text.strip()
    if text in ('hinge', 'hard_core', 'widom_rowlinson', 'single_looped_node'):
        return make_standard(text)
    looped = text.endswith('L')
    body = text[:-1] if looped else text
    prefix, digits = body[:1], body[1:]
    if prefix in 'KCPS' and digits.isdigit():
        k = int(digits)
        if prefix == 'K':
            return complete(k, looped=looped)
        if prefix == 'C':
            return cycle(k, looped=looped)
        if prefix == 'P':
            return path(k, looped=looped)
        if not looped:
            return star(k)
    raise GraphError(f"无法识别的约束图简写: {text}")


def _check_size(value, name):
    if not isinstance(value, (int, np.integer)) or value < 1:
        raise GraphError(f"尺寸参数 {name} 必须是正整数，收到 {value!r}")


# ----------------- 棋盘构造器 -----------------

def grid_box(n, d=2, max_sites=None):
    """盒子 B_n^d：坐标在 [-n, n]^d，曼哈顿距离为 1 的站点相邻。"""
    if not isinstance(n, (int, np.integer)) or n < 0:
        raise GraphError(f"n 必须是非负整数，收到 {n!r}")
    if d not in (1, 2, 3):
        raise GraphError(f"维数 d 必须是 1、2 或 3，收到 {d!r}")
    side = 2 * n + 1
    n_sites = side ** d
    _check_site_cap(n_sites, max_sites)
    index = np.arange(n_sites).reshape((side,) * d)
    edges = []
    for axis in range(d):
        lo = np.take(index, np.arange(side - 1), axis=axis).ravel()
        hi = np.take(index, np.arange(1, side), axis=axis).ravel()
        edges.append(np.stack([lo, hi], axis=1))
    edges = np.concatenate(edges) if edges else np.zeros((0, 2), dtype=np.int64)
    coords = np.stack(np.unravel_index(np.arange(n_sites), (side,) * d), axis=1) - n
    return Board.from_edges(n_sites, edges, coords=coords, kind='grid', params={'n': n, 'd': d})


def tree_size(r, depth):
    if depth == 0:
        return 1
    if r == 1:
        return 2 * depth + 1
    return 1 + (r + 1) * (r ** depth - 1) // (r - 1)


def tree(r, depth, max_sites=None):
    """
    T^r 的有根截断：根有 r+1 个孩子，其余内部站点各有 r 个孩子。
    站点按广度优先编号，根为 0。
    """
    if not isinstance(r, (int, np.integer)) or r < 1:
        raise GraphError(f"分支数 r 必须至少为 1，收到 {r!r}")
    if not isinstance(depth, (int, np.integer)) or depth < 0:
        raise GraphError(f"深度必须非负，收到 {depth!r}")
    n_sites = tree_size(r, depth)
    _check_site_cap(n_sites, max_sites)
    parent = np.full(n_sites, -1, dtype=np.int64)
    level = np.zeros(n_sites, dtype=np.int64)
    nxt = 1
    for u in range(n_sites):
        if level[u] >= depth:
            continue
        k = r + 1 if u == 0 else r
        parent[nxt:nxt + k] = u
        level[nxt:nxt + k] = level[u] + 1
        nxt += k
    edges = np.stack([parent[1:], np.arange(1, n_sites)], axis=1)
    return Board.from_edges(n_sites, edges, parent=parent, depth=level,
                            kind='tree', params={'r': r, 'depth': depth})


def path_board(length):
    if not isinstance(length, (int, np.integer)) or length < 1:
        raise GraphError(f"路径长度必须为正，收到 {length!r}")
    _check_site_cap(length)
    edges = [(i, i + 1) for i in range(length - 1)]
    return Board.from_edges(length, edges, kind='path', params={'len': length})


def cycle_board(length):
    if not isinstance(length, (int, np.integer)) or length < 3:
        raise GraphError(f"环棋盘至少需要 3 个站点，收到 {length!r}")
    edges = [(i, (i + 1) % length) for i in range(length)]
    return Board.from_edges(length, edges, kind='cycle', params={'len': length})


def complete_board(k):
    if not isinstance(k, (int, np.integer)) or k < 1:
        raise GraphError(f"完全图大小必须为正，收到 {k!r}")
    return Board.from_edges(k, itertools.combinations(range(k), 2), kind='complete', params={'k': k})


def board_from_constraint(h):
    """把约束图去掉自环后当作棋盘使用。"""
    return Board.from_edges(h.q, h.edges(), kind='custom', labels=h.labels)


_BOARDS = {
    'grid_box': grid_box,
    'tree': tree,
    'path': path_board,
    'cycle': cycle_board,
    'complete': complete_board,
    'from_file': lambda p: load(p),
}


def make_board(name, *args, **kwargs):
    builder = _BOARDS.get(name)
    if builder is None:
        raise GraphError(f"未知的棋盘名称: {name}")
    try:
        board = builder(*args, **kwargs)
    except TypeError as e:
        raise GraphError(f"{name} 的参数无效: {e}") from e
    if not isinstance(board, Board):
        raise GraphError(f"文件中不是棋盘: {args}")
    return board


# ----------------- 派生图 -----------------

def weak_square(h):
    """
    弱平方：节点为有序对 (i1,i2)，(i1,i2)∼(j1,j2) 当且仅当 i1∼j1 且 i2∼j2。
    同一个对与自身的环被丢弃，对 (i1,i2) 的编号为 i1*q+i2。
    """
    q = h.q
    edges = []
    for a, b in itertools.combinations(range(q * q), 2):
        i1, i2 = divmod(a, q)
        j1, j2 = divmod(b, q)
        if h.adj(i1, j1) and h.adj(i2, j2):
            edges.append((a, b))
    coords = [divmod(a, q) for a in range(q * q)]
    return Board.from_edges(q * q, edges, coords=coords, kind='weak_square', params={'q': q})


def projection(h, which):
    """弱平方到 H 的投影 π_1 / π_2，返回每个站点的自旋。"""
    if which not in (1, 2):
        raise GraphError("投影只能是 1 或 2")
    q = h.q
    return np.array([divmod(a, q)[which - 1] for a in range(q * q)], dtype=np.int64)


def double(h):
    """
    二部双覆盖 2H：+i 编号为 i，-i 编号为 q+i。
    x∼y 当且仅当两者符号相反且 |x|∼|y|，因此 H 中 i 上的环变成边 {-i, i}。
    """
    q = h.q
    edges = [(i, q + j) for i in range(q) for j in range(q) if h.adj(i, j)]
    labels = [f"+{h.label(i)}" for i in range(q)] + [f"-{h.label(i)}" for i in range(q)]
    return ConstraintGraph.from_edges(2 * q, edges, labels=labels)


def relabel(h, perm):
    """按排列 perm（旧节点 i 变成 perm[i]）重新编号。"""
    perm = list(perm)
    if sorted(perm) != list(range(h.q)):
        raise GraphError("perm 不是一个排列")
    edges = [(perm[i], perm[j]) for i, j in h.edges()]
    return ConstraintGraph.from_edges(h.q, edges, loops=[perm[i] for i in h.loops])


def remove_node(h, i):
    """删去节点 i，其余节点保持相对顺序重新编号。"""
    keep = [k for k in range(h.q) if k != i]
    if not keep:
        raise GraphError("不能删去最后一个节点")
    return induced(h, keep)


def induced(h, nodes):
    nodes = list(nodes)
    pos = {v: k for k, v in enumerate(nodes)}
    edges = [(pos[a], pos[b]) for a, b in h.edges() if a in pos and b in pos]
    loops = [pos[a] for a in h.loops if a in pos]
    labels = [h.label(v) for v in nodes] if h.labels else None
    return ConstraintGraph.from_edges(len(nodes), edges, loops=loops, labels=labels)


# ----------------- 结构判定 -----------------

def is_bipartite(g):
    """
    BFS 二染色。自环直接判为非二部。
    :return: (bool, (part0, part1))，非二部时第二项为 None。
    """
    n = g.q if isinstance(g, ConstraintGraph) else g.n_sites
    if isinstance(g, ConstraintGraph) and g.loops:
        return False, None
    color = [-1] * n
    for start in range(n):
        if color[start] != -1:
            continue
        color[start] = 0
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for v in g.neighbors(u):
                v = int(v)
                if color[v] == -1:
                    color[v] = 1 - color[u]
                    queue.append(v)
                elif color[v] == color[u]:
                    return False, None
    parts = (frozenset(i for i in range(n) if color[i] == 0),
             frozenset(i for i in range(n) if color[i] == 1))
    return True, parts


def _sparse(g):
    if isinstance(g, Board):
        return csr_matrix((np.ones(len(g.indices), dtype=np.int8), g.indices, g.indptr),
                          shape=(g.n_sites, g.n_sites))
    return csr_matrix(g.adjacency_matrix().astype(np.int8))


def components(g):
    """连通分支列表（每个分支是排好序的节点列表）。"""
    n_comp, labels = connected_components(_sparse(g), directed=False)
    return [sorted(np.flatnonzero(labels == k).tolist()) for k in range(n_comp)]


def is_connected(g):
    return len(components(g)) == 1


def to_networkx(g):
    """转成 networkx 图；约束图的自环保留为 self-loop。"""
    nxg = nx.Graph()
    if isinstance(g, ConstraintGraph):
        nxg.add_nodes_from(range(g.q))
        nxg.add_edges_from(g.edges())
        nxg.add_edges_from((i, i) for i in g.loops)
    else:
        nxg.add_nodes_from(range(g.n_sites))
        nxg.add_edges_from(g.edges())
    return nxg


# ----------------- 小图规范型 -----------------

def _pair_index(q):
    pairs = [(i, j) for i in range(q) for j in range(i, q)]
    return pairs, {p: k for k, p in enumerate(pairs)}


def encode(h):
    """把边和环压成一个整数，第 k 位对应第 k 个有序对 (i<=j)。"""
    pairs, _ = _pair_index(h.q)
    return sum(1 << k for k, (i, j) in enumerate(pairs) if h.adj(i, j))


def decode(q, code):
    pairs, _ = _pair_index(q)
    edges = [(i, j) for k, (i, j) in enumerate(pairs) if (code >> k) & 1 and i != j]
    loops = [i for k, (i, j) in enumerate(pairs) if (code >> k) & 1 and i == j]
    return ConstraintGraph.from_edges(q, edges, loops=loops)


def _perm_bit_targets(q):
    pairs, index = _pair_index(q)
    targets = []
    for perm in itertools.permutations(range(q)):
        targets.append([index[tuple(sorted((perm[i], perm[j])))] for i, j in pairs])
    return targets


def canonical_form(h):
    """所有节点排列下编码的最小值，同构的图规范型相同。"""
    if h.q > CANONICAL_MAX_NODES:
        raise GraphError(f"规范型只支持不超过 {CANONICAL_MAX_NODES} 个节点的图")
    code = encode(h)
    best = None
    for targets in _perm_bit_targets(h.q):
        value = 0
        for k, t in enumerate(targets):
            if (code >> k) & 1:
                value |= 1 << t
        best = value if best is None else min(best, value)
    return best


def enumerate_corpus(max_nodes):
    """
    列出所有节点数不超过 max_nodes、连通、至少有一条边（环也算）的约束图，
    每个同构类只保留一个代表（规范型最小的编码）。
    """
    if max_nodes > 5:
        raise GraphError("语料库最多枚举 5 个节点的图")
    corpus = []
    for q in range(1, max_nodes + 1):
        n_pairs = q * (q + 1) // 2
        codes = np.arange(1 << n_pairs, dtype=np.int64)
        canon = np.full_like(codes, np.iinfo(np.int64).max)
        for targets in _perm_bit_targets(q):
            permuted = np.zeros_like(codes)
            for k, t in enumerate(targets):
                permuted |= ((codes >> k) & 1) << t
            np.minimum(canon, permuted, out=canon)
        for code in np.unique(canon):
            h = decode(q, int(code))
            if h.n_edges() >= 1 and is_connected(h):
                corpus.append(h)
    return corpus


# ----------------- 读写 -----------------

def to_dict(g):
    if isinstance(g, ConstraintGraph):
        data = {"type": "constraint", "q": g.q, "edges": [list(e) for e in g.edges()], "loops": g.loops}
        if g.labels:
            data["labels"] = {str(i): name for i, name in enumerate(g.labels)}
        return data
    data = {"type": "board", "q": g.n_sites, "edges": [list(e) for e in g.edges()], "loops": []}
    if g.labels:
        data["labels"] = {str(i): name for i, name in enumerate(g.labels)}
    if g.coords is not None:
        data["coords"] = np.asarray(g.coords).tolist()
    if g.parent is not None:
        data["parent"] = g.parent.tolist()
    if g.kind != 'custom':
        data["kind"] = g.kind
        data["params"] = g.params
    return data


def from_dict(data):
    """
    按 JSON 模式还原图。edges 是无向边表，(a,b) 与 (b,a) 列一次或两次都一样；
    adjacency 矩阵必须对称。
    """
    if not isinstance(data, dict):
        raise GraphError("图文件顶层必须是对象")
    kind = data.get("type")
    if kind not in ("constraint", "board"):
        raise GraphError(f"type 必须是 constraint 或 board，收到 {kind!r}")
    q = data.get("q", data.get("n_sites"))
    if not isinstance(q, int) or q < 1:
        raise GraphError(f"q 必须是正整数，收到 {q!r}")
    try:
        edges = [tuple(int(x) for x in e) for e in data.get("edges", [])]
        loops = [int(x) for x in data.get("loops", [])]
        if "adjacency" in data:
            edges += _edges_from_matrix(data["adjacency"], q)
    except (TypeError, ValueError) as e:
        raise GraphError(f"边表格式错误: {e}") from e
    if any(len(e) != 2 for e in edges):
        raise GraphError("每条边必须恰有两个端点")
    labels = data.get("labels")
    if isinstance(labels, dict):
        labels = [labels.get(str(i), str(i)) for i in range(q)]
    if kind == "constraint":
        self_edges = [i for i, j in edges if i == j]
        return ConstraintGraph.from_edges(q, [e for e in edges if e[0] != e[1]],
                                          loops=loops + self_edges, labels=labels)
    if loops or any(i == j for i, j in edges):
        raise GraphError("棋盘不允许自环")
    params = data.get("params")
    return Board.from_edges(q, {tuple(sorted(e)) for e in edges}, coords=data.get("coords"),
                            parent=data.get("parent"),
                            depth=_depth_from_parent(data.get("parent")),
                            kind=data.get("kind", 'custom'), params=params, labels=labels)


def _edges_from_matrix(matrix, q):
    """0/1 邻接矩阵转成有向边表，不对称时报错。"""
    m = np.asarray(matrix, dtype=np.int64)
    if m.shape != (q, q):
        raise GraphError(f"邻接矩阵形状应为 ({q},{q})，收到 {m.shape}")
    if not np.array_equal(m, m.T):
        a, b = np.argwhere(m != m.T)[0]
        raise GraphError(f"邻接不对称: 列出了 ({a},{b}) 却没有 ({b},{a})")
    return [(int(i), int(j)) for i, j in np.argwhere(m != 0)]


def _depth_from_parent(parent):
    if parent is None:
        return None
    depth = [0] * len(parent)
    for u, p in enumerate(parent):
        depth[u] = 0 if p < 0 else depth[p] + 1
    return depth


def save(g, path):
    """把约束图或棋盘写成 JSON。返回一个元组 (bool, str)。"""
    try:
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(to_dict(g), f, indent=2, ensure_ascii=False)
        return True, f"已保存到 {path}"
    except OSError as e:
        return False, f"写文件失败: {e}"


def load(path):
    if not os.path.exists(path):
        raise GraphError(f"文件不存在: {path}")
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise GraphError(f"JSON 解析失败: {e}") from e
    return from_dict(data)


def export_dot(g, name='G'):
    """DOT 文本；约束图的自环写成 i -- i。"""
    n = g.q if isinstance(g, ConstraintGraph) else g.n_sites
    lines = [f"graph {name} {{"]
    for i in range(n):
        label = g.label(i) if isinstance(g, ConstraintGraph) else (g.labels[i] if g.labels else str(i))
        lines.append(f'  {i} [label="{label}"];')
    for i, j in g.edges():
        lines.append(f"  {i} -- {j};")
    if isinstance(g, ConstraintGraph):
        for i in g.loops:
            lines.append(f"  {i} -- {i};")
    lines.append("}")
    return "\n".join(lines) + "\n"
