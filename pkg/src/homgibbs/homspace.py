import itertools
import sys
from collections import deque
from fractions import Fraction

import numpy as np

from . import graphs
from .utils.config import EXACT_MEASURE_LIMIT, MAX_HOM_CANDIDATES
from .utils.errors import CapExceededError, GraphError, InfeasibleError


class UnionFind:
    """带路径压缩的并查集，用于求 hom(G,H) 在翻转邻接下的连通分支。"""

    def __init__(self, size):
        self.size = size
        self.parents = list(range(size))
        self.num_components = size

    def find_parent(self, elem):
        p = elem
        while p != self.parents[p]:
            p = self.parents[p]
        # 路径压缩
        while elem != p:
            nxt = self.parents[elem]
            self.parents[elem] = p
            elem = nxt
        return p

    def union(self, a, b):
        p1, p2 = self.find_parent(a), self.find_parent(b)
        if p1 == p2:
            return
        self.parents[max(p1, p2)] = min(p1, p2)
        self.num_components -= 1

    def retrieve_components(self):
        groups = {}
        for i in range(self.size):
            groups.setdefault(self.find_parent(i), []).append(i)
        return list(groups.values())


class HomSpace:
    """
    hom(G,H) 的完整列表 maps（形状 n_maps × n_sites）以及翻转邻接表。
    两个映射翻转相邻当且仅当它们恰在一个站点上不同。
    """

    def __init__(self, board, h, maps, pinned=None):
        self.board = board
        self.h = h
        self.maps = np.asarray(maps, dtype=np.int64).reshape(-1, board.n_sites)
        self.maps.setflags(write=False)
        self.pinned = dict(pinned or {})
        self._index = {tuple(m): k for k, m in enumerate(self.maps.tolist())}
        self._flip = None

    def __len__(self):
        return len(self.maps)

    @property
    def empty(self):
        return len(self.maps) == 0

    def index_of(self, spins):
        return self._index.get(tuple(int(s) for s in spins))

    @property
    def flip_adjacency(self):
        if self._flip is None:
            self._flip = self._build_flip()
        return self._flip

    def _build_flip(self):
        board, h = self.board, self.h
        free = [u for u in range(board.n_sites) if u not in self.pinned]
        adjacency = [[] for _ in range(len(self.maps))]
        for k, spins in enumerate(self.maps.tolist()):
            for u in free:
                for s in _legal_from(board, h, spins, u):
                    if s == spins[u]:
                        continue
                    other = list(spins)
                    other[u] = s
                    j = self._index[tuple(other)]
                    if j > k:
                        adjacency[k].append(j)
                        adjacency[j].append(k)
        return adjacency


# ----------------- 枚举 -----------------

def _bfs_order(board):
    seen = [False] * board.n_sites
    order = []
    for start in range(board.n_sites):
        if seen[start]:
            continue
        seen[start] = True
        queue = deque([start])
        while queue:
            u = queue.popleft()
            order.append(u)
            for v in board.neighbors(u):
                v = int(v)
                if not seen[v]:
                    seen[v] = True
                    queue.append(v)
    return order


def _pinned_masks(board, h, pinned):
    full = (1 << h.q) - 1
    masks = [full] * board.n_sites
    for u, s in (pinned or {}).items():
        if not (0 <= int(u) < board.n_sites and 0 <= int(s) < h.q):
            raise InfeasibleError(f"钉住的站点或自旋越界: {u} -> {s}")
        masks[int(u)] = 1 << int(s)
    return masks


def _backtrack(board, h, pinned, max_candidates, collect):
    """
    按 BFS 顺序回溯，并对尚未赋值的邻居做前向检查。
    collect 为 True 时返回所有映射，否则只返回个数。
    """
    cap = MAX_HOM_CANDIDATES if max_candidates is None else max_candidates
    order = _bfs_order(board)
    pos = {u: k for k, u in enumerate(order)}
    masks = _pinned_masks(board, h, pinned)
    nbrs = [[int(v) for v in board.neighbors(u)] for u in range(board.n_sites)]
    earlier = [[v for v in nbrs[u] if pos[v] < pos[u]] for u in order]
    later = [[v for v in nbrs[u] if pos[v] > pos[u]] for u in order]
    rows = h.rows
    n = board.n_sites
    spins = [0] * n
    found = []
    count = [0, 0]  # [映射数, 已访问的部分赋值数]

    def domain(u, k):
        mask = masks[u]
        for v in nbrs[u]:
            if pos[v] <= k:
                mask &= rows[spins[v]]
        return mask

    def rec(k):
        if k == n:
            count[0] += 1
            if collect:
                found.append(list(spins))
            return
        u = order[k]
        mask = masks[u]
        for v in earlier[k]:
            mask &= rows[spins[v]]
        while mask:
            low = mask & -mask
            s = low.bit_length() - 1
            mask ^= low
            count[1] += 1
            if count[1] > cap:
                raise CapExceededError(f"回溯访问的候选数超过上限 {cap}")
            spins[u] = s
            if all(domain(w, k) for w in later[k]):
                rec(k + 1)

    limit = sys.getrecursionlimit()
    if n + 100 > limit:
        sys.setrecursionlimit(n + 100)
    try:
        rec(0)
    finally:
        sys.setrecursionlimit(limit)
    return found if collect else count[0]


def enumerate_homs(g, h, pinned=None, max_candidates=None):
    """列出 hom(G,H) 的全部映射（可钉住部分站点），按字典序排列。"""
    maps = _backtrack(g, h, pinned, max_candidates, collect=True)
    maps.sort()
    return HomSpace(g, h, maps, pinned=pinned)


def enumerate_brute(g, h):
    """枚举全部 |H|^|G| 个函数再筛选，只作为小实例的对照。"""
    edges = g.edges()
    maps = [list(f) for f in itertools.product(range(h.q), repeat=g.n_sites)
            if all(h.adj(f[a], f[b]) for a, b in edges)]
    return HomSpace(g, h, maps)


def count_homs(g, h, pinned=None, max_candidates=None):
    """只计数不保存；树棋盘走整数动态规划。"""
    if _is_tree(g):
        return tree_extension_count(g, h, pinned)
    return _backtrack(g, h, pinned, max_candidates, collect=False)


# ----------------- 连通性 -----------------

def components(hs):
    uf = UnionFind(len(hs))
    for k, nbrs in enumerate(hs.flip_adjacency):
        for j in nbrs:
            uf.union(k, j)
    return sorted(uf.retrieve_components(), key=lambda c: c[0])


def is_connected(hs):
    """空空间按约定算作连通，可用 hs.empty 区分。"""
    return len(hs) == 0 or len(components(hs)) == 1


def isolated_maps(hs):
    return [k for k, nbrs in enumerate(hs.flip_adjacency) if not nbrs]


def legal_spins(g, h, spins, site):
    return _legal_from(g, h, spins, site)


def _legal_from(g, h, spins, site):
    mask = (1 << h.q) - 1
    for v in g.neighbors(site):
        mask &= h.rows[int(spins[int(v)])]
    return [s for s in range(h.q) if (mask >> s) & 1]


def is_homomorphism(g, h, spins):
    return all(h.adj(int(spins[a]), int(spins[b])) for a, b in g.edges())


def is_isolated_map(g, h, spins):
    """局部判定：每个站点在邻居给定时都只有当前自旋合法。"""
    if not is_homomorphism(g, h, spins):
        raise InfeasibleError("给定的自旋不是同态")
    return all(_legal_from(g, h, spins, u) == [int(spins[u])] for u in range(g.n_sites))


def mixing_radius_probe(hs):
    """
    同一分支内任意两映射之间最短翻转路径长度与 Hamming 距离之比的最大值，
    以及由此得到的最小整数 m。只做描述性报告。
    """
    adjacency = hs.flip_adjacency
    maps = hs.maps
    worst = 1.0
    for a in range(len(hs)):
        dist = {a: 0}
        queue = deque([a])
        while queue:
            x = queue.popleft()
            for y in adjacency[x]:
                if y not in dist:
                    dist[y] = dist[x] + 1
                    queue.append(y)
        for b, d in dist.items():
            if b > a:
                hamming = int(np.count_nonzero(maps[a] != maps[b]))
                worst = max(worst, d / hamming)
    return {"max_ratio": worst, "m": int(np.ceil(worst - 1e-12))}


# ----------------- λ 测度 -----------------

def _as_fraction(x):
    return x if isinstance(x, Fraction) else Fraction(x)


def lambda_measure(hs, lam, exact=None):
    """
    每个映射的概率正比于 ∏_v λ_{φ(v)}。
    映射数不超过 EXACT_MEASURE_LIMIT 时默认用有理数精确计算。
    """
    if hs.empty:
        raise InfeasibleError("hom(G,H) 为空，无法定义 λ 测度")
    if len(lam) != hs.h.q:
        raise GraphError(f"活度向量长度 {len(lam)} 与节点数 {hs.h.q} 不一致")
    if exact is None:
        exact = len(hs) <= EXACT_MEASURE_LIMIT
    counts = np.stack([np.count_nonzero(hs.maps == s, axis=1) for s in range(hs.h.q)], axis=1)
    if exact:
        lam_f = [_as_fraction(x) for x in lam]
        weights = []
        for row in counts.tolist():
            w = Fraction(1)
            for s, c in enumerate(row):
                w *= lam_f[s] ** c
            weights.append(w)
        total = sum(weights)
        return [w / total for w in weights]
    log_w = counts @ np.log(np.asarray(lam, dtype=float))
    log_w -= log_w.max()
    w = np.exp(log_w)
    return w / w.sum()


def _site_report(cond, pred):
    return max((abs(cond.get(s, 0) - pred.get(s, 0)) for s in set(cond) | set(pred)), default=0)


def check_one_site_gibbs(hs, lam, mu, sites=None):
    """
    单点条件：对 μ(ψ)>0 的每个 ψ 和每个站点 u，u 处自旋在其余站点给定时的条件分布
    应等于 λ 限制在合法自旋上的归一化。返回最大绝对偏差和出现位置。
    """
    board, h = hs.board, hs.h
    check_sites = range(board.n_sites) if sites is None else sites
    check_sites = [u for u in check_sites if u not in hs.pinned]
    worst, where = 0, None
    for k, spins in enumerate(hs.maps.tolist()):
        if mu[k] == 0:
            continue
        for u in check_sites:
            legal = _legal_from(board, h, spins, u)
            weights = {}
            for s in legal:
                other = list(spins)
                other[u] = s
                j = hs.index_of(other)
                weights[s] = mu[j] if j is not None else 0
            total = sum(weights.values())
            cond = {s: w / total for s, w in weights.items()}
            pred = _restricted(lam, legal)
            v = _site_report(cond, pred)
            if v > worst:
                worst, where = v, (k, u)
    return {"max_violation": float(worst), "worst": where}


def check_point_mass(g, h, lam, spins, sites=None):
    """μ 为 spins 上的点质量时的单点条件检查，不需要枚举。"""
    if not is_homomorphism(g, h, spins):
        raise InfeasibleError("给定的自旋不是同态")
    check_sites = range(g.n_sites) if sites is None else sites
    worst, where = 0, None
    for u in check_sites:
        legal = _legal_from(g, h, spins, u)
        cond = {int(spins[u]): 1}
        v = _site_report(cond, _restricted(lam, legal))
        if v > worst:
            worst, where = v, u
    return {"max_violation": float(worst), "worst": where}


def _restricted(lam, legal):
    exact = all(isinstance(x, (int, Fraction)) for x in lam)
    vals = {s: (_as_fraction(lam[s]) if exact else float(lam[s])) for s in legal}
    total = sum(vals.values())
    return {s: v / total for s, v in vals.items()}


def site_marginal(hs, mu, site):
    law = [0] * hs.h.q
    for k, spins in enumerate(hs.maps.tolist()):
        law[spins[site]] += mu[k]
    return law


def occupation_profile(hs, lam, occupied):
    """每个站点自旋落在 occupied 集合里的精确概率。"""
    mu = lambda_measure(hs, lam)
    occupied = set(occupied)
    prof = []
    for u in range(hs.board.n_sites):
        law = site_marginal(hs, mu, u)
        prof.append(sum(law[s] for s in occupied))
    return prof


def boundary_influence(g, h, lam, boundary, target, use_tree_dp=None):
    """
    在边界赋值 boundary（站点 -> 自旋）给定时，目标站点自旋的精确条件分布。
    树棋盘默认用由叶到根的消息传递，其他棋盘枚举钉住后的同态空间。
    """
    boundary = {int(u): int(s) for u, s in (boundary or {}).items()}
    if use_tree_dp is None:
        use_tree_dp = _is_tree(g)
    if use_tree_dp:
        return list(tree_marginal(g, h, lam, boundary, target))
    hs = enumerate_homs(g, h, pinned=boundary)
    if hs.empty:
        raise InfeasibleError("边界赋值无法延拓为同态")
    mu = lambda_measure(hs, lam)
    return site_marginal(hs, mu, target)


# ----------------- 树上的精确动态规划 -----------------

def _is_tree(g):
    return g.n_sites >= 1 and g.n_edges() == g.n_sites - 1 and graphs.is_connected(g)


def _rooted(g, root):
    if not _is_tree(g):
        raise GraphError("树动态规划只适用于连通无圈的棋盘")
    parent = [-1] * g.n_sites
    order = [root]
    seen = {root}
    k = 0
    while k < len(order):
        u = order[k]
        k += 1
        for v in g.neighbors(u):
            v = int(v)
            if v not in seen:
                seen.add(v)
                parent[v] = u
                order.append(v)
    children = [[] for _ in range(g.n_sites)]
    for v in order[1:]:
        children[parent[v]].append(v)
    return order, children


def _allow(g, h, pinned):
    allow = np.ones((g.n_sites, h.q), dtype=bool)
    for u, s in (pinned or {}).items():
        allow[int(u)] = False
        allow[int(u), int(s)] = True
    return allow


def tree_marginal(g, h, lam, pinned=None, target=0):
    """目标站点的边缘分布（浮点，消息逐层归一化）。"""
    order, children = _rooted(g, target)
    allow = _allow(g, h, pinned)
    A = h.adjacency_matrix().astype(float)
    lam = np.asarray([float(x) for x in lam])
    msg = np.zeros((g.n_sites, h.q))
    for u in reversed(order):
        m = allow[u] * lam
        for c in children[u]:
            m = m * (A @ msg[c])
        total = m.sum()
        if total <= 0:
            raise InfeasibleError("钉住的自旋无法延拓为同态")
        msg[u] = m / total
    return msg[target]


def tree_extension_count(g, h, pinned=None, root=0):
    """与钉住值一致的同态个数（Python 整数，不会溢出）。"""
    order, children = _rooted(g, root)
    allow = _allow(g, h, pinned)
    nbrs = [h.neighbors(s) for s in range(h.q)]
    cnt = [None] * g.n_sites
    for u in reversed(order):
        row = []
        for s in range(h.q):
            if not allow[u, s]:
                row.append(0)
                continue
            value = 1
            for c in children[u]:
                value *= sum(cnt[c][t] for t in nbrs[s])
            row.append(value)
        cnt[u] = row
    return sum(cnt[root])


def tree_feasible_spins(g, h, pinned=None, root=0):
    """根站点在所有与钉住值一致的同态中能取到的自旋集合。"""
    order, children = _rooted(g, root)
    allow = _allow(g, h, pinned)
    A = h.adjacency_matrix()
    ok = np.zeros((g.n_sites, h.q), dtype=bool)
    for u in reversed(order):
        m = allow[u].copy()
        for c in children[u]:
            m &= (A & ok[c][None, :]).any(axis=1)
        ok[u] = m
    return [s for s in range(h.q) if ok[root, s]]
