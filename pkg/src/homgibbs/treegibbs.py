"""
Cayley 树 T^r 上的简单（半）不变 Gibbs 测度。

结点加权的分支随机游走：z_i = Σ_{j∼i} w_j，p_ij = w_j / z_i，
平稳分布 π_i ∝ w_i z_i，诱导的活度 λ_i = w_i / z_i^r。
基本方程 λ_i = u_i / (Σ_{j∼i} v_j)^r = v_i / (Σ_{j∼i} u_j)^r 的正解
与简单半不变 Gibbs 测度一一对应，u = v 时为不变测度。
"""
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.optimize import root
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from . import graphs, homspace
from .utils.config import SOLVER_CONFIG, log
from .utils.errors import BipartiteError, GraphError, InfeasibleError, NotConnectedError, SolverError
from .utils.rng import log_uniform, make_rng
from .utils.workers import run_indexed


def _is_exact(values):
    return all(isinstance(x, (int, Fraction)) and not isinstance(x, bool) for x in values)


def _check_positive(values, name):
    if any(not (x > 0) for x in values):
        raise GraphError(f"{name} 的所有分量必须为正")


def integer_normalize(values):
    """有理向量按比例化成互素的整数向量，例如 (1/9, 2/49, 1/9) -> (49, 18, 49)。"""
    fr = [Fraction(x) for x in values]
    lcm = 1
    for x in fr:
        lcm = lcm * x.denominator // math.gcd(lcm, x.denominator)
    ints = [int(x * lcm) for x in fr]
    g = 0
    for x in ints:
        g = math.gcd(g, x)
    return tuple(x // g for x in ints) if g else tuple(ints)


# ----------------- 分支随机游走 -----------------

class BranchingWalk:
    """
    H 上结点加权的分支随机游走。权重全是整数或 Fraction 时所有导出量都是精确有理数。
    """

    def __init__(self, h, r, w):
        if r < 1:
            raise GraphError(f"分支数 r 必须至少为 1，收到 {r}")
        if len(w) != h.q:
            raise GraphError(f"权重长度 {len(w)} 与节点数 {h.q} 不一致")
        _check_positive(w, "权重")
        self.h = h
        self.r = int(r)
        self.exact = _is_exact(w)
        self.w = tuple(Fraction(x) for x in w) if self.exact else tuple(float(x) for x in w)
        self.z = tuple(sum((self.w[j] for j in h.neighbors(i)), Fraction(0) if self.exact else 0.0)
                       for i in range(h.q))
        for i, zi in enumerate(self.z):
            if zi == 0:
                raise GraphError(f"孤立节点 {i}：没有邻居，z_{i} = 0")

    def transition_matrix(self):
        """p_ij = w_j / z_i（i∼j），否则为 0。"""
        zero = Fraction(0) if self.exact else 0.0
        return [[self.w[j] / self.z[i] if self.h.adj(i, j) else zero for j in range(self.h.q)]
                for i in range(self.h.q)]

    def stationary_law(self):
        mass = [wi * zi for wi, zi in zip(self.w, self.z)]
        total = sum(mass)
        return [m / total for m in mass]

    def activities(self):
        return weights_to_activities(self.h, self.r, self.w)

    def detailed_balance_defect(self):
        """max |π_i p_ij − π_j p_ji|，有理权重下应精确为 0。"""
        pi = self.stationary_law()
        P = self.transition_matrix()
        q = self.h.q
        return max(abs(pi[i] * P[i][j] - pi[j] * P[j][i]) for i in range(q) for j in range(q))

    def stationarity_defect(self):
        """max |(πP)_j − π_j|。"""
        pi = self.stationary_law()
        P = self.transition_matrix()
        q = self.h.q
        return max(abs(sum(pi[i] * P[i][j] for i in range(q)) - pi[j]) for j in range(q))


@dataclass
class Activities:
    raw: tuple
    normalized: tuple

    def integers(self):
        return integer_normalize(self.raw)


def weights_to_activities(h, r, w):
    """λ_i = w_i / z_i^r，同时给出原值和归一化到和为 1 的值。"""
    bw = w if isinstance(w, BranchingWalk) else BranchingWalk(h, r, w)
    raw = tuple(wi / zi ** bw.r for wi, zi in zip(bw.w, bw.z))
    total = sum(raw)
    return Activities(raw=raw, normalized=tuple(x / total for x in raw))


@dataclass
class TreeConfig:
    board: graphs.Board
    spins: np.ndarray
    h: graphs.ConstraintGraph
    root_source: str = 'sampled'

    def is_valid(self):
        return homspace.is_homomorphism(self.board, self.h, self.spins)

    def to_dict(self):
        return {
            "r": self.board.params.get('r'),
            "depth": self.board.params.get('depth'),
            "root_source": self.root_source,
            "spins": [int(s) for s in self.spins],
            "parent": [int(p) for p in self.board.parent],
        }

    def to_dot(self):
        lines = ["graph T {"]
        for u, s in enumerate(self.spins):
            lines.append(f'  {u} [label="{self.h.label(int(s))}"];')
        for a, b in self.board.edges():
            lines.append(f"  {a} -- {b};")
        lines.append("}")
        return "\n".join(lines) + "\n"


def _require_walkable(h):
    if not graphs.is_connected(h):
        raise NotConnectedError("约束图不连通")
    if graphs.is_bipartite(h)[0]:
        raise BipartiteError("约束图是二部图，平稳分布不唯一；请改用 2H（graphs.double）")


def _cumulative(probs):
    c = np.cumsum(np.asarray([float(p) for p in probs]))
    c[-1] = 1.0
    return c


def sample_root_spins(bw, n, seed=0):
    """从平稳分布 π 抽取 n 个根自旋。"""
    _require_walkable(bw.h)
    u = make_rng(seed).random(n)
    return np.searchsorted(_cumulative(bw.stationary_law()), u, side='right')


def sample_branching_walk(bw, depth, seed=0):
    """
    在 T^r 的深度截断上抽一个构型：根自旋服从 π，根分裂为 r+1 个孩子，
    之后每个站点的 r 个孩子独立地按父自旋那一行转移概率取值。
    """
    _require_walkable(bw.h)
    board = graphs.tree(bw.r, depth)
    rng = make_rng(seed)
    u = rng.random(board.n_sites)
    P = bw.transition_matrix()
    cum = np.stack([_cumulative(row) for row in P])
    spins = np.zeros(board.n_sites, dtype=np.int64)
    spins[0] = np.searchsorted(_cumulative(bw.stationary_law()), u[0], side='right')
    for d in range(1, depth + 1):
        idx = np.flatnonzero(board.depth == d)
        parent_spin = spins[board.parent[idx]]
        draws = (u[idx][:, None] >= cum[parent_spin]).sum(axis=1)
        spins[idx] = np.minimum(draws, bw.h.q - 1)
    return TreeConfig(board=board, spins=spins, h=bw.h, root_source='sampled')


def conditional_spin_check(bw, neighbors, parent=None):
    """
    在邻居自旋给定时比较两种条件分布：
    分支随机游走给出的（parent 给定时按“父→u→孩子”计算，否则把 u 当作有 r+1 个孩子的根），
    以及 Gibbs 条件给出的 λ 限制在合法自旋上的归一化。
    :return: dict，含未归一化的游走权重、两种分布和最大偏差。
    """
    h, r = bw.h, bw.r
    children = list(neighbors)
    expected = r if parent is not None else r + 1
    if len(children) != expected:
        raise GraphError(f"需要 {expected} 个邻居自旋，收到 {len(children)}")
    P = bw.transition_matrix()
    if parent is not None:
        head = [P[parent][s] for s in range(h.q)]
    else:
        head = bw.stationary_law()
    walk = []
    for s in range(h.q):
        value = head[s]
        for c in children:
            value = value * P[s][c]
        walk.append(value)
    total = sum(walk)
    if total == 0:
        raise InfeasibleError("这组邻居自旋在游走下概率为 0")
    walk_law = [x / total for x in walk]
    all_nbrs = children + ([parent] if parent is not None else [])
    legal = [s for s in range(h.q) if all(h.adj(s, c) for c in all_nbrs)]
    lam = weights_to_activities(h, r, bw).raw
    lam_total = sum(lam[s] for s in legal)
    zero = Fraction(0) if bw.exact else 0.0
    gibbs_law = [lam[s] / lam_total if s in legal else zero for s in range(h.q)]
    gap = max(abs(a - b) for a, b in zip(walk_law, gibbs_law))
    return {"walk_weights": walk, "walk": walk_law, "gibbs": gibbs_law, "max_gap": gap}


# ----------------- 基本方程求解 -----------------

@dataclass
class GibbsSolution:
    u: np.ndarray
    v: np.ndarray
    r: int
    lambda_out: np.ndarray
    invariant: bool
    chiral: bool
    residual: float
    support: str = 'full'

    @property
    def weights(self):
        """不变解的权重剖面（u 归一化到和为 1）。"""
        return self.u / self.u.sum()

    def to_dict(self):
        return {
            "u": self.u.tolist(),
            "v": self.v.tolist(),
            "r": self.r,
            "lambda": self.lambda_out.tolist(),
            "invariant": self.invariant,
            "chiral": self.chiral,
            "residual": self.residual,
            "support": self.support,
        }


@dataclass
class SolveReport:
    solutions: list
    starts: int
    converged: int
    counts: dict = field(default_factory=dict)

    def to_dict(self):
        return {"counts": self.counts, "starts": self.starts, "converged": self.converged,
                "solutions": [s.to_dict() for s in self.solutions]}


def _normalize_lambda(lam):
    lam = np.asarray([float(x) for x in lam])
    if np.any(lam <= 0):
        raise GraphError("活度必须全部为正")
    return lam / lam.sum()


def _newton_system(A, loglam, r, target):
    n = len(loglam)

    def fun(x):
        y, t = x[:n], x[n]
        w = np.exp(y)
        z = A @ w
        F = np.empty(n + 1)
        F[:n] = y - t - loglam - r * np.log(z)
        F[n] = np.log(w.sum()) - np.log(target)
        J = np.zeros((n + 1, n + 1))
        J[:n, :n] = np.eye(n) - r * (A * w[None, :]) / z[:, None]
        J[:n, n] = -1.0
        J[n, :n] = w / w.sum()
        return F, J

    return fun


def _polish(fun, x, iters):
    """
    最小二乘 Newton 步精修 hybr 的结果。在退化点（Jacobian 奇异）附近 hybr 可能提前停下，
    这里一直走到步长可以忽略为止。离根太远时不精修。
    """
    F, J = fun(x)
    if not np.all(np.isfinite(F)) or np.max(np.abs(F)) > 1e-4:
        return x
    for _ in range(iters):
        dx = np.linalg.lstsq(J, -F, rcond=None)[0]
        x = x + dx
        F, J = fun(x)
        if not np.all(np.isfinite(F)):
            return None
        if np.max(np.abs(dx)) < 1e-15 * (1.0 + np.max(np.abs(x))):
            break
    return x


def _solve_from(A, loglam, r, target, y0, opts):
    """阻尼不动点迭代若干步后用 Newton（scipy hybr）精修，返回 (w, c, 残差) 或 None。"""
    y = y0.copy()
    alpha = opts['damping']
    with np.errstate(all='ignore'):
        for _ in range(opts['fixed_point_sweeps']):
            y_new = loglam + r * np.log(A @ np.exp(y))
            y = (1 - alpha) * y + alpha * y_new
            y -= np.log(np.exp(y).sum()) - np.log(target)
            if not np.all(np.isfinite(y)):
                return None
        t0 = float(np.mean(y - loglam - r * np.log(A @ np.exp(y))))
        fun = _newton_system(A, loglam, r, target)
        sol = root(fun, np.append(y, t0), jac=True, method='hybr',
                   options={'maxfev': opts['max_iter'] * (len(y) + 2)})
        x = sol.x
        if not np.all(np.isfinite(x)):
            return None
        x = _polish(fun, x, opts['max_iter'])
        if x is None:
            return None
        F, _ = fun(x)
    residual = float(np.max(np.abs(F)))
    if not np.isfinite(residual) or residual > opts['tol']:
        return None
    return np.exp(x[:-1]), float(np.exp(x[-1])), residual


def _multi_start(A, lam, r, target, opts, seed, threads, progress, desc, tag):
    n = len(lam)
    loglam = np.log(lam)

    def one(k):
        if k == 0:
            y0 = np.zeros(n)
        elif k == 1:
            y0 = loglam.copy()
        else:
            rng = make_rng(seed, k + tag)
            y0 = np.log(log_uniform(rng, n, opts['start_low'], opts['start_high']))
        y0 -= np.log(np.exp(y0).sum()) - np.log(target)
        return _solve_from(A, loglam, r, target, y0, opts)

    results = run_indexed(one, opts['starts'], threads=threads, progress=progress, desc=desc)
    return [res for res in results if res is not None]


def _linked(a, b, spread, opts):
    """a、b 视为同一个根：最大分量差小于 dedup_tol，或者差小于 merge_radius 且连线上的残差不超过 merge_tol。"""
    d = float(np.max(np.abs(a - b)))
    if d < opts['dedup_tol']:
        return True
    if d >= opts['merge_radius']:
        return False
    return all(spread((1 - s) * a + s * b) <= opts['merge_tol'] for s in (0.25, 0.5, 0.75))


def _clusters(n, linked):
    """单链聚类：linked(i, j) 为真的点对连边，返回各连通类的下标，按最小下标排序。"""
    if n == 0:
        return []
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n) if linked(i, j)]
    rows = np.asarray([i for i, _ in pairs], dtype=np.int64)
    cols = np.asarray([j for _, j in pairs], dtype=np.int64)
    adj = coo_matrix((np.ones(len(pairs)), (rows, cols)), shape=(n, n))
    _, labels = connected_components(adj, directed=False)
    groups = {}
    for i, label in enumerate(labels):
        groups.setdefault(int(label), []).append(i)
    return sorted(groups.values(), key=lambda g: g[0])


def _dedup(found, sub, r, lam, opts):
    """同一个 2H 分支上的根聚类后，每类保留残差最小的 (w, c)。"""
    points = [w for w, _, _ in found]

    def spread(w):
        return residuals(sub, r, lam, w, w)

    groups = _clusters(len(points), lambda i, j: _linked(points[i], points[j], spread, opts))
    return [min((found[i] for i in g), key=lambda item: item[2])[:2] for g in groups]


def _lambda_of(A_h, r, u, v):
    with np.errstate(divide='ignore', invalid='ignore'):
        a = u / (A_h @ v) ** r
        b = v / (A_h @ u) ** r
    lam = np.where(np.isfinite(a) & (u > 0), a, b)
    return lam / lam.sum()


def residuals(h, r, lam, u, v):
    """
    独立的残差检查：所有比值 u_i/(Σ_{j∼i} v_j)^r/λ_i 与 v_i/(Σ_{j∼i} u_j)^r/λ_i 应当相等。
    0/0 的项（只在部分支撑的解里出现）跳过。返回相对离差。
    """
    ratios = []
    for i in range(h.q):
        su = 0.0
        sv = 0.0
        for j in range(h.q):
            if h.adj(i, j):
                su += float(u[j])
                sv += float(v[j])
        for num, den in ((float(u[i]), sv), (float(v[i]), su)):
            if num == 0.0 and den == 0.0:
                continue
            if den == 0.0:
                return float('inf')
            ratios.append(num / den ** r / float(lam[i]))
    if not ratios:
        return float('inf')
    mean = sum(ratios) / len(ratios)
    return (max(ratios) - min(ratios)) / mean


def _merge(candidates, h, r, lam, opts):
    """
    按 (u,v) 单链聚类，(u,v) 与 (v,u) 视为同一类。
    类中有 u≈v 的成员时整类记为不变解，代表取该成员；否则取残差最小的成员。
    """
    A_h = h.adjacency_matrix().astype(float)
    q = h.q
    kept = []
    for u, v, support in candidates:
        total = u.sum() + v.sum()
        u, v = 2 * u / total, 2 * v / total
        res = residuals(h, r, lam, u, v)
        if res > max(opts['tol'], 1e-8):
            continue
        kept.append((u, v, support, res))
    points = [np.concatenate([u, v]) for u, v, _, _ in kept]
    swapped = [np.concatenate([v, u]) for u, v, _, _ in kept]

    def spread(x):
        return residuals(h, r, lam, x[:q], x[q:])

    def linked(i, j):
        return (_linked(points[i], points[j], spread, opts)
                or _linked(points[i], swapped[j], spread, opts))

    classes = []
    for group in _clusters(len(kept), linked):
        members = [kept[i] for i in group]
        symmetric = [m for m in members if np.max(np.abs(m[0] - m[1])) < opts['dedup_tol']]
        u, v, support, res = min(symmetric or members, key=lambda m: m[3])
        invariant = bool(symmetric)
        classes.append(GibbsSolution(u=u, v=v, r=r, lambda_out=_lambda_of(A_h, r, u, v),
                                     invariant=invariant, chiral=not invariant,
                                     residual=res, support=support))
    return classes


def _lambda_automorphisms(h, lam, tol=1e-12):
    if h.q > 7:
        return [tuple(range(h.q))]
    auts = []
    for perm in itertools.permutations(range(h.q)):
        if all(h.adj(perm[i], perm[j]) == h.adj(i, j) for i in range(h.q) for j in range(i, h.q)) \
                and all(abs(lam[perm[i]] - lam[i]) < tol for i in range(h.q)):
            auts.append(perm)
    return auts


def symmetry_reduced_count(h, lam, solutions, tol=1e-6):
    """在保持 λ 的 H 自同构（以及 u、v 互换）下的等价类个数。"""
    lam = _normalize_lambda(lam)
    auts = _lambda_automorphisms(h, lam)
    reps = []
    for s in solutions:
        images = []
        for perm in auts:
            p = list(perm)
            images.append((s.u[p], s.v[p]))
            images.append((s.v[p], s.u[p]))
        if not any(max(np.max(np.abs(a - r.u)), np.max(np.abs(b - r.v))) < tol
                   for r in reps for a, b in images):
            reps.append(s)
    return len(reps)


def _counts(h, lam, solutions):
    n_inv = sum(1 for s in solutions if s.invariant)
    n_chiral = sum(1 for s in solutions if s.chiral)
    return {
        "raw": n_inv + 2 * n_chiral,
        "classes": len(solutions),
        "invariant": n_inv,
        "semi_invariant_pairs": n_chiral,
        "symmetry_reduced": symmetry_reduced_count(h, lam, solutions),
    }


def _options(overrides):
    opts = dict(SOLVER_CONFIG)
    opts.update({k: v for k, v in overrides.items() if v is not None})
    return opts


def solve_invariant(h, r, lam, starts=None, tol=None, max_iter=None, seed=0, threads=1,
                    progress=False, dedup_tol=None):
    """只求不变解 u = v，即 H 上满足 w_i ∝ λ_i z_i^r 的正权重。"""
    if not graphs.is_connected(h) or h.n_edges() == 0:
        raise NotConnectedError("约束图必须连通且至少有一条边")
    opts = _options({'starts': starts, 'tol': tol, 'max_iter': max_iter, 'dedup_tol': dedup_tol})
    lam_n = _normalize_lambda(lam)
    A = h.adjacency_matrix().astype(float)
    found = _multi_start(A, lam_n, r, 1.0, opts, seed, threads, progress, "invariant", tag=0)
    candidates = [(w, w.copy(), 'full') for w, _, _ in found]
    return _merge(candidates, h, r, lam_n, opts)


def _double_solutions(h, r, lam_n, opts, seed, threads, progress):
    """在 2H 的每个连通分支上求解，再组合成 (u, v)。"""
    h2 = graphs.double(h)
    q = h.q
    lam2 = np.concatenate([lam_n, lam_n])
    per_comp = []
    for k, comp in enumerate(graphs.components(h2)):
        sub = graphs.induced(h2, comp)
        A = sub.adjacency_matrix().astype(float)
        found = _multi_start(A, lam2[comp], r, 1.0, opts, seed, threads, progress,
                             f"2H[{k}]", tag=opts['starts'] * (k + 1))
        unique = _dedup(found, sub, r, lam2[comp], opts)
        per_comp.append((comp, unique))

    candidates = []
    if len(per_comp) > 1:
        for comp, sols in per_comp:
            for w, _ in sols:
                x = np.zeros(2 * q)
                x[comp] = w
                candidates.append((x[:q], x[q:], 'partial'))
    for combo in itertools.product(*[sols for _, sols in per_comp]):
        c_ref = combo[0][1]
        x = np.zeros(2 * q)
        ok = True
        for (comp, _), (w, c) in zip(per_comp, combo):
            if r == 1:
                if abs(c - c_ref) > 1e-8 * c_ref:
                    ok = False
                    break
                x[comp] = w
            else:
                # w -> a w 使 c -> c a^{1-r}，把各分支对齐到同一个 c
                x[comp] = w * (c / c_ref) ** (1.0 / (r - 1))
        if ok:
            candidates.append((x[:q], x[q:], 'full'))
    return candidates


def solve_fundamental(h, r, lam, starts=None, tol=None, max_iter=None, seed=0, threads=1,
                      progress=False, dedup_tol=None):
    """
    多起点求解基本方程，返回 SolveReport。
    λ 先归一化到和为 1，解按 Σ(u_i+v_i)=2 归一化；(u,v) 与 (v,u) 只报告一次，chiral 标记非不变解。
    不变解直接在 H 上求，半不变解在 2H 上求；二部 H 的 2H 有两个分支，
    其中只支撑在一个分支上的解标记为 support='partial'。
    找不到解时抛出 SolverError（这只说明预算不够，不说明无解）。
    """
    if r < 1:
        raise GraphError(f"分支数 r 必须至少为 1，收到 {r}")
    if len(lam) != h.q:
        raise GraphError(f"活度长度 {len(lam)} 与节点数 {h.q} 不一致")
    if not graphs.is_connected(h) or h.n_edges() == 0:
        raise NotConnectedError("约束图必须连通且至少有一条边")
    opts = _options({'starts': starts, 'tol': tol, 'max_iter': max_iter, 'dedup_tol': dedup_tol})
    lam_n = _normalize_lambda(lam)

    invariant = solve_invariant(h, r, lam_n, seed=seed, threads=threads, progress=progress, **{
        k: opts[k] for k in ('starts', 'tol', 'max_iter', 'dedup_tol')})
    candidates = [(s.u, s.v, s.support) for s in invariant]
    candidates += _double_solutions(h, r, lam_n, opts, seed, threads, progress)
    solutions = _merge(candidates, h, r, lam_n, opts)
    if not solutions:
        raise SolverError(f"{opts['starts']} 个起点都没有收敛到解")
    solutions.sort(key=lambda s: (not s.invariant, s.support != 'full', tuple(-s.u)))
    report = SolveReport(solutions=solutions, starts=opts['starts'], converged=len(candidates))
    report.counts = _counts(h, lam_n, solutions)
    log(f"求解完成: {report.counts}")
    return report


# ----------------- 相变扫描 -----------------

LAMBDA_FAMILIES = {
    'hinge-symmetric': ('hinge', lambda t: (t, 1.0, t)),
    'hard-core': ('hard_core', lambda t: (t, 1.0)),
    'k3-tilt': ('K3', lambda t: (t, 1.0, 1.0)),
}


def _family(family):
    if callable(family):
        return family
    if family not in LAMBDA_FAMILIES:
        raise GraphError(f"未知的活度族: {family}")
    return LAMBDA_FAMILIES[family][1]


def count_at(h, r, lam, mode='invariant', **solver_kwargs):
    if mode == 'invariant':
        return len(solve_invariant(h, r, lam, **solver_kwargs))
    return solve_fundamental(h, r, lam, **solver_kwargs).counts['classes']


def count_transition(h, r, family, t_values, mode='invariant', bracket_tol=1e-6, progress=False,
                     **solver_kwargs):
    """
    沿一维活度族 λ(t) 扫描解的个数，在个数变化处用二分把临界值夹到 bracket_tol。
    """
    lam_of = _family(family)
    t_values = sorted(float(t) for t in t_values)
    counts = []
    for t in t_values:
        counts.append(count_at(h, r, lam_of(t), mode=mode, **solver_kwargs))
        if progress:
            log(f"t={t:.6g}: {counts[-1]} 个解")
    brackets = []
    for (t0, c0), (t1, c1) in zip(zip(t_values, counts), zip(t_values[1:], counts[1:])):
        if c0 == c1:
            continue
        lo, hi = t0, t1
        while hi - lo > bracket_tol:
            mid = 0.5 * (lo + hi)
            if count_at(h, r, lam_of(mid), mode=mode, **solver_kwargs) == c0:
                lo = mid
            else:
                hi = mid
        brackets.append({"from": c0, "to": c1, "low": lo, "high": hi})
    return {"t": t_values, "counts": counts, "brackets": brackets, "mode": mode}


# ----------------- 2H 与半不变测度 -----------------

def _proportional(a, b, exact):
    ratios = [x / y for x, y in zip(a, b)]
    if exact:
        return all(r == ratios[0] for r in ratios)
    return max(ratios) - min(ratios) <= 1e-9 * abs(ratios[0])


def semi_invariant_from_double(h, r, w2):
    """
    2H 上的权重 w2（前 q 个对应 +i，后 q 个对应 -i）诱导的活度，
    并检查 λ_{-i} ∝ λ_i（才能投影成 H 上的 Gibbs 测度）和 w_{-i} ∝ w_i（此时只是不变测度）。
    """
    q = h.q
    if len(w2) != 2 * q:
        raise GraphError(f"2H 的权重长度应为 {2 * q}")
    h2 = graphs.double(h)
    acts = weights_to_activities(h2, r, list(w2))
    exact = _is_exact(w2)
    lam = acts.raw
    lam_prop = _proportional(lam[q:], lam[:q], exact)
    w_prop = _proportional(list(w2[q:]), list(w2[:q]), exact)
    return {
        "lambda": acts.normalized,
        "lambda_proportional": lam_prop,
        "weights_proportional": w_prop,
        "semi_invariant": lam_prop and not w_prop,
    }


def hardcore_via_double(lam, r):
    """
    通过 2H 上的游走计算硬核模型在邻居全空时的占据概率，应等于 λ/(1+λ)。
    返回 (占据概率, λ/(1+λ))。
    """
    h = graphs.hard_core()
    sols = solve_invariant(h, r, (lam, 1.0))
    if len(sols) != 1:
        raise SolverError("硬核模型应恰有一个不变解")
    s = sols[0]
    bw = BranchingWalk(graphs.double(h), r, np.concatenate([s.u, s.v]))
    vacant_minus = h.q + 1  # -vacant
    check = conditional_spin_check(bw, [vacant_minus] * r, parent=vacant_minus)
    return float(check["walk"][0]), lam / (1.0 + lam)


# ----------------- 冻结构型与长程作用 -----------------

def frozen_coloring(r, q=None, depth=3, seed=0):
    """
    q = r+1 时的刚性着色：每个站点的孩子恰好用到除自身颜色外的所有颜色。
    根有 r+1 个孩子却只有 r 种可用颜色，重复哪一种由种子决定。
    """
    q = r + 1 if q is None else q
    if q != r + 1:
        raise GraphError(f"冻结着色只在 q = r+1 时构造，收到 q={q}, r={r}")
    board = graphs.tree(r, depth)
    rng = make_rng(seed)
    spins = np.zeros(board.n_sites, dtype=np.int64)
    spins[0] = rng.integers(q)
    for u in range(board.n_sites):
        kids = board.children(u)
        if not kids:
            continue
        others = [c for c in range(q) if c != spins[u]]
        if u == 0:
            others.append(others[rng.integers(len(others))])
        spins[kids] = rng.permutation(others)
    return TreeConfig(board=board, spins=spins, h=graphs.complete(q), root_source='frozen')


def frozen_cycle_map(depth=3, seed=0):
    """hom(T², C_5) 中完全冻结的映射：自旋为 i 的站点的孩子取 i+1 和 i-1。"""
    board = graphs.tree(2, depth)
    rng = make_rng(seed)
    spins = np.zeros(board.n_sites, dtype=np.int64)
    spins[0] = rng.integers(5)
    for u in range(board.n_sites):
        kids = board.children(u)
        if not kids:
            continue
        s = int(spins[u])
        colors = [(s + 1) % 5, (s - 1) % 5]
        if u == 0:
            colors.append(colors[rng.integers(2)])
        spins[kids] = rng.permutation(colors)
    return TreeConfig(board=board, spins=spins, h=graphs.cycle(5), root_source='frozen')


def greedy_homomorphism(h, r, depth):
    """根取 0，之后每个孩子取父自旋的最小邻居，得到一个确定的同态。"""
    board = graphs.tree(r, depth)
    spins = np.zeros(board.n_sites, dtype=np.int64)
    if not h.neighbors(0):
        raise NotConnectedError("节点 0 没有邻居")
    for u in range(1, board.n_sites):
        spins[u] = h.neighbors(int(spins[board.parent[u]]))[0]
    return TreeConfig(board=board, spins=spins, h=h, root_source='greedy')


def _is_complete_loopless(h):
    return not h.loops and all(h.adj(i, j) for i in range(h.q) for j in range(h.q) if i != j)


def long_range_action_probe(h, r, depth, phi=None, seed=0):
    """
    对 n = 1..depth，固定 φ 在距根 n 的球面上的值，用树动态规划求根能取到的自旋。
    若某个自旋在所有 n 下都被排除，则在该深度内观察到长程作用。
    只能在有限深度内证实长程作用，不能证明它不存在。
    """
    if phi is None:
        if _is_complete_loopless(h) and h.q == r + 1:
            phi = frozen_coloring(r, h.q, depth, seed=seed)
        else:
            phi = greedy_homomorphism(h, r, depth)
    if not phi.is_valid():
        raise InfeasibleError("候选构型 φ 不是同态")
    per_depth = []
    excluded_always = set(range(h.q))
    for n in range(1, depth + 1):
        board = graphs.tree(r, n)
        sphere = np.flatnonzero(board.depth == n)
        pinned = {int(u): int(phi.spins[u]) for u in sphere}
        feasible = homspace.tree_feasible_spins(board, h, pinned)
        excluded = sorted(set(range(h.q)) - set(feasible))
        excluded_always &= set(excluded)
        per_depth.append({"n": n, "feasible": feasible, "excluded": excluded})
    return {
        "root_spin": int(phi.spins[0]),
        "per_depth": per_depth,
        "excluded_always": sorted(excluded_always),
        "long_range_action": bool(excluded_always),
    }
