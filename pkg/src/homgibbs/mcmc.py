"""
有限棋盘上的单点热浴链 P(G,H,λ)：每次均匀选一个未钉住的站点，
在邻居自旋给定时按 λ 限制在合法自旋上的比例重新取值。
一次扫描 = 未钉住站点数次更新，每次扫描后记录一次统计。
"""
import json
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy.stats import chisquare

from . import graphs, homspace
from .utils import render as render_utils
from .utils.config import MCMC_CONFIG, log
from .utils.errors import ConfigError, GraphError, InfeasibleError
from .utils.rng import make_rng
from .utils.workers import run_indexed

# 每块预抽均匀数的上限（双精度个数）
MAX_BLOCK = 2 ** 22


# ----------------- numba 内核 -----------------

@njit(nogil=True)
def _update_site(spins, indptr, indices, rows, lam, u, coin, q):
    """u 处的一次热浴更新；没有合法自旋时返回 False。"""
    mask = (1 << q) - 1
    for p in range(indptr[u], indptr[u + 1]):
        mask &= rows[spins[indices[p]]]
    total = 0.0
    for s in range(q):
        if (mask >> s) & 1:
            total += lam[s]
    if total <= 0.0:
        return False
    target = coin * total
    acc = 0.0
    chosen = -1
    for s in range(q):
        if (mask >> s) & 1:
            acc += lam[s]
            chosen = s
            if target < acc:
                break
    spins[u] = chosen
    return True


@njit(nogil=True)
def _record(spins, parity, q, t, counts, codes, record_codes, watch, watched):
    for s in range(q):
        counts[t, 0, s] = 0
        counts[t, 1, s] = 0
    for u in range(spins.shape[0]):
        counts[t, parity[u], spins[u]] += 1
    if record_codes:
        code = 0
        for u in range(spins.shape[0]):
            code = code * q + spins[u]
        codes[t] = code
    for j in range(watch.shape[0]):
        watched[t, j] = spins[watch[j]]


@njit(nogil=True)
def _heat_bath_chunk(spins, indptr, indices, rows, lam, free_sites, uniforms, parity, q,
                     counts, codes, record_codes, watch, watched):
    """
    uniforms 的第 t 行是第 t 次扫描的全部随机数：前 n 个选站点，后 n 个选自旋。
    成功返回 -1，出现无合法自旋的站点时返回出错的扫描编号。
    """
    n = free_sites.shape[0]
    for t in range(uniforms.shape[0]):
        for k in range(n):
            idx = int(uniforms[t, k] * n)
            if idx >= n:
                idx = n - 1
            if not _update_site(spins, indptr, indices, rows, lam, free_sites[idx],
                                uniforms[t, n + k], q):
                return t
        _record(spins, parity, q, t, counts, codes, record_codes, watch, watched)
    return -1


@njit(nogil=True)
def _hard_core_chunk(spins, indptr, indices, lam_occ, lam_vac, free_sites, uniforms, parity,
                     counts, codes, record_codes, watch, watched):
    """硬核模型的快速路径（0 = 占据，1 = 空），与通用内核消耗同样的随机数、给出同样的轨迹。"""
    n = free_sites.shape[0]
    total = lam_occ + lam_vac
    for t in range(uniforms.shape[0]):
        for k in range(n):
            idx = int(uniforms[t, k] * n)
            if idx >= n:
                idx = n - 1
            u = free_sites[idx]
            blocked = False
            for p in range(indptr[u], indptr[u + 1]):
                if spins[indices[p]] == 0:
                    blocked = True
                    break
            if blocked:
                spins[u] = 1
            elif uniforms[t, n + k] * total < lam_occ:
                spins[u] = 0
            else:
                spins[u] = 1
        _record(spins, parity, 2, t, counts, codes, record_codes, watch, watched)
    return -1


# ----------------- 链状态与统计 -----------------

@dataclass
class ChainState:
    board: graphs.Board
    h: graphs.ConstraintGraph
    lam: np.ndarray
    spins: np.ndarray
    rng: np.random.Generator
    pinned: dict = field(default_factory=dict)
    sweeps_done: int = 0
    steps_done: int = 0

    @property
    def free_sites(self):
        mask = np.ones(self.board.n_sites, dtype=bool)
        mask[list(self.pinned)] = False
        return np.flatnonzero(mask).astype(np.int64)


@dataclass
class RunStats:
    """
    counts[t, p, s]：第 t 次扫描后奇偶类 p 中自旋为 s 的站点数（非二部棋盘全部计入 p=0）。
    """
    counts: np.ndarray
    final_spins: np.ndarray
    sweeps: int
    burn_in: int
    updates: int
    bipartite: bool
    seed: int = 0
    stream: int = 0
    codes: np.ndarray = None
    watched: np.ndarray = None

    def color_counts(self):
        return self.counts.sum(axis=1)

    def occupied_series(self, occupied=(0,)):
        return self.counts[:, :, list(occupied)].sum(axis=(1, 2))

    def even_odd(self, occupied=(0,)):
        sub = self.counts[:, :, list(occupied)].sum(axis=2)
        return sub[:, 0], sub[:, 1]

    def to_dict(self, occupied=(0,)):
        data = {
            "sweeps": self.sweeps,
            "burn_in": self.burn_in,
            "updates": self.updates,
            "seed": self.seed,
            "stream": self.stream,
            "final_color_counts": self.color_counts()[-1].tolist() if self.sweeps else [],
            "mean_occupied": float(self.occupied_series(occupied)[self.burn_in:].mean())
            if self.sweeps > self.burn_in else None,
        }
        if self.bipartite and self.sweeps:
            data["final_rho"] = float(parity_statistic(self, occupied)[-1])
        return data

    def csv_rows(self, occupied=(0,)):
        """时间序列：扫描编号、占据数、偶数占据、奇数占据和各自旋计数。"""
        even, odd = self.even_odd(occupied)
        colors = self.color_counts()
        return [[t + 1, int(even[t] + odd[t]), int(even[t]), int(odd[t])] + colors[t].tolist()
                for t in range(self.sweeps)]


def _is_hard_core(h):
    return h == graphs.hard_core()


def _lam_array(h, lam):
    if len(lam) != h.q:
        raise GraphError(f"活度向量长度 {len(lam)} 与节点数 {h.q} 不一致")
    lam = np.asarray([float(x) for x in lam], dtype=np.float64)
    if np.any(lam <= 0):
        raise GraphError("活度必须全部为正")
    return lam


def _parity(board):
    par = board.parity()
    if par is None:
        return np.zeros(board.n_sites, dtype=np.int64), False
    return par.astype(np.int64), True


def check_valid(state):
    """断言当前构型是同态且与钉住值一致。"""
    if not homspace.is_homomorphism(state.board, state.h, state.spins):
        raise InfeasibleError(f"第 {state.sweeps_done} 次扫描后构型不再是同态")
    for u, s in state.pinned.items():
        if state.spins[u] != s:
            raise InfeasibleError(f"钉住站点 {u} 的自旋被改动")
    return True


# ----------------- 初始构型 -----------------

def init_constant(g, h, spin=None):
    """所有站点取同一个带环自旋，默认取第一个带环节点。"""
    if spin is None:
        if not h.loops:
            raise InfeasibleError("约束图没有带环节点，无法使用常值初始构型")
        spin = h.loops[0]
    if not h.is_looped(spin) and g.n_edges() > 0:
        raise InfeasibleError(f"自旋 {spin} 不带环，常值构型不是同态")
    return np.full(g.n_sites, int(spin), dtype=np.int64)


def init_sublattice(g, h, parity=0, occupied=0, background=None):
    """
    奇偶类 parity 上的站点取 occupied，其余取 background。
    硬核模型下 parity=0 就是“偶数站点全占据”。
    """
    par = g.parity()
    if par is None:
        raise GraphError("棋盘不是二部图，没有奇偶子格")
    if background is None:
        candidates = [s for s in h.loops if h.adj(s, occupied)]
        if not candidates:
            raise InfeasibleError(f"找不到与 {occupied} 相邻的带环自旋作为背景")
        background = candidates[0]
    spins = np.where(par == parity, int(occupied), int(background)).astype(np.int64)
    if not homspace.is_homomorphism(g, h, spins):
        raise InfeasibleError("子格初始构型不是同态")
    return spins


def init_greedy(g, h, seed=0, pinned=None, attempts=50):
    """按随机顺序贪心赋值，每个站点在已赋值邻居允许的自旋里均匀抽取。"""
    pinned = {int(u): int(s) for u, s in (pinned or {}).items()}
    for attempt in range(attempts):
        rng = make_rng(seed, attempt)
        spins = np.full(g.n_sites, -1, dtype=np.int64)
        for u, s in pinned.items():
            spins[u] = s
        ok = True
        for u in rng.permutation(g.n_sites):
            if spins[u] >= 0:
                continue
            mask = (1 << h.q) - 1
            for v in g.neighbors(u):
                if spins[v] >= 0:
                    mask &= h.rows[spins[v]]
            legal = [s for s in range(h.q) if (mask >> s) & 1]
            if not legal:
                ok = False
                break
            spins[u] = legal[rng.integers(len(legal))]
        if ok:
            return spins
    raise InfeasibleError(f"{attempts} 次贪心尝试都没有得到同态")


def init_from_file(path):
    """读取 JSON 文件中的自旋列表，可以是列表本身或 {"spins": [...]}。"""
    with open(path, 'r', encoding='utf-8') as f:
        data = json.load(f)
    if isinstance(data, dict):
        data = data.get("spins")
    if not isinstance(data, list):
        raise GraphError(f"{path} 中没有自旋列表")
    return np.asarray(data, dtype=np.int64)


def resolve_init(g, h, init, seed=0, stream=0, pinned=None):
    """把初始构型的名字或数组转换成自旋数组。"""
    if init is None or (isinstance(init, str) and init in ('random', 'greedy')):
        spins = init_greedy(g, h, seed=seed + stream, pinned=pinned)
    elif isinstance(init, str):
        if init == 'even':
            spins = init_sublattice(g, h, parity=0)
        elif init == 'odd':
            spins = init_sublattice(g, h, parity=1)
        elif init == 'constant':
            spins = init_constant(g, h)
        elif init.startswith('constant:'):
            spins = init_constant(g, h, int(init.split(':', 1)[1]))
        else:
            spins = init_from_file(init)
    elif callable(init):
        spins = np.asarray(init(stream), dtype=np.int64)
    else:
        spins = np.asarray(init, dtype=np.int64)
    if len(spins) != g.n_sites:
        raise GraphError(f"初始构型长度 {len(spins)} 与站点数 {g.n_sites} 不一致")
    return spins.copy()


def pin_boundary(board, parity=0, occupied=0, background=1):
    """网格盒子的外层站点：奇偶类 parity 取 occupied，其余取 background。"""
    if board.kind != 'grid':
        raise GraphError("只有网格棋盘有外边界")
    n = board.params['n']
    par = board.parity()
    outer = np.flatnonzero(np.abs(board.coords).max(axis=1) == n)
    return {int(u): int(occupied if par[u] == parity else background) for u in outer}


# ----------------- 运行 -----------------

def new_chain(g, h, lam, init=None, seed=0, stream=0, pinned=None):
    lam = _lam_array(h, lam)
    pinned = {int(u): int(s) for u, s in (pinned or {}).items()}
    spins = resolve_init(g, h, init, seed=seed, stream=stream, pinned=pinned)
    for u, s in pinned.items():
        spins[u] = s
    state = ChainState(board=g, h=h, lam=lam, spins=spins, rng=make_rng(seed, stream), pinned=pinned)
    check_valid(state)
    return state


def step(state):
    """一次单点更新（均匀选站点）。"""
    free = state.free_sites
    if len(free) == 0:
        return state
    coins = state.rng.random(2)
    u = free[min(int(coins[0] * len(free)), len(free) - 1)]
    rows = np.asarray(state.h.rows, dtype=np.int64)
    g = state.board
    ok = _update_site(state.spins, g.indptr, g.indices, rows, state.lam, u, coins[1], state.h.q)
    if not ok:
        raise InfeasibleError(f"站点 {u} 没有合法自旋")
    state.steps_done += 1
    return state


def advance(state, sweeps, record_codes=False, watch=(), burn_in=0, fast_path=True):
    """
    让链前进 sweeps 次扫描，返回这段的 RunStats。
    随机数按扫描顺序成块抽取，因此结果与分块大小无关。
    """
    g, h = state.board, state.h
    free = state.free_sites
    n = len(free)
    parity, bipartite = _parity(g)
    counts = np.zeros((sweeps, 2, h.q), dtype=np.int64)
    if record_codes and g.n_sites * np.log2(max(h.q, 2)) > 62:
        raise GraphError("棋盘太大，无法把整个构型编码成一个整数")
    codes = np.zeros(sweeps if record_codes else 0, dtype=np.int64)
    watch = np.asarray(watch, dtype=np.int64)
    watched = np.zeros((sweeps, len(watch)), dtype=np.int64)
    rows = np.asarray(h.rows, dtype=np.int64)
    use_fast = fast_path and _is_hard_core(h)
    check_every = MCMC_CONFIG['debug_check_every']

    chunk = max(1, MAX_BLOCK // max(1, 2 * n))
    if check_every:
        chunk = min(chunk, check_every)
    done = 0
    while done < sweeps:
        m = min(chunk, sweeps - done)
        if n == 0:
            uniforms = np.zeros((m, 0))
        else:
            uniforms = state.rng.random((m, 2 * n))
        sl = slice(done, done + m)
        c_codes = codes[sl] if record_codes else codes
        if use_fast:
            status = _hard_core_chunk(state.spins, g.indptr, g.indices, state.lam[0], state.lam[1],
                                      free, uniforms, parity, counts[sl], c_codes, record_codes,
                                      watch, watched[sl])
        else:
            status = _heat_bath_chunk(state.spins, g.indptr, g.indices, rows, state.lam, free,
                                      uniforms, parity, h.q, counts[sl], c_codes, record_codes,
                                      watch, watched[sl])
        if status >= 0:
            raise InfeasibleError(f"第 {state.sweeps_done + done + status} 次扫描中出现没有合法自旋的站点")
        done += m
        state.sweeps_done += m
        state.steps_done += m * n
        if check_every:
            check_valid(state)
    return RunStats(counts=counts, final_spins=state.spins.copy(), sweeps=sweeps, burn_in=burn_in,
                    updates=sweeps * n, bipartite=bipartite, codes=codes if record_codes else None,
                    watched=watched)


def run(g, h, lam, init=None, sweeps=1000, seed=0, stream=0, pinned=None, burn_in=None,
        record_codes=False, watch=(), fast_path=True):
    """一条链：构造初始状态，跑 sweeps 次扫描。burn_in 默认取 sweeps 的 20%。"""
    if burn_in is None:
        burn_in = int(MCMC_CONFIG['burn_in_fraction'] * sweeps)
    state = new_chain(g, h, lam, init=init, seed=seed, stream=stream, pinned=pinned)
    stats = advance(state, sweeps, record_codes=record_codes, watch=watch, burn_in=burn_in,
                    fast_path=fast_path)
    stats.seed, stats.stream = seed, stream
    return stats


def run_replicas(g, h, lam, init=None, sweeps=1000, seed=0, replicas=1, threads=1, pinned=None,
                 burn_in=None, progress=False, **kwargs):
    """
    独立副本，第 k 个副本使用流 (seed, k)。init 可以是 k -> 初始构型的函数。
    结果按副本编号排列，与线程数无关。
    """
    def one(k):
        init_k = init(k) if callable(init) else init
        return run(g, h, lam, init=init_k, sweeps=sweeps, seed=seed, stream=k, pinned=pinned,
                   burn_in=burn_in, **kwargs)

    return run_indexed(one, replicas, threads=threads, progress=progress, desc="replicas")


# ----------------- 统计量 -----------------

def parity_statistic(stats, occupied=(0,)):
    """ρ = 偶数占据 / (偶数占据 + 奇数占据)，没有占据站点时记为 1/2。"""
    if not stats.bipartite:
        raise GraphError("棋盘不是二部图，奇偶统计量无定义")
    even, odd = stats.even_odd(occupied)
    total = even + odd
    with np.errstate(invalid='ignore', divide='ignore'):
        rho = np.where(total > 0, even / np.maximum(total, 1), 0.5)
    return rho


def _late_rho(stats, occupied, statistic):
    rho = parity_statistic(stats, occupied)
    if statistic == 'final':
        return float(rho[-1])
    if statistic != 'late_mean':
        raise ConfigError('statistic', f"未知的统计量 {statistic!r}，可选 late_mean/final")
    k = max(1, int(MCMC_CONFIG['late_fraction'] * len(rho)))
    return float(np.mean(rho[-k:]))


def bimodality_report(runs, occupied=(0,), low=None, high=None, bins=20, statistic='late_mean'):
    """
    每个副本的 ρ 的直方图和落在 [low, high] 内的比例（dip 比例）。
    statistic='late_mean' 取最后 late_fraction 段扫描的平均，'final' 只取末态。
    """
    low = MCMC_CONFIG['dip_low'] if low is None else low
    high = MCMC_CONFIG['dip_high'] if high is None else high
    values = np.array([_late_rho(s, occupied, statistic) for s in runs])
    hist, edges = np.histogram(values, bins=bins, range=(0.0, 1.0))
    dip = float(np.mean((values >= low) & (values <= high))) if len(values) else 0.0
    return {
        "n_runs": len(values),
        "statistic": statistic,
        "rho": values.tolist(),
        "histogram": hist.tolist(),
        "bin_edges": edges.tolist(),
        "dip_fraction": dip,
        "window": [low, high],
        "bimodal": dip < 0.1,
    }


def hard_core_bimodality(board, lam, replicas=200, sweeps=10**4, seed=0, threads=1, progress=False):
    """硬核模型：一半副本从偶数全占据出发，一半从奇数全占据出发。"""
    h = graphs.hard_core()
    runs = run_replicas(board, h, (lam, 1.0), init=lambda k: 'even' if k % 2 == 0 else 'odd',
                        sweeps=sweeps, seed=seed, replicas=replicas, threads=threads,
                        progress=progress)
    report = bimodality_report(runs)
    report["lambda"] = lam
    log(f"λ={lam}: dip 比例 {report['dip_fraction']:.3f}")
    return report


def dominance_statistic(stats):
    """(绿 − 红)/(绿 + 红)，取末态；两者都为 0 时记为 0。"""
    colors = stats.color_counts()[-1]
    green, red = colors[graphs.GREEN], colors[graphs.RED]
    return 0.0 if green + red == 0 else float(green - red) / float(green + red)


def wr_dominance(g, t_values, replicas=40, sweeps=2000, seed=0, threads=1, yellow=1.0,
                 polarized=0.5, progress=False):
    """
    Widom-Rowlinson：λ = (t, yellow, t)，一半副本从全绿出发，一半从全红出发。
    对每个 t 报告末态优势统计量的分布；相邻两个 t 之间 |D| > polarized 的比例
    跨过 1/2 时记为对称性破缺的窗口。
    """
    h = graphs.hinge()
    rows = []
    for t in t_values:
        runs = run_replicas(
            g, h, (t, yellow, t),
            init=lambda k: f"constant:{graphs.GREEN if k % 2 == 0 else graphs.RED}",
            sweeps=sweeps, seed=seed, replicas=replicas, threads=threads, progress=progress)
        d = np.array([dominance_statistic(s) for s in runs])
        hist, _ = np.histogram(d, bins=20, range=(-1.0, 1.0))
        rows.append({
            "t": float(t),
            "dominance": d.tolist(),
            "mean_abs": float(np.mean(np.abs(d))),
            "polarized_fraction": float(np.mean(np.abs(d) > polarized)),
            "histogram": hist.tolist(),
        })
        log(f"t={t}: 平均 |D| = {rows[-1]['mean_abs']:.3f}")
    window = None
    for a, b in zip(rows, rows[1:]):
        if a["polarized_fraction"] < 0.5 <= b["polarized_fraction"]:
            window = [a["t"], b["t"]]
            break
    return {"rows": rows, "onset_window": window}


def autocorrelation_time(series):
    """积分自相关时间（初始正序列估计）。"""
    series = np.asarray(series, dtype=float)
    n = len(series)
    var = np.var(series)
    if n < 2 or var == 0:
        return 1.0
    centered = series - series.mean()
    tau_int = 0.5
    for t in range(1, n // 2):
        c_t = np.mean(centered[:n - t] * centered[t:]) / var
        if c_t < 0:
            break
        tau_int += c_t
    return max(tau_int, 0.5)


def encode_state(spins, q):
    code = 0
    for s in spins:
        code = code * q + int(s)
    return code


def state_histogram(stats, thin=10):
    """烧入期之后每 thin 次扫描取一次状态编码，返回 Counter。"""
    if stats.codes is None:
        raise GraphError("这次运行没有记录状态编码（record_codes=False）")
    return Counter(stats.codes[stats.burn_in::thin].tolist())


def chi_square_check(hist, probs):
    """
    :param hist: 状态编码 -> 次数。
    :param probs: 状态编码 -> 理论概率。
    :return: dict，含统计量、p 值和自由度；理论概率为 0 的状态出现即判为失败。
    """
    keys = sorted(probs)
    stray = sum(c for k, c in hist.items() if k not in probs)
    observed = np.array([hist.get(k, 0) for k in keys], dtype=float)
    total = observed.sum() + stray
    expected = np.array([float(probs[k]) for k in keys]) * total
    if stray:
        return {"statistic": float('inf'), "p_value": 0.0, "dof": len(keys) - 1, "stray": stray}
    result = chisquare(observed, expected)
    return {"statistic": float(result.statistic), "p_value": float(result.pvalue),
            "dof": len(keys) - 1, "stray": 0}


def exactness_check(g, h, lam, sweeps=10**6, seed=0, thin=10, init=None):
    """长链的状态频率与精确 λ 测度做 χ² 检验。"""
    hs = homspace.enumerate_homs(g, h)
    mu = homspace.lambda_measure(hs, lam)
    probs = {encode_state(m, h.q): mu[k] for k, m in enumerate(hs.maps.tolist())}
    stats = run(g, h, lam, init=init, sweeps=sweeps, seed=seed, record_codes=True)
    hist = state_histogram(stats, thin=thin)
    report = chi_square_check(hist, probs)
    report["states"] = len(probs)
    report["samples"] = int(sum(hist.values()))
    return report


def boundary_influence_decay(n_values, lam, exact_max_n=2, sweeps=4000, replicas=8, seed=0,
                             threads=1):
    """
    硬核模型在盒子 B_n 上，外边界按偶数占据或奇数占据钉住时中心站点的占据概率之差。
    小盒子精确枚举，大盒子用钉住边界的链估计。
    """
    h = graphs.hard_core()
    rows = []
    for n in n_values:
        board = graphs.grid_box(n, 2)
        centre = int(np.flatnonzero(np.abs(board.coords).sum(axis=1) == 0)[0])
        probs = {}
        method = 'exact' if n <= exact_max_n else 'mcmc'
        for parity in (0, 1):
            pinned = pin_boundary(board, parity=parity)
            if method == 'exact':
                law = homspace.boundary_influence(board, h, (lam, 1), pinned, centre, use_tree_dp=False)
                probs[parity] = float(law[0])
            else:
                init = init_sublattice(board, h, parity=parity)
                runs = run_replicas(board, h, (lam, 1.0), init=init, sweeps=sweeps, seed=seed,
                                    replicas=replicas, threads=threads, pinned=pinned,
                                    watch=[centre])
                probs[parity] = float(np.mean([np.mean(s.watched[s.burn_in:, 0] == 0) for s in runs]))
        rows.append({"n": n, "method": method, "p_even": probs[0], "p_odd": probs[1],
                     "influence": probs[0] - probs[1]})
    return rows


def render(board, h, spins, path, block=4, blank=None):
    """把网格构型写成图像文件；硬核模型按奇偶区分占据站点。返回 (bool, message)。"""
    image = render_utils.config_image(board, h, spins, block=block, blank=blank,
                                      hard_core=_is_hard_core(h))
    return render_utils.save_image(image, path)
