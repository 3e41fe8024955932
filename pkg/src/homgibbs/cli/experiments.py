"""
打包好的复现实验。每个实验返回 {"id", "passed", "expected", "observed"}，
fast=True 时用较小的规模做冒烟检查。
"""
import sys
import threading
from fractions import Fraction

import numpy as np

from .. import classify, graphs, homspace, mcmc, treegibbs
from ..utils.config import log
from ..utils.rng import log_uniform, make_rng
from .state import bundle_results


def _result(bundle_id, passed, expected, observed):
    return {"id": bundle_id, "passed": bool(passed), "expected": expected, "observed": observed}


def _hinge_weightings(seed=0, threads=1):
    """三组铰链权重：(4,2,1)、求解器给出的对称解、(1,2,4)。"""
    h = graphs.hinge()
    sols = treegibbs.solve_invariant(h, 2, (49, 18, 49), seed=seed, threads=threads)
    symmetric = [s for s in sols if abs(s.weights[0] - s.weights[2]) < 1e-8]
    if not symmetric:
        return None
    return [(4, 2, 1), tuple(symmetric[0].weights), (1, 2, 4)]


# ----------------- 铰链 -----------------

def hinge_activities(fast=False, seed=0, threads=1):
    acts = treegibbs.weights_to_activities(graphs.hinge(), 2, (4, 2, 1))
    observed = list(acts.integers())
    return _result('hinge-activities', observed == [49, 18, 49], [49, 18, 49], observed)


def hinge_multiplicity(fast=False, seed=0, threads=1):
    h = graphs.hinge()
    starts = 60 if fast else None
    report = treegibbs.solve_fundamental(h, 2, (49, 18, 49), starts=starts, seed=seed, threads=threads)
    sols = [s for s in report.solutions if s.invariant]
    profiles = [s.weights for s in sols]
    targets = {"4,2,1": np.array([4, 2, 1]) / 7, "1,2,4": np.array([1, 2, 4]) / 7}
    found = {k: any(np.max(np.abs(p - t)) < 1e-8 for p in profiles) for k, t in targets.items()}
    symmetric = [p.tolist() for p in profiles if abs(p[0] - p[2]) < 1e-8]
    passed = len(sols) >= 3 and all(found.values()) and len(symmetric) >= 1
    return _result('hinge-multiplicity', passed,
                   {"invariant_solutions": ">= 3", "profiles": list(targets), "symmetric": 1},
                   {"invariant_solutions": len(sols), "profiles": found, "symmetric": symmetric})


def conditional_symmetry(fast=False, seed=0, threads=1):
    bw = treegibbs.BranchingWalk(graphs.hinge(), 2, (4, 2, 1))
    y = graphs.YELLOW
    check = treegibbs.conditional_spin_check(bw, [y, y], parent=y)
    green, red = check["walk_weights"][graphs.GREEN], check["walk_weights"][graphs.RED]
    expected = Fraction(4, 7) * Fraction(1, 3) ** 2
    passed = green == red == expected and check["max_gap"] == 0
    return _result('conditional-symmetry', passed, str(expected),
                   {"green": str(green), "red": str(red), "max_gap": str(check["max_gap"])})


def stationary_fractions(fast=False, seed=0, threads=1):
    weightings = _hinge_weightings(seed=seed, threads=threads)
    expected = [0.59, 0.30, 0.07]
    if weightings is None:
        return _result('stationary-fractions', False, expected, "没有找到对称解")
    observed = [float(treegibbs.BranchingWalk(graphs.hinge(), 2, w).stationary_law()[graphs.GREEN])
                for w in weightings]
    passed = all(abs(o - e) <= 0.02 for o, e in zip(observed, expected))
    return _result('stationary-fractions', passed, expected, observed)


# ----------------- 分类 -----------------

def dichotomy(fast=False, seed=0, threads=1):
    summary = classify.cross_check_corpus(4 if fast else 5, threads=threads)
    return _result('dichotomy', not summary["mismatches"], {"mismatches": 0}, summary)


def _random_lambdas(q, n, seed, salt):
    return [log_uniform(make_rng(seed, salt * 1000 + k), q, 0.1, 10.0) for k in range(n)]


def sterile_uniqueness(fast=False, seed=0, threads=1):
    n_lambda = 3 if fast else 20
    starts = 40 if fast else None
    sterile = [h for h in graphs.enumerate_corpus(4) if classify.is_sterile(h)]
    failures = []
    checked = 0
    for idx, h in enumerate(sterile):
        for r in (2, 3):
            for lam in _random_lambdas(h.q, n_lambda, seed, idx * 10 + r):
                n = len(treegibbs.solve_invariant(h, r, lam, starts=starts, seed=seed, threads=threads))
                checked += 1
                if n != 1:
                    failures.append({"edges": h.edges(), "loops": h.loops, "r": r,
                                     "lambda": lam.tolist(), "solutions": n})
    return _result('sterile-uniqueness', not failures, {"solutions_each": 1},
                   {"graphs": len(sterile), "cases": checked, "failures": failures})


def r1_uniqueness(fast=False, seed=0, threads=1):
    n_cases = 20 if fast else 100
    starts = 40 if fast else None
    corpus = graphs.enumerate_corpus(5)
    rng = make_rng(seed, 7)
    failures = []
    for k in range(n_cases):
        h = corpus[int(rng.integers(len(corpus)))]
        lam = log_uniform(make_rng(seed, 100 + k), h.q, 0.1, 10.0)
        n = len(treegibbs.solve_invariant(h, 1, lam, starts=starts, seed=seed, threads=threads))
        if n != 1:
            failures.append({"edges": h.edges(), "loops": h.loops, "lambda": lam.tolist(), "solutions": n})
    return _result('r1-uniqueness', not failures, {"solutions_each": 1},
                   {"cases": n_cases, "failures": failures})


def coloring_threshold(fast=False, seed=0, threads=1):
    starts = 60 if fast else None

    def classes(h, lam):
        report = treegibbs.solve_fundamental(h, 2, lam, starts=starts, seed=seed, threads=threads)
        return report.counts["classes"]

    observed = {
        "K2_uniform": classes(graphs.complete(2), (1, 1)),
        "K3_uniform": classes(graphs.complete(3), (1, 1, 1)),
        "K3_tilted": classes(graphs.complete(3), (2, 1, 1)),
        "K4_uniform": classes(graphs.complete(4), (1, 1, 1, 1)),
    }
    passed = (observed["K2_uniform"] >= 2 and observed["K3_uniform"] == 1
              and observed["K3_tilted"] >= 2 and observed["K4_uniform"] == 1)
    expected = {"K2_uniform": ">= 2", "K3_uniform": 1, "K3_tilted": ">= 2", "K4_uniform": 1}
    return _result('coloring-threshold', passed, expected, observed)


def weak_square_isolation(fast=False, seed=0, threads=1):
    checked = []
    failures = []
    for h in graphs.enumerate_corpus(4):
        if classify.fold_pairs(h) or classify.dismantle(h) is not None:
            continue
        board = graphs.weak_square(h)
        pi1 = graphs.projection(h, 1)
        checked.append(h)
        if not homspace.is_isolated_map(board, h, pi1):
            failures.append({"edges": h.edges(), "loops": h.loops})
    return _result('weak-square-isolation', not failures and bool(checked), {"isolated": "all"},
                   {"graphs": len(checked), "failures": failures})


def frozen_rigidity(fast=False, seed=0, threads=1):
    fc = treegibbs.frozen_coloring(2, 3, 4, seed=seed)
    board = fc.board
    boundary = {int(u): int(fc.spins[u]) for u in np.flatnonzero(board.depth == 4)}
    extensions = homspace.tree_extension_count(board, fc.h, boundary)
    probe = treegibbs.long_range_action_probe(graphs.complete(3), 2, 6, seed=seed)
    excluded = [len(row["excluded"]) for row in probe["per_depth"]]
    passed = extensions == 1 and all(e == 2 for e in excluded)
    return _result('frozen-rigidity', passed, {"extensions": 1, "excluded_per_depth": [2] * 6},
                   {"extensions": extensions, "excluded_per_depth": excluded})


# ----------------- 链 -----------------

def mcmc_exactness(fast=False, seed=0, threads=1):
    sweeps = 2 * 10**5 if fast else 10**6
    report = mcmc.exactness_check(graphs.complete_board(2), graphs.hard_core(), (2, 1),
                                  sweeps=sweeps, seed=seed)
    return _result('mcmc-exactness', report["p_value"] > 0.001, {"p_value": "> 0.001"}, report)


def hardcore_bimodality(fast=False, seed=0, threads=1):
    board = graphs.grid_box(15, 2)
    replicas, sweeps = (40, 2000) if fast else (200, 10**4)
    low = mcmc.hard_core_bimodality(board, 0.5, replicas=replicas, sweeps=sweeps, seed=seed,
                                    threads=threads)
    hi = mcmc.hard_core_bimodality(board, 5.0, replicas=replicas, sweeps=sweeps, seed=seed,
                                   threads=threads)
    passed = low["dip_fraction"] > 0.9 and hi["dip_fraction"] < 0.1
    return _result('hardcore-bimodality', passed,
                   {"dip_low_lambda": "> 0.9", "dip_high_lambda": "< 0.1"},
                   {"lambda": [0.5, 5.0], "replicas": replicas, "sweeps": sweeps,
                    "statistic": low["statistic"], "dip": [low["dip_fraction"], hi["dip_fraction"]]})


def wr_dominance(fast=False, seed=0, threads=1):
    board = graphs.grid_box(6 if fast else 10, 2)
    report = mcmc.wr_dominance(board, [0.2, 10.0], replicas=10 if fast else 40,
                               sweeps=1000 if fast else 3000, seed=seed, threads=threads)
    low, high = report["rows"]
    passed = low["mean_abs"] < 0.5 and high["polarized_fraction"] > 0.8
    return _result('wr-dominance', passed,
                   {"mean_abs_at_0.2": "< 0.5", "polarized_at_10": "> 0.8"},
                   {"mean_abs_at_0.2": low["mean_abs"], "polarized_at_10": high["polarized_fraction"]})


# ----------------- 代数恒等式 -----------------

def _random_weighted_graph(rng, corpus):
    h = corpus[int(rng.integers(len(corpus)))]
    w = [Fraction(int(rng.integers(1, 20)), int(rng.integers(1, 20))) for _ in range(h.q)]
    return h, w


def scaling_gauge(fast=False, seed=0, threads=1):
    corpus = graphs.enumerate_corpus(4)
    rng = make_rng(seed, 13)
    failures = 0
    n_cases = 20 if fast else 100
    for _ in range(n_cases):
        h, w = _random_weighted_graph(rng, corpus)
        r = int(rng.integers(1, 4))
        c = Fraction(int(rng.integers(1, 30)), int(rng.integers(1, 30)))
        base = treegibbs.weights_to_activities(h, r, w).raw
        scaled = treegibbs.weights_to_activities(h, r, [c * x for x in w]).raw
        if any(s != c ** (1 - r) * b for s, b in zip(scaled, base)):
            failures += 1
    return _result('scaling-gauge', failures == 0, {"failures": 0},
                   {"cases": n_cases, "failures": failures})


def detailed_balance(fast=False, seed=0, threads=1):
    corpus = graphs.enumerate_corpus(4)
    rng = make_rng(seed, 14)
    failures = 0
    n_cases = 20 if fast else 100
    for _ in range(n_cases):
        h, w = _random_weighted_graph(rng, corpus)
        bw = treegibbs.BranchingWalk(h, int(rng.integers(1, 4)), w)
        if bw.detailed_balance_defect() != 0:
            failures += 1
    return _result('detailed-balance', failures == 0, {"failures": 0},
                   {"cases": n_cases, "failures": failures})


BUNDLES = {
    'hinge-activities': hinge_activities,
    'hinge-multiplicity': hinge_multiplicity,
    'conditional-symmetry': conditional_symmetry,
    'stationary-fractions': stationary_fractions,
    'dichotomy': dichotomy,
    'sterile-uniqueness': sterile_uniqueness,
    'r1-uniqueness': r1_uniqueness,
    'coloring-threshold': coloring_threshold,
    'weak-square-isolation': weak_square_isolation,
    'frozen-rigidity': frozen_rigidity,
    'mcmc-exactness': mcmc_exactness,
    'hardcore-bimodality': hardcore_bimodality,
    'scaling-gauge': scaling_gauge,
    'detailed-balance': detailed_balance,
    'wr-dominance': wr_dominance,
}


def run_bundle(bundle_id, fast=False, seed=0, threads=1):
    func = BUNDLES[bundle_id]
    log(f"运行实验 {bundle_id} ...")
    result = func(fast=fast, seed=seed, threads=threads)
    log(f"{bundle_id}: {'通过' if result['passed'] else '失败'}")
    return result


def run_bundles(bundle_ids, fast=False, seed=0, threads=1):
    """每个实验一个线程，同一批的实验平分 threads，结果按给定顺序返回。"""
    bundle_results.clear()

    def worker(index, bundle_id, inner):
        try:
            bundle_results.add(index, run_bundle(bundle_id, fast=fast, seed=seed, threads=inner))
        except Exception as e:
            print(f"错误: 实验 {bundle_id} 出错: {e}", file=sys.stderr)
            bundle_results.add(index, _result(bundle_id, False, None, f"error: {e}"))

    pending = list(enumerate(bundle_ids))
    width = max(1, int(threads))
    while pending:
        batch, pending = pending[:width], pending[width:]
        inner = max(1, width // len(batch))
        pool = [threading.Thread(target=worker, args=(index, bundle_id, inner), daemon=True)
                for index, bundle_id in batch]
        for t in pool:
            t.start()
        for t in pool:
            t.join()
    return bundle_results.ordered()
