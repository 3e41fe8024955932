"""
命令处理器：每个 handle_* 接收一个可序列化的 payload（即实验配置），
调用领域模块，把结果写到输出目录并返回响应字典。
"""
import json
import os
from fractions import Fraction

import numpy as np

from .. import classify, graphs, homspace, mcmc, treegibbs
from ..utils.config import log
from ..utils.errors import ConfigError, HomGibbsError
from . import experiments, store


# ----------------- 参数解析 -----------------

def _require(payload, field):
    value = payload.get(field)
    if value is None or value == '':
        raise ConfigError(field, "必填")
    return value


def parse_graph(text, field='graph'):
    """标准简写（hinge、K3、C4L ...）或 JSON 文件路径。"""
    if not isinstance(text, str) or not text:
        raise ConfigError(field, "需要约束图名称或文件路径")
    try:
        if text.endswith('.json') or os.path.exists(text):
            g = graphs.load(text)
        else:
            g = graphs.parse_standard(text)
    except HomGibbsError as e:
        raise ConfigError(field, str(e)) from e
    if not isinstance(g, graphs.ConstraintGraph):
        raise ConfigError(field, "文件里是棋盘，不是约束图")
    return g


def parse_board(text, field='board'):
    """grid_box:15,2 / tree:2,4 / path:5 / cycle:6 / complete:2 / JSON 文件路径。"""
    if not isinstance(text, str) or not text:
        raise ConfigError(field, "需要棋盘描述或文件路径")
    try:
        if text.endswith('.json') or os.path.exists(text):
            return graphs.make_board('from_file', text)
        name, _, args = text.partition(':')
        values = [int(x) for x in args.split(',') if x.strip()]
        return graphs.make_board(name, *values)
    except ValueError as e:
        raise ConfigError(field, f"参数必须是整数: {e}") from e
    except HomGibbsError as e:
        raise ConfigError(field, str(e)) from e


def parse_floats(payload, field, length=None, required=True):
    value = payload.get(field)
    if value is None:
        if required:
            raise ConfigError(field, "必填")
        return None
    try:
        if isinstance(value, str):
            numbers = [float(x) for x in value.split(',') if x.strip()]
        else:
            numbers = [float(x) for x in value]
    except (TypeError, ValueError) as e:
        raise ConfigError(field, f"需要逗号分隔的数: {e}") from e
    if length is not None and len(numbers) != length:
        raise ConfigError(field, f"需要 {length} 个分量，收到 {len(numbers)}")
    for k, x in enumerate(numbers):
        if not x > 0:
            raise ConfigError(f"{field}[{k}]", "必须为正")
    return numbers


def parse_weights(payload, field, length):
    """权重可以写成整数或分数（如 4,2,1 或 1/3,2/3），整数/分数保持精确。"""
    value = _require(payload, field)
    parts = value.split(',') if isinstance(value, str) else list(value)
    try:
        numbers = [Fraction(str(x).strip()) for x in parts if str(x).strip()]
    except (ValueError, ZeroDivisionError) as e:
        raise ConfigError(field, f"无法解析: {e}") from e
    if len(numbers) != length:
        raise ConfigError(field, f"需要 {length} 个分量，收到 {len(numbers)}")
    for k, x in enumerate(numbers):
        if x <= 0:
            raise ConfigError(f"{field}[{k}]", "必须为正")
    return numbers


def parse_int(payload, field, minimum=None, default=None):
    value = payload.get(field, default)
    if value is None:
        raise ConfigError(field, "必填")
    try:
        value = int(value)
    except (TypeError, ValueError) as e:
        raise ConfigError(field, "必须是整数") from e
    if minimum is not None and value < minimum:
        raise ConfigError(field, f"不能小于 {minimum}")
    return value


def _ok(message, data, out_dir):
    return {"status": "success", "message": message, "data": store.to_jsonable(data), "out": out_dir}


def _save(out_dir, name, data):
    ok, msg = store.write_json(out_dir, name, data)
    if not ok:
        raise HomGibbsError(msg)


# ----------------- 各命令 -----------------

def handle_classify(payload):
    h = parse_graph(_require(payload, 'graph'))
    out_dir = store.output_dir(payload.get('out'), 'classify')
    report = classify.classify(h).to_dict()
    _save(out_dir, 'classify.json', report)
    store.write_text(out_dir, 'graph.dot', graphs.export_dot(h, 'H'))
    return _ok("分类完成", report, out_dir)


def handle_corpus(payload):
    max_nodes = parse_int(payload, 'max_nodes', minimum=1, default=5)
    threads = payload.get('threads', 1)
    out_dir = store.output_dir(payload.get('out'), 'corpus')
    summary = classify.cross_check_corpus(max_nodes, threads=threads, progress=payload.get('progress', False))
    if payload.get('minimal'):
        found = classify.minimal_fertile_search(min(max_nodes, 4))
        summary["minimal_fertile"] = [{"q": h.q, "edges": h.edges(), "loops": h.loops} for h in found]
    _save(out_dir, 'corpus.json', summary)
    return _ok(f"共检查 {summary['graphs']} 个图，不一致 {len(summary['mismatches'])} 个", summary, out_dir)


def _load_pinned(path, field='pin'):
    if not path:
        return None
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = json.load(f)
    except (OSError, ValueError) as e:
        raise ConfigError(field, f"无法读取钉住文件: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(field, "钉住文件必须是 站点 -> 自旋 的对象")
    return {int(k): int(v) for k, v in data.items()}


HOMSPACE_REPORTS = ('count', 'connectivity', 'isolated', 'marginals')


def _parse_report(payload):
    """--report 是逗号分隔的报告项，默认 count,connectivity,isolated。"""
    value = payload.get('report')
    if value is None:
        return {'count', 'connectivity', 'isolated'}
    sections = [s.strip() for s in str(value).split(',') if s.strip()]
    unknown = [s for s in sections if s not in HOMSPACE_REPORTS]
    if unknown or not sections:
        raise ConfigError('report', f"未知的报告项 {unknown}，可选 {','.join(HOMSPACE_REPORTS)}")
    return set(sections)


def handle_homspace(payload):
    g = parse_board(_require(payload, 'board'))
    h = parse_graph(_require(payload, 'graph'))
    report = _parse_report(payload)
    lam = parse_floats(payload, 'lambda', length=h.q, required='marginals' in report)
    pinned = _load_pinned(payload.get('pin'))
    out_dir = store.output_dir(payload.get('out'), 'homspace')
    hs = homspace.enumerate_homs(g, h, pinned=pinned, max_candidates=payload.get('max_homs'))
    data = {"count": len(hs)}
    if 'connectivity' in report:
        comps = homspace.components(hs) if len(hs) else []
        data["components"] = len(comps)
        data["component_sizes"] = sorted((len(c) for c in comps), reverse=True)
    if 'isolated' in report:
        data["isolated"] = len(homspace.isolated_maps(hs)) if len(hs) else 0
    if payload.get('mixing') and len(hs):
        data["mixing_radius"] = homspace.mixing_radius_probe(hs)
    if lam is not None and len(hs):
        mu = homspace.lambda_measure(hs, lam)
        data["measure"] = [float(x) for x in mu]
        data["gibbs_check"] = homspace.check_one_site_gibbs(hs, lam, mu)
        if 'marginals' in report:
            # 每个站点一行，按自旋编号给出 λ 测度下的边缘分布
            data["marginals"] = [[float(x) for x in homspace.site_marginal(hs, mu, u)]
                                 for u in range(g.n_sites)]
            header = ['site'] + [f"spin_{h.label(s)}" for s in range(h.q)]
            store.write_csv(out_dir, 'marginals.csv', header,
                            [[u] + row for u, row in enumerate(data["marginals"])])
    _save(out_dir, 'homspace.json', data)
    if payload.get('save_maps'):
        store.write_csv(out_dir, 'maps.csv', [f"s{u}" for u in range(g.n_sites)], hs.maps.tolist())
    return _ok(f"|hom(G,H)| = {len(hs)}", data, out_dir)


def _solver_kwargs(payload):
    kwargs = {}
    for field in ('starts', 'max_iter'):
        if payload.get(field) is not None:
            kwargs[field] = parse_int(payload, field, minimum=1)
    for field in ('tol', 'dedup_tol'):
        if payload.get(field) is not None:
            kwargs[field] = float(payload[field])
    kwargs['seed'] = parse_int(payload, 'seed', default=0)
    kwargs['threads'] = payload.get('threads', 1)
    return kwargs


def handle_solve(payload):
    h = parse_graph(_require(payload, 'graph'))
    r = parse_int(payload, 'r', minimum=1)
    lam = parse_floats(payload, 'lambda', length=h.q)
    out_dir = store.output_dir(payload.get('out'), 'solve')
    report = treegibbs.solve_fundamental(h, r, lam, progress=payload.get('progress', False),
                                         **_solver_kwargs(payload))
    data = report.to_dict()
    _save(out_dir, 'solutions.json', data)
    return _ok(f"找到 {report.counts['classes']} 类解（原始 {report.counts['raw']} 个）", data, out_dir)


def handle_sweep(payload):
    family = _require(payload, 'family')
    if family not in treegibbs.LAMBDA_FAMILIES:
        raise ConfigError('family', f"可选: {', '.join(treegibbs.LAMBDA_FAMILIES)}")
    graph_name = payload.get('graph') or treegibbs.LAMBDA_FAMILIES[family][0]
    h = parse_graph(graph_name)
    r = parse_int(payload, 'r', minimum=1)
    t_min, t_max = float(_require(payload, 't_min')), float(_require(payload, 't_max'))
    steps = parse_int(payload, 'steps', minimum=2, default=11)
    if not 0 < t_min < t_max:
        raise ConfigError('t_min', "需要 0 < t_min < t_max")
    t_values = np.geomspace(t_min, t_max, steps).tolist()
    out_dir = store.output_dir(payload.get('out'), 'sweep')
    kwargs = _solver_kwargs(payload)
    kwargs.setdefault('starts', 60)
    report = treegibbs.count_transition(h, r, family, t_values, mode=payload.get('mode', 'invariant'),
                                        bracket_tol=float(payload.get('bracket_tol', 1e-6)),
                                        progress=payload.get('progress', False), **kwargs)
    _save(out_dir, 'sweep.json', report)
    store.write_csv(out_dir, 'sweep.csv', ['t', 'count'], list(zip(report['t'], report['counts'])))
    return _ok(f"发现 {len(report['brackets'])} 个临界区间", report, out_dir)


def handle_sample(payload):
    h = parse_graph(_require(payload, 'graph'))
    r = parse_int(payload, 'r', minimum=1)
    w = parse_weights(payload, 'weights', h.q)
    depth = parse_int(payload, 'depth', minimum=0, default=3)
    seed = parse_int(payload, 'seed', default=0)
    out_dir = store.output_dir(payload.get('out'), 'sample')
    bw = treegibbs.BranchingWalk(h, r, w)
    acts = bw.activities()
    data = {
        "activities": [str(x) for x in acts.raw],
        "activities_integer": list(acts.integers()) if bw.exact else None,
        "stationary": [str(x) for x in bw.stationary_law()],
        "detailed_balance_defect": str(bw.detailed_balance_defect()),
    }
    if graphs.is_bipartite(h)[0]:
        data["sample"] = None
        data["note"] = "约束图是二部图，只报告活度；抽样请改用 2H"
    else:
        config = treegibbs.sample_branching_walk(bw, depth, seed=seed)
        data["sample"] = config.to_dict()
        store.write_text(out_dir, 'sample.dot', config.to_dot())
    _save(out_dir, 'sample.json', data)
    return _ok("抽样完成", data, out_dir)


def handle_frozen(payload):
    r = parse_int(payload, 'r', minimum=1)
    depth = parse_int(payload, 'depth', minimum=1, default=4)
    seed = parse_int(payload, 'seed', default=0)
    out_dir = store.output_dir(payload.get('out'), 'frozen')
    if payload.get('cycle'):
        config = treegibbs.frozen_cycle_map(depth, seed=seed)
    else:
        config = treegibbs.frozen_coloring(r, depth=depth, seed=seed)
    board = config.board
    boundary = {int(u): int(config.spins[u]) for u in np.flatnonzero(board.depth == depth)}
    data = config.to_dict()
    data["extensions_of_boundary"] = homspace.tree_extension_count(board, config.h, boundary)
    # 叶子只有一个邻居，不会被锁定；只看内部站点
    interior = np.flatnonzero(board.depth < depth)
    data["interior_forced"] = all(
        homspace.legal_spins(board, config.h, config.spins, int(u)) == [int(config.spins[u])]
        for u in interior)
    _save(out_dir, 'frozen.json', data)
    store.write_text(out_dir, 'frozen.dot', config.to_dot())
    return _ok(f"边界的延拓数 = {data['extensions_of_boundary']}", data, out_dir)


def handle_lra(payload):
    h = parse_graph(_require(payload, 'graph'))
    r = parse_int(payload, 'r', minimum=1)
    depth = parse_int(payload, 'depth', minimum=1, default=6)
    out_dir = store.output_dir(payload.get('out'), 'lra')
    report = treegibbs.long_range_action_probe(h, r, depth, seed=parse_int(payload, 'seed', default=0))
    _save(out_dir, 'lra.json', report)
    verdict = "观察到长程作用" if report["long_range_action"] else "该深度内未观察到长程作用"
    return _ok(verdict, report, out_dir)


def _occupied_spins(h):
    """硬核模型统计自旋 0，铰链统计绿和红，其余默认自旋 0。"""
    if h == graphs.hinge():
        return [graphs.GREEN, graphs.RED]
    return [0]


def handle_mcmc_run(payload):
    g = parse_board(_require(payload, 'board'))
    h = parse_graph(_require(payload, 'graph'))
    lam = parse_floats(payload, 'lambda', length=h.q)
    sweeps = parse_int(payload, 'sweeps', minimum=1, default=1000)
    replicas = parse_int(payload, 'replicas', minimum=1, default=1)
    seed = parse_int(payload, 'seed', default=0)
    pinned = _load_pinned(payload.get('pin'))
    init = payload.get('init') or 'random'
    out_dir = store.output_dir(payload.get('out'), 'mcmc')
    occupied = _occupied_spins(h)
    runs = mcmc.run_replicas(g, h, lam, init=init, sweeps=sweeps, seed=seed, replicas=replicas,
                             threads=payload.get('threads', 1), pinned=pinned,
                             progress=payload.get('progress', False))
    data = {"replicas": [s.to_dict(occupied) for s in runs]}
    if runs[0].bipartite and replicas > 1:
        data["bimodality"] = mcmc.bimodality_report(runs, occupied)
    series = runs[0].occupied_series(occupied)
    data["autocorrelation_time"] = mcmc.autocorrelation_time(series[runs[0].burn_in:])
    _save(out_dir, 'stats.json', data)
    header = ['sweep', 'occupied', 'even', 'odd'] + [f"spin_{h.label(s)}" for s in range(h.q)]
    store.write_csv(out_dir, 'series.csv', header, runs[0].csv_rows(occupied))
    render_dir = payload.get('render')
    if render_dir and g.kind == 'grid':
        os.makedirs(render_dir, exist_ok=True)
        for k, s in enumerate(runs):
            name = f"replica_{k}.png"
            blank = [graphs.YELLOW] if h == graphs.hinge() else None
            ok, msg = mcmc.render(g, h, s.final_spins, os.path.join(render_dir, name), blank=blank)
            if not ok:
                raise HomGibbsError(msg)
            if os.path.abspath(render_dir) == out_dir:
                store.register_file(out_dir, name)
    return _ok(f"{replicas} 个副本各 {sweeps} 次扫描完成", data, out_dir)


def handle_mcmc_bimodality(payload):
    n = parse_int(payload, 'n', minimum=1, default=15)
    lam = parse_floats(payload, 'lambda', length=1)[0]
    replicas = parse_int(payload, 'replicas', minimum=2, default=200)
    sweeps = parse_int(payload, 'sweeps', minimum=1, default=10**4)
    out_dir = store.output_dir(payload.get('out'), 'bimodality')
    report = mcmc.hard_core_bimodality(graphs.grid_box(n, 2), lam, replicas=replicas, sweeps=sweeps,
                                       seed=parse_int(payload, 'seed', default=0),
                                       threads=payload.get('threads', 1),
                                       progress=payload.get('progress', False))
    _save(out_dir, 'bimodality.json', report)
    return _ok(f"dip 比例 = {report['dip_fraction']:.3f}", report, out_dir)


def handle_mcmc_wr(payload):
    n = parse_int(payload, 'n', minimum=1, default=10)
    t_values = parse_floats(payload, 't_values')
    replicas = parse_int(payload, 'replicas', minimum=2, default=40)
    sweeps = parse_int(payload, 'sweeps', minimum=1, default=2000)
    out_dir = store.output_dir(payload.get('out'), 'wr')
    report = mcmc.wr_dominance(graphs.grid_box(n, 2), t_values, replicas=replicas, sweeps=sweeps,
                               seed=parse_int(payload, 'seed', default=0),
                               threads=payload.get('threads', 1),
                               progress=payload.get('progress', False))
    _save(out_dir, 'wr.json', report)
    return _ok(f"对称性破缺窗口: {report['onset_window']}", report, out_dir)


def handle_reproduce(payload):
    """运行一个或全部打包实验；有实验失败时响应状态为 mismatch。"""
    target = _require(payload, 'experiment')
    if target == 'all':
        ids = list(experiments.BUNDLES)
    elif target in experiments.BUNDLES:
        ids = [target]
    else:
        raise ConfigError('experiment', f"未知实验 {target}，用 list 查看可选项")
    out_dir = store.output_dir(payload.get('out'), 'reproduce')
    results = experiments.run_bundles(ids, fast=bool(payload.get('fast')),
                                      seed=parse_int(payload, 'seed', default=0),
                                      threads=payload.get('threads', 1))
    for res in results:
        _save(out_dir, f"{res['id']}.json", res)
    failed = [res['id'] for res in results if not res['passed']]
    if failed:
        log(f"未通过: {', '.join(failed)}")
        return {"status": "mismatch", "message": f"未通过: {', '.join(failed)}",
                "data": store.to_jsonable(results), "out": out_dir}
    return _ok(f"{len(results)} 个实验全部通过", results, out_dir)


def handle_list(payload):
    data = {
        "experiments": list(experiments.BUNDLES),
        "graphs": ["hinge", "hard_core", "widom_rowlinson", "single_looped_node", "Kq", "KqL",
                   "Cq", "CqL", "Pq", "PqL", "Sq"],
        "boards": ["grid_box:n,d", "tree:r,depth", "path:len", "cycle:len", "complete:k", "<file>.json"],
        "families": list(treegibbs.LAMBDA_FAMILIES),
    }
    return {"status": "success", "message": "可用的实验、约束图与棋盘", "data": data, "out": None}
