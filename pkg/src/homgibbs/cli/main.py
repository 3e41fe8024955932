import argparse
import json
import sys

from ..utils.config import set_quiet
from ..utils.errors import ConfigError, HomGibbsError
from . import handlers, store
from .state import outputs, resolve_threads

EXIT_OK, EXIT_MISMATCH, EXIT_USAGE = 0, 1, 2


def _common(parser, seed=True):
    parser.add_argument('--out', help="输出目录，默认 data/<命令>")
    parser.add_argument('--threads', type=int, help="线程数，默认读 HOMGIBBS_THREADS 或 CPU 数")
    parser.add_argument('--quiet', action='store_true', help="不打印状态信息")
    if seed:
        parser.add_argument('--seed', type=int, default=0)


def _solver_flags(parser):
    parser.add_argument('--starts', type=int, help="多起点个数（默认 200）")
    parser.add_argument('--tol', type=float, help="残差容差（默认 1e-10）")
    parser.add_argument('--dedup-tol', type=float, help="去重容差（默认 1e-6）")
    parser.add_argument('--max-iter', type=int, help="每个起点的迭代上限（默认 200）")


def build_parser():
    parser = argparse.ArgumentParser(prog='homgibbs', description="硬约束模型 hom(G,H) 的 Gibbs 测度工具")
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('classify', help="可拆解 / 警察必胜 / 能育 判定")
    p.add_argument('graph')
    _common(p, seed=False)

    p = sub.add_parser('corpus', help="在小图语料库上交叉检验可拆解与警察必胜")
    p.add_argument('--max-nodes', type=int, default=5)
    p.add_argument('--minimal', action='store_true', help="同时搜索极小能育图")
    _common(p, seed=False)

    p = sub.add_parser('homspace', help="枚举 hom(G,H) 并报告连通性")
    p.add_argument('--board', required=True)
    p.add_argument('--graph', required=True)
    p.add_argument('--lambda', dest='lam')
    p.add_argument('--pin')
    p.add_argument('--max-homs', type=int)
    p.add_argument('--mixing', action='store_true')
    p.add_argument('--save-maps', action='store_true')
    p.add_argument('--report', help="逗号分隔：count,connectivity,isolated,marginals")
    _common(p, seed=False)

    p = sub.add_parser('solve', help="多起点求解基本方程")
    p.add_argument('graph')
    p.add_argument('--r', type=int, required=True)
    p.add_argument('--lambda', dest='lam', required=True)
    _solver_flags(p)
    _common(p)

    p = sub.add_parser('sweep', help="沿活度族扫描解的个数")
    p.add_argument('--family', required=True)
    p.add_argument('--graph')
    p.add_argument('--r', type=int, required=True)
    p.add_argument('--t-min', type=float, required=True)
    p.add_argument('--t-max', type=float, required=True)
    p.add_argument('--steps', type=int, default=11)
    p.add_argument('--mode', choices=['invariant', 'semi'], default='invariant')
    p.add_argument('--bracket-tol', type=float, default=1e-6)
    _solver_flags(p)
    _common(p)

    p = sub.add_parser('sample', help="分支随机游走抽样")
    p.add_argument('graph')
    p.add_argument('--r', type=int, required=True)
    p.add_argument('--weights', required=True)
    p.add_argument('--depth', type=int, default=3)
    _common(p)

    p = sub.add_parser('frozen', help="冻结着色（q = r+1）或 C5 上的冻结映射")
    p.add_argument('--r', type=int, default=2)
    p.add_argument('--depth', type=int, default=4)
    p.add_argument('--cycle', action='store_true')
    _common(p)

    p = sub.add_parser('lra', help="长程作用探测")
    p.add_argument('graph')
    p.add_argument('--r', type=int, required=True)
    p.add_argument('--depth', type=int, default=6)
    _common(p)

    p = sub.add_parser('mcmc', help="单点热浴链")
    msub = p.add_subparsers(dest='mcmc_command', required=True)
    q = msub.add_parser('run')
    q.add_argument('--board', required=True)
    q.add_argument('--graph', required=True)
    q.add_argument('--lambda', dest='lam', required=True)
    q.add_argument('--sweeps', type=int, default=1000)
    q.add_argument('--replicas', type=int, default=1)
    q.add_argument('--init', default='random', help="even | odd | random | constant | 文件路径")
    q.add_argument('--pin')
    q.add_argument('--render')
    _common(q)
    q = msub.add_parser('bimodality')
    q.add_argument('--n', type=int, default=15)
    q.add_argument('--lambda', dest='lam', required=True)
    q.add_argument('--replicas', type=int, default=200)
    q.add_argument('--sweeps', type=int, default=10**4)
    _common(q)
    q = msub.add_parser('wr')
    q.add_argument('--n', type=int, default=10)
    q.add_argument('--t-values', required=True)
    q.add_argument('--replicas', type=int, default=40)
    q.add_argument('--sweeps', type=int, default=2000)
    _common(q)

    p = sub.add_parser('reproduce', help="运行打包的复现实验")
    p.add_argument('experiment', help="实验名称或 all")
    p.add_argument('--fast', action='store_true', help="缩小规模的冒烟版本")
    _common(p)

    p = sub.add_parser('list', help="列出可用的实验、约束图和棋盘")
    p.add_argument('--quiet', action='store_true')
    return parser


def _payload(args):
    """argparse 结果转成可序列化的配置；lam 改名为 lambda，去掉空值。"""
    payload = {k: v for k, v in vars(args).items() if v is not None and k not in ('quiet',)}
    if 'lam' in payload:
        payload['lambda'] = payload.pop('lam')
    payload['threads'] = resolve_threads(payload.get('threads'))
    payload['progress'] = not args.quiet
    return payload


def dispatch(payload):
    command = payload.get('command')
    if command == 'classify':
        return handlers.handle_classify(payload)
    elif command == 'corpus':
        return handlers.handle_corpus(payload)
    elif command == 'homspace':
        return handlers.handle_homspace(payload)
    elif command == 'solve':
        return handlers.handle_solve(payload)
    elif command == 'sweep':
        return handlers.handle_sweep(payload)
    elif command == 'sample':
        return handlers.handle_sample(payload)
    elif command == 'frozen':
        return handlers.handle_frozen(payload)
    elif command == 'lra':
        return handlers.handle_lra(payload)
    elif command == 'mcmc':
        sub = payload.get('mcmc_command')
        if sub == 'run':
            return handlers.handle_mcmc_run(payload)
        elif sub == 'bimodality':
            return handlers.handle_mcmc_bimodality(payload)
        elif sub == 'wr':
            return handlers.handle_mcmc_wr(payload)
    elif command == 'reproduce':
        return handlers.handle_reproduce(payload)
    elif command == 'list':
        return handlers.handle_list(payload)
    raise ConfigError('command', f"未知命令: {command}")


def start_cli(argv=None):
    """
    解析命令行，运行命令，把响应以 JSON 打印到标准输出。
    :return: 退出码，0 通过，1 复现实验不符合预期，2 用法或配置错误。
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE
    set_quiet(args.quiet)
    payload = _payload(args)
    outputs.clear()

    # 1. 运行命令，错误在这里统一转成响应
    try:
        response = dispatch(payload)
    except ConfigError as e:
        print(f"错误: 配置字段 {e.field} 无效: {e}", file=sys.stderr)
        response = {"status": "error", "message": str(e), "field": e.field}
    except HomGibbsError as e:
        print(f"错误: {e}", file=sys.stderr)
        response = {"status": "error", "message": str(e)}

    # 2. 写清单（进度与线程数不影响结果，不计入输入摘要）
    if response.get("out"):
        config = {k: v for k, v in payload.items() if k not in ('threads', 'progress', 'out')}
        store.write_manifest(response["out"], config)

    # 3. 输出响应并给出退出码
    print(json.dumps(response, ensure_ascii=False, sort_keys=True, default=str))
    if response["status"] == "success":
        return EXIT_OK
    if response["status"] == "mismatch":
        return EXIT_MISMATCH
    return EXIT_USAGE


def main():
    sys.exit(start_cli())


if __name__ == '__main__':
    main()
