import os
import sys

# 输出目录放在项目根目录下的 'data' 文件夹中，可用环境变量覆盖
DATA_DIR = os.environ.get(
    'HOMGIBBS_DATA_DIR',
    os.path.join(os.path.dirname(os.path.abspath(__file__)), '..', '..', '..', 'data'),
)

# 棋盘站点数上限
MAX_BOARD_SITES = int(os.environ.get('HOMGIBBS_MAX_SITES', 10**7))

# 回溯枚举时访问的部分赋值数上限
MAX_HOM_CANDIDATES = int(os.environ.get('HOMGIBBS_MAX_HOMS', 10**8))

# 同态数不超过此值时用有理数精确计算测度
EXACT_MEASURE_LIMIT = 10**4

SOLVER_CONFIG = {
    'starts': 200,
    'tol': 1e-10,
    'dedup_tol': 1e-6,
    'merge_radius': 1e-3,  # 近退化根的合并半径
    'merge_tol': 1e-7,
    'max_iter': 200,
    'fixed_point_sweeps': 30,
    'damping': 0.5,
    'start_low': 1e-3,
    'start_high': 1e3,
}

MCMC_CONFIG = {
    'burn_in_fraction': 0.2,
    'debug_check_every': 0,  # 0 表示关闭
    'dip_low': 0.4,
    'dip_high': 0.6,
    'late_fraction': 0.1,  # 双峰统计取最后这一段扫描的平均
}

_quiet = os.environ.get('HOMGIBBS_QUIET', '') not in ('', '0')


def set_quiet(flag):
    global _quiet
    _quiet = bool(flag)


def is_quiet():
    return _quiet


def log(message):
    """往标准错误打印一条状态信息，安静模式下不输出。标准输出只留给 JSON 响应。"""
    if not _quiet:
        print(message, file=sys.stderr)


def default_threads():
    """--threads 未给出时的线程数：先看 HOMGIBBS_THREADS，再看 CPU 数。"""
    env = os.environ.get('HOMGIBBS_THREADS')
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            print(f"错误: HOMGIBBS_THREADS={env!r} 不是整数，改用 CPU 数。", file=sys.stderr)
    return os.cpu_count() or 1
