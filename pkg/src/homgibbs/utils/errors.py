class HomGibbsError(Exception):
    """所有 homgibbs 错误的基类。"""


class GraphError(HomGibbsError):
    """图无效：未知构造器、尺寸非法、邻接不对称或文件格式错误。"""


class CapExceededError(HomGibbsError):
    """棋盘站点数或同态候选数超过上限。"""


class NotConnectedError(HomGibbsError):
    """输入图不连通或没有边。"""


class BipartiteError(HomGibbsError):
    """二部约束图上的分支随机游走没有唯一平稳分布，请改用 2H。"""


class InfeasibleError(HomGibbsError):
    """同态空间为空、边界不一致或条件概率为零。"""


class SolverError(HomGibbsError):
    """在给定预算内没有找到基本方程的解。"""


class ConfigError(HomGibbsError):
    """命令行配置校验失败，field 给出出错字段的路径。"""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
