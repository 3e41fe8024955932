import threading

from ..utils.config import default_threads


class ResultCollector:
    """按编号收集并行任务的结果；合并与完成顺序无关。"""

    def __init__(self):
        self._results = {}
        self._lock = threading.Lock()

    def add(self, index, value):
        with self._lock:
            self._results[index] = value

    def get(self, index):
        with self._lock:
            return self._results.get(index)

    def ordered(self):
        with self._lock:
            return [self._results[k] for k in sorted(self._results)]

    def clear(self):
        with self._lock:
            self._results.clear()

    def __len__(self):
        with self._lock:
            return len(self._results)


class OutputRegistry:
    """本次命令写出的文件（相对路径 -> 绝对路径），写清单时使用。"""

    def __init__(self):
        self._files = {}
        self._lock = threading.Lock()

    def register(self, name, path):
        with self._lock:
            self._files[name] = path

    def items(self):
        with self._lock:
            return sorted(self._files.items())

    def clear(self):
        with self._lock:
            self._files.clear()


def resolve_threads(requested=None):
    """--threads 优先，其次 HOMGIBBS_THREADS，最后是 CPU 数。"""
    if requested:
        return max(1, int(requested))
    return default_threads()


# 全局单例
bundle_results = ResultCollector()
outputs = OutputRegistry()
