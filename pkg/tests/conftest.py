import os
import sys

import pytest

# 将 src 目录添加到 Python 路径中
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..', 'src')))

from homgibbs import graphs  # noqa: E402
from homgibbs.utils.config import set_quiet  # noqa: E402

set_quiet(True)


@pytest.fixture
def hinge():
    return graphs.hinge()


@pytest.fixture
def hard_core():
    return graphs.hard_core()


@pytest.fixture
def out_dir(tmp_path):
    path = tmp_path / "out"
    path.mkdir()
    return str(path)
