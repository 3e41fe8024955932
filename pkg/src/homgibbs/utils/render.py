import os
import sys

import numpy as np
from PIL import Image

BACKGROUND = (255, 255, 255)

# 硬核模型：偶数占据与奇数占据用两种颜色区分
EVEN_COLOR = (200, 30, 30)
ODD_COLOR = (30, 60, 200)

# 绿、黄、红，与 graphs.hinge 的节点顺序一致
HINGE_COLORS = [(40, 160, 60), (235, 200, 40), (210, 40, 40)]

_EXTRA = [(40, 90, 200), (150, 60, 170), (30, 170, 170), (120, 120, 120), (240, 130, 30)]

FORMATS = {'.png': 'PNG', '.ppm': 'PPM', '.pgm': 'PPM'}


# ----------------- 辅助函数 -----------------
def palette(h):
    """每个自旋的颜色：三个节点且标签为绿黄红时用固定配色，其余按顺序循环。"""
    if h.labels and list(h.labels) == ['green', 'yellow', 'red']:
        return list(HINGE_COLORS)
    base = HINGE_COLORS + _EXTRA
    return [base[i % len(base)] for i in range(h.q)]


def _grid_index(board):
    shape = board.grid_shape()
    if shape is None or len(shape) > 2:
        raise ValueError("只能绘制一维或二维网格棋盘")
    if len(shape) == 1:
        shape = (1, shape[0])
    return shape


def config_image(board, h, spins, block=4, blank=None, hard_core=False):
    """
    把网格上的构型画成图像，每个站点一个 block×block 的像素块。
    :param blank: 不着色的自旋集合（例如 Widom-Rowlinson 中的黄色）。
    :param hard_core: 为 True 时只画占据站点（自旋 0），并按奇偶区分颜色。
    :return: PIL.Image
    """
    rows, cols = _grid_index(board)
    spins = np.asarray(spins).reshape(rows, cols)
    rgb = np.empty((rows, cols, 3), dtype=np.uint8)
    rgb[:] = BACKGROUND
    if hard_core:
        parity = board.parity().reshape(rows, cols)
        occupied = spins == 0
        rgb[occupied & (parity == 0)] = EVEN_COLOR
        rgb[occupied & (parity == 1)] = ODD_COLOR
    else:
        colors = palette(h)
        skip = set(blank or ())
        for s in range(h.q):
            if s not in skip:
                rgb[spins == s] = colors[s]
    image = Image.fromarray(rgb)
    if block > 1:
        image = image.resize((cols * block, rows * block), Image.Resampling.NEAREST)
    return image


def save_image(image, path):
    """
    按扩展名保存为 PNG / PPM / PGM（PGM 先转灰度）。
    :return: (bool, message)
    """
    ext = os.path.splitext(path)[1].lower()
    if ext not in FORMATS:
        return False, f"不支持的图像格式: {ext}"
    try:
        if ext == '.pgm':
            image = image.convert('L')
        directory = os.path.dirname(os.path.abspath(path))
        os.makedirs(directory, exist_ok=True)
        image.save(path, format=FORMATS[ext])
        return True, f"图像已保存到 {path}"
    except OSError as e:
        print(f"错误: 保存图像时出错: {e}", file=sys.stderr)
        return False, str(e)
