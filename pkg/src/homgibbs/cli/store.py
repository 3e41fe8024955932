import csv
import json
import os
from importlib import metadata

from cryptography.hazmat.primitives import hashes

from ..utils.config import DATA_DIR
from .state import outputs

MANIFEST_NAME = 'manifest.json'
VERSIONED_PACKAGES = ('numpy', 'scipy', 'numba', 'networkx', 'Pillow')


# ----------------- 辅助函数 -----------------
def sha256_hex(data: bytes) -> str:
    digest = hashes.Hash(hashes.SHA256())
    digest.update(data)
    return digest.finalize().hex()


def canonical_json(data) -> bytes:
    """键排序、无多余空白的 JSON，用来计算输入摘要。"""
    return json.dumps(data, sort_keys=True, separators=(',', ':'), ensure_ascii=False).encode('utf-8')


def _default(obj):
    if hasattr(obj, 'tolist'):
        return obj.tolist()
    if hasattr(obj, 'numerator') and hasattr(obj, 'denominator'):
        return f"{obj.numerator}/{obj.denominator}" if obj.denominator != 1 else obj.numerator
    if isinstance(obj, (set, frozenset)):
        return sorted(obj)
    raise TypeError(f"无法序列化 {type(obj).__name__}")


def to_jsonable(data):
    """把 numpy 数组、Fraction 和集合转换成 JSON 能表示的值。"""
    return json.loads(json.dumps(data, default=_default))


def output_dir(out=None, command='run'):
    """输出目录：--out 优先，否则是 DATA_DIR/<command>。"""
    path = os.path.abspath(out if out else os.path.join(DATA_DIR, command))
    os.makedirs(path, exist_ok=True)
    return path


def write_json(out_dir, name, data):
    """
    写一个 JSON 文件并登记到本次输出。
    :return: 一个元组 (bool, str)
    """
    path = os.path.join(out_dir, name)
    try:
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(data, f, indent=2, sort_keys=True, ensure_ascii=False, default=_default)
            f.write('\n')
    except (OSError, TypeError) as e:
        return False, f"写入 {name} 失败: {e}"
    outputs.register(name, path)
    return True, path


def write_csv(out_dir, name, header, rows):
    path = os.path.join(out_dir, name)
    try:
        with open(path, 'w', encoding='utf-8', newline='') as f:
            writer = csv.writer(f)
            writer.writerow(header)
            writer.writerows(rows)
    except OSError as e:
        return False, f"写入 {name} 失败: {e}"
    outputs.register(name, path)
    return True, path


def write_text(out_dir, name, text):
    """DOT 之类的纯文本输出。"""
    path = os.path.join(out_dir, name)
    try:
        with open(path, 'w', encoding='utf-8') as f:
            f.write(text)
    except OSError as e:
        return False, f"写入 {name} 失败: {e}"
    outputs.register(name, path)
    return True, path


def register_file(out_dir, name):
    outputs.register(name, os.path.join(out_dir, name))


def versions():
    found = {}
    for pkg in VERSIONED_PACKAGES:
        try:
            found[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:
            found[pkg] = None
    return found


def file_sha256(path):
    with open(path, 'rb') as f:
        return sha256_hex(f.read())


def write_manifest(out_dir, config):
    """
    清单记录输入配置的摘要、种子、包版本和每个输出文件的摘要，不含时间戳，
    同一配置重跑得到完全相同的清单。
    """
    files = {}
    for name, path in outputs.items():
        if os.path.exists(path) and name != MANIFEST_NAME:
            files[name] = file_sha256(path)
    manifest = {
        "config": config,
        "inputs_sha256": sha256_hex(canonical_json(config)),
        "seed": config.get("seed"),
        "versions": versions(),
        "outputs": files,
    }
    path = os.path.join(out_dir, MANIFEST_NAME)
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(manifest, f, indent=2, sort_keys=True, ensure_ascii=False)
        f.write('\n')
    return manifest
