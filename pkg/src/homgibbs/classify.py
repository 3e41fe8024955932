import itertools
from collections import deque
from dataclasses import dataclass, field

from . import graphs
from .utils.config import log
from .utils.errors import HomGibbsError, NotConnectedError
from .utils.workers import run_indexed

COP_TURN, ROBBER_TURN = 0, 1


@dataclass
class FoldSequence:
    """折叠序列：每一步 (被折叠的节点, 吸收它的节点)，都用原图的编号。"""
    steps: list = field(default_factory=list)
    final_node: int = 0

    def to_list(self):
        return [list(s) for s in self.steps]


@dataclass
class ClassificationReport:
    dismantlable: bool
    fold_sequence: FoldSequence
    cop_win: bool
    fertile: bool
    witness: dict

    def to_dict(self):
        return {
            "dismantlable": self.dismantlable,
            "fold_sequence": self.fold_sequence.to_list() if self.fold_sequence else None,
            "cop_win": self.cop_win,
            "fertile": self.fertile,
            "witness": self.witness,
        }


def _require_connected(h, need_edge=True):
    if not graphs.is_connected(h):
        raise NotConnectedError("约束图不连通")
    if need_edge and h.n_edges() == 0:
        raise NotConnectedError("约束图没有边")


# ----------------- 折叠与可拆解性 -----------------

def fold_pairs(h):
    """所有满足 N(i) ⊆ N(j) 的有序对 (i, j)，i ≠ j；N(i) 含 i 当且仅当 i 带环。"""
    return [(i, j) for i in range(h.q) for j in range(h.q)
            if i != j and h.rows[i] & ~h.rows[j] == 0]


def find_fold(h):
    """字典序最小的折叠对 (先比 i 再比 j)，没有则返回 None。"""
    for i in range(h.q):
        for j in range(h.q):
            if i != j and h.rows[i] & ~h.rows[j] == 0:
                return i, j
    return None


def dismantle(h):
    """
    贪心地重复折叠，直到只剩一个节点。
    剩下的节点必须带环，否则返回 None。
    """
    current = h
    ids = list(range(h.q))
    steps = []
    while current.q > 1:
        pair = find_fold(current)
        if pair is None:
            return None
        i, j = pair
        steps.append((ids[i], ids[j]))
        current = graphs.remove_node(current, i)
        ids.pop(i)
    if not current.is_looped(0):
        return None
    return FoldSequence(steps=steps, final_node=ids[0])


def apply_folds(h, fold_sequence):
    """按记录重放折叠，每一步都重新检查包含关系，返回最终的图。"""
    current = h
    ids = list(range(h.q))
    for a, b in fold_sequence.steps:
        i, j = ids.index(a), ids.index(b)
        if current.rows[i] & ~current.rows[j]:
            raise HomGibbsError(f"重放失败: N({a}) 不包含于 N({b})")
        current = graphs.remove_node(current, i)
        ids.pop(i)
    return current


# ----------------- 警察与小偷 -----------------

def cop_win(h):
    """
    精确求解警察抓小偷博弈。
    状态为 (警察位置, 小偷位置, 轮到谁)。双方每步都必须沿边移动，
    只有带环节点才能原地不动；警察移动到小偷所在节点即为抓获。
    小偷可以和警察站在同一节点。
    """
    _require_connected(h)
    nodes = range(h.q)
    nbrs = [h.neighbors(i) for i in nodes]

    winning = set()
    robber_safe_moves = {}
    queue = deque()

    # 1. 初始化：轮到小偷且两人同位，只能是警察刚走到小偷身上
    for c in nodes:
        for r in nodes:
            robber_safe_moves[(c, r, ROBBER_TURN)] = len(nbrs[r])
        state = (c, c, ROBBER_TURN)
        winning.add(state)
        queue.append(state)

    # 2. 反向归纳求警察的吸引子
    while queue:
        c, r, turn = queue.popleft()
        if turn == ROBBER_TURN:
            # 上一步是警察从 c 的某个邻居走到 c
            for c_prev in nbrs[c]:
                prev = (c_prev, r, COP_TURN)
                if prev not in winning:
                    winning.add(prev)
                    queue.append(prev)
        else:
            # 上一步是小偷从 r 的某个邻居走到 r
            for r_prev in nbrs[r]:
                prev = (c, r_prev, ROBBER_TURN)
                if prev in winning:
                    continue
                robber_safe_moves[prev] -= 1
                if robber_safe_moves[prev] == 0:
                    winning.add(prev)
                    queue.append(prev)

    # 3. 警察先选位置，小偷再选，然后警察先走
    return any(all((c, r, COP_TURN) in winning for r in nodes) for c in nodes)


# ----------------- 能育性 -----------------

def is_fertile(h):
    """
    H 不育当且仅当 (a) 每个带环节点与所有其他节点相邻，且
    (b) 去掉自环后是完全多部图（不相邻关系可传递）。
    :return: (fertile, witness)，不育时 witness 为 None。
    """
    _require_connected(h, need_edge=False)
    q = h.q
    for i in h.loops:
        for j in range(q):
            if j != i and not h.adj(i, j):
                return True, {"condition": "a", "looped_node": i, "non_neighbor": j}
    for i, j, k in itertools.permutations(range(q), 3):
        if not h.adj(i, j) and not h.adj(j, k) and h.adj(i, k):
            return True, {"condition": "b", "triple": [i, j, k]}
    return False, None


def is_sterile(h):
    return not is_fertile(h)[0]


def classify(h):
    """汇总三种判定，并检查可拆解与警察必胜是否一致。"""
    folds = dismantle(h)
    winner = cop_win(h)
    if (folds is not None) != winner:
        raise HomGibbsError(f"可拆解性与博弈结果不一致: {h}")
    fertile, witness = is_fertile(h)
    return ClassificationReport(dismantlable=folds is not None, fold_sequence=folds,
                                cop_win=winner, fertile=fertile, witness=witness)


def cross_check_corpus(max_nodes=5, threads=1, progress=False):
    """
    对语料库中的每个图比较 dismantle() 与 cop_win()。
    返回计数和所有不一致的图（编码形式）。
    """
    corpus = graphs.enumerate_corpus(max_nodes)
    log(f"语料库共有 {len(corpus)} 个图，开始交叉检验")

    def check(k):
        h = corpus[k]
        return (dismantle(h) is not None, cop_win(h))

    results = run_indexed(check, len(corpus), threads=threads, progress=progress, desc="dichotomy")
    mismatches = [
        {"q": h.q, "edges": h.edges(), "loops": h.loops}
        for h, (d, c) in zip(corpus, results) if d != c
    ]
    return {
        "graphs": len(corpus),
        "dismantlable": sum(1 for d, _ in results if d),
        "cop_win": sum(1 for _, c in results if c),
        "mismatches": mismatches,
    }


def minimal_fertile_search(max_nodes=4):
    """
    找出能育、但所有连通且有边的真诱导子图都不育的图。
    只报告搜索结果，不声称与任何已知列表一致。
    """
    found = []
    for h in graphs.enumerate_corpus(max_nodes):
        if not is_fertile(h)[0]:
            continue
        minimal = True
        for size in range(1, h.q):
            for nodes in itertools.combinations(range(h.q), size):
                sub = graphs.induced(h, nodes)
                if sub.n_edges() >= 1 and graphs.is_connected(sub) and is_fertile(sub)[0]:
                    minimal = False
                    break
            if not minimal:
                break
        if minimal:
            found.append(h)
    return found
