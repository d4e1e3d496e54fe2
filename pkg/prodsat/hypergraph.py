"""
带权超图、WSDR（加权相异代表系）与传递滤链

WSDR 通过二部图展开求最大匹配得到：每条边在左侧，
每个顶点 v 在右侧展开为 w(v) 个容量槽。匹配失败时，从未匹配边出发
的交错可达集合给出 Hall 条件的反例。
"""
from __future__ import annotations

import itertools
import json
import logging
import os
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Any, Deque, Dict, FrozenSet, Iterable, List, Optional, Set, Tuple, Union

from .constants import FormatConstants, LimitConstants
from .exceptions import InvalidInstanceError, SizeLimitError

log = logging.getLogger(__name__)

Edge = Tuple[int, ...]
Slot = Tuple[int, int]


@dataclass(frozen=True)
class WeightedHypergraph:
    """带权超图

    Attributes:
        vertex_weights: 每个顶点的非负整数权重 w(v)
        edges: 超边，每条为升序排列的顶点下标元组
    """
    vertex_weights: Tuple[int, ...]
    edges: Tuple[Edge, ...]

    def __post_init__(self):
        weights = tuple(int(w) for w in self.vertex_weights)
        n = len(weights)
        for v, w in enumerate(weights):
            if w < 0:
                raise InvalidInstanceError(f"顶点 {v} 的权重 {w} 为负")
        normalized: List[Edge] = []
        for i, edge in enumerate(self.edges):
            members = [int(v) for v in edge]
            if not members:
                raise InvalidInstanceError(f"超边 {i} 为空")
            if len(set(members)) != len(members):
                raise InvalidInstanceError(f"超边 {i} 含重复顶点: {members}")
            for v in members:
                if not 0 <= v < n:
                    raise InvalidInstanceError(f"超边 {i} 的顶点 {v} 超出范围 [0, {n})")
            normalized.append(tuple(sorted(members)))
        object.__setattr__(self, "vertex_weights", weights)
        object.__setattr__(self, "edges", tuple(normalized))

    @property
    def n_vertices(self) -> int:
        return len(self.vertex_weights)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def degree(self, v: int) -> int:
        """顶点 v 所在的超边数"""
        return sum(1 for edge in self.edges if v in edge)

    def weighted_size(self, vertices: Iterable[int]) -> int:
        """|S|_w = Σ_{v∈S} w(v)"""
        return sum(self.vertex_weights[v] for v in set(vertices))

    def covered_vertices(self) -> FrozenSet[int]:
        """至少属于一条超边的顶点"""
        return frozenset(v for edge in self.edges for v in edge)

    def to_dict(self) -> Dict[str, Any]:
        return {"weights": list(self.vertex_weights), "edges": [list(e) for e in self.edges]}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'WeightedHypergraph':
        if "weights" not in data or "edges" not in data:
            raise InvalidInstanceError("超图数据缺少 'weights' 或 'edges' 字段")
        return cls(tuple(data["weights"]), tuple(tuple(e) for e in data["edges"]))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=FormatConstants.JSON_INDENT, ensure_ascii=False)

    @classmethod
    def from_json(cls, json_str: str) -> 'WeightedHypergraph':
        return cls.from_dict(json.loads(json_str))

    def save_to_file(self, filepath: str) -> bool:
        """保存超图到 JSON 文件，返回是否成功"""
        try:
            directory = os.path.dirname(filepath)
            if directory:
                os.makedirs(directory, exist_ok=True)
            with open(filepath, 'w', encoding='utf-8') as f:
                json.dump(self.to_dict(), f, indent=FormatConstants.JSON_INDENT, ensure_ascii=False)
            print(f"✅ 超图已保存到: {filepath}")
            return True
        except Exception as e:
            print(f"❌ 保存超图失败: {e}")
            return False

    @classmethod
    def load_from_file(cls, filepath: str) -> Optional['WeightedHypergraph']:
        """从 JSON 文件加载超图，失败时返回 None"""
        try:
            if not os.path.exists(filepath):
                print(f"❌ 文件不存在: {filepath}")
                return None
            with open(filepath, 'r', encoding='utf-8') as f:
                data = json.load(f)
            return cls.from_dict(data)
        except Exception as e:
            print(f"❌ 加载超图失败: {e}")
            return None


@dataclass(frozen=True)
class Wsdr:
    """加权相异代表系 f: 边下标 -> 顶点下标"""
    assignment: Dict[int, int]

    def is_valid(self, h: WeightedHypergraph) -> bool:
        if set(self.assignment) != set(range(h.n_edges)):
            return False
        load: Counter = Counter()
        for i, v in self.assignment.items():
            if v not in h.edges[i]:
                return False
            load[v] += 1
        return all(load[v] <= h.vertex_weights[v] for v in load)

    def validate(self, h: WeightedHypergraph) -> None:
        if not self.is_valid(h):
            raise InvalidInstanceError("WSDR 校验失败：代表不在边内或超出顶点容量")

    def to_dict(self) -> Dict[str, Any]:
        return {"assignment": [[i, v] for i, v in sorted(self.assignment.items())]}


@dataclass(frozen=True)
class HallViolation:
    """Hall 条件反例：|V_X|_w < |X|"""
    edge_subset: FrozenSet[int]
    witness_size: int
    vertex_set: FrozenSet[int] = field(default_factory=frozenset)

    def is_valid(self, h: WeightedHypergraph) -> bool:
        covered = {v for i in self.edge_subset for v in h.edges[i]}
        return (covered == set(self.vertex_set)
                and h.weighted_size(covered) == self.witness_size
                and self.witness_size < len(self.edge_subset))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "edge_subset": sorted(self.edge_subset),
            "vertex_set": sorted(self.vertex_set),
            "witness_size": self.witness_size,
        }


class SlotMatcher:
    """边与顶点容量槽之间的二部图最大匹配

    每次从一条未匹配边出发做 BFS 寻找增广路，避免深递归；
    遍历顺序固定（边下标、顶点下标、槽序号），结果确定。
    """

    def __init__(self, h: WeightedHypergraph):
        self._h = h
        self._adjacency: List[List[Slot]] = [
            [(v, t) for v in edge for t in range(h.vertex_weights[v])]
            for edge in h.edges
        ]
        self._edge_to_slot: Dict[int, Slot] = {}
        self._slot_to_edge: Dict[Slot, int] = {}

    def run(self) -> int:
        self._edge_to_slot.clear()
        self._slot_to_edge.clear()
        for i in range(self._h.n_edges):
            self._augment(i)
        return len(self._edge_to_slot)

    def _augment(self, root: int) -> bool:
        parent: Dict[Slot, int] = {}
        queue: Deque[int] = deque([root])
        while queue:
            edge = queue.popleft()
            for slot in self._adjacency[edge]:
                if slot in parent:
                    continue
                parent[slot] = edge
                if slot not in self._slot_to_edge:
                    self._flip(root, slot, parent)
                    return True
                queue.append(self._slot_to_edge[slot])
        return False

    def _flip(self, root: int, slot: Slot, parent: Dict[Slot, int]) -> None:
        while True:
            edge = parent[slot]
            previous = self._edge_to_slot.get(edge)
            self._edge_to_slot[edge] = slot
            self._slot_to_edge[slot] = edge
            if edge == root:
                return
            slot = previous

    def matching(self) -> Dict[int, int]:
        return {i: slot[0] for i, slot in self._edge_to_slot.items()}

    def alternating_reach(self, root: int) -> Tuple[Set[int], Set[Slot]]:
        """从未匹配边 root 出发的交错可达边集与槽集"""
        edges: Set[int] = {root}
        slots: Set[Slot] = set()
        queue: Deque[int] = deque([root])
        while queue:
            edge = queue.popleft()
            for slot in self._adjacency[edge]:
                if slot in slots:
                    continue
                slots.add(slot)
                nxt = self._slot_to_edge.get(slot)
                if nxt is not None and nxt not in edges:
                    edges.add(nxt)
                    queue.append(nxt)
        return edges, slots


def find_wsdr(h: WeightedHypergraph) -> Union[Wsdr, HallViolation]:
    """求 WSDR；不存在时返回由交错可达割给出的 Hall 反例"""
    matcher = SlotMatcher(h)
    size = matcher.run()
    if size == h.n_edges:
        return Wsdr(matcher.matching())

    matched = matcher.matching()
    root = min(i for i in range(h.n_edges) if i not in matched)
    edges, _ = matcher.alternating_reach(root)
    vertices = frozenset(v for i in edges for v in h.edges[i])
    violation = HallViolation(frozenset(edges), h.weighted_size(vertices), vertices)
    log.debug("Hall 反例: %d 条边, 容量 %d", len(edges), violation.witness_size)
    return violation


def count_wsdr_bruteforce(h: WeightedHypergraph,
                          cap: int = LimitConstants.BRUTEFORCE_CAP,
                          multiplicity: Optional[Dict[Tuple[int, int], int]] = None) -> int:
    """穷举计数 WSDR

    Args:
        h: 超图
        cap: ∏|e_i| 的上限
        multiplicity: 可选的 (边, 顶点) -> 重数 d_{i,j}；给出时返回按重数乘积加权的计数

    Raises:
        SizeLimitError: 组合数超过 cap
    """
    size = 1
    for edge in h.edges:
        size *= len(edge)
    if size > cap:
        raise SizeLimitError(f"穷举规模 {size} 超过上限 {cap}", size=size, cap=cap)

    remaining = list(h.vertex_weights)
    weight = multiplicity or {}

    def _count(i: int) -> int:
        if i == h.n_edges:
            return 1
        total = 0
        for v in h.edges[i]:
            if remaining[v] == 0:
                continue
            factor = weight.get((i, v), 1)
            if factor == 0:
                continue
            remaining[v] -= 1
            total += factor * _count(i + 1)
            remaining[v] += 1
        return total

    return _count(0)


def cartesian_product(h1: WeightedHypergraph, h2: WeightedHypergraph) -> WeightedHypergraph:
    """超图笛卡尔积 H1 □ H2

    顶点 (v1, v2) 编号为 v1 * |V2| + v2，权重 w1(v1) + w2(v2)。
    边先列出 {v1} × e2（按 v1、e2 顺序），再列出 e1 × {v2}（按 v2、e1 顺序）。
    """
    n1, n2 = h1.n_vertices, h2.n_vertices
    weights = tuple(h1.vertex_weights[v1] + h2.vertex_weights[v2]
                    for v1 in range(n1) for v2 in range(n2))
    edges: List[Edge] = []
    for v1 in range(n1):
        for e2 in h2.edges:
            edges.append(tuple(v1 * n2 + v2 for v2 in e2))
    for v2 in range(n2):
        for e1 in h1.edges:
            edges.append(tuple(v1 * n2 + v2 for v1 in e1))
    return WeightedHypergraph(weights, tuple(edges))


def product_wsdr(f1: Wsdr, f2: Wsdr, h1: WeightedHypergraph, h2: WeightedHypergraph) -> Wsdr:
    """由两个因子的 WSDR 组合出乘积超图的 WSDR（边序与 cartesian_product 一致）"""
    n2, m1, m2 = h2.n_vertices, h1.n_edges, h2.n_edges
    assignment: Dict[int, int] = {}
    for v1 in range(h1.n_vertices):
        for i2 in range(m2):
            assignment[v1 * m2 + i2] = v1 * n2 + f2.assignment[i2]
    offset = h1.n_vertices * m2
    for v2 in range(n2):
        for i1 in range(m1):
            assignment[offset + v2 * m1 + i1] = f1.assignment[i1] * n2 + v2
    return Wsdr(assignment)


def degree_condition_holds(h: WeightedHypergraph) -> bool:
    """充分条件：对所有 v ∈ e 有 deg(v) ≤ |e|_w"""
    degrees = Counter(v for edge in h.edges for v in edge)
    return all(degrees[v] <= h.weighted_size(edge) for edge in h.edges for v in edge)


def is_regular_uniform(h: WeightedHypergraph) -> Optional[Tuple[int, int]]:
    """若超图 d-正则且 k-一致（|e|_w 恒为 k）返回 (d, k)，否则返回 None"""
    if h.n_edges == 0:
        return None
    degrees = {h.degree(v) for v in range(h.n_vertices)}
    sizes = {h.weighted_size(edge) for edge in h.edges}
    if len(degrees) != 1 or len(sizes) != 1:
        return None
    return degrees.pop(), sizes.pop()


# ============ 扩展边序与传递滤链 ============

@dataclass(frozen=True)
class ExtendingOrder:
    """a-几乎扩展边序

    Attributes:
        order: 边下标的排列
        non_extending_count: 不引入新顶点的位置个数 a
        added_vertex: 扩展边 -> 其新顶点 u_i
    """
    order: Tuple[int, ...]
    non_extending_count: int
    added_vertex: Dict[int, int]

    def is_extending(self, edge_index: int) -> bool:
        return edge_index in self.added_vertex

    def to_dict(self) -> Dict[str, Any]:
        return {
            "order": list(self.order),
            "a": self.non_extending_count,
            "added_vertex": [[i, u] for i, u in sorted(self.added_vertex.items())],
        }


@dataclass(frozen=True)
class TransferFiltration:
    """传递滤链

    Attributes:
        foundation: 冗余顶点集 R = V(G_0)
        order: 边序
        layer_fn: 每个位置 i（从 1 开始）对应的 r(i)，按位置顺序存放
        radius: 最小 β 使 r^β(i) = 0 对所有 i 成立
        transfer_type: b = |R|
        added_vertex: 扩展边 -> u_i
    """
    foundation: FrozenSet[int]
    order: Tuple[int, ...]
    layer_fn: Tuple[int, ...]
    radius: int
    transfer_type: int
    added_vertex: Dict[int, int] = field(default_factory=dict)

    def depths(self) -> Tuple[int, ...]:
        """每个位置沿 r 回到 0 所需的步数"""
        depth = [0]
        for r in self.layer_fn:
            depth.append(depth[r] + 1)
        return tuple(depth[1:])

    def layers(self) -> List[List[int]]:
        """按深度分组的边下标"""
        grouped: Dict[int, List[int]] = {}
        for edge, d in zip(self.order, self.depths()):
            grouped.setdefault(d, []).append(edge)
        return [grouped[d] for d in sorted(grouped)]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "foundation": sorted(self.foundation),
            "order": list(self.order),
            "layer_fn": list(self.layer_fn),
            "radius": self.radius,
            "transfer_type": self.transfer_type,
        }


def _peel(h: WeightedHypergraph, edge_indices: Iterable[int]) -> Tuple[List[Tuple[int, int]], List[int]]:
    """反向剥离：反复删去含度为 1 顶点的最小下标边；卡住时删去最小下标边并记为非扩展"""
    remaining = set(edge_indices)
    degree = Counter(v for i in remaining for v in h.edges[i])
    peeled: List[Tuple[int, int]] = []
    stuck: List[int] = []
    while remaining:
        choice = None
        for i in sorted(remaining):
            ones = [v for v in h.edges[i] if degree[v] == 1]
            if ones:
                choice = (i, min(ones))
                break
        if choice is None:
            i = min(remaining)
            stuck.append(i)
        else:
            peeled.append(choice)
            i = choice[0]
        remaining.remove(i)
        for v in h.edges[i]:
            degree[v] -= 1
    return peeled, stuck


def _assemble(h: WeightedHypergraph, peeled: List[Tuple[int, int]], tail: List[int]) -> ExtendingOrder:
    order = [i for i, _ in reversed(peeled)]
    added = {i: u for i, u in peeled}
    seen: Set[int] = {v for i in order for v in h.edges[i]}
    extending_tail: List[int] = []
    closing: List[int] = []
    for i in tail:
        new = set(h.edges[i]) - seen
        if new:
            extending_tail.append(i)
            added[i] = min(new)
            seen |= new
        else:
            closing.append(i)
    return ExtendingOrder(tuple(order + extending_tail + closing), len(closing), added)


def _foundation(h: WeightedHypergraph, order: ExtendingOrder) -> Set[int]:
    seen: Set[int] = set()
    redundant: Set[int] = set()
    for i in order.order:
        edge = set(h.edges[i])
        if i in order.added_vertex:
            redundant |= (edge - seen) - {order.added_vertex[i]}
        seen |= edge
    return redundant


def _repair(h: WeightedHypergraph, order: ExtendingOrder) -> ExtendingOrder:
    """把完全落在基础集内的非扩展边提前到引入其最后一个顶点的边之前"""
    while True:
        redundant = _foundation(h, order)
        target = next((i for i in order.order
                       if i not in order.added_vertex and set(h.edges[i]) <= redundant), None)
        if target is None:
            return order
        sequence = [i for i in order.order if i != target]
        introduced_at: Dict[int, int] = {}
        seen: Set[int] = set()
        for pos, i in enumerate(sequence):
            for v in h.edges[i]:
                if v not in seen:
                    introduced_at[v] = pos
            seen |= set(h.edges[i])
        last = max(introduced_at[v] for v in h.edges[target])
        fresh = min(v for v in h.edges[target] if introduced_at[v] == last)
        sequence.insert(last, target)
        added = dict(order.added_vertex)
        added[target] = fresh
        order = ExtendingOrder(tuple(sequence), order.non_extending_count - 1, added)
        log.debug("修复边序: 边 %d 提前为扩展边, 新顶点 %d", target, fresh)


def find_extending_order(h: WeightedHypergraph, a_max: int = 1,
                         exhaustive_max_edges: int = LimitConstants.EXHAUSTIVE_ORDER_MAX_EDGES
                         ) -> Optional[ExtendingOrder]:
    """求 a ≤ a_max 的几乎扩展边序（忽略权重）

    先做贪心剥离；若 a 高于下界 max(0, m - n) 且边数不超过 exhaustive_max_edges，
    按大小递增穷举非扩展边集合以求最小 a。
    """
    m = h.n_edges
    if m == 0:
        return ExtendingOrder((), 0, {})

    peeled, stuck = _peel(h, range(m))
    best = _repair(h, _assemble(h, peeled, stuck))

    lower = max(0, m - len(h.covered_vertices()))
    if best.non_extending_count > lower and m <= exhaustive_max_edges:
        for size in range(lower, best.non_extending_count):
            found = None
            for subset in itertools.combinations(range(m), size):
                rest = [i for i in range(m) if i not in subset]
                sub_peeled, sub_stuck = _peel(h, rest)
                if not sub_stuck:
                    found = _repair(h, _assemble(h, sub_peeled, list(subset)))
                    break
            if found is not None:
                best = found
                break

    if best.non_extending_count > a_max:
        return None
    return best


def filtration_of_order(h: WeightedHypergraph, order: ExtendingOrder) -> TransferFiltration:
    """由边序构造传递滤链：基础集、层函数 r 与半径"""
    redundant = _foundation(h, order)
    prefixes: List[Set[int]] = [set(redundant)]
    for i in order.order:
        prefixes.append(prefixes[-1] | set(h.edges[i]))

    layer: List[int] = []
    for pos, i in enumerate(order.order, start=1):
        edge = set(h.edges[i])
        r = next(j for j in range(pos) if len(edge - prefixes[j]) <= 1)
        layer.append(r)

    depth = [0]
    for r in layer:
        depth.append(depth[r] + 1)

    b = len(redundant)
    expected = len(h.covered_vertices()) - h.n_edges + order.non_extending_count
    if b != expected:
        raise InvalidInstanceError(f"边序与超图不一致: |R| = {b}, n - m + a = {expected}")

    return TransferFiltration(
        foundation=frozenset(redundant),
        order=tuple(order.order),
        layer_fn=tuple(layer),
        radius=max(depth),
        transfer_type=b,
        added_vertex=dict(order.added_vertex),
    )
