"""
多重齐次方程组、Bézout 数与截断 Chow 环

Bézout 数取 ∏_i Σ_j d_{i,j} α_j 中 ∏ α_j^{n_j} 的系数；乘法过程中
超过 n_j 的指数直接丢弃，这正是 Z[α]/(α_j^{n_j+1}) 中的运算。
"""
from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .constants import FormatConstants
from .exceptions import InvalidInstanceError
from .hypergraph import HallViolation, WeightedHypergraph, Wsdr, find_wsdr
from .workers import parallel_map

log = logging.getLogger(__name__)

# 单项式：升序的 (组, 变量, 次数) 元组
Monomial = Tuple[Tuple[int, int, int], ...]


@dataclass
class Equation:
    """稀疏方程：单项式 -> 复系数"""
    terms: Dict[Monomial, complex]

    def __init__(self, terms: Dict[Any, complex]):
        self.terms = {}
        for exps, coeff in terms.items():
            key = tuple(sorted((int(g), int(v), int(p)) for g, v, p in exps))
            self.terms[key] = self.terms.get(key, 0j) + complex(coeff)

    def group_degrees(self, n_groups: int) -> Tuple[int, ...]:
        """各组的次数；非多重齐次时抛出异常"""
        degrees: Optional[Tuple[int, ...]] = None
        for exps in self.terms:
            totals = [0] * n_groups
            for g, _, p in exps:
                totals[g] += p
            if degrees is None:
                degrees = tuple(totals)
            elif tuple(totals) != degrees:
                raise InvalidInstanceError(f"方程不是多重齐次的: {degrees} 与 {tuple(totals)}")
        if degrees is None:
            raise InvalidInstanceError("方程没有任何项")
        return degrees

    def to_dict(self) -> Dict[str, Any]:
        return {"terms": [{"exps": [list(e) for e in exps],
                           "coeff": [float(c.real), float(c.imag)]}
                          for exps, c in self.terms.items()]}


@dataclass
class MultiHomSystem:
    """多重齐次方程组

    Attributes:
        group_sizes: 每组变量个数 n_j + 1
        equations: 方程列表（系数向量已单位化）
        degrees: d_{i,j}
    """
    group_sizes: Tuple[int, ...]
    equations: List[Equation]
    degrees: List[Tuple[int, ...]] = field(default_factory=list)

    def __init__(self, group_sizes: Sequence[int], equations: Sequence[Equation], normalize: bool = True):
        self.group_sizes = tuple(int(s) for s in group_sizes)
        if any(s < 1 for s in self.group_sizes):
            raise InvalidInstanceError("每组至少有一个变量")
        self.equations = []
        self.degrees = []
        k = len(self.group_sizes)
        for i, eq in enumerate(equations):
            terms = {exps: c for exps, c in eq.terms.items() if c != 0}
            for exps in terms:
                for g, v, p in exps:
                    if not 0 <= g < k or not 0 <= v < self.group_sizes[g] or p <= 0:
                        raise InvalidInstanceError(f"方程 {i} 的单项式 {exps} 不合法")
            eq = Equation(terms)
            degrees = eq.group_degrees(k)
            if not any(degrees):
                raise InvalidInstanceError(f"方程 {i} 在所有组中次数均为 0")
            if normalize:
                norm = float(np.linalg.norm(list(eq.terms.values())))
                eq = Equation({exps: c / norm for exps, c in eq.terms.items()})
            self.equations.append(eq)
            self.degrees.append(degrees)

    @property
    def n_groups(self) -> int:
        return len(self.group_sizes)

    @property
    def s_bound(self) -> int:
        """max_j n_j"""
        return max((s - 1 for s in self.group_sizes), default=0)

    def evaluate(self, groups: Sequence[np.ndarray]) -> np.ndarray:
        """在各组向量 Y 上求 f_i(Y)"""
        if len(groups) != self.n_groups:
            raise InvalidInstanceError(f"需要 {self.n_groups} 个组向量")
        values = np.zeros(len(self.equations), dtype=complex)
        for i, eq in enumerate(self.equations):
            for exps, coeff in eq.terms.items():
                term = coeff
                for g, v, p in exps:
                    term *= groups[g][v] ** p
                values[i] += term
        return values

    def to_dict(self) -> Dict[str, Any]:
        return {"groups": list(self.group_sizes), "equations": [eq.to_dict() for eq in self.equations]}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'MultiHomSystem':
        if "groups" not in data or "equations" not in data:
            raise InvalidInstanceError("方程组数据缺少 'groups' 或 'equations' 字段")
        equations = []
        for eq in data["equations"]:
            terms: Dict[Any, complex] = {}
            for term in eq["terms"]:
                key = tuple(tuple(e) for e in term["exps"])
                terms[key] = terms.get(key, 0j) + complex(term["coeff"][0], term["coeff"][1])
            equations.append(Equation(terms))
        return cls(data["groups"], equations)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=FormatConstants.JSON_INDENT, ensure_ascii=False)

    @classmethod
    def from_json(cls, json_str: str) -> 'MultiHomSystem':
        return cls.from_dict(json.loads(json_str))

    def save_to_file(self, filepath: str) -> bool:
        try:
            directory = os.path.dirname(filepath)
            if directory:
                os.makedirs(directory, exist_ok=True)
            with open(filepath, 'w', encoding='utf-8') as f:
                json.dump(self.to_dict(), f, indent=FormatConstants.JSON_INDENT, ensure_ascii=False)
            print(f"✅ 方程组已保存到: {filepath}")
            return True
        except Exception as e:
            print(f"❌ 保存方程组失败: {e}")
            return False

    @classmethod
    def load_from_file(cls, filepath: str) -> Optional['MultiHomSystem']:
        try:
            if not os.path.exists(filepath):
                print(f"❌ 文件不存在: {filepath}")
                return None
            with open(filepath, 'r', encoding='utf-8') as f:
                return cls.from_dict(json.load(f))
        except Exception as e:
            print(f"❌ 加载方程组失败: {e}")
            return None


# ============ 截断环 ============

@dataclass(frozen=True)
class TruncatedRingElement:
    """Z[H_1..H_n]/(H_1^{c_1+1}, ..., H_n^{c_n+1}) 中的元素

    Attributes:
        coeffs: 指数元组 -> 整数系数（不存零系数）
        caps: 每个生成元允许的最高指数 c_j
    """
    coeffs: Dict[Tuple[int, ...], int]
    caps: Tuple[int, ...]

    @classmethod
    def one(cls, caps: Sequence[int]) -> 'TruncatedRingElement':
        caps = tuple(int(c) for c in caps)
        return cls({(0,) * len(caps): 1}, caps)

    @classmethod
    def linear(cls, delta: Sequence[int], caps: Sequence[int]) -> 'TruncatedRingElement':
        """Σ_j δ_j H_j"""
        caps = tuple(int(c) for c in caps)
        if len(delta) != len(caps):
            raise InvalidInstanceError("线性形式长度与生成元个数不符")
        coeffs: Dict[Tuple[int, ...], int] = {}
        for j, d in enumerate(delta):
            d = int(d)
            if d < 0:
                raise InvalidInstanceError("线性形式系数必须非负")
            if d == 0 or caps[j] < 1:
                continue
            exps = [0] * len(caps)
            exps[j] = 1
            coeffs[tuple(exps)] = d
        return cls(coeffs, caps)

    def __mul__(self, other: 'TruncatedRingElement') -> 'TruncatedRingElement':
        if self.caps != other.caps:
            raise InvalidInstanceError("不同截断环中的元素不能相乘")
        out: Dict[Tuple[int, ...], int] = {}
        for e1, c1 in self.coeffs.items():
            for e2, c2 in other.coeffs.items():
                exps = tuple(a + b for a, b in zip(e1, e2))
                if any(x > cap for x, cap in zip(exps, self.caps)):
                    continue
                out[exps] = out.get(exps, 0) + c1 * c2
        return TruncatedRingElement({e: c for e, c in out.items() if c != 0}, self.caps)

    def is_zero(self) -> bool:
        return not self.coeffs

    def coefficient(self, exps: Sequence[int]) -> int:
        return self.coeffs.get(tuple(exps), 0)

    def top_coefficient(self) -> int:
        """∏ H_j^{c_j} 的系数"""
        return self.coefficient(self.caps)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TruncatedRingElement):
            return NotImplemented
        return self.caps == other.caps and self.coeffs == other.coeffs

    def __hash__(self) -> int:
        return hash((self.caps, tuple(sorted(self.coeffs.items()))))

    def to_dict(self) -> Dict[str, Any]:
        return {"caps": list(self.caps),
                "terms": [{"exps": list(e), "coeff": str(c)} for e, c in sorted(self.coeffs.items())]}


def chow_product(classes: Sequence[Sequence[int]], caps: Sequence[int]) -> TruncatedRingElement:
    """线性类 Σ_j δ_j H_j 在截断环中的乘积

    按两两配对的树形顺序相乘，配对和归并顺序固定，可在线程池中并行。
    """
    elements = [TruncatedRingElement.linear(delta, caps) for delta in classes]
    if not elements:
        return TruncatedRingElement.one(caps)
    while len(elements) > 1:
        pairs = [(elements[k], elements[k + 1]) for k in range(0, len(elements) - 1, 2)]
        merged = parallel_map(lambda pair: pair[0] * pair[1], pairs)
        if len(elements) % 2:
            merged.append(elements[-1])
        elements = merged
    return elements[0]


def bezout_number(degrees: Sequence[Sequence[int]], group_sizes: Sequence[int]) -> int:
    """多重齐次 Bézout 数

    Args:
        degrees: d_{i,j}，每行一个方程
        group_sizes: 每组变量个数 n_j + 1

    Returns:
        ∏_i Σ_j d_{i,j} α_j 中 ∏ α_j^{n_j} 的系数；方程数与 Σ n_j 不等时为 0
    """
    caps = [int(s) - 1 for s in group_sizes]
    for row in degrees:
        if len(row) != len(caps):
            raise InvalidInstanceError("次数矩阵的列数与变量组数不符")
    return chow_product(degrees, caps).top_coefficient()


def derived_hypergraph(degrees: Sequence[Sequence[int]], group_sizes: Sequence[int]) -> WeightedHypergraph:
    """每组一个顶点（权重 n_j），每个方程一条边（覆盖 d_{i,j} > 0 的组）"""
    weights = tuple(int(s) - 1 for s in group_sizes)
    edges = []
    for i, row in enumerate(degrees):
        edge = tuple(j for j, d in enumerate(row) if d > 0)
        if not edge:
            raise InvalidInstanceError(f"方程 {i} 不涉及任何变量组")
        edges.append(edge)
    return WeightedHypergraph(weights, tuple(edges))


def degree_multiplicity(degrees: Sequence[Sequence[int]]) -> Dict[Tuple[int, int], int]:
    """(方程, 组) -> d_{i,j}，供加权穷举计数使用"""
    return {(i, j): int(d) for i, row in enumerate(degrees) for j, d in enumerate(row) if d > 0}


def bezout_certificate(degrees: Sequence[Sequence[int]],
                       group_sizes: Sequence[int]) -> Union[Wsdr, HallViolation]:
    """派生超图上的 WSDR 或 Hall 反例"""
    return find_wsdr(derived_hypergraph(degrees, group_sizes))


def bezout_nonzero(degrees: Sequence[Sequence[int]], group_sizes: Sequence[int]) -> bool:
    """Bézout 数是否非零（匹配判定，多项式时间）"""
    if len(degrees) != sum(int(s) - 1 for s in group_sizes):
        return False
    return isinstance(bezout_certificate(degrees, group_sizes), Wsdr)


def qsat_classes(inst) -> Tuple[List[List[int]], List[int]]:
    """实例的 Chow 类 [V_i] = Σ_{v∈e_i} H_v 与截断上限 d_v - 1"""
    classes = []
    for c in inst.constraints:
        delta = [0] * inst.n_qudits
        for q in c.qudits:
            delta[q] = 1
        classes.append(delta)
    return classes, [d - 1 for d in inst.dims]


def generic_solution_count(inst) -> int:
    """m = Σ(d_i - 1) 时一般实例的乘积解个数（否则返回 0）"""
    classes, caps = qsat_classes(inst)
    if len(classes) != sum(caps):
        log.debug("约束数 %d 与 Σ(d_i - 1) = %d 不等", len(classes), sum(caps))
        return 0
    return chow_product(classes, caps).top_coefficient()
