"""
稀疏单变量多项式与多项式 -> QSAT 嵌入

嵌入把 p 齐次化为 q(x, y) = Σ c_i x^i y^{D-i}，在根 qubit v_0 = (x, y) 上用
复制 / 乘积小工具生成幂次 qubit (x^e, y^e)，再按
    r_t = c_{t,0} y^{d_t} + x^{j_t} r_{t+1}
逐层用二次小工具拼出 w_D ∝ (q, y^D)，最后用 1-局部约束 |0⟩ 令 q = 0。
"""
from __future__ import annotations

import json
import logging
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import mpmath as mp
import numpy as np

from .constants import FormatConstants, LimitConstants, SolverConstants, ToleranceConstants
from .exceptions import (DegeneratePolynomialError, InvalidInstanceError, RegimeError,
                         SizeLimitError)
from .hypergraph import HallViolation, WeightedHypergraph, Wsdr, find_wsdr
from .models import (Constraint, ProductState, QsatInstance, proportionality_residual,
                     underlying_hypergraph)
from .transfer import (equality_gadget, forced_assignment, gadget_linear, gadget_quadratic,
                       product_gadget)

log = logging.getLogger(__name__)


@dataclass
class SparsePoly:
    """稀疏多项式 Σ c_e x^e

    Attributes:
        terms: 指数 -> 非零复系数
        monic: 首项系数是否为 1
    """
    terms: Dict[int, complex]
    monic: bool = False

    def __init__(self, terms: Dict[int, complex], monic: Optional[bool] = None):
        self.terms = {}
        for e, c in terms.items():
            e = int(e)
            if e < 0:
                raise InvalidInstanceError(f"指数 {e} 为负")
            c = complex(c)
            if c != 0:
                self.terms[e] = self.terms.get(e, 0j) + c
        self.terms = {e: c for e, c in sorted(self.terms.items()) if c != 0}
        if not self.terms:
            raise DegeneratePolynomialError("多项式没有非零项")
        lead = self.terms[self.degree]
        if monic is None:
            monic = lead == 1
        elif monic and lead != 1:
            raise InvalidInstanceError(f"标记为首一但首项系数为 {lead}")
        self.monic = bool(monic)

    @classmethod
    def from_dense(cls, coeffs: Sequence[complex]) -> 'SparsePoly':
        """coeffs[i] 为 x^i 的系数"""
        return cls({i: c for i, c in enumerate(coeffs)})

    @property
    def degree(self) -> int:
        return max(self.terms)

    @property
    def n_terms(self) -> int:
        return len(self.terms)

    @property
    def trailing_power(self) -> int:
        return min(self.terms)

    def reduced(self) -> 'SparsePoly':
        """去掉因子 x^t 后的多项式"""
        t = self.trailing_power
        return SparsePoly({e - t: c for e, c in self.terms.items()}, self.monic)

    def coefficient_bound_ok(self) -> bool:
        """所有 |c_e| ≤ d"""
        return all(abs(c) <= self.degree for c in self.terms.values())

    def evaluate(self, x: complex) -> complex:
        """双精度求值"""
        x = complex(x)
        return sum((c * x ** e for e, c in self.terms.items()), 0j)

    def dense(self, cap: int = SolverConstants.DEGREE_CAP) -> np.ndarray:
        if self.degree + 1 > cap:
            raise SizeLimitError(f"稠密化需要 {self.degree + 1} 个系数，超过上限 {cap}",
                                 size=self.degree + 1, cap=cap)
        out = np.zeros(self.degree + 1, dtype=complex)
        for e, c in self.terms.items():
            out[e] = c
        return out

    def to_dict(self) -> Dict[str, Any]:
        return {
            "degree": str(self.degree),
            "monic": self.monic,
            "terms": [{"exp": str(e), "coeff": [c.real, c.imag]} for e, c in self.terms.items()],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'SparsePoly':
        if "terms" not in data:
            raise InvalidInstanceError("多项式数据缺少 'terms' 字段")
        terms: Dict[int, complex] = {}
        for term in data["terms"]:
            e = int(term["exp"])
            terms[e] = terms.get(e, 0j) + complex(float(term["coeff"][0]), float(term["coeff"][1]))
        poly = cls(terms, data.get("monic"))
        if "degree" in data and int(data["degree"]) != poly.degree:
            raise InvalidInstanceError(f"声明的次数 {data['degree']} 与实际次数 {poly.degree} 不符")
        return poly

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=FormatConstants.JSON_INDENT, ensure_ascii=False)

    @classmethod
    def from_json(cls, json_str: str) -> 'SparsePoly':
        return cls.from_dict(json.loads(json_str))

    def save_to_file(self, filepath: str) -> bool:
        try:
            directory = os.path.dirname(filepath)
            if directory:
                os.makedirs(directory, exist_ok=True)
            with open(filepath, 'w', encoding='utf-8') as f:
                json.dump(self.to_dict(), f, indent=FormatConstants.JSON_INDENT, ensure_ascii=False)
            print(f"✅ 多项式已保存到: {filepath}")
            return True
        except Exception as e:
            print(f"❌ 保存多项式失败: {e}")
            return False

    @classmethod
    def load_from_file(cls, filepath: str) -> Optional['SparsePoly']:
        try:
            if not os.path.exists(filepath):
                print(f"❌ 文件不存在: {filepath}")
                return None
            with open(filepath, 'r', encoding='utf-8') as f:
                return cls.from_dict(json.load(f))
        except Exception as e:
            print(f"❌ 加载多项式失败: {e}")
            return None


# ============ 任意精度求值 ============

Number = Union[complex, float, int, Fraction, Tuple[Any, Any], mp.mpc, mp.mpf]


def _to_mpc(x: Number) -> mp.mpc:
    """在当前精度下转换；有理数按分子分母精确相除"""
    def _real(v):
        if isinstance(v, Fraction):
            return mp.mpf(v.numerator) / v.denominator
        return mp.mpf(v)

    if isinstance(x, tuple):
        return mp.mpc(_real(x[0]), _real(x[1]))
    if isinstance(x, (Fraction, int, float, mp.mpf)):
        return mp.mpc(_real(x), 0)
    if isinstance(x, mp.mpc):
        return x
    return mp.mpc(complex(x))


def _abs_float(x: Number) -> float:
    if isinstance(x, tuple):
        return math.hypot(float(x[0]), float(x[1]))
    return float(abs(complex(x))) if not isinstance(x, (mp.mpc, mp.mpf)) else float(abs(x))


def regime_radius(d: int, power: int = SolverConstants.POLYLOG_POWER) -> float:
    """保证精度的求值半径 1 + max(1, log₂d)^power / d"""
    return 1.0 + max(1.0, math.log2(d)) ** power / d


def working_precision(p: SparsePoly, x_abs: float, L: int,
                      guard_bits: int = SolverConstants.GUARD_BITS) -> int:
    """K = L + ⌈log₂ s⌉ + ⌈d·log₂ max(1, |x|)⌉ + 保护位"""
    growth = math.ceil(p.degree * math.log2(max(1.0, x_abs)))
    return int(L) + math.ceil(math.log2(max(1, p.n_terms))) + growth + int(guard_bits)


def _power(base: mp.mpc, e: int) -> mp.mpc:
    result = mp.mpc(1)
    while e:
        if e & 1:
            result *= base
        e >>= 1
        if e:
            base *= base
    return result


def eval_truncated(p: SparsePoly, x: Number, L: int,
                   guard_bits: int = SolverConstants.GUARD_BITS) -> mp.mpc:
    """在工作精度 K 下平方-乘法求值，误差不超过 2^{-L}

    Raises:
        RegimeError: |x| 超出 1 + polylog(d)/d
    """
    x_abs = _abs_float(x)
    limit = regime_radius(max(p.degree, 1))
    if x_abs > limit:
        raise RegimeError(f"|x| = {x_abs:.6g} 超出保证区域 {limit:.6g}")
    K = working_precision(p, x_abs, L, guard_bits)
    with mp.workprec(K):
        X = _to_mpc(x)
        total = mp.mpc(0)
        for e, c in p.terms.items():
            total += mp.mpc(c.real, c.imag) * _power(X, e)
    return total


def root_annulus(p: SparsePoly) -> Tuple[float, float]:
    """至少含一个根的圆环 [1/(1+d²), 1 + ln(√s·d)/d]（对去掉 x^t 后的多项式）"""
    q = p.reduced()
    d, s = q.degree, q.n_terms
    if d < 1:
        raise DegeneratePolynomialError("常数多项式没有根")
    lower = 1.0 / (1 + d * d)
    upper = 1.0 + (0.5 * math.log(s) + math.log(d)) / d
    return lower, upper


# ============ 嵌入 ============

@dataclass(frozen=True)
class Gadget:
    """嵌入中的一个约束：inputs 在前，output 在最后一个槽"""
    constraint: int
    inputs: Tuple[int, ...]
    output: Optional[int]
    kind: str


@dataclass
class EmbeddingResult:
    """多项式嵌入结果

    Attributes:
        instance: qubit 实例
        sdr: 约束 -> qubit 的 SDR
        root_qubit: v_0
        target_qubit: w_D
        polynomial: 原多项式
        trailing_power: 提出的 x^t
        mode: "dense" 或 "sparse"
        gadgets: 按构造顺序的约束记录
        power_qubits: 指数 -> 持有 (x^e, y^e) 的 qubit
    """
    instance: QsatInstance
    sdr: Wsdr
    root_qubit: int
    target_qubit: int
    polynomial: SparsePoly
    trailing_power: int
    mode: str
    gadgets: List[Gadget] = field(default_factory=list)
    power_qubits: Dict[int, int] = field(default_factory=dict)

    @property
    def degree(self) -> int:
        return self.polynomial.degree - self.trailing_power

    @property
    def coefficient_bound_ok(self) -> bool:
        return self.polynomial.coefficient_bound_ok()

    def assignment_for(self, x: complex, y: complex = 1.0) -> ProductState:
        """v_0 = (x, y) 时按小工具顺序逐个求强制赋值得到的乘积态"""
        dims = self.instance.dims
        values: List[Optional[np.ndarray]] = [None] * self.instance.n_qudits
        values[self.root_qubit] = np.array([x, y], dtype=complex)
        for g in self.gadgets:
            if g.output is None:
                continue
            c = self.instance.constraints[g.constraint]
            slots = [values[q] for q in g.inputs] + [None]
            result = forced_assignment(c.tensor(dims), slots)
            if result.vanished:
                raise DegeneratePolynomialError(f"约束 {g.constraint} 在 v_0 = ({x}, {y}) 处退化")
            values[g.output] = result.g
        return ProductState(values)

    def summary(self) -> Dict[str, Any]:
        return {
            "mode": self.mode,
            "degree": str(self.degree),
            "trailing_power": str(self.trailing_power),
            "n_terms": self.polynomial.n_terms,
            "n_qubits": self.instance.n_qudits,
            "n_constraints": self.instance.n_constraints,
            "root_qubit": self.root_qubit,
            "target_qubit": self.target_qubit,
            "coefficient_bound_ok": self.coefficient_bound_ok,
        }


class _Builder:
    """逐个追加 qubit 与小工具约束"""

    def __init__(self):
        self.n_qubits = 1
        self.constraints: List[Constraint] = []
        self.gadgets: List[Gadget] = []

    def add(self, kind: str, inputs: Sequence[int], coeffs: np.ndarray) -> int:
        out = self.n_qubits
        self.n_qubits += 1
        self._append(kind, tuple(inputs), out, coeffs)
        return out

    def add_terminal(self, kind: str, qubit: int, coeffs: Sequence[complex]) -> None:
        self._append(kind, (qubit,), None, np.asarray(coeffs, dtype=complex))

    def _append(self, kind: str, inputs: Tuple[int, ...], output: Optional[int], coeffs: np.ndarray):
        qudits = inputs + ((output,) if output is not None else ())
        self.gadgets.append(Gadget(len(self.constraints), inputs, output, kind))
        self.constraints.append(Constraint.from_coefficients(qudits, coeffs))


class _Powers:
    """幂次 qubit 的构造与缓存：dense 逐次乘 v_0，sparse 按二进制展开"""

    def __init__(self, builder: _Builder, root: int, mode: str):
        self.builder = builder
        self.mode = mode
        self.cache: Dict[int, int] = {1: root}
        self.copies: Dict[int, int] = {}

    def copy_of(self, e: int) -> int:
        """与 p_e 相等的另一个 qubit"""
        if e not in self.copies:
            self.copies[e] = self.builder.add("equality", (self.get(e),), equality_gadget())
        return self.copies[e]

    def get(self, e: int) -> int:
        if e in self.cache:
            return self.cache[e]
        if self.mode == "dense":
            top = max(self.cache)
            for k in range(top + 1, e + 1):
                other = self.copy_of(1) if k == 2 else self.cache[1]
                self.cache[k] = self.builder.add("product", (self.cache[k - 1], other), product_gadget())
            return self.cache[e]
        if e % 2 == 0:
            half = self.get(e // 2)
            self.cache[e] = self.builder.add("product", (half, self.copy_of(e // 2)), product_gadget())
        else:
            below = self.get(e - 1)
            self.cache[e] = self.builder.add("product", (below, self.cache[1]), product_gadget())
        return self.cache[e]


def _coeff(poly: Dict[int, complex], e: int) -> complex:
    return poly.get(e, 0j)


def embed(p: SparsePoly, mode: str = "dense",
          dense_max_degree: int = LimitConstants.DENSE_EMBED_MAX_DEGREE) -> EmbeddingResult:
    """把多项式嵌入为 qubit QSAT 实例

    p(x/y) = 0 当且仅当 v_0 = (x, y) 的乘积赋值能延拓为精确解。

    Raises:
        DegeneratePolynomialError: 提出 x^t 后为常数
        SizeLimitError: dense 模式下次数超过 dense_max_degree
    """
    if mode not in ("dense", "sparse"):
        raise InvalidInstanceError(f"未知的嵌入模式: {mode}")
    t = p.trailing_power
    q = p.reduced()
    D = q.degree
    if D < 1:
        raise DegeneratePolynomialError("提出 x 的幂次后多项式为常数，拒绝嵌入")
    if mode == "dense" and D > dense_max_degree:
        raise SizeLimitError(f"dense 模式次数 {D} 超过上限 {dense_max_degree}",
                             size=D, cap=dense_max_degree)

    builder = _Builder()
    root = 0
    powers = _Powers(builder, root, mode)

    # 先把递归展开成 (j_t, r_t) 列表，再由内向外构造
    levels: List[Tuple[int, Dict[int, complex]]] = []
    r = dict(q.terms)
    d = D
    while d > 2:
        j = min(e for e in r if e > 0)
        if j == d:
            break
        levels.append((j, r))
        r = {e - j: c for e, c in r.items() if e >= j}
        d -= j

    if d == 1:
        w = builder.add("linear", (root,), gadget_linear((0, -1), (_coeff(r, 1), _coeff(r, 0))))
    elif d == 2:
        w = builder.add("quadratic", (root, powers.copy_of(1)),
                        gadget_quadratic((0, 0, 0, -1), (_coeff(r, 2), _coeff(r, 1), 0, _coeff(r, 0))))
    else:
        w = builder.add("linear", (powers.get(d),), gadget_linear((0, -1), (_coeff(r, d), _coeff(r, 0))))

    for j, level in reversed(levels):
        w = builder.add("quadratic", (powers.get(j), w),
                        gadget_quadratic((0, 0, 0, -1), (1, 0, 0, _coeff(level, 0))))
    builder.add_terminal("zero", w, (1, 0))

    instance = QsatInstance([2] * builder.n_qubits, builder.constraints,
                            {"family": "poly-embed", "mode": mode, "degree": str(p.degree)})
    sdr = find_wsdr(underlying_hypergraph(instance))
    if isinstance(sdr, HallViolation):
        raise InvalidInstanceError(f"嵌入实例没有 SDR: {sdr.to_dict()}")
    log.debug("嵌入 %s: D=%d, s=%d, %d 个 qubit, %d 个约束",
              mode, D, q.n_terms, instance.n_qudits, instance.n_constraints)
    return EmbeddingResult(instance, sdr, root, w, p, t, mode,
                           builder.gadgets, dict(powers.cache))


def padded_hypergraph(result: EmbeddingResult) -> WeightedHypergraph:
    """给不足 3 个顶点的边补辅助顶点（权重 1），得到 3-一致超图"""
    n = result.instance.n_qudits
    edges = []
    for con in result.instance.constraints:
        edge = list(con.qudits)
        while len(edge) < 3:
            edge.append(n)
            n += 1
        edges.append(tuple(edge))
    return WeightedHypergraph((1,) * n, tuple(edges))


def extract_root(result: EmbeddingResult, state: ProductState,
                 tol: float = ToleranceConstants.CHART_SWITCH_TOL) -> complex:
    """从根 qubit 读出 x/y

    Raises:
        InvalidInstanceError: 根 qubit 的 y 分量为零
    """
    state.check_dims(result.instance.dims)
    target = state.locals[result.target_qubit]
    if proportionality_residual(target, np.array([0, 1])) > tol:
        log.warning("目标 qubit 与 |1⟩ 不成比例，读出的根可能不准确")
    v = state.locals[result.root_qubit]
    if abs(v[1]) <= ToleranceConstants.VANISH_TAU * np.linalg.norm(v):
        raise InvalidInstanceError("根 qubit 的 y 分量为零，无法读出根")
    return complex(v[0] / v[1])


def root_residual(p: SparsePoly, root: complex, L: int = 64) -> float:
    """|p(root)|：在保证区域内用任意精度求值，否则用双精度"""
    try:
        return float(abs(eval_truncated(p, root, L)))
    except RegimeError:
        return abs(p.evaluate(root))
