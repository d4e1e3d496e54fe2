"""
乘积态求解器

solve_almost_extending 沿 a ≤ 1 的几乎扩展边序传播：
  1. 把已赋值的 qubit 代入约束；1-局部约束直接取正交向量，0-局部约束只记残差
  2. 在剩余超图上求边序与基础集 R
  3. a = 0 时 R 全取 |0⟩ 后逐边传递
  4. a = 1 且 |R| ≥ 2 时，除 u_0 外的 R 取 |0⟩ 再回到 1
  5. |R| = 1 时令 u_0 = x|0⟩ + |1⟩ 做多项式传递，闭合约束给出 q(x)，
     候选为 u_0 = |0⟩ 与 q 的各根；传递消失的 qubit 交给递归
"""
from __future__ import annotations

import itertools
import json
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Set, Tuple

import numpy as np
import pandas as pd
from numpy.polynomial import Polynomial

from .constants import FormatConstants, SolverConstants, ToleranceConstants
from .exceptions import (DegreeBoundError, InvalidInstanceError, NoValidOrderError, ProdsatError,
                         RecursionLimitError, RefusedError, SizeLimitError)
from .hypergraph import (ExtendingOrder, TransferFiltration, WeightedHypergraph,
                         filtration_of_order, find_extending_order)
from .models import (ProductState, QsatInstance, complex_to_pair, constraint_energies)
from .roots import UnivariatePoly, roots_univariate
from .transfer import forced_assignment, transfer_polynomial

log = logging.getLogger(__name__)


@dataclass
class SolveReport:
    """求解 / 校验报告

    Attributes:
        state: 通过校验的乘积态；失败时为 None
        residuals: 每个约束的能量 |⟨φ_i|ψ⟩|²（单位化后）
        eps: 验收阈值
        method: 使用的求解器
        recursion_depth: 非一般情形的递归层数
        degrees: 每次求根的闭合多项式次数
        chosen_root: 选中的根
        alternatives: 其余候选根
        failure: 失败原因
        diagnostics: 附加信息（可 JSON 序列化）
        timings: 各阶段耗时（秒），不写入文件
    """
    state: Optional[ProductState]
    residuals: np.ndarray
    eps: float
    method: str
    recursion_depth: int = 0
    degrees: List[int] = field(default_factory=list)
    chosen_root: Optional[complex] = None
    alternatives: List[complex] = field(default_factory=list)
    failure: Optional[str] = None
    diagnostics: Dict[str, Any] = field(default_factory=dict)
    timings: Dict[str, float] = field(default_factory=dict)

    @property
    def max_residual(self) -> float:
        return float(np.max(self.residuals)) if len(self.residuals) else 0.0

    @property
    def passed(self) -> bool:
        return self.state is not None and self.failure is None and self.max_residual <= self.eps

    @property
    def violated(self) -> List[int]:
        return [i for i, r in enumerate(self.residuals) if r > self.eps]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "method": self.method,
            "passed": self.passed,
            "eps": self.eps,
            "max_residual": self.max_residual,
            "residuals": [float(r) for r in self.residuals],
            "recursion_depth": self.recursion_depth,
            "degrees": list(self.degrees),
            "chosen_root": None if self.chosen_root is None else complex_to_pair(self.chosen_root),
            "alternatives": [complex_to_pair(z) for z in self.alternatives],
            "failure": self.failure,
            "diagnostics": self.diagnostics,
            "state": None if self.state is None else self.state.to_dict()["locals"],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=FormatConstants.JSON_INDENT, ensure_ascii=False)

    def to_frame(self, inst: Optional[QsatInstance] = None) -> pd.DataFrame:
        """每个约束一行：下标、作用的 qudit、残差、是否通过"""
        rows = []
        for i, r in enumerate(self.residuals):
            row = {"constraint": i, "residual": float(r), "passed": bool(r <= self.eps)}
            if inst is not None:
                row["qudits"] = " ".join(str(q) for q in inst.constraints[i].qudits)
            rows.append(row)
        return pd.DataFrame(rows)


def _failure_report(inst: QsatInstance, eps: float, method: str, reason: str,
                    **extra: Any) -> SolveReport:
    log.debug("%s 失败: %s", method, reason)
    return SolveReport(None, np.full(inst.n_constraints, np.inf), eps, method, failure=reason, **extra)


# ============ 校验 ============

def verify(inst: QsatInstance, state: ProductState,
           eps: float = ToleranceConstants.DEFAULT_EPS) -> SolveReport:
    """独立重算每个约束的能量（逐个基矢展开，补偿求和）"""
    state.check_dims(inst.dims)
    norms = [math.fsum(abs(a) ** 2 for a in v) for v in state.locals]
    residuals = np.empty(inst.n_constraints, dtype=float)
    for i, c in enumerate(inst.constraints):
        shape = [inst.dims[q] for q in c.qudits]
        re_parts: List[float] = []
        im_parts: List[float] = []
        for flat, index in enumerate(itertools.product(*(range(d) for d in shape))):
            term = complex(np.conj(c.amps[flat]))
            for q, j in zip(c.qudits, index):
                term *= complex(state.locals[q][j])
            re_parts.append(term.real)
            im_parts.append(term.imag)
        overlap_sq = math.fsum(re_parts) ** 2 + math.fsum(im_parts) ** 2
        amp_norm = math.fsum(abs(a) ** 2 for a in c.amps)
        scale = amp_norm * math.prod(norms[q] for q in c.qudits)
        residuals[i] = overlap_sq / scale
    report = SolveReport(state, residuals, eps, "verify")
    bad = report.violated
    if bad:
        report.failure = f"约束 {bad[0]} 的残差 {residuals[bad[0]]:.3e} 超过 {eps:.1e}"
        report.diagnostics["violated"] = bad
    return report


def _finalize(inst: QsatInstance, state: ProductState, eps: float, method: str,
              **extra: Any) -> SolveReport:
    """用 verify 复核求解器给出的态；未通过时不返回态"""
    check = verify(inst, state, eps)
    report = SolveReport(state, check.residuals, eps, method, **extra)
    if check.failure is not None:
        report.failure = check.failure
        report.diagnostics["violated"] = check.diagnostics.get("violated", [])
        report.diagnostics["best_max_residual"] = check.max_residual
        report.state = None
    return report


# ============ 低占用情形 ============

def solve_low_occupancy(inst: QsatInstance, eps: float = ToleranceConstants.DEFAULT_EPS) -> SolveReport:
    """每个 d 维 qudit 至多出现在 d - 1 个约束中

    每个约束交给其下标最大的 qudit；按下标递增处理，qudit i 取它负责的
    线性泛函的公共零空间中的向量（SVD 最后一个右奇异向量）。
    """
    started = time.perf_counter()
    occupancy = [0] * inst.n_qudits
    for c in inst.constraints:
        for q in c.qudits:
            occupancy[q] += 1
    crowded = [q for q, d in enumerate(inst.dims) if occupancy[q] > d - 1]
    if crowded:
        raise InvalidInstanceError(f"qudit {crowded[0]} 出现在 {occupancy[crowded[0]]} 个约束中，超过 d - 1")

    owner: Dict[int, List[int]] = {}
    for i, c in enumerate(inst.constraints):
        owner.setdefault(max(c.qudits), []).append(i)

    locals_: List[Optional[np.ndarray]] = [None] * inst.n_qudits
    for q in range(inst.n_qudits):
        rows = []
        for i in owner.get(q, []):
            c = inst.constraints[i]
            slots = [locals_[p] if p != q else None for p in c.qudits]
            rows.append(_reduce_to_functional(c.tensor(inst.dims), slots))
        locals_[q] = _common_null_vector(rows, inst.dims[q])
    state = ProductState(locals_)
    report = _finalize(inst, state, eps, "low-occupancy")
    report.timings["total"] = time.perf_counter() - started
    return report


def _reduce_to_functional(tensor: np.ndarray, slots: Sequence[Optional[np.ndarray]]) -> np.ndarray:
    """把除目标槽外的所有槽缩并掉，剩下目标 qudit 上的线性泛函"""
    target = next(s for s, v in enumerate(slots) if v is None)
    moved = np.moveaxis(tensor, target, -1)
    for s, v in enumerate(slots):
        if s != target:
            moved = np.tensordot(v, moved, axes=([0], [0]))
    return np.asarray(moved, dtype=complex).reshape(-1)


def _common_null_vector(rows: List[np.ndarray], dim: int) -> np.ndarray:
    if not rows:
        out = np.zeros(dim, dtype=complex)
        out[0] = 1
        return out
    _, _, vh = np.linalg.svd(np.array(rows, dtype=complex))
    return np.conj(vh[-1])


# ============ 几乎扩展边序求解 ============

@dataclass
class _Reduced:
    """代入已赋值 qubit 后的约束"""
    index: int
    qubits: Tuple[int, ...]
    tensor: np.ndarray


@dataclass
class _Context:
    inst: QsatInstance
    eps: float
    tau: float
    degree_cap: int
    degrees: List[int] = field(default_factory=list)
    degree_bounds: List[int] = field(default_factory=list)
    roots: List[complex] = field(default_factory=list)
    alternatives: List[complex] = field(default_factory=list)
    max_depth: int = 0
    used_root_finding: bool = False
    notes: List[str] = field(default_factory=list)


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def _reduce_all(ctx: _Context, assigned: Dict[int, np.ndarray]) -> Tuple[List[_Reduced], List[float]]:
    """返回仍含未赋值 qubit 且未消失的约束，以及完全赋值约束的残差"""
    dims = ctx.inst.dims
    active: List[_Reduced] = []
    closed: List[float] = []
    for i, c in enumerate(ctx.inst.constraints):
        tensor = c.tensor(dims)
        free = []
        for q in c.qudits:
            if q in assigned:
                tensor = np.tensordot(assigned[q], tensor, axes=([0], [0]))
            else:
                free.append(q)
        # 振幅已单位化，局部向量也单位化，因此阈值无需再缩放
        if not free:
            closed.append(float(abs(complex(tensor)) ** 2))
        elif np.linalg.norm(tensor) > ctx.tau:
            active.append(_Reduced(i, tuple(free), np.asarray(tensor, dtype=complex)))
    return active, closed


def _eliminate_unit_constraints(ctx: _Context, assigned: Dict[int, np.ndarray]) -> List[_Reduced]:
    """反复处理 1-局部约束：取与泛函正交的向量"""
    while True:
        active, _ = _reduce_all(ctx, assigned)
        unit = next((r for r in active if len(r.qubits) == 1), None)
        if unit is None:
            return active
        c0, c1 = unit.tensor
        assigned[unit.qubits[0]] = _unit(np.array([c1, -c0], dtype=complex))
        log.debug("1-局部约束 %d 确定 qubit %d", unit.index, unit.qubits[0])


def _order_of(active: List[_Reduced]) -> Tuple[List[int], WeightedHypergraph, ExtendingOrder, TransferFiltration]:
    vertices = sorted({q for r in active for q in r.qubits})
    local = {q: k for k, q in enumerate(vertices)}
    h = WeightedHypergraph((1,) * len(vertices), tuple(tuple(local[q] for q in r.qubits) for r in active))
    order = find_extending_order(h, a_max=1)
    if order is None:
        raise NoValidOrderError("剩余超图没有 a ≤ 1 的几乎扩展边序")
    return vertices, h, order, filtration_of_order(h, order)


def _dependencies(h: WeightedHypergraph, order: ExtendingOrder, foundation: Set[int]) -> Dict[int, Set[int]]:
    """每个顶点依赖的基础集顶点"""
    deps: Dict[int, Set[int]] = {v: {v} for v in foundation}
    for i in order.order:
        if i in order.added_vertex:
            u = order.added_vertex[i]
            deps[u] = set().union(*(deps.get(v, set()) for v in h.edges[i] if v != u))
    return deps


def _propagate_numeric(ctx: _Context, active: List[_Reduced], vertices: List[int],
                       order: ExtendingOrder, assigned: Dict[int, np.ndarray]) -> List[int]:
    """沿边序逐边求强制赋值；返回传递消失或输入缺失的 qubit"""
    vanished: List[int] = []
    for i in order.order:
        if i not in order.added_vertex:
            continue
        r = active[i]
        u = vertices[order.added_vertex[i]]
        if any(q not in assigned for q in r.qubits if q != u):
            vanished.append(u)
            continue
        slots = [assigned[q] if q != u else None for q in r.qubits]
        result = forced_assignment(r.tensor, slots, ctx.tau)
        if result.vanished:
            vanished.append(u)
        else:
            assigned[u] = _unit(result.g)
    return vanished


def _contract_polynomial(tensor: np.ndarray, values: Sequence[Tuple[Polynomial, Polynomial]]) -> Polynomial:
    total = Polynomial([0j])
    for index in itertools.product(range(2), repeat=tensor.ndim):
        coeff = tensor[index]
        if coeff == 0:
            continue
        term = Polynomial([coeff])
        for s, j in enumerate(index):
            term = term * values[s][j]
        total = total + term
    return total


def _poly_degree(p: Polynomial) -> int:
    nonzero = np.nonzero(p.coef)[0]
    return int(nonzero[-1]) if nonzero.size else 0


def _closing_polynomial(ctx: _Context, active: List[_Reduced], vertices: List[int],
                        order: ExtendingOrder, u0: int) -> Tuple[Polynomial, int, int]:
    """u_0 = x|0⟩ + |1⟩ 时闭合约束给出的 q(x)、闭合边涉及的最大传递跳数和 q 的次数上界

    传递对每个输入向量线性，故 deg g_u ≤ Σ_{q∈e, q≠u} deg g_q，闭合收缩同理。
    """
    x = Polynomial([0, 1])
    one = Polynomial([1])
    symbolic: Dict[int, Tuple[Polynomial, Polynomial]] = {u0: (x, one)}
    hops: Dict[int, int] = {u0: 0}
    bounds: Dict[int, int] = {u0: 1}
    closing = None
    for i in order.order:
        r = active[i]
        if i not in order.added_vertex:
            closing = r
            continue
        u = vertices[order.added_vertex[i]]
        slots = [symbolic[q] if q != u else None for q in r.qubits]
        g0, g1 = transfer_polynomial(r.tensor, slots)
        if not np.any(g0.coef) and not np.any(g1.coef):
            # 对所有 x 都消失：该边不约束 u
            g0, g1 = one, Polynomial([0j])
        degree = max(_poly_degree(g0), _poly_degree(g1))
        if degree + 1 > ctx.degree_cap:
            raise SizeLimitError(f"传播多项式次数 {degree} 超过上限 {ctx.degree_cap - 1}",
                                 size=degree + 1, cap=ctx.degree_cap)
        symbolic[u] = (g0, g1)
        hops[u] = 1 + max(hops[q] for q in r.qubits if q != u)
        bounds[u] = sum(bounds[q] for q in r.qubits if q != u)
    if closing is None:
        raise NoValidOrderError("边序中没有闭合边")
    q = _contract_polynomial(closing.tensor, [symbolic[v] for v in closing.qubits])
    return q, max(hops[v] for v in closing.qubits), sum(bounds[v] for v in closing.qubits)


def _complete(ctx: _Context, assigned: Dict[int, np.ndarray]) -> ProductState:
    locals_ = []
    for q in range(ctx.inst.n_qudits):
        locals_.append(assigned.get(q, np.array([1, 0], dtype=complex)))
    return ProductState(locals_)


def _solve(ctx: _Context, assigned: Dict[int, np.ndarray], depth: int, depth_limit: Optional[int]) -> Dict[int, np.ndarray]:
    ctx.max_depth = max(ctx.max_depth, depth)
    assigned = dict(assigned)
    while True:
        active = _eliminate_unit_constraints(ctx, assigned)
        if not active:
            return assigned
        vertices, h, order, filtration = _order_of(active)
        if depth_limit is None:
            depth_limit = max(1, filtration.radius)
        foundation = sorted(filtration.foundation)
        log.debug("深度 %d: %d 条约束, a=%d, |R|=%d, 半径 %d", depth, len(active),
                  order.non_extending_count, len(foundation), filtration.radius)

        if order.non_extending_count == 0 or not foundation:
            for v in foundation:
                assigned[vertices[v]] = np.array([1, 0], dtype=complex)
            vanished = _propagate_numeric(ctx, active, vertices, order, assigned)
            if vanished and depth < depth_limit:
                return _solve(ctx, assigned, depth + 1, depth_limit)
            return assigned

        closing = next(i for i in order.order if i not in order.added_vertex)
        deps = _dependencies(h, order, set(foundation))
        reach = set().union(*(deps.get(v, set()) for v in h.edges[closing]))
        u0 = min(reach) if reach else foundation[0]
        if len(foundation) >= 2:
            for v in foundation:
                if v != u0:
                    assigned[vertices[v]] = np.array([1, 0], dtype=complex)
            continue
        return _solve_single_foundation(ctx, active, vertices, order, filtration,
                                        vertices[u0], assigned, depth, depth_limit)


def _solve_single_foundation(ctx: _Context, active: List[_Reduced], vertices: List[int],
                             order: ExtendingOrder, filtration: TransferFiltration, u0: int,
                             assigned: Dict[int, np.ndarray], depth: int,
                             depth_limit: int) -> Dict[int, np.ndarray]:
    def attempt(vector: np.ndarray) -> Dict[int, np.ndarray]:
        trial = dict(assigned)
        trial[u0] = _unit(vector)
        vanished = _propagate_numeric(ctx, active, vertices, order, trial)
        if vanished:
            if depth + 1 > depth_limit:
                raise RecursionLimitError(f"递归层数超过半径 {depth_limit}，疑似退化实例")
            return _solve(ctx, trial, depth + 1, depth_limit)
        return trial

    def score(candidate: Dict[int, np.ndarray]) -> float:
        return float(constraint_energies(ctx.inst, _complete(ctx, candidate)).max())

    scored = []
    try:
        at_zero = attempt(np.array([1, 0], dtype=complex))
    except DegreeBoundError:
        raise
    except ProdsatError as e:
        ctx.notes.append(f"u_0 = |0⟩ 被放弃: {e}")
    else:
        if score(at_zero) <= ctx.eps:
            return at_zero
        scored.append((score(at_zero), float("inf"), float("inf"), None, at_zero))

    q, hops, bound = _closing_polynomial(ctx, active, vertices, order, u0)
    degree = _poly_degree(q)
    if degree > bound:
        raise DegreeBoundError(f"闭合多项式次数 {degree} 超过上界 {bound}", degree=degree, bound=bound)
    ctx.degrees.append(degree)
    ctx.degree_bounds.append(bound)
    ctx.notes.append(f"深度 {depth}: 半径 {filtration.radius}, 跳数 {hops}, 次数 {degree} ≤ {bound}")

    poly = UnivariatePoly(q.coef, degree_cap=ctx.degree_cap)
    if poly.degree < 1:
        candidates = [0j] if np.max(np.abs(q.coef)) <= ctx.tau else []
    else:
        ctx.used_root_finding = True
        candidates = list(roots_univariate(poly))

    for x in candidates:
        try:
            result = attempt(np.array([x, 1], dtype=complex))
        except DegreeBoundError:
            raise
        except ProdsatError as e:
            ctx.notes.append(f"候选根 {x} 被放弃: {e}")
            continue
        scored.append((score(result), x.real, x.imag, x, result))
    if not scored:
        raise RecursionLimitError("所有候选都在递归中失败")
    scored.sort(key=lambda item: item[:3])
    best = scored[0]
    if best[3] is not None:
        ctx.roots.append(complex(best[3]))
    ctx.alternatives.extend(complex(item[3]) for item in scored[1:] if item[3] is not None)
    return best[4]


def solve_almost_extending(inst: QsatInstance, eps: float = ToleranceConstants.DEFAULT_EPS,
                           tau: float = ToleranceConstants.VANISH_TAU,
                           degree_cap: int = SolverConstants.DEGREE_CAP) -> SolveReport:
    """沿几乎扩展边序求 qubit 实例的乘积解

    Raises:
        InvalidInstanceError: 实例含非 qubit
        NoValidOrderError: 没有 a ≤ 1 的边序
        SizeLimitError: 传播多项式超过 degree_cap
        RecursionLimitError: 非一般情形递归超过半径
        DegreeBoundError: 闭合多项式次数超过传播上界
    """
    if not inst.is_qubit_only():
        raise InvalidInstanceError("solve_almost_extending 只接受 qubit 实例，请先 reduce_to_qubits")
    started = time.perf_counter()
    ctx = _Context(inst, eps, tau, degree_cap)
    assigned = _solve(ctx, {}, 0, None)
    state = _complete(ctx, assigned)
    elapsed = time.perf_counter() - started
    report = _finalize(inst, state, eps, "almost-extending",
                       recursion_depth=ctx.max_depth, degrees=list(ctx.degrees),
                       chosen_root=ctx.roots[-1] if ctx.roots else None,
                       alternatives=list(ctx.alternatives))
    report.diagnostics["used_root_finding"] = ctx.used_root_finding
    report.diagnostics["degree_bounds"] = list(ctx.degree_bounds)
    report.diagnostics["notes"] = list(ctx.notes)
    report.timings["total"] = elapsed
    return report


# ============ 结构识别与统一入口 ============

METHODS = ("auto", "almost-extending", "low-occupancy", "qubit-cycle", "qutrit-cycle", "pinwheel")


def _is_low_occupancy(inst: QsatInstance) -> bool:
    occupancy = [0] * inst.n_qudits
    for c in inst.constraints:
        for q in c.qudits:
            occupancy[q] += 1
    return all(occupancy[q] <= d - 1 for q, d in enumerate(inst.dims))


def detect_method(inst: QsatInstance) -> str:
    """按 风车图 -> qubit 环 -> qutrit 环 -> 低占用 -> 几乎扩展 的顺序识别结构"""
    from .chains import is_pinwheel, is_qubit_cycle, is_qutrit_cycle

    if is_pinwheel(inst):
        return "pinwheel"
    if is_qubit_cycle(inst):
        return "qubit-cycle"
    if is_qutrit_cycle(inst):
        return "qutrit-cycle"
    if _is_low_occupancy(inst):
        return "low-occupancy"
    return "almost-extending"


def solve_instance(inst: QsatInstance, eps: float = ToleranceConstants.DEFAULT_EPS,
                   method: str = "auto", degree_cap: int = SolverConstants.DEGREE_CAP,
                   seed: int = 0) -> SolveReport:
    """统一入口；qudit 实例走 reduce_to_qubits 再搬运回原布局

    Raises:
        RefusedError: 自动识别失败（没有可用的边序）
    """
    from .chains import solve_cycle_qubits, solve_cycle_qutrits, solve_pinwheel
    from .reductions import reduce_to_qubits, transport_solution

    if method not in METHODS:
        raise InvalidInstanceError(f"未知的求解方法: {method}，可选 {', '.join(METHODS)}")
    chosen = detect_method(inst) if method == "auto" else method
    log.debug("求解方法: %s", chosen)

    if chosen == "pinwheel":
        return solve_pinwheel(inst, eps, seed=seed)
    if chosen == "qubit-cycle":
        return solve_cycle_qubits(inst, eps)
    if chosen == "qutrit-cycle":
        return solve_cycle_qutrits(inst, eps=eps)
    if chosen == "low-occupancy":
        return solve_low_occupancy(inst, eps)

    try:
        if inst.is_qubit_only():
            return solve_almost_extending(inst, eps, degree_cap=degree_cap)
        reduced, chain = reduce_to_qubits(inst)
        inner = solve_almost_extending(reduced, eps, degree_cap=degree_cap)
    except NoValidOrderError as e:
        if method == "auto":
            raise RefusedError(f"未识别出可求解的结构: {e}；可尝试指定 --method") from e
        raise
    if inner.state is None:
        inner.diagnostics["reduced_qubits"] = reduced.n_qudits
        return SolveReport(None, np.full(inst.n_constraints, np.inf), eps, "almost-extending+reduce",
                           failure=inner.failure, diagnostics=inner.diagnostics)
    state = transport_solution(chain, inner.state, "push")
    report = _finalize(inst, state, eps, "almost-extending+reduce",
                       recursion_depth=inner.recursion_depth, degrees=inner.degrees,
                       chosen_root=inner.chosen_root, alternatives=inner.alternatives)
    report.diagnostics["reduced_qubits"] = reduced.n_qudits
    report.diagnostics["degree_bounds"] = inner.diagnostics.get("degree_bounds", [])
    report.diagnostics["reduced_max_residual"] = inner.max_residual
    report.timings = dict(inner.timings)
    return report
