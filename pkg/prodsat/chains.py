"""
一维链与风车图上的乘积态求解

环上相邻两个 qubit 的约束系数矩阵 E（E[a, b]，a 属于当前格点）给出
线性传递 ψ_{i+1} ∝ T_i ψ_i，T_i = [[E01, E11], [-E00, -E10]]。
环闭合要求 ψ_0 是 M = T_{m-1}⋯T_0 的特征向量，在 z 坐标 (z, 1) 下为
M10 z² + (M11 - M00) z - M01 = 0，在交换坐标 (1, w) 下为
M01 w² + (M00 - M11) w - M10 = 0。

qutrit 环先用每个格点的 1-局部仿射约束 z^0 = α1 z^1 + α2 z^2 把格点压成
(z^1, z^2) 上的有效 qubit。风车图逐圈向外：上一圈的态经径向约束把下一圈
压成有效 qubit，每圈按环求解，最后两条辐条约束给出中心点两个仿射未知量的
方程组，用多起点牛顿法求解。
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .constants import LimitConstants, SolverConstants, ToleranceConstants
from .exceptions import InvalidInstanceError, SizeLimitError
from .models import ProductState, QsatInstance, constraint_energies, proportionality_residual
from .roots import UnivariatePoly, roots_univariate
from .solver import SolveReport, _failure_report, _finalize, solve_almost_extending
from .workers import parallel_map

log = logging.getLogger(__name__)


# ============ 环结构识别 ============

@dataclass(frozen=True)
class CycleLayout:
    """环上的顶点顺序与定向后的约束

    Attributes:
        vertices: v_0, ..., v_{m-1}
        constraints: 第 i 个约束连接 v_i 与 v_{i+1 mod m}
        reversed: 约束的 qudit 顺序是否为 (v_{i+1}, v_i)
    """
    vertices: Tuple[int, ...]
    constraints: Tuple[int, ...]
    reversed: Tuple[bool, ...]

    def __len__(self) -> int:
        return len(self.vertices)

    def oriented_tensor(self, inst: QsatInstance, i: int) -> np.ndarray:
        tensor = inst.constraints[self.constraints[i]].tensor(inst.dims)
        return tensor.T if self.reversed[i] else tensor


def cycle_layout(inst: QsatInstance, indices: Optional[Sequence[int]] = None) -> Optional[CycleLayout]:
    """indices 中的 2-局部约束恰好构成覆盖全部 qudit 的一个环时返回其布局"""
    if indices is None:
        indices = range(inst.n_constraints)
    indices = list(indices)
    if len(indices) < 2 or len(indices) != inst.n_qudits:
        return None
    incident: Dict[int, List[int]] = {q: [] for q in range(inst.n_qudits)}
    for i in indices:
        c = inst.constraints[i]
        if c.arity != 2:
            return None
        for q in c.qudits:
            incident[q].append(i)
    if any(len(edges) != 2 for edges in incident.values()):
        return None

    vertices = [0]
    order: List[int] = []
    flipped: List[bool] = []
    used = set()
    current = 0
    for _ in range(len(indices)):
        edge = next((e for e in incident[current] if e not in used), None)
        if edge is None:
            return None
        used.add(edge)
        a, b = inst.constraints[edge].qudits
        nxt = b if a == current else a
        order.append(edge)
        flipped.append(a != current)
        current = nxt
        vertices.append(nxt)
    if current != 0 or len(set(vertices[:-1])) != inst.n_qudits:
        return None
    return CycleLayout(tuple(vertices[:-1]), tuple(order), tuple(flipped))


def is_qubit_cycle(inst: QsatInstance) -> bool:
    """全部为 qubit、至少 3 个格点、2-局部约束构成一个环"""
    return inst.is_qubit_only() and inst.n_qudits >= 3 and cycle_layout(inst) is not None


def _split_by_arity(inst: QsatInstance) -> Tuple[List[int], List[int]]:
    ones = [i for i, c in enumerate(inst.constraints) if c.arity == 1]
    twos = [i for i, c in enumerate(inst.constraints) if c.arity == 2]
    return ones, twos


def is_qutrit_cycle(inst: QsatInstance) -> bool:
    """全部为 qutrit 的环；1-局部约束要么没有，要么每个格点恰好一个"""
    if inst.n_qudits < 3 or any(d != 3 for d in inst.dims):
        return False
    ones, twos = _split_by_arity(inst)
    if len(ones) + len(twos) != inst.n_constraints:
        return False
    if ones and sorted(inst.constraints[i].qudits[0] for i in ones) != list(range(inst.n_qudits)):
        return False
    return cycle_layout(inst, twos) is not None


# ============ 环的传递矩阵与闭合 ============

def transfer_matrix(E: np.ndarray) -> np.ndarray:
    """2×2 系数矩阵 E 的线性传递 ψ_next ∝ T ψ"""
    E = np.asarray(E, dtype=complex)
    return np.array([[E[0, 1], E[1, 1]], [-E[0, 0], -E[1, 0]]], dtype=complex)


def ring_product(Ts: Sequence[np.ndarray]) -> np.ndarray:
    """M = T_{m-1}⋯T_0，逐步归一化防止溢出"""
    M = np.eye(2, dtype=complex)
    for T in Ts:
        M = T @ M
        norm = np.linalg.norm(M)
        if norm > 0:
            M = M / norm
    return M


def closure_candidates(M: np.ndarray, tol: float = ToleranceConstants.CHART_SWITCH_TOL) -> List[np.ndarray]:
    """M 的全部特征方向（单位向量），两张仿射坐标合并后去重

    M 为零矩阵时返回空列表；M 与单位阵成比例时任意方向都可以，返回 |0⟩。
    """
    M = np.asarray(M, dtype=complex)
    scale = float(np.linalg.norm(M))
    if scale <= ToleranceConstants.ZERO_VECTOR_TOL:
        return []
    M = M / scale
    z_chart = [-M[0, 1], M[1, 1] - M[0, 0], M[1, 0]]
    if max(abs(c) for c in z_chart) <= tol:
        return [np.array([1, 0], dtype=complex)]

    found: List[np.ndarray] = []
    z_poly = UnivariatePoly(z_chart)
    if z_poly.degree >= 1:
        found.extend(np.array([z, 1], dtype=complex) for z in roots_univariate(z_poly))
    w_poly = UnivariatePoly([-M[1, 0], M[0, 0] - M[1, 1], M[0, 1]])
    if w_poly.degree >= 1:
        found.extend(np.array([1, w], dtype=complex) for w in roots_univariate(w_poly))

    unique: List[np.ndarray] = []
    for v in found:
        v = v / np.linalg.norm(v)
        if all(proportionality_residual(v, u) > ToleranceConstants.PROPORTIONALITY_TOL ** 0.5 for u in unique):
            unique.append(v)
    return unique


def _forced_backward(E: np.ndarray, after: np.ndarray) -> Optional[np.ndarray]:
    """已知下一格点时当前格点的强制取值；约束对任意取值都满足时返回 None"""
    xbar = E @ after
    if np.linalg.norm(xbar) <= ToleranceConstants.VANISH_TAU * np.linalg.norm(E) * np.linalg.norm(after):
        return None
    return np.array([xbar[1], -xbar[0]], dtype=complex)


def ring_assignments(Es: Sequence[np.ndarray]) -> Optional[List[List[np.ndarray]]]:
    """环上每个候选闭合方向给出的整环赋值；传递矩阵乘积为零时返回 None

    某一步传递消失时环在此断开，剩余格点从 ψ_0 沿反方向逐个强制。
    """
    Ts = [transfer_matrix(E) for E in Es]
    candidates = closure_candidates(ring_product(Ts))
    if not candidates:
        return None
    m = len(Es)
    results: List[List[np.ndarray]] = []
    for psi0 in candidates:
        ring = [psi0]
        broken = None
        for k in range(m - 1):
            nxt = Ts[k] @ ring[k]
            if np.linalg.norm(nxt) <= ToleranceConstants.VANISH_TAU * np.linalg.norm(Ts[k]) * np.linalg.norm(ring[k]):
                broken = k
                break
            ring.append(nxt / np.linalg.norm(nxt))
        if broken is not None:
            tail: List[np.ndarray] = []
            after = psi0
            for j in range(m - 1, broken, -1):
                forced = _forced_backward(np.asarray(Es[j], dtype=complex), after)
                after = np.array([1, 0], dtype=complex) if forced is None else forced / np.linalg.norm(forced)
                tail.append(after)
            ring.extend(reversed(tail))
        results.append(ring)
    return results


def _best_assignment(inst: QsatInstance, states: List[ProductState]) -> Tuple[int, List[float]]:
    scores = [float(constraint_energies(inst, s).max()) if inst.n_constraints else 0.0 for s in states]
    return int(np.argmin(scores)), scores


def solve_cycle_qubits(inst: QsatInstance, eps: float = ToleranceConstants.DEFAULT_EPS) -> SolveReport:
    """qubit 环：传递矩阵乘积的二次闭合，两个根都前推并校验

    Raises:
        InvalidInstanceError: 实例不是 qubit 环
    """
    layout = cycle_layout(inst) if inst.is_qubit_only() else None
    if layout is None:
        raise InvalidInstanceError("solve_cycle_qubits 需要 2-局部约束构成的 qubit 环")
    Es = [layout.oriented_tensor(inst, i) for i in range(len(layout))]
    rings = ring_assignments(Es)
    if rings is None:
        log.info("传递矩阵乘积退化，改用几乎扩展边序求解")
        report = solve_almost_extending(inst, eps)
        report.diagnostics["fallback"] = "almost-extending"
        report.method = "qubit-cycle"
        return report

    states = []
    for ring in rings:
        locals_ = [None] * inst.n_qudits
        for v, psi in zip(layout.vertices, ring):
            locals_[v] = psi
        states.append(ProductState(locals_))
    best, scores = _best_assignment(inst, states)
    report = _finalize(inst, states[best], eps, "qubit-cycle")
    report.diagnostics["candidates"] = len(states)
    report.diagnostics["candidate_max_residuals"] = scores
    return report


# ============ qutrit 环 ============

def cycle_coefficients(phi: np.ndarray, alpha: Sequence[complex],
                       alpha_next: Sequence[complex]) -> Tuple[complex, complex, complex, complex]:
    """qutrit 约束经两端仿射约束压缩后的系数 (A, B, C, D)

    有效 qubit 系数矩阵为 [[C, A], [D, B]]，两个分量对应 (z^1, z^2)。
    """
    p = np.asarray(phi, dtype=complex).reshape(3, 3)
    a1, a2 = complex(alpha[0]), complex(alpha[1])
    b1, b2 = complex(alpha_next[0]), complex(alpha_next[1])
    A = p[0, 0] * a1 * b2 + p[1, 0] * b2 + p[0, 2] * a1 + p[1, 2]
    B = p[0, 0] * a2 * b2 + p[0, 2] * a2 + p[2, 0] * b2 + p[2, 2]
    C = p[0, 0] * a1 * b1 + p[1, 0] * b1 + p[0, 1] * a1 + p[1, 1]
    D = p[0, 0] * a2 * b1 + p[0, 1] * a2 + p[2, 0] * b1 + p[2, 1]
    return A, B, C, D


def affine_parameters(inst: QsatInstance) -> Optional[List[Tuple[complex, complex]]]:
    """从每个格点的 1-局部约束 c 读出 (α1, α2) = (-c1/c0, -c2/c0)；没有 1-局部约束时返回 None"""
    ones, _ = _split_by_arity(inst)
    if not ones:
        return None
    alphas: List[Optional[Tuple[complex, complex]]] = [None] * inst.n_qudits
    for i in ones:
        c = inst.constraints[i]
        coeffs = c.coefficients
        if abs(coeffs[0]) <= ToleranceConstants.CHART_SWITCH_TOL * np.linalg.norm(coeffs):
            raise InvalidInstanceError(f"约束 {i} 不是 z^0 = α1 z^1 + α2 z^2 形式的仿射约束")
        alphas[c.qudits[0]] = (complex(-coeffs[1] / coeffs[0]), complex(-coeffs[2] / coeffs[0]))
    if any(a is None for a in alphas):
        raise InvalidInstanceError("每个 qutrit 都需要一个 1-局部仿射约束")
    return alphas


def _lift(alpha: Tuple[complex, complex], psi: np.ndarray) -> np.ndarray:
    u, v = psi
    return np.array([alpha[0] * u + alpha[1] * v, u, v], dtype=complex)


def solve_cycle_qutrits(inst: QsatInstance, one_local: Optional[Sequence[Tuple[complex, complex]]] = None,
                        eps: float = ToleranceConstants.DEFAULT_EPS) -> SolveReport:
    """qutrit 环：按仿射约束压成有效 qubit 环求解后还原

    one_local 缺省时从实例的 1-局部约束读取；实例也没有时取 α = 0，
    即把每个格点限制在 span{|1⟩, |2⟩}。
    """
    if any(d != 3 for d in inst.dims):
        raise InvalidInstanceError("solve_cycle_qutrits 只接受 qutrit 实例")
    _, twos = _split_by_arity(inst)
    layout = cycle_layout(inst, twos)
    if layout is None:
        raise InvalidInstanceError("2-局部约束没有构成覆盖全部格点的环")
    alphas = list(one_local) if one_local is not None else affine_parameters(inst)
    if alphas is None:
        log.info("没有 1-局部约束，格点限制在 span{|1⟩,|2⟩}")
        alphas = [(0j, 0j)] * inst.n_qudits
    if len(alphas) != inst.n_qudits:
        raise InvalidInstanceError(f"需要 {inst.n_qudits} 组仿射参数，收到 {len(alphas)}")

    m = len(layout)
    Es = []
    for i in range(m):
        v, w = layout.vertices[i], layout.vertices[(i + 1) % m]
        A, B, C, D = cycle_coefficients(layout.oriented_tensor(inst, i), alphas[v], alphas[w])
        Es.append(np.array([[C, A], [D, B]], dtype=complex))
    rings = ring_assignments(Es)
    if rings is None:
        from .solver import solve_instance

        log.info("有效传递矩阵乘积退化，改用拆分后的几乎扩展边序求解")
        report = solve_instance(inst, eps, method="almost-extending")
        report.diagnostics["fallback"] = "almost-extending"
        report.method = "qutrit-cycle"
        return report

    states = []
    for ring in rings:
        locals_ = [None] * inst.n_qudits
        for v, psi in zip(layout.vertices, ring):
            locals_[v] = _lift(alphas[v], psi)
        states.append(ProductState(locals_))
    best, scores = _best_assignment(inst, states)
    report = _finalize(inst, states[best], eps, "qutrit-cycle")
    report.diagnostics["candidates"] = len(states)
    report.diagnostics["candidate_max_residuals"] = scores
    return report


# ============ 风车图 ============

def pinwheel_vertex(j: int, k: int) -> int:
    """v_0 -> 0，v_{j,k} -> 2^j - 1 + k"""
    if j == 0:
        return 0
    return 2 ** j - 1 + k % (2 ** j)


def pinwheel_parent(j: int, k: int) -> int:
    return pinwheel_vertex(j - 1, k // 2) if j > 1 else 0


def pinwheel_layout(n: int) -> List[Tuple[str, int, int, Tuple[int, int]]]:
    """风车图的全部边 (种类, j, k, (u, v))，顺序即生成器的约束顺序

    ring   e_{j,k} = (v_{j,k}, v_{j,k+1})
    radial ε_{j,k} = (父顶点, v_{j,k})
    spoke  ε_i = (v_{n, 2^{n-i}-1}, v_0)，i ∈ {0, 1}
    """
    edges: List[Tuple[str, int, int, Tuple[int, int]]] = []
    for j in range(1, n + 1):
        for k in range(2 ** j):
            edges.append(("ring", j, k, (pinwheel_vertex(j, k), pinwheel_vertex(j, k + 1))))
    for j in range(1, n + 1):
        for k in range(2 ** j):
            edges.append(("radial", j, k, (pinwheel_parent(j, k), pinwheel_vertex(j, k))))
    for i in range(2):
        edges.append(("spoke", n, i, (pinwheel_vertex(n, 2 ** (n - i) - 1), 0)))
    return edges


def is_pinwheel(inst: QsatInstance) -> bool:
    """元数据标记为风车图，且顶点、维度和边与该层数的布局一致"""
    if inst.metadata.get("family") != "pinwheel":
        return False
    n = inst.metadata.get("n")
    if not isinstance(n, int) or n < 1:
        return False
    if inst.n_qudits != 2 ** (n + 1) - 1 or any(d != 3 for d in inst.dims):
        return False
    layout = pinwheel_layout(n)
    if len(layout) != inst.n_constraints:
        return False
    return all(sorted(c.qudits) == sorted(edge[3]) for c, edge in zip(inst.constraints, layout))


def _null_basis(c: np.ndarray) -> Optional[np.ndarray]:
    """满足 c·v = 0 的 3×2 基，主元取 |c| 最大的分量"""
    norm = np.linalg.norm(c)
    if norm <= ToleranceConstants.ZERO_VECTOR_TOL:
        return None
    p = int(np.argmax(np.abs(c)))
    others = [q for q in range(3) if q != p]
    basis = np.zeros((3, 2), dtype=complex)
    for col, q in enumerate(others):
        basis[q, col] = 1
        basis[p, col] = -c[q] / c[p]
    return basis


@dataclass
class _Branch:
    """一次求值所用的分支选择：每圈的参考方向和每个顶点的归一化主元"""
    rings: List[np.ndarray]
    pivots: Dict[int, int]


class _Pinwheel:
    """按圈展开的风车图求值器，未知量为中心点 (s, t, 1) 中的 (s, t)"""

    def __init__(self, inst: QsatInstance):
        self.inst = inst
        self.n = int(inst.metadata["n"])
        self.ring: Dict[Tuple[int, int], np.ndarray] = {}
        self.radial: Dict[Tuple[int, int], np.ndarray] = {}
        self.spoke: List[Tuple[int, np.ndarray]] = []
        for c, (kind, j, k, (u, v)) in zip(inst.constraints, pinwheel_layout(self.n)):
            tensor = c.tensor(inst.dims)
            if c.qudits != (u, v):
                tensor = tensor.T
            if kind == "ring":
                self.ring[(j, k)] = tensor
            elif kind == "radial":
                self.radial[(j, k)] = tensor
            else:
                self.spoke.append((u, tensor))

    def evaluate(self, x: np.ndarray, branch: Optional[_Branch],
                 bits: Sequence[int]) -> Optional[Tuple[np.ndarray, Dict[int, np.ndarray], _Branch]]:
        """辐条残差、全部顶点的态和本次的分支；遇到退化传递时返回 None"""
        states: Dict[int, np.ndarray] = {0: np.array([x[0], x[1], 1], dtype=complex)}
        rings: List[np.ndarray] = []
        pivots: Dict[int, int] = {}
        for j in range(1, self.n + 1):
            m = 2 ** j
            bases = []
            for k in range(m):
                basis = _null_basis(states[pinwheel_parent(j, k)] @ self.radial[(j, k)])
                if basis is None:
                    return None
                bases.append(basis)
            Ts = [transfer_matrix(bases[k].T @ self.ring[(j, k)] @ bases[(k + 1) % m]) for k in range(m)]
            values, vectors = np.linalg.eig(ring_product(Ts))
            order = np.lexsort((values.imag, values.real))
            lifted = [bases[0] @ vectors[:, i] for i in order]
            if branch is None:
                pick = int(bits[j - 1]) % 2
            else:
                ref = branch.rings[j - 1]
                pick = int(np.argmin([proportionality_residual(v, ref) for v in lifted]))
            psi = vectors[:, order[pick]]
            rings.append(lifted[pick])
            for k in range(m):
                vertex = pinwheel_vertex(j, k)
                qutrit = bases[k] @ psi
                pivot = branch.pivots[vertex] if branch is not None else int(np.argmax(np.abs(qutrit)))
                if abs(qutrit[pivot]) <= ToleranceConstants.ZERO_VECTOR_TOL:
                    return None
                states[vertex] = qutrit / qutrit[pivot]
                pivots[vertex] = pivot
                nxt = Ts[k] @ psi
                if np.linalg.norm(nxt) <= ToleranceConstants.VANISH_TAU * np.linalg.norm(Ts[k]) * np.linalg.norm(psi):
                    return None
                psi = nxt / np.linalg.norm(nxt)
        residual = np.array([states[u] @ tensor @ states[0] for u, tensor in self.spoke], dtype=complex)
        return residual, states, _Branch(rings, pivots)

    def relative(self, residual: np.ndarray, states: Dict[int, np.ndarray]) -> float:
        scale = [np.linalg.norm(states[u]) * np.linalg.norm(states[0]) for u, _ in self.spoke]
        return float(max(abs(r) / s for r, s in zip(residual, scale)))

    def newton(self, start: np.ndarray, bits: Sequence[int],
               max_iter: int = SolverConstants.NEWTON_MAX_ITER) -> Optional[Tuple[np.ndarray, Dict[int, np.ndarray], int]]:
        """阻尼牛顿，雅可比用有限差分；分支按上一步的参考方向跟踪"""
        x = np.asarray(start, dtype=complex)
        current = self.evaluate(x, None, bits)
        if current is None:
            return None
        F, states, branch = current
        rel = self.relative(F, states)
        iterations = 0
        for iterations in range(1, max_iter + 1):
            if rel <= SolverConstants.NEWTON_TOL:
                break
            J = np.empty((2, 2), dtype=complex)
            for i in range(2):
                h = SolverConstants.NEWTON_FD_STEP * max(1.0, abs(x[i]))
                shifted = x.copy()
                shifted[i] += h
                nudged = self.evaluate(shifted, branch, bits)
                if nudged is None:
                    return None
                J[:, i] = (nudged[0] - F) / h
            dx = np.linalg.lstsq(J, -F, rcond=None)[0]
            accepted = False
            damping = 1.0
            for _ in range(8):
                trial = self.evaluate(x + damping * dx, branch, bits)
                if trial is not None:
                    trial_rel = self.relative(trial[0], trial[1])
                    if trial_rel < rel:
                        x = x + damping * dx
                        F, states, branch = trial
                        rel = trial_rel
                        accepted = True
                        break
                damping /= 2
            if not accepted:
                break
        return x, states, iterations


def solve_pinwheel(inst: QsatInstance, eps: float = ToleranceConstants.DEFAULT_EPS,
                   seed: int = 0, starts: int = SolverConstants.NEWTON_STARTS) -> SolveReport:
    """风车图：逐圈压缩为有效 qubit 环，辐条约束用多起点牛顿法闭合

    起点和每圈的初始分支都由 seed 决定；各起点并行运行，取最大能量最小者。

    Raises:
        InvalidInstanceError: 实例不是风车图
        SizeLimitError: 层数超过 PINWHEEL_MAX_SOLVE_N
    """
    if not is_pinwheel(inst):
        raise InvalidInstanceError("solve_pinwheel 需要 gen_pinwheel 生成的实例")
    evaluator = _Pinwheel(inst)
    if evaluator.n > LimitConstants.PINWHEEL_MAX_SOLVE_N:
        raise SizeLimitError(f"风车图层数 {evaluator.n} 超过求解上限 {LimitConstants.PINWHEEL_MAX_SOLVE_N}",
                             size=evaluator.n, cap=LimitConstants.PINWHEEL_MAX_SOLVE_N)

    rng = np.random.default_rng(seed)
    plans = [((rng.standard_normal(2) + 1j * rng.standard_normal(2)),
              rng.integers(0, 2, size=evaluator.n)) for _ in range(starts)]

    def run(plan) -> Optional[Tuple[float, np.ndarray, ProductState, int]]:
        start, bits = plan
        outcome = evaluator.newton(start, bits)
        if outcome is None:
            return None
        x, states, iterations = outcome
        state = ProductState([states[v] for v in range(inst.n_qudits)]).normalized()
        return float(constraint_energies(inst, state).max()), x, state, iterations

    outcomes = parallel_map(run, plans)
    finished = [(i, o) for i, o in enumerate(outcomes) if o is not None]
    diagnostics: Dict[str, Any] = {"starts": starts, "finished": len(finished)}
    if not finished:
        return _failure_report(inst, eps, "pinwheel", "所有牛顿起点都遇到退化传递", diagnostics=diagnostics)

    best_index, best = min(finished, key=lambda item: item[1][0])
    score, x, state, iterations = best
    diagnostics["converged"] = sum(1 for _, o in finished if o[0] <= eps)
    diagnostics["best_start"] = best_index
    diagnostics["newton_iterations"] = iterations
    diagnostics["center"] = [[float(z.real), float(z.imag)] for z in x]
    log.info("风车图 n=%d: %d/%d 个起点收敛，最优残差 %.3e",
             evaluator.n, diagnostics["converged"], starts, score)
    report = _finalize(inst, state, eps, "pinwheel")
    report.diagnostics.update(diagnostics)
    return report
