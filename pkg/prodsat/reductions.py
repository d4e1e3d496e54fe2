"""
归约：qudit 拆分为 qubit、多重齐次方程组编译为 qubit 实例、解的双向搬运

拆分映射 f: C^2 × C^d -> C^{d+1}（下标从 0 开始）:
    z_0 = x_0 y_0,  z_1 = x_1 y_{d-1},  z_{i+2} = x_0 y_{i+1} - x_1 y_i
维度 d+1 的 qudit q 被替换为留在原下标的 d 维 qudit y 和追加在末尾的 qubit x；
每个约束中 q 所在的槽替换为 (x, y) 两个槽，x 在前。
"""
from __future__ import annotations

import json
import logging
import os
import warnings
from dataclasses import dataclass, field
from math import comb
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .bezout import MultiHomSystem, bezout_certificate, bezout_nonzero
from .constants import FormatConstants, ToleranceConstants
from .exceptions import (DimensionMismatchError, InvalidInstanceError, PreimageError,
                         RefusedError, RootFindingError)
from .hypergraph import Wsdr
from .models import (Constraint, ProductState, QsatInstance, constraint_energies,
                     proportionality_residual, underlying_hypergraph)
from .roots import UnivariatePoly, roots_univariate
from .transfer import singlet_coefficients

log = logging.getLogger(__name__)

# 约束 -> qubit 的赋值，所有 qubit 容量为 1
SdrCertificate = Wsdr


# ============ 拆分映射 ============

def f_map(x: Sequence[complex], y: Sequence[complex]) -> np.ndarray:
    """z = f(x, y)，非零输入给出非零输出"""
    x = np.asarray(x, dtype=complex).reshape(-1)
    y = np.asarray(y, dtype=complex).reshape(-1)
    if x.size != 2:
        raise DimensionMismatchError(f"x 必须是二维向量，收到长度 {x.size}")
    if y.size < 2:
        raise DimensionMismatchError(f"y 的维度至少为 2，收到 {y.size}")
    if not np.any(x) or not np.any(y):
        raise InvalidInstanceError("f_map 的输入不能为零向量")
    d = y.size
    z = np.empty(d + 1, dtype=complex)
    z[0] = x[0] * y[0]
    z[1] = x[1] * y[d - 1]
    z[2:] = x[0] * y[1:] - x[1] * y[:-1]
    return z


def f_preimage(z: Sequence[complex], tau: float = ToleranceConstants.VANISH_TAU,
               tol: float = ToleranceConstants.PREIMAGE_TOL) -> Tuple[np.ndarray, np.ndarray]:
    """求 (x, y) 使 f(x, y) ∝ z

    z_0 ≈ 0 时取 x = (0, 1)；否则令 z_0 = 1、x = (1, t)，t 为
    t^d + z_2 t^{d-1} + … + z_d t - z_1 = 0 的根，逐个回代后取比例残差最小者。

    Raises:
        PreimageError: 求根失败或最优残差超过 tol
    """
    z = np.asarray(z, dtype=complex).reshape(-1)
    if z.size < 3:
        raise DimensionMismatchError(f"z 的维度至少为 3，收到 {z.size}")
    norm = float(np.linalg.norm(z))
    if norm <= ToleranceConstants.ZERO_VECTOR_TOL:
        raise InvalidInstanceError("f_preimage 的输入不能为零向量")
    d = z.size - 1

    if abs(z[0]) <= tau * norm:
        x = np.array([0, 1], dtype=complex)
        y = np.empty(d, dtype=complex)
        y[:d - 1] = -z[2:]
        y[d - 1] = z[1]
        return x, y

    w = z / z[0]
    # 升幂排列: -z_1, z_d, z_{d-1}, ..., z_2, 1
    coeffs = np.concatenate([[-w[1]], w[2:][::-1], [1]])
    try:
        candidates = roots_univariate(UnivariatePoly(coeffs, trim_rel=0.0))
    except RootFindingError as e:
        raise PreimageError(f"原像多项式求根失败: {e}", e.iteration_log) from e

    best: Optional[Tuple[float, np.ndarray, np.ndarray]] = None
    residuals: List[float] = []
    for t in candidates:
        y = np.empty(d, dtype=complex)
        y[0] = 1
        for k in range(1, d):
            y[k] = w[k + 1] + t * y[k - 1]
        x = np.array([1, t], dtype=complex)
        residual = proportionality_residual(f_map(x, y), z)
        residuals.append(residual)
        if best is None or residual < best[0]:
            best = (residual, x, y)
    if best[0] > tol:
        raise PreimageError(f"原像比例残差 {best[0]:.3e} 超过 {tol:.1e}", residuals)
    return best[1], best[2]


def split_matrix(d: int) -> np.ndarray:
    """M[j, a, b] 使 z_j = Σ_{a,b} M[j,a,b] x_a y_b"""
    M = np.zeros((d + 1, 2, d))
    M[0, 0, 0] = 1
    M[1, 1, d - 1] = 1
    for i in range(d - 1):
        M[i + 2, 0, i + 1] = 1
        M[i + 2, 1, i] = -1
    return M


# ============ 拆分链 ============

@dataclass(frozen=True)
class SplitStep:
    """一次拆分：原 qudit 下标、原维度 d+1、新的 (x, y) 下标"""
    qudit: int
    dim: int
    new: Tuple[int, int]

    @property
    def qubit(self) -> int:
        return self.new[0]

    def to_dict(self) -> Dict[str, Any]:
        return {"qudit": self.qudit, "dim": self.dim, "new": list(self.new)}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'SplitStep':
        return cls(int(data["qudit"]), int(data["dim"]), tuple(int(v) for v in data["new"]))


@dataclass
class SplitMapChain:
    """拆分步骤的有序记录

    Attributes:
        source_dims: 拆分前的维度
        steps: 拆分步骤
    """
    source_dims: Tuple[int, ...]
    steps: List[SplitStep] = field(default_factory=list)

    def __post_init__(self):
        self.source_dims = tuple(int(d) for d in self.source_dims)
        self.steps = list(self.steps)
        self.final_dims()

    def __len__(self) -> int:
        return len(self.steps)

    def final_dims(self) -> Tuple[int, ...]:
        """按顺序重放拆分得到的维度；记录不一致时抛出异常"""
        dims = list(self.source_dims)
        for i, step in enumerate(self.steps):
            if not 0 <= step.qudit < len(dims) or dims[step.qudit] != step.dim or step.dim < 3:
                raise InvalidInstanceError(f"拆分步骤 {i} 与当前布局不符: {step}")
            if step.new != (len(dims), step.qudit):
                raise InvalidInstanceError(f"拆分步骤 {i} 的新下标应为 {(len(dims), step.qudit)}")
            dims[step.qudit] = step.dim - 1
            dims.append(2)
        return tuple(dims)

    def qubits_of(self, qudit: int) -> List[int]:
        """原 qudit 对应的最终 qubit：按拆分顺序的 x，最后是留下的 y"""
        return [s.qubit for s in self.steps if s.qudit == qudit] + [qudit]

    def to_dict(self) -> Dict[str, Any]:
        return {"source_dims": list(self.source_dims), "splits": [s.to_dict() for s in self.steps]}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'SplitMapChain':
        if "splits" not in data:
            raise InvalidInstanceError("拆分链数据缺少 'splits' 字段")
        steps = [SplitStep.from_dict(s) for s in data["splits"]]
        if "source_dims" in data:
            source = data["source_dims"]
        else:
            # 只有拆分记录时，由步骤反推原维度
            n = len(steps) and min(s.qubit for s in steps)
            source = [2] * n
            for s in steps:
                if s.qudit < n:
                    source[s.qudit] = max(source[s.qudit], s.dim)
        return cls(tuple(source), steps)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=FormatConstants.JSON_INDENT, ensure_ascii=False)

    @classmethod
    def from_json(cls, json_str: str) -> 'SplitMapChain':
        return cls.from_dict(json.loads(json_str))

    def save_to_file(self, filepath: str) -> bool:
        try:
            directory = os.path.dirname(filepath)
            if directory:
                os.makedirs(directory, exist_ok=True)
            with open(filepath, 'w', encoding='utf-8') as f:
                json.dump(self.to_dict(), f, indent=FormatConstants.JSON_INDENT, ensure_ascii=False)
            print(f"✅ 拆分链已保存到: {filepath}")
            return True
        except Exception as e:
            print(f"❌ 保存拆分链失败: {e}")
            return False

    @classmethod
    def load_from_file(cls, filepath: str) -> Optional['SplitMapChain']:
        try:
            if not os.path.exists(filepath):
                print(f"❌ 文件不存在: {filepath}")
                return None
            with open(filepath, 'r', encoding='utf-8') as f:
                return cls.from_dict(json.load(f))
        except Exception as e:
            print(f"❌ 加载拆分链失败: {e}")
            return None


def split_qudit(inst: QsatInstance, qudit_index: int) -> Tuple[QsatInstance, SplitStep]:
    """把维度 d+1 ≥ 3 的 qudit 拆成 qubit x（追加在末尾）与 d 维 qudit y（原下标）"""
    if not 0 <= qudit_index < inst.n_qudits:
        raise InvalidInstanceError(f"qudit 下标 {qudit_index} 超出范围 [0, {inst.n_qudits})")
    full = inst.dims[qudit_index]
    if full < 3:
        raise InvalidInstanceError(f"qudit {qudit_index} 维度为 {full}，无需拆分")
    d = full - 1
    x_index = inst.n_qudits
    M = split_matrix(d)
    dims = list(inst.dims) + [2]
    dims[qudit_index] = d

    constraints = []
    for c in inst.constraints:
        if qudit_index not in c.qudits:
            constraints.append(c)
            continue
        slot = c.qudits.index(qudit_index)
        tensor = c.tensor(inst.dims)
        # C'[.., a, b, ..] = Σ_j C[.., j, ..] M[j, a, b]
        rewritten = np.moveaxis(np.tensordot(tensor, M, axes=([slot], [0])), (-2, -1), (slot, slot + 1))
        qudits = c.qudits[:slot] + (x_index, qudit_index) + c.qudits[slot + 1:]
        constraints.append(Constraint.from_coefficients(qudits, rewritten.reshape(-1)))

    step = SplitStep(qudit_index, full, (x_index, qudit_index))
    log.debug("拆分 qudit %d (维度 %d) -> qubit %d", qudit_index, full, x_index)
    return QsatInstance(dims, constraints, inst.metadata), step


def reduce_to_qubits(inst: QsatInstance) -> Tuple[QsatInstance, SplitMapChain]:
    """反复拆分下标最大的高维 qudit，直到全部为 qubit"""
    chain = SplitMapChain(inst.dims)
    current = inst
    while not current.is_qubit_only():
        q = max(i for i, d in enumerate(current.dims) if d > 2)
        current, step = split_qudit(current, q)
        chain.steps.append(step)
    return current, chain


def transport_wsdr(chain: SplitMapChain, wsdr: Wsdr) -> Wsdr:
    """拆分后的 WSDR：被拆 qudit 的第一条匹配边改给 x，其余留给 y"""
    assignment = dict(wsdr.assignment)
    for step in chain.steps:
        assigned = sorted(i for i, v in assignment.items() if v == step.qudit)
        if assigned:
            assignment[assigned[0]] = step.qubit
    return Wsdr(assignment)


def transport_solution(chain: SplitMapChain, state: ProductState, direction: str) -> ProductState:
    """沿拆分链搬运乘积态

    Args:
        direction: "lift" 从原布局到 qubit 布局（求原像），"push" 反向（z = f(x, y)）
    """
    if direction == "lift":
        state.check_dims(chain.source_dims)
        locals_ = [v.copy() for v in state.locals]
        for step in chain.steps:
            x, y = f_preimage(locals_[step.qudit])
            locals_[step.qudit] = y
            locals_.append(x)
    elif direction == "push":
        state.check_dims(chain.final_dims())
        locals_ = [v.copy() for v in state.locals]
        for step in reversed(chain.steps):
            x = locals_.pop()
            locals_[step.qudit] = f_map(x, locals_[step.qudit])
    else:
        raise InvalidInstanceError(f"未知的搬运方向: {direction}")
    return ProductState(locals_).normalized()


# ============ 多重齐次方程组 -> PRODSAT ============

def antisymmetric_excess(n: int) -> int:
    """(n+1)^2 - C(n+2, 2) - n，即反对称子空间维数超出 n 的部分

    n > 1 时为正：单个 qudit 上的反对称投影无法只排除对角，因此等式约束走 qubit 路线。
    """
    n = int(n)
    if n < 1:
        raise InvalidInstanceError("n 必须 ≥ 1")
    return (n + 1) ** 2 - comb(n + 2, 2) - n


@dataclass
class MhsEmbedding:
    """mhs_to_prodsat 的结果，可解包为 (instance, sdr)

    Attributes:
        instance: qubit 实例（方程约束在前，单重态约束在后）
        sdr: 约束 -> qubit 的 SDR
        chain: 副本 qudit 到 qubit 的拆分链
        copies: 每个变量组的副本 qudit 下标（大小为 1 的组为空）
        singlets: 单重态约束在 instance 中的下标
        pre_reduction: 拆分前的副本 qudit 实例
    """
    instance: QsatInstance
    sdr: SdrCertificate
    chain: SplitMapChain
    copies: List[List[int]]
    singlets: List[int]
    pre_reduction: QsatInstance

    def __iter__(self) -> Iterator[Any]:
        return iter((self.instance, self.sdr))


def _monomial_index(exps, group: int) -> List[int]:
    """组内变量按升序展开重数"""
    out: List[int] = []
    for g, v, p in exps:
        if g == group:
            out.extend([v] * p)
    return sorted(out)


def mhs_to_prodsat(system: MultiHomSystem) -> MhsEmbedding:
    """多重齐次方程组 -> qubit 实例与 SDR

    每组 Z_j 建 c_j = max_i d_{i,j} 个 n_j+1 维副本；方程 f_i 作用在每个相关组的前 d_{i,j} 个副本上，
    每个单项式只放一次（组内变量升序依次落在副本上）。拆分为 qubit 后，在相邻副本的
    第 k 个 qubit 之间加单重态约束。

    Raises:
        RefusedError: Bézout 数为零，certificate 为派生超图上的 Hall 反例（方程数不符时为 None）
    """
    degrees = system.degrees
    if not bezout_nonzero(degrees, system.group_sizes):
        certificate = None
        if len(degrees) == sum(s - 1 for s in system.group_sizes):
            certificate = bezout_certificate(degrees, system.group_sizes)
        raise RefusedError("Bézout 数为零，拒绝编译", certificate)

    copies: List[List[int]] = []
    dims: List[int] = []
    for j, size in enumerate(system.group_sizes):
        count = max((row[j] for row in degrees), default=0) if size > 1 else 0
        copies.append(list(range(len(dims), len(dims) + count)))
        dims.extend([size] * count)

    constraints = []
    for i, eq in enumerate(system.equations):
        touched = [j for j in range(system.n_groups) if degrees[i][j] > 0 and system.group_sizes[j] > 1]
        qudits = [q for j in touched for q in copies[j][:degrees[i][j]]]
        shape = tuple(dims[q] for q in qudits)
        tensor = np.zeros(shape, dtype=complex)
        for exps, coeff in eq.terms.items():
            index = tuple(v for j in touched for v in _monomial_index(exps, j))
            tensor[index] += coeff
        constraints.append(Constraint.from_coefficients(qudits, tensor.reshape(-1)))

    pre = QsatInstance(dims, constraints, {"family": "mhs-copies"})
    reduced, chain = reduce_to_qubits(pre)

    singlet = singlet_coefficients()
    all_constraints = list(reduced.constraints)
    singlets: List[int] = []
    assignment: Dict[int, int] = {}
    for j, group in enumerate(copies):
        for t in range(len(group) - 1):
            left, right = chain.qubits_of(group[t]), chain.qubits_of(group[t + 1])
            for a, b in zip(left, right):
                singlets.append(len(all_constraints))
                assignment[len(all_constraints)] = b
                all_constraints.append(Constraint.from_coefficients((a, b), singlet))

    cover = bezout_certificate(degrees, system.group_sizes)
    used = [0] * system.n_groups
    for i in sorted(cover.assignment):
        j = cover.assignment[i]
        assignment[i] = chain.qubits_of(copies[j][0])[used[j]]
        used[j] += 1

    instance = QsatInstance(reduced.dims, all_constraints, {"family": "mhs"})
    sdr = Wsdr(assignment)
    sdr.validate(underlying_hypergraph(instance))
    log.debug("MHS 编译: %d 个副本 qudit, %d 个 qubit, %d 个单重态约束",
              len(dims), instance.n_qudits, len(singlets))
    return MhsEmbedding(instance, sdr, chain, copies, singlets, pre)


@dataclass
class MhsSolution:
    """从 qubit 解读回的方程组解

    Attributes:
        groups: 每组单位向量 Y_j
        residuals: |f_k(Y)|
        singlet_residual: 单重态约束的最大重叠 |⟨s|a⊗b⟩|
        copy_disagreement: 副本与第一个副本的最大比例残差
        residual_ratio: max|f_k(Y)| / √(最大约束能量)
    """
    groups: List[np.ndarray]
    residuals: np.ndarray
    singlet_residual: float
    copy_disagreement: float
    residual_ratio: float

    @property
    def max_residual(self) -> float:
        return float(np.max(self.residuals)) if self.residuals.size else 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "groups": [[[float(a.real), float(a.imag)] for a in y] for y in self.groups],
            "residuals": [float(r) for r in self.residuals],
            "singlet_residual": self.singlet_residual,
            "copy_disagreement": self.copy_disagreement,
            "residual_ratio": self.residual_ratio,
        }


def extract_mhs_solution(system: MultiHomSystem, embedding: MhsEmbedding,
                         state: ProductState,
                         agreement_tol: float = ToleranceConstants.COPY_AGREEMENT_TOL) -> MhsSolution:
    """把 qubit 实例的乘积态读回为各组向量 Y，并报告残差"""
    energies = constraint_energies(embedding.instance, state)
    copies_state = transport_solution(embedding.chain, state, "push")

    groups: List[np.ndarray] = []
    disagreement = 0.0
    for j, group in enumerate(embedding.copies):
        if not group:
            groups.append(np.ones(system.group_sizes[j], dtype=complex))
            continue
        first = copies_state.locals[group[0]]
        groups.append(first / np.linalg.norm(first))
        for q in group[1:]:
            disagreement = max(disagreement, proportionality_residual(copies_state.locals[q], first))
    if disagreement > agreement_tol:
        warnings.warn(f"变量组副本不一致: 最大比例残差 {disagreement:.3e}")

    residuals = np.abs(system.evaluate(groups))
    singlet = float(np.sqrt(max((energies[i] for i in embedding.singlets), default=0.0)))
    worst = float(np.sqrt(energies.max())) if energies.size else 0.0
    top = float(residuals.max()) if residuals.size else 0.0
    ratio = top / worst if worst > 0 else (0.0 if top == 0 else float("inf"))
    return MhsSolution(groups, residuals, singlet, disagreement, ratio)
