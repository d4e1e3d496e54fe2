from typing import Dict, List, Optional, Any, Sequence, Tuple, Union
from dataclasses import dataclass, field
import json
import os
import warnings

import numpy as np

from .constants import FormatConstants, ToleranceConstants
from .exceptions import DimensionMismatchError, InvalidInstanceError
from .hypergraph import HallViolation, WeightedHypergraph, find_wsdr


def complex_to_pair(z: complex) -> List[float]:
    """复数 -> [re, im]"""
    z = complex(z)
    return [float(z.real), float(z.imag)]


def pair_to_complex(pair: Sequence[float]) -> complex:
    """[re, im] -> 复数"""
    if len(pair) != 2:
        raise InvalidInstanceError(f"复数必须编码为 [re, im]，收到 {pair}")
    return complex(float(pair[0]), float(pair[1]))


def proportionality_residual(u: np.ndarray, v: np.ndarray) -> float:
    """两个非零向量方向之差：单位化后去掉相位的残差范数，成比例时为 0"""
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        return 1.0
    u = u / nu
    v = v / nv
    return float(np.linalg.norm(u - np.vdot(v, u) * v))


@dataclass
class Constraint:
    """秩 1 约束 |φ⟩，作用在有序的 qudit 列表上

    Attributes:
        qudits: 约束作用的 qudit 下标（第一个为最高位）
        amps: 单位范数的振幅向量，按行主序排列
    """
    qudits: Tuple[int, ...]
    amps: np.ndarray

    def __init__(self, qudits: Sequence[int], amps: Sequence[complex]):
        self.qudits = tuple(int(q) for q in qudits)
        self.amps = np.asarray(amps, dtype=complex).reshape(-1)
        if not self.qudits:
            raise InvalidInstanceError("约束至少作用在一个 qudit 上")
        if len(set(self.qudits)) != len(self.qudits):
            raise InvalidInstanceError(f"约束的 qudit 列表含重复: {self.qudits}")
        norm = float(np.linalg.norm(self.amps))
        if abs(norm - 1.0) > ToleranceConstants.AMPLITUDE_NORM_TOL:
            raise InvalidInstanceError(f"约束振幅范数为 {norm!r}，应为 1")

    @classmethod
    def from_amplitudes(cls, qudits: Sequence[int], amps: Sequence[complex]) -> 'Constraint':
        """由任意非零振幅构造（自动归一化）"""
        vec = np.asarray(amps, dtype=complex).reshape(-1)
        norm = np.linalg.norm(vec)
        if norm <= ToleranceConstants.ZERO_VECTOR_TOL:
            raise InvalidInstanceError("约束振幅不能为零向量")
        return cls(qudits, vec / norm)

    @classmethod
    def from_coefficients(cls, qudits: Sequence[int], coeffs: Sequence[complex]) -> 'Constraint':
        """由多项式系数（即 ⟨φ| 的分量）构造，振幅取其共轭"""
        return cls.from_amplitudes(qudits, np.conj(np.asarray(coeffs, dtype=complex)))

    @property
    def coefficients(self) -> np.ndarray:
        """⟨φ| 的分量，即多项式 f_i 的系数"""
        return np.conj(self.amps)

    @property
    def arity(self) -> int:
        return len(self.qudits)

    def tensor(self, dims: Sequence[int]) -> np.ndarray:
        """按 qudit 维度重排的系数张量"""
        return self.coefficients.reshape(tuple(dims[q] for q in self.qudits))

    def to_dict(self) -> Dict[str, Any]:
        return {"qudits": list(self.qudits), "amps": [complex_to_pair(a) for a in self.amps]}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'Constraint':
        return cls(data["qudits"], [pair_to_complex(p) for p in data["amps"]])


@dataclass
class QsatInstance:
    """QSAT 实例：各 qudit 维度与秩 1 约束列表

    Attributes:
        dims: 每个 qudit 的维度 d_i ≥ 2
        constraints: 约束列表
        metadata: 生成器等附加信息（可选）
    """
    dims: Tuple[int, ...]
    constraints: List[Constraint]
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __init__(self, dims: Sequence[int], constraints: Sequence[Constraint],
                 metadata: Optional[Dict[str, Any]] = None):
        self.dims = tuple(int(d) for d in dims)
        self.constraints = list(constraints)
        self.metadata = dict(metadata or {})
        for q, d in enumerate(self.dims):
            if d < 2:
                raise InvalidInstanceError(f"qudit {q} 的维度 {d} 小于 2")
        for i, c in enumerate(self.constraints):
            for q in c.qudits:
                if not 0 <= q < len(self.dims):
                    raise InvalidInstanceError(f"约束 {i} 引用了不存在的 qudit {q}")
            expected = int(np.prod([self.dims[q] for q in c.qudits]))
            if c.amps.size != expected:
                raise InvalidInstanceError(
                    f"约束 {i} 振幅长度 {c.amps.size} 与维度乘积 {expected} 不符")

    @property
    def n_qudits(self) -> int:
        return len(self.dims)

    @property
    def n_constraints(self) -> int:
        return len(self.constraints)

    def is_qubit_only(self) -> bool:
        return all(d == 2 for d in self.dims)

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "dims": list(self.dims),
            "constraints": [c.to_dict() for c in self.constraints],
        }
        if self.metadata:
            data["metadata"] = self.metadata
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'QsatInstance':
        if "dims" not in data or "constraints" not in data:
            raise InvalidInstanceError("实例数据缺少 'dims' 或 'constraints' 字段")
        return cls(data["dims"], [Constraint.from_dict(c) for c in data["constraints"]],
                   data.get("metadata"))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=FormatConstants.JSON_INDENT, ensure_ascii=False)

    @classmethod
    def from_json(cls, json_str: str) -> 'QsatInstance':
        return cls.from_dict(json.loads(json_str))

    def save_to_file(self, filepath: str) -> bool:
        """保存实例到文件

        Returns:
            保存是否成功
        """
        try:
            directory = os.path.dirname(filepath)
            if directory:
                os.makedirs(directory, exist_ok=True)
            with open(filepath, 'w', encoding='utf-8') as f:
                json.dump(self.to_dict(), f, indent=FormatConstants.JSON_INDENT, ensure_ascii=False)
            print(f"✅ 实例已保存到: {filepath}")
            return True
        except Exception as e:
            print(f"❌ 保存实例失败: {e}")
            return False

    @classmethod
    def load_from_file(cls, filepath: str) -> Optional['QsatInstance']:
        """从文件加载实例，失败时返回 None"""
        try:
            if not os.path.exists(filepath):
                print(f"❌ 文件不存在: {filepath}")
                return None
            with open(filepath, 'r', encoding='utf-8') as f:
                data = json.load(f)
            if "constraints" not in data:
                print("❌ 无效的实例文件格式")
                return None
            return cls.from_dict(data)
        except Exception as e:
            print(f"❌ 加载实例失败: {e}")
            return None


@dataclass
class ProductState:
    """乘积态：每个 qudit 一个非零复向量"""
    locals: List[np.ndarray]

    def __init__(self, locals: Sequence[Sequence[complex]]):
        self.locals = [np.asarray(v, dtype=complex).reshape(-1) for v in locals]
        for q, v in enumerate(self.locals):
            if np.linalg.norm(v) <= ToleranceConstants.ZERO_VECTOR_TOL:
                raise InvalidInstanceError(f"qudit {q} 的局部向量为零")

    def normalized(self) -> 'ProductState':
        return ProductState([v / np.linalg.norm(v) for v in self.locals])

    def is_normalized(self, tol: float = ToleranceConstants.NORM_EPS) -> bool:
        return all(abs(np.linalg.norm(v) - 1.0) <= tol for v in self.locals)

    def check_dims(self, dims: Sequence[int]) -> None:
        if len(self.locals) != len(dims):
            raise DimensionMismatchError(
                f"乘积态有 {len(self.locals)} 个局部向量，实例有 {len(dims)} 个 qudit")
        for q, (v, d) in enumerate(zip(self.locals, dims)):
            if v.size != d:
                raise DimensionMismatchError(f"qudit {q} 局部向量长度 {v.size} 与维度 {d} 不符")

    def to_dict(self) -> Dict[str, Any]:
        return {"locals": [[complex_to_pair(a) for a in v] for v in self.locals]}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ProductState':
        if "locals" not in data:
            raise InvalidInstanceError("解数据缺少 'locals' 字段")
        return cls([[pair_to_complex(p) for p in v] for v in data["locals"]])

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=FormatConstants.JSON_INDENT, ensure_ascii=False)

    @classmethod
    def from_json(cls, json_str: str) -> 'ProductState':
        return cls.from_dict(json.loads(json_str))

    def save_to_file(self, filepath: str) -> bool:
        try:
            directory = os.path.dirname(filepath)
            if directory:
                os.makedirs(directory, exist_ok=True)
            with open(filepath, 'w', encoding='utf-8') as f:
                json.dump(self.to_dict(), f, indent=FormatConstants.JSON_INDENT, ensure_ascii=False)
            print(f"✅ 乘积态已保存到: {filepath}")
            return True
        except Exception as e:
            print(f"❌ 保存乘积态失败: {e}")
            return False

    @classmethod
    def load_from_file(cls, filepath: str) -> Optional['ProductState']:
        try:
            if not os.path.exists(filepath):
                print(f"❌ 文件不存在: {filepath}")
                return None
            with open(filepath, 'r', encoding='utf-8') as f:
                return cls.from_dict(json.load(f))
        except Exception as e:
            print(f"❌ 加载乘积态失败: {e}")
            return None


def contract_constraint(coeff_tensor: np.ndarray, vectors: Sequence[np.ndarray]) -> complex:
    """Σ_J c_J ∏ v_{i,J_i}：系数张量与每个槽上的向量逐一缩并"""
    tensor = coeff_tensor
    for v in vectors:
        tensor = np.tensordot(v, tensor, axes=([0], [0]))
    return complex(tensor)


def constraint_energies(inst: QsatInstance, state: ProductState) -> np.ndarray:
    """每个约束的能量 |⟨φ_i| ⊗_{v∈e_i} ψ_v⟩|²（内部先归一化）"""
    state.check_dims(inst.dims)
    unit = state.normalized()
    values = np.empty(inst.n_constraints, dtype=float)
    for i, c in enumerate(inst.constraints):
        overlap = contract_constraint(c.tensor(inst.dims), [unit.locals[q] for q in c.qudits])
        values[i] = abs(overlap) ** 2
    return values


def energy(inst: QsatInstance, state: ProductState) -> Tuple[float, float]:
    """返回 (总能量, 单约束最大能量)"""
    values = constraint_energies(inst, state)
    if values.size == 0:
        return 0.0, 0.0
    return float(values.sum()), float(values.max())


def underlying_hypergraph(inst: QsatInstance) -> WeightedHypergraph:
    """底层超图：顶点权重 d_i - 1，每个约束一条边"""
    return WeightedHypergraph(tuple(d - 1 for d in inst.dims),
                              tuple(c.qudits for c in inst.constraints))


def to_mhs(inst: QsatInstance) -> 'MultiHomSystem':
    """把实例翻译为多重齐次方程组：每个 qudit 一个变量组，每个约束一个多线性方程"""
    from .bezout import Equation, MultiHomSystem

    equations = []
    for c in inst.constraints:
        shape = tuple(inst.dims[q] for q in c.qudits)
        terms = {}
        for flat, coeff in enumerate(c.coefficients):
            if coeff == 0:
                continue
            index = np.unravel_index(flat, shape)
            exps = tuple(sorted((q, int(j), 1) for q, j in zip(c.qudits, index)))
            terms[exps] = complex(coeff)
        equations.append(Equation(terms))
    return MultiHomSystem(inst.dims, equations)


def entangled_subspace_max_dim(dims: Sequence[int]) -> int:
    """完全纠缠子空间的最大维数 ∏d_i - Σd_i + k - 1"""
    dims = [int(d) for d in dims]
    if any(d < 2 for d in dims):
        raise InvalidInstanceError("所有维度必须 ≥ 2")
    return int(np.prod(dims, dtype=object)) - sum(dims) + len(dims) - 1


# ============ 经典 SAT ============

@dataclass
class CnfFormula:
    """CNF 公式，文字采用 DIMACS 约定（变量 1..n，负号表示取反）"""
    n_vars: int
    clauses: List[Tuple[int, ...]]

    def __init__(self, n_vars: int, clauses: Sequence[Sequence[int]]):
        self.n_vars = int(n_vars)
        self.clauses = [tuple(int(l) for l in clause) for clause in clauses]
        for i, clause in enumerate(self.clauses):
            if not clause:
                raise InvalidInstanceError(f"子句 {i} 为空")
            for lit in clause:
                if lit == 0 or abs(lit) > self.n_vars:
                    raise InvalidInstanceError(f"子句 {i} 的文字 {lit} 超出范围")

    def incidence_hypergraph(self) -> WeightedHypergraph:
        """变量为顶点（权重 1），子句的变量集为边"""
        return WeightedHypergraph((1,) * self.n_vars,
                                  tuple(tuple(sorted({abs(l) - 1 for l in c})) for c in self.clauses))

    def evaluate(self, assignment: Dict[int, bool]) -> bool:
        return all(any(assignment.get(abs(l), False) == (l > 0) for l in clause)
                   for clause in self.clauses)


def solve_sat_with_sdr(cnf: CnfFormula) -> Union[Dict[int, bool], HallViolation]:
    """若子句-变量超图有 SDR，令每个匹配文字为真得到满足赋值"""
    result = find_wsdr(cnf.incidence_hypergraph())
    if isinstance(result, HallViolation):
        return result
    assignment = {v: False for v in range(1, cnf.n_vars + 1)}
    for i, vertex in result.assignment.items():
        var = vertex + 1
        literal = next(l for l in cnf.clauses[i] if abs(l) == var)
        assignment[var] = literal > 0
    if not cnf.evaluate(assignment):
        warnings.warn("由 SDR 构造的赋值未满足全部子句")
    return assignment
