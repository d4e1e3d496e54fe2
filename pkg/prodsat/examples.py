"""
实例生成器与示例数据

随机振幅一律取 i.i.d. 复标准高斯后归一化，完全由 seed 决定。
"""
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .bezout import Equation, MultiHomSystem
from .chains import pinwheel_layout
from .constants import LimitConstants
from .exceptions import InvalidInstanceError, SizeLimitError
from .hypergraph import WeightedHypergraph, Wsdr
from .models import Constraint, QsatInstance, complex_to_pair
from .poly_embed import SparsePoly
from .transfer import singlet_coefficients


def _gaussian_unit(rng: np.random.Generator, size: int) -> np.ndarray:
    vec = rng.standard_normal(size) + 1j * rng.standard_normal(size)
    return vec / np.linalg.norm(vec)


def random_instance(dims: Sequence[int], edges: Sequence[Sequence[int]], seed: int = 0,
                    metadata: Optional[Dict] = None) -> QsatInstance:
    """在给定的边上放随机秩 1 约束"""
    rng = np.random.default_rng(seed)
    dims = tuple(int(d) for d in dims)
    constraints = []
    for edge in edges:
        size = int(np.prod([dims[q] for q in edge]))
        constraints.append(Constraint(edge, _gaussian_unit(rng, size)))
    info = {"family": "random", "seed": seed}
    info.update(metadata or {})
    return QsatInstance(dims, constraints, info)


def gen_cycle(dim: Union[int, Sequence[int]], n: int, seed: int = 0) -> QsatInstance:
    """n 个格点的环，约束 φ_i 作用在 (i, i+1 mod n)"""
    if n < 3:
        raise InvalidInstanceError(f"环至少需要 3 个格点，收到 {n}")
    dims = [int(dim)] * n if np.isscalar(dim) else [int(d) for d in dim]
    if len(dims) != n:
        raise InvalidInstanceError(f"维度列表长度 {len(dims)} 与格点数 {n} 不符")
    edges = [(i, (i + 1) % n) for i in range(n)]
    return random_instance(dims, edges, seed, {"family": "cycle", "n": n})


def gen_pinwheel(n: int, seed: int = 0) -> QsatInstance:
    """n 层风车图：每个顶点一个 qutrit，每条边一个随机 2-局部约束

    元数据记录层数和两条辐条的端点。
    """
    if n < 1:
        raise InvalidInstanceError(f"风车图层数至少为 1，收到 {n}")
    if n > LimitConstants.PINWHEEL_MAX_N:
        raise SizeLimitError(f"风车图层数 {n} 超过上限 {LimitConstants.PINWHEEL_MAX_N}",
                             size=n, cap=LimitConstants.PINWHEEL_MAX_N)
    layout = pinwheel_layout(n)
    spokes = [list(edge) for kind, _, _, edge in layout if kind == "spoke"]
    return random_instance([3] * (2 ** (n + 1) - 1), [edge for _, _, _, edge in layout], seed,
                           {"family": "pinwheel", "n": n, "spokes": spokes})


def pinwheel_wsdr(n: int) -> Wsdr:
    """风车图的常权 2 代表系：环边与径向边指向 v_{j,k}，两条辐条指向 v_0"""
    assignment = {}
    for i, (kind, _, _, (u, v)) in enumerate(pinwheel_layout(n)):
        if kind == "ring":
            assignment[i] = u
        elif kind == "radial":
            assignment[i] = v
        else:
            assignment[i] = 0
    return Wsdr(assignment)


def random_almost_extending_instance(n: int, k: int, seed: int = 0) -> QsatInstance:
    """n 个 qubit 的 k-局部实例，带一个 a = 1 的几乎扩展边序和 SDR

    第一条边覆盖 0..k-1，之后每条边引入一个新 qubit，最后一条边只用旧 qubit
    且包含 qubit 1。
    """
    if k < 2 or n < k:
        raise InvalidInstanceError(f"需要 2 ≤ k ≤ n，收到 n={n}, k={k}")
    rng = np.random.default_rng(seed)
    edges: List[Tuple[int, ...]] = [tuple(range(k))]
    for fresh in range(k, n):
        old = rng.choice(fresh, size=k - 1, replace=False)
        edges.append((fresh,) + tuple(int(q) for q in old))
    others = [q for q in range(n) if q != 1]
    closing = rng.choice(others, size=k - 1, replace=False)
    edges.append((1,) + tuple(int(q) for q in closing))
    return random_instance([2] * n, edges, int(rng.integers(2 ** 31)),
                           {"family": "almost-extending", "n": n, "k": k, "seed": seed})


def with_affine_constraints(inst: QsatInstance,
                            alphas: Sequence[Tuple[complex, complex]]) -> QsatInstance:
    """给每个 qutrit 追加 1-局部约束 z^0 = α1 z^1 + α2 z^2"""
    if len(alphas) != inst.n_qudits:
        raise InvalidInstanceError(f"需要 {inst.n_qudits} 组仿射参数，收到 {len(alphas)}")
    constraints = list(inst.constraints)
    for q, (a1, a2) in enumerate(alphas):
        if inst.dims[q] != 3:
            raise InvalidInstanceError(f"qudit {q} 的维度为 {inst.dims[q]}，仿射约束只用于 qutrit")
        constraints.append(Constraint.from_coefficients((q,), [1, -complex(a1), -complex(a2)]))
    metadata = dict(inst.metadata)
    metadata["affine"] = [[complex_to_pair(a1), complex_to_pair(a2)] for a1, a2 in alphas]
    return QsatInstance(inst.dims, constraints, metadata)


def singlet_cycle(n: int) -> QsatInstance:
    """每条边都是单态 (|01⟩ - |10⟩)/√2 的 qubit 环"""
    if n < 3:
        raise InvalidInstanceError(f"环至少需要 3 个格点，收到 {n}")
    constraints = [Constraint.from_coefficients((i, (i + 1) % n), singlet_coefficients())
                   for i in range(n)]
    return QsatInstance([2] * n, constraints, {"family": "singlet-cycle", "n": n})


# ============ 示例 ============

def four_qutrit_hypergraph() -> WeightedHypergraph:
    """4 个权重 2 的顶点，4 条 3-边加 4 条全集边"""
    triples = [(0, 1, 2), (1, 2, 3), (2, 3, 0), (3, 0, 1)]
    return WeightedHypergraph((2, 2, 2, 2), tuple(triples + [(0, 1, 2, 3)] * 4))


def four_qutrit_instance(seed: int = 0) -> QsatInstance:
    return random_instance((3, 3, 3, 3), four_qutrit_hypergraph().edges, seed,
                           {"family": "four-qutrit"})


def two_group_system() -> MultiHomSystem:
    """Z_1 = {x1, x2}, Z_2 = {y1, y2, y3}:
    f1 = x1 y1 y2 + x2 y2 y3, f2 = x1 y1 + x2 y2, f3 = y1 y2 + y2 y3
    """
    x1, x2 = (0, 0, 1), (0, 1, 1)
    y1, y2, y3 = (1, 0, 1), (1, 1, 1), (1, 2, 1)
    f1 = Equation({(x1, y1, y2): 1, (x2, y2, y3): 1})
    f2 = Equation({(x1, y1): 1, (x2, y2): 1})
    f3 = Equation({(y1, y2): 1, (y2, y3): 1})
    return MultiHomSystem((2, 3), [f1, f2, f3])


def cubic_polynomial() -> SparsePoly:
    """x³ - 4x + 5"""
    return SparsePoly.from_dense([5, -4, 0, 1])


def qutrit_qubit_instance(seed: int = 0) -> QsatInstance:
    """一个 qutrit ⊗ qubit 约束"""
    return random_instance((3, 2), [(0, 1)], seed, {"family": "qutrit-qubit"})
