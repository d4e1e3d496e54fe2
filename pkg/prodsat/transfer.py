"""
qubit 约束上的传递函数与小工具约束

这里的 phi 一律指 ⟨φ| 的分量，即多项式系数（= 约束振幅的共轭）。
给定前 k-1 个 qubit 的取值，x̄ 是 phi 与这些取值的直接（不取共轭）缩并，
g = (x̄_2, -x̄_1) 使 ⟨φ|(v_1 ⊗ … ⊗ v_{k-1} ⊗ g)⟩ = 0。
"""
import itertools
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import Polynomial

from .constants import ToleranceConstants
from .exceptions import DimensionMismatchError, InvalidInstanceError

PolyPair = Tuple[Polynomial, Polynomial]


@dataclass(frozen=True)
class TransferResult:
    """传递函数结果

    Attributes:
        xbar: 缩并得到的二维向量
        g: 强制赋值 (x̄_2, -x̄_1)
        vanished: ‖x̄‖ ≤ τ·(输入范数之积)，此时约束对任意取值都满足
    """
    xbar: np.ndarray
    g: np.ndarray
    vanished: bool


def _qubit_tensor(phi: Sequence[complex], k: int) -> np.ndarray:
    phi = np.asarray(phi, dtype=complex).reshape(-1)
    if phi.size != 2 ** k:
        raise DimensionMismatchError(f"{k}-局部 qubit 约束应有 {2 ** k} 个分量，收到 {phi.size}")
    return phi.reshape((2,) * k)


def forced_assignment(coeff_tensor: np.ndarray, values: Sequence[Optional[np.ndarray]],
                      tau: float = ToleranceConstants.VANISH_TAU) -> TransferResult:
    """对任意一个槽求强制赋值

    Args:
        coeff_tensor: 形状 (2,)*k 的系数张量
        values: 长度 k，目标槽为 None，其余为二维向量

    Returns:
        目标槽上的 TransferResult
    """
    targets = [s for s, v in enumerate(values) if v is None]
    if len(targets) != 1:
        raise InvalidInstanceError("必须恰好有一个目标槽")
    target = targets[0]
    tensor = np.moveaxis(np.asarray(coeff_tensor, dtype=complex), target, -1)
    scale = float(np.linalg.norm(tensor))
    for v in (values[s] for s in range(len(values)) if s != target):
        v = np.asarray(v, dtype=complex).reshape(-1)
        if v.size != 2:
            raise DimensionMismatchError("部分赋值必须是二维向量")
        tensor = np.tensordot(v, tensor, axes=([0], [0]))
        scale *= float(np.linalg.norm(v))
    xbar = np.asarray(tensor, dtype=complex).reshape(2)
    g = np.array([xbar[1], -xbar[0]], dtype=complex)
    return TransferResult(xbar, g, bool(np.linalg.norm(xbar) <= tau * scale))


def transfer(phi: Sequence[complex], partial: Sequence[np.ndarray],
             tau: float = ToleranceConstants.VANISH_TAU) -> TransferResult:
    """最后一个 qubit 的传递函数

    Args:
        phi: k-局部 qubit 约束的系数（长度 2^k，行主序）
        partial: 前 k-1 个 qubit 的取值
        tau: 消失阈值

    Raises:
        DimensionMismatchError: 长度不符或 k < 2
    """
    k = len(partial) + 1
    if k < 2:
        raise DimensionMismatchError("传递函数至少需要 2-局部约束")
    return forced_assignment(_qubit_tensor(phi, k), list(partial) + [None], tau)


def transfer_polynomial(coeff_tensor: np.ndarray, values: Sequence[Optional[PolyPair]]) -> PolyPair:
    """多项式取值版本：各槽是关于 x 的多项式对，返回目标槽上的 g(x)"""
    targets = [s for s, v in enumerate(values) if v is None]
    if len(targets) != 1:
        raise InvalidInstanceError("必须恰好有一个目标槽")
    target = targets[0]
    tensor = np.asarray(coeff_tensor, dtype=complex)
    xbar = [Polynomial([0j]), Polynomial([0j])]
    for index in itertools.product(range(2), repeat=tensor.ndim):
        coeff = tensor[index]
        if coeff == 0:
            continue
        term = Polynomial([coeff])
        for s, j in enumerate(index):
            if s != target:
                term = term * values[s][j]
        xbar[index[target]] = xbar[index[target]] + term
    return xbar[1], -xbar[0]


def gadget_linear(a: Sequence[complex], b: Sequence[complex]) -> np.ndarray:
    """2-局部线性组合约束的系数：φ_{i0} = a_i, φ_{i1} = b_i（单位化）

    作用在 v_1 = (x, y) 上的传递结果 g ∝ (b_1 x + b_2 y, -(a_1 x + a_2 y))。
    """
    a = np.asarray(a, dtype=complex).reshape(2)
    b = np.asarray(b, dtype=complex).reshape(2)
    coeffs = np.array([a[0], b[0], a[1], b[1]], dtype=complex)
    norm = np.linalg.norm(coeffs)
    if norm == 0:
        raise InvalidInstanceError("a 与 b 不能同时为零")
    return coeffs / norm


def gadget_quadratic(a: Sequence[complex], b: Sequence[complex]) -> np.ndarray:
    """3-局部二次组合约束的系数

    a、b 按 (x_1x_2, x_1y_2, y_1x_2, y_1y_2) 排列；
    x̄ = (Σ a_{ij} v_{1,i} v_{2,j}, Σ b_{ij} v_{1,i} v_{2,j})。
    """
    a = np.asarray(a, dtype=complex).reshape(4)
    b = np.asarray(b, dtype=complex).reshape(4)
    coeffs = np.empty(8, dtype=complex)
    coeffs[0::2] = a
    coeffs[1::2] = b
    norm = np.linalg.norm(coeffs)
    if norm == 0:
        raise InvalidInstanceError("a 与 b 不能同时为零")
    return coeffs / norm


def equality_gadget() -> np.ndarray:
    """令第二个 qubit 等于第一个"""
    return gadget_linear((0, -1), (1, 0))


def product_gadget() -> np.ndarray:
    """(x_1, y_1), (x_2, y_2) -> (x_1 x_2, y_1 y_2)"""
    return gadget_quadratic((0, 0, 0, -1), (1, 0, 0, 0))


def singlet_coefficients() -> np.ndarray:
    """(|01⟩ - |10⟩)/√2：两个 qubit 成比例时满足"""
    return np.array([0, 1, -1, 0], dtype=complex) / np.sqrt(2)
