"""
单变量复多项式求根

Aberth-Ehrlich 同时迭代：初值均匀放在半径为 |c_0/c_d|^{1/d} 的圆上，
以相对残差 |p(z)| ≤ tol·Σ|c_i||z|^i 判定收敛，收敛后做少量牛顿修正。
companion_roots 用伴随矩阵特征值给出独立的对照结果。
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Sequence

import numpy as np
from numpy.polynomial import Polynomial
from numpy.polynomial import polynomial as P

from .constants import SolverConstants, ToleranceConstants
from .exceptions import DegeneratePolynomialError, RootFindingError, SizeLimitError

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class UnivariatePoly:
    """稠密复系数多项式，coeffs[i] 为 x^i 的系数

    构造时按最大系数的相对阈值去掉为零的高次项，保证首项非零。
    """
    coeffs: np.ndarray

    def __init__(self, coeffs: Sequence[complex],
                 trim_rel: float = ToleranceConstants.TRIM_REL,
                 degree_cap: int = SolverConstants.DEGREE_CAP):
        values = np.asarray(coeffs, dtype=complex).reshape(-1)
        if values.size == 0:
            values = np.zeros(1, dtype=complex)
        scale = float(np.max(np.abs(values)))
        keep = values.size
        while keep > 1 and abs(values[keep - 1]) <= trim_rel * scale:
            keep -= 1
        values = values[:keep].copy()
        if values.size > degree_cap:
            raise SizeLimitError(f"多项式系数个数 {values.size} 超过上限 {degree_cap}",
                                 size=int(values.size), cap=degree_cap)
        object.__setattr__(self, "coeffs", values)

    @classmethod
    def from_polynomial(cls, poly: Polynomial, **kwargs) -> 'UnivariatePoly':
        return cls(poly.coef, **kwargs)

    @property
    def degree(self) -> int:
        if self.coeffs.size == 1 and self.coeffs[0] == 0:
            return -1
        return self.coeffs.size - 1

    def __call__(self, x):
        return P.polyval(x, self.coeffs)

    def scale_at(self, x) -> np.ndarray:
        """Σ|c_i||x|^i，相对残差的分母"""
        return P.polyval(np.abs(x), np.abs(self.coeffs))

    def to_dict(self) -> Dict[str, Any]:
        return {"coeffs": [[float(c.real), float(c.imag)] for c in self.coeffs]}


def _relative_residual(poly: UnivariatePoly, z: np.ndarray) -> np.ndarray:
    scale = poly.scale_at(z)
    scale = np.where(scale > 0, scale, 1.0)
    return np.abs(poly(z)) / scale


def _sorted_roots(roots: np.ndarray) -> np.ndarray:
    order = np.lexsort((roots.imag, roots.real))
    return roots[order]


def _aberth(monic: np.ndarray, tol: float, max_iter: int) -> np.ndarray:
    """monic[i] 为 x^i 的系数，首项为 1，常数项非零"""
    d = monic.size - 1
    poly = UnivariatePoly(monic, trim_rel=0.0, degree_cap=d + 1)
    deriv = P.polyder(monic)
    radius = abs(monic[0]) ** (1.0 / d)
    angles = 2 * np.pi * np.arange(d) / d + 0.4
    z = radius * np.exp(1j * angles)

    history: List[float] = []
    for iteration in range(max_iter):
        residual = _relative_residual(poly, z)
        history.append(float(residual.max()))
        if residual.max() <= tol:
            log.debug("Aberth 收敛: d=%d, 迭代 %d 次", d, iteration)
            return z
        with np.errstate(divide='ignore', invalid='ignore'):
            pz = P.polyval(z, monic)
            dz = P.polyval(z, deriv)
            ratio = np.where(dz != 0, pz / np.where(dz != 0, dz, 1), pz)
            diff = z[:, None] - z[None, :]
            np.fill_diagonal(diff, np.inf)
            diff = np.where(diff == 0, np.finfo(float).eps * (1 + abs(radius)), diff)
            repulsion = np.sum(1.0 / diff, axis=1)
            step = ratio / (1 - ratio * repulsion)
        step = np.where(np.isfinite(step), step, 0)
        # 已收敛的根保持不动
        step = np.where(residual <= tol, 0, step)
        z = z - step
        if not np.any(step):
            break
    raise RootFindingError(f"Aberth 迭代在 {max_iter} 次内未收敛 (d={d})", history)


def _polish(poly: UnivariatePoly, z: np.ndarray, steps: int) -> np.ndarray:
    deriv = P.polyder(poly.coeffs)
    for _ in range(steps):
        pz = poly(z)
        dz = P.polyval(z, deriv)
        candidate = np.where(dz != 0, z - pz / np.where(dz != 0, dz, 1), z)
        better = np.abs(poly(candidate)) < np.abs(pz)
        z = np.where(better, candidate, z)
    return z


def roots_univariate(poly: UnivariatePoly, tol: float = ToleranceConstants.ROOT_TOL,
                     max_iter: int = SolverConstants.ABERTH_MAX_ITER,
                     polish_steps: int = SolverConstants.POLISH_STEPS) -> np.ndarray:
    """全部复根（含重数），按 (实部, 虚部) 排序

    Raises:
        DegeneratePolynomialError: 次数 < 1
        RootFindingError: 迭代未收敛，附带每步最大相对残差
    """
    if not isinstance(poly, UnivariatePoly):
        poly = UnivariatePoly(poly)
    d = poly.degree
    if d < 1:
        raise DegeneratePolynomialError(f"求根需要次数 ≥ 1 的多项式，收到次数 {d}")

    coeffs = poly.coeffs
    zeros = 0
    while coeffs[zeros] == 0:
        zeros += 1
    reduced = coeffs[zeros:] / coeffs[-1]

    found = [np.zeros(zeros, dtype=complex)]
    if reduced.size == 2:
        found.append(np.array([-reduced[0]], dtype=complex))
    elif reduced.size > 2:
        z = _aberth(reduced, tol, max_iter)
        found.append(_polish(UnivariatePoly(reduced, trim_rel=0.0, degree_cap=reduced.size), z, polish_steps))
    return _sorted_roots(np.concatenate(found))


def companion_roots(poly: UnivariatePoly) -> np.ndarray:
    """伴随矩阵特征值，作为求根结果的对照"""
    if not isinstance(poly, UnivariatePoly):
        poly = UnivariatePoly(poly)
    coef = poly.coeffs
    d = poly.degree
    if d < 1:
        raise DegeneratePolynomialError(f"求根需要次数 ≥ 1 的多项式，收到次数 {d}")
    A = np.diag(np.ones(d - 1, dtype=np.complex128), -1)
    A[0] = -(coef[:-1][::-1] / np.complex128(coef[-1]))
    return _sorted_roots(np.linalg.eigvals(A))
