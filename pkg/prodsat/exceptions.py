"""prodsat 异常层次。

所有异常都继承 ProdsatError，同时继承对应的内置异常，
捕获 ValueError / RuntimeError 的调用方不受影响。
"""
from typing import Any, List, Optional


class ProdsatError(Exception):
    """prodsat 所有异常的基类"""
    pass


class InvalidInstanceError(ProdsatError, ValueError):
    """实例、超图或方程组数据不合法"""
    pass


class DimensionMismatchError(InvalidInstanceError):
    """乘积态与实例维度不一致"""
    pass


class SizeLimitError(ProdsatError, ValueError):
    """超出配置的规模上限（穷举上限、次数上限等）"""

    def __init__(self, message: str, size: Any = None, cap: Any = None):
        super().__init__(message)
        self.size = size
        self.cap = cap


class DegeneratePolynomialError(ProdsatError, ValueError):
    """多项式退化（常数、首项为零等）"""
    pass


class RegimeError(ProdsatError, ValueError):
    """求值点超出保证精度的区域"""
    pass


class RootFindingError(ProdsatError, RuntimeError):
    """单变量求根未收敛，附带迭代记录"""

    def __init__(self, message: str, iteration_log: Optional[List[float]] = None):
        super().__init__(message)
        self.iteration_log = list(iteration_log or [])


class PreimageError(RootFindingError):
    """拆分映射的原像计算失败"""
    pass


class NoValidOrderError(ProdsatError, RuntimeError):
    """超图没有满足要求的（几乎）扩展边序"""
    pass


class RecursionLimitError(ProdsatError, RuntimeError):
    """非一般情形的递归次数超过半径上限"""
    pass


class RefusedError(ProdsatError, ValueError):
    """输入不满足前置条件，附带反例证书（如 HallViolation）"""

    def __init__(self, message: str, certificate: Any = None):
        super().__init__(message)
        self.certificate = certificate


class DegreeBoundError(ProdsatError, RuntimeError):
    """闭合多项式次数超过传播给出的上界"""

    def __init__(self, message: str, degree: int = 0, bound: int = 0):
        super().__init__(message)
        self.degree = degree
        self.bound = bound
