"""
数值常量定义

包含所有容差、上限和求解器参数设置
"""


class ToleranceConstants:
    """数值容差常量"""

    # ============ 传递函数 ============
    VANISH_TAU = 1e-12                  # 传递函数消失阈值(按输入范数缩放)

    # ============ 向量归一化 ============
    NORM_EPS = 1e-9                     # 输入局部向量的范数容差
    AMPLITUDE_NORM_TOL = 1e-12          # 约束振幅向量的单位范数容差
    ZERO_VECTOR_TOL = 1e-300            # 视为零向量的范数

    # ============ 比例关系 ============
    PROPORTIONALITY_TOL = 1e-10         # 向量成比例判定容差
    CHART_SWITCH_TOL = 1e-8             # 仿射坐标切换阈值(相对)
    PREIMAGE_TOL = 1e-8                 # 拆分映射原像的比例残差上限

    # ============ 求根 ============
    ROOT_TOL = 1e-12                    # 单变量多项式根残差容差(相对)
    TRIM_REL = 1e-14                    # 首项系数截断阈值(相对最大系数)

    # ============ 求解器验收 ============
    DEFAULT_EPS = 1e-8                  # 默认最大单约束残差
    COPY_AGREEMENT_TOL = 1e-6           # MHS 副本一致性告警阈值


class SolverConstants:
    """求解器相关常量"""

    # ============ 多项式传播 ============
    DEGREE_CAP = 4096                   # 传播多项式最大系数个数

    # ============ Aberth 迭代 ============
    ABERTH_MAX_ITER = 500               # 最大迭代次数
    POLISH_STEPS = 3                    # 收敛后牛顿修正步数

    # ============ 牛顿多起点 ============
    NEWTON_STARTS = 64                  # 默认起点个数
    NEWTON_MAX_ITER = 60                # 单起点最大迭代次数
    NEWTON_FD_STEP = 1e-7               # 有限差分步长(相对)
    NEWTON_TOL = 1e-13                  # 残差收敛阈值

    # ============ 任意精度求值 ============
    GUARD_BITS = 64                     # 额外保护位
    POLYLOG_POWER = 2                   # 根窗口 1 + log(d)^p / d 的幂次


class LimitConstants:
    """规模上限常量"""

    # ============ 穷举 ============
    BRUTEFORCE_CAP = 10 ** 6            # WSDR 穷举计数的最大组合数
    EXHAUSTIVE_ORDER_MAX_EDGES = 12     # 精确最小 a 搜索的最大边数

    # ============ 生成器 ============
    PINWHEEL_MAX_N = 16                 # 风车图生成最大层数
    PINWHEEL_MAX_SOLVE_N = 6            # 风车图求解最大层数

    # ============ 嵌入 ============
    DENSE_EMBED_MAX_DEGREE = 4096       # 稠密嵌入最大次数


class FormatConstants:
    """文件格式常量"""

    JSON_INDENT = 2                     # JSON 缩进
    SPLITS_SUFFIX = ".splits.json"      # 拆分链旁路文件后缀
