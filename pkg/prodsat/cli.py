"""
prodsat 命令行入口

机器输出（JSON）写到 -o 或标准输出，状态行带 emoji 写到标准错误。
退出码: 0 成功，1 已证实的失败（Hall 反例、Bézout 数为零、残差超限），2 用法或输入错误。
"""
import argparse
import json
import logging
import sys
import time
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from .bezout import MultiHomSystem, bezout_certificate, bezout_number, bezout_nonzero
from .constants import FormatConstants, SolverConstants, ToleranceConstants
from .examples import gen_cycle, gen_pinwheel, random_almost_extending_instance, random_instance, with_affine_constraints
from .exceptions import InvalidInstanceError, ProdsatError, RefusedError
from .hypergraph import HallViolation, WeightedHypergraph, filtration_of_order, find_extending_order, find_wsdr
from .models import ProductState, QsatInstance, to_mhs, underlying_hypergraph
from .poly_embed import SparsePoly, embed
from .reductions import mhs_to_prodsat, reduce_to_qubits
from .solver import METHODS, solve_instance, verify
from .workers import set_thread_limit, shutdown

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2


class UsageError(Exception):
    """命令行参数或输入文件不可用"""
    pass


def _status(message: str) -> None:
    print(message, file=sys.stderr)


def _read_json(path: str) -> Dict[str, Any]:
    try:
        with open(path, 'r', encoding='utf-8') as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise UsageError(f"无法读取 {path}: {e}") from e


def _emit(data: Dict[str, Any], output: Optional[str]) -> None:
    text = json.dumps(data, indent=FormatConstants.JSON_INDENT, ensure_ascii=False)
    if output:
        try:
            with open(output, 'w', encoding='utf-8') as f:
                f.write(text + "\n")
        except OSError as e:
            raise UsageError(f"无法写入 {output}: {e}") from e
        _status(f"✅ 已写入: {output}")
    else:
        print(text)


def _load_instance(path: str) -> QsatInstance:
    return QsatInstance.from_dict(_read_json(path))


def _parse_complex_list(text: str) -> List[complex]:
    try:
        return [complex(part.strip().replace(" ", "")) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise UsageError(f"无法解析系数列表: {text}") from e


def _parse_edges(text: str) -> List[List[int]]:
    try:
        return [[int(v) for v in chunk.split(",")] for chunk in text.split(";") if chunk.strip()]
    except ValueError as e:
        raise UsageError(f"无法解析边列表: {text}") from e


# ============ 子命令 ============

def cmd_analyze(args: argparse.Namespace) -> int:
    """WSDR、几乎扩展边序与传递滤链报告；输入为实例或超图"""
    data = _read_json(args.input)
    if "constraints" in data:
        h = underlying_hypergraph(QsatInstance.from_dict(data))
    else:
        h = WeightedHypergraph.from_dict(data)

    report: Dict[str, Any] = {"n_vertices": h.n_vertices, "n_edges": h.n_edges}
    result = find_wsdr(h)
    if isinstance(result, HallViolation):
        report["wsdr"] = None
        report["hall_violation"] = result.to_dict()
        _emit(report, args.output)
        _status(f"❌ 不存在 WSDR: 边集 {sorted(result.edge_subset)} 只覆盖加权大小 {result.witness_size}")
        return EXIT_FAILED
    report["wsdr"] = result.to_dict()

    order = find_extending_order(h, a_max=max(h.n_edges, 1))
    if order is not None:
        filtration = filtration_of_order(h, order)
        report["order"] = order.to_dict()
        report["filtration"] = filtration.to_dict()
        report["radius"] = filtration.radius
    _emit(report, args.output)
    _status(f"✅ 存在 WSDR；a = {order.non_extending_count if order else '无'}")
    return EXIT_OK


def cmd_bezout(args: argparse.Namespace) -> int:
    """Bézout 数与非零证书；输入为方程组或实例"""
    data = _read_json(args.input)
    system = to_mhs(QsatInstance.from_dict(data)) if "constraints" in data else MultiHomSystem.from_dict(data)
    degrees = system.degrees
    number = bezout_number(degrees, system.group_sizes)
    nonzero = bezout_nonzero(degrees, system.group_sizes)
    report: Dict[str, Any] = {
        "bezout_number": number,
        "nonzero": nonzero,
        "degrees": [list(row) for row in degrees],
        "groups": list(system.group_sizes),
    }
    if len(degrees) == sum(s - 1 for s in system.group_sizes):
        report["certificate"] = bezout_certificate(degrees, system.group_sizes).to_dict()
    if args.output:
        _emit(report, args.output)
    print(number)
    if not nonzero:
        _status("❌ Bézout 数为零")
        return EXIT_FAILED
    return EXIT_OK


def cmd_gen(args: argparse.Namespace) -> int:
    if args.family == "cycle":
        inst = gen_cycle(args.dim, args.n, args.seed)
        if args.affine:
            if args.dim != 3:
                raise UsageError("--affine 只用于 qutrit 环 (--dim 3)")
            rng = np.random.default_rng(args.seed + 1)
            alphas = [tuple(rng.standard_normal(2) + 1j * rng.standard_normal(2)) for _ in range(args.n)]
            inst = with_affine_constraints(inst, alphas)
    elif args.family == "pinwheel":
        inst = gen_pinwheel(args.n, args.seed)
    elif args.family == "almost-extending":
        inst = random_almost_extending_instance(args.n, args.k, args.seed)
    else:
        if not args.dims or not args.edges:
            raise UsageError("gen random 需要 --dims 与 --edges")
        dims = [int(d) for d in args.dims.split(",")]
        inst = random_instance(dims, _parse_edges(args.edges), args.seed)
    _emit(inst.to_dict(), args.output)
    return EXIT_OK


def cmd_reduce(args: argparse.Namespace) -> int:
    data = _read_json(args.input)
    if args.kind == "to-mhs":
        _emit(to_mhs(QsatInstance.from_dict(data)).to_dict(), args.output)
        return EXIT_OK

    if args.kind == "to-qubits":
        reduced, chain = reduce_to_qubits(QsatInstance.from_dict(data))
        payload = reduced.to_dict()
    else:
        try:
            embedding = mhs_to_prodsat(MultiHomSystem.from_dict(data))
        except RefusedError as e:
            if e.certificate is not None:
                _emit({"refused": str(e), "certificate": e.certificate.to_dict()}, args.output)
            _status(f"❌ {e}")
            return EXIT_FAILED
        chain = embedding.chain
        payload = embedding.instance.to_dict()
        payload.setdefault("metadata", {})["sdr"] = embedding.sdr.to_dict()["assignment"]
        payload["metadata"]["copies"] = embedding.copies
    _emit(payload, args.output)
    if args.output:
        chain.save_to_file(args.output + FormatConstants.SPLITS_SUFFIX)
    elif len(chain):
        _status("⚠️ 未指定 -o，拆分链旁路文件未写出")
    return EXIT_OK


def cmd_embed(args: argparse.Namespace) -> int:
    if args.coeffs:
        poly = SparsePoly.from_dense(_parse_complex_list(args.coeffs))
    elif args.input:
        poly = SparsePoly.from_dict(_read_json(args.input))
    else:
        raise UsageError("embed 需要多项式文件或 --coeffs")
    result = embed(poly, mode=args.mode)
    payload = result.instance.to_dict()
    payload["metadata"].update({
        "root_qubit": result.root_qubit,
        "target_qubit": result.target_qubit,
        "sdr": result.sdr.to_dict()["assignment"],
    })
    _emit(payload, args.output)
    if not result.coefficient_bound_ok:
        _status("⚠️ 存在系数 |c_e| > d，根区间保证不成立")
    summary = result.summary()
    _status(f"✅ 嵌入完成: {summary['n_qubits']} 个 qubit, {summary['n_constraints']} 个约束")
    return EXIT_OK


def _write_csv(report, inst: QsatInstance, path: Optional[str]) -> None:
    if path:
        report.to_frame(inst).to_csv(path, index=False)
        _status(f"✅ 残差表已写入: {path}")


def cmd_solve(args: argparse.Namespace) -> int:
    inst = _load_instance(args.input)
    started = time.perf_counter()
    try:
        report = solve_instance(inst, args.eps, method=args.method,
                                degree_cap=args.degree_cap, seed=args.seed)
    except RefusedError as e:
        _status(f"❌ {e}")
        return EXIT_FAILED
    elapsed = time.perf_counter() - started

    # 独立复核
    if report.state is not None:
        check = verify(inst, report.state, args.eps)
        if check.failure is not None:
            report.failure = check.failure
            report.state = None
    _emit(report.to_dict(), args.output)
    _write_csv(report, inst, args.csv)
    _status(f"⏱️ {report.method}: {elapsed:.3f}s")
    if report.passed:
        _status(f"✅ 求解成功: 最大残差 {report.max_residual:.3e} ≤ {args.eps:.1e}")
        return EXIT_OK
    _status(f"❌ 求解失败: {report.failure}")
    return EXIT_FAILED


def cmd_verify(args: argparse.Namespace) -> int:
    inst = _load_instance(args.input)
    data = _read_json(args.state)
    if "locals" not in data and "state" in data:
        data = {"locals": data["state"]}
    state = ProductState.from_dict(data)
    report = verify(inst, state, args.eps)
    _emit(report.to_dict(), args.output)
    _write_csv(report, inst, args.csv)
    if report.passed:
        _status(f"✅ 校验通过: 最大残差 {report.max_residual:.3e}")
        return EXIT_OK
    _status(f"❌ 校验失败: {report.failure}")
    return EXIT_FAILED


# ============ 解析器 ============

def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"必须为正数: {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('-o', '--output', help='输出文件(默认写到标准输出)')
    common.add_argument('--seed', type=int, default=0, help='随机种子(默认:0)')
    common.add_argument('--threads', type=int, default=None, help='工作线程数(覆盖 PRODSAT_THREADS)')
    common.add_argument('--verbose', action='store_true', help='输出调试日志')

    parser = argparse.ArgumentParser(prog='prodsat', description='QSAT 乘积态工具箱')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('analyze', parents=[common], help='WSDR / 边序 / 传递滤链报告')
    p.add_argument('input', help='实例或超图 JSON')
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser('bezout', parents=[common], help='Bézout 数与非零证书')
    p.add_argument('input', help='方程组或实例 JSON')
    p.set_defaults(func=cmd_bezout)

    p = sub.add_parser('gen', parents=[common], help='生成实例')
    p.add_argument('family', choices=['cycle', 'pinwheel', 'random', 'almost-extending'])
    p.add_argument('--n', type=int, default=3, help='格点数 / 层数 / qubit 数')
    p.add_argument('--dim', type=int, default=2, help='环上每个格点的维度')
    p.add_argument('--affine', action='store_true', help='qutrit 环附加随机仿射约束')
    p.add_argument('--k', type=int, default=2, help='almost-extending 的约束局部性')
    p.add_argument('--dims', help='random: 维度列表，如 2,2,3')
    p.add_argument('--edges', help='random: 边列表，如 "0,1;1,2"')
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser('reduce', parents=[common], help='归约')
    p.add_argument('kind', choices=['to-qubits', 'mhs-to-prodsat', 'to-mhs'])
    p.add_argument('input')
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser('embed', parents=[common], help='多项式 -> qubit 实例')
    p.add_argument('input', nargs='?', help='稀疏多项式 JSON')
    p.add_argument('--coeffs', help='升幂稠密系数，如 "5,-4,0,1"')
    p.add_argument('--mode', choices=['dense', 'sparse'], default='dense')
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser('solve', parents=[common], help='求乘积解')
    p.add_argument('input')
    p.add_argument('--eps', type=_positive_float, default=ToleranceConstants.DEFAULT_EPS)
    p.add_argument('--method', choices=METHODS, default='auto')
    p.add_argument('--degree-cap', type=int, default=SolverConstants.DEGREE_CAP)
    p.add_argument('--csv', help='残差表 CSV 输出路径')
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser('verify', parents=[common], help='校验乘积态')
    p.add_argument('input')
    p.add_argument('state', help='乘积态 JSON（或 solve 的报告）')
    p.add_argument('--eps', type=_positive_float, default=ToleranceConstants.DEFAULT_EPS)
    p.add_argument('--csv', help='残差表 CSV 输出路径')
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point for the prodsat command line."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    if args.verbose:
        logging.basicConfig(level=logging.DEBUG, format='%(name)s %(levelname)s: %(message)s')
    if args.threads is not None:
        set_thread_limit(args.threads)

    try:
        return args.func(args)
    except UsageError as e:
        _status(f"❌ {e}")
        return EXIT_USAGE
    except InvalidInstanceError as e:
        _status(f"❌ 输入不合法: {e}")
        return EXIT_USAGE
    except ProdsatError as e:
        _status(f"❌ {type(e).__name__}: {e}")
        return EXIT_FAILED
    finally:
        shutdown()


if __name__ == "__main__":
    sys.exit(main())
