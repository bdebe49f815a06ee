"""
ncrank 명령줄 인터페이스

하위 명령: rank, bound, theta, density, iterations, mc
기계 출력은 표준 출력, 진단은 표준 에러로만 보냅니다.
"""

import argparse
import logging
import math
import sys
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

from .atom_rank import (
    RankOptions,
    RegularityInfo,
    certify_rank,
    default_y_grid,
    moment_atom_bound,
    moment_rank_lower_bound,
    moment_triple,
    theta_scan,
)
from .cauchy_solver import (
    SolverConfig,
    TerminationMode,
    TraceRecord,
    explicit_radius,
    optimal_radius,
    scalar_problem,
    scalar_termination_count,
    solve_fixed_point,
)
from .config import get_app_config, get_thread_count, initialize_app
from .density import stieltjes_density
from .exceptions import NCRankError, PreconditionError, SolverError
from .mc_oracle import McConfig, sample_spectrum, spectrum_metadata
from .pencil import GeneralPencil, LinearPencil, Pencil, covariance_map, hermitize
from .presets import resolve_pencil_source
from .storage import (
    save_text,
    write_certificate,
    write_density_csv,
    write_json,
    write_spectrum_csv,
    write_theta_csv,
    write_trace_csv,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_BOUNDS_ONLY = 2
EXIT_SOLVER = 3

class CliUsageError(NCRankError):
    """명령줄 인자 오류"""
    pass


@dataclass
class CliInvocation:
    subcommand: str
    input_path: Optional[str] = None
    flags: Dict[str, Any] = field(default_factory=dict)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliUsageError(f"{self.prog}: {message}")


def _positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"실수가 아닙니다: {text!r}") from None
    if not value > 0.0 or not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"양의 유한 실수여야 합니다: {text!r}")
    return value


def _finite_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"실수가 아닙니다: {text!r}") from None
    if not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"유한한 실수여야 합니다: {text!r}")
    return value


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"정수가 아닙니다: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"양의 정수여야 합니다: {text!r}")
    return value


def _seed(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"정수가 아닙니다: {text!r}") from None
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError(f"64비트 부호 없는 정수여야 합니다: {text!r}")
    return value


def parse_regularity(text: str) -> RegularityInfo:
    """'c,beta,r0'"""
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"--reg 는 c,beta,r0 형식이어야 합니다: {text!r}")
    try:
        return RegularityInfo(*(float(p) for p in parts))
    except (ValueError, PreconditionError) as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def parse_block(text: str) -> Tuple[List[int], List[int]]:
    """'1,2,3,4:1,2,3,4' (1 기반) → 0 기반 (rows, cols)"""
    if text.count(":") != 1:
        raise argparse.ArgumentTypeError(f"--block 은 rows:cols 형식이어야 합니다: {text!r}")

    def side(part: str) -> List[int]:
        if not part.strip():
            return []
        try:
            values = [int(v) - 1 for v in part.split(",")]
        except ValueError:
            raise argparse.ArgumentTypeError(f"잘못된 인덱스 목록: {part!r}") from None
        if any(v < 0 for v in values):
            raise argparse.ArgumentTypeError(f"인덱스는 1 이상이어야 합니다: {part!r}")
        return values

    rows, cols = text.split(":")
    return side(rows), side(cols)


def _radius_choice(text: str):
    if text in ("optimal", "explicit"):
        return text
    return _positive_float(text)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--threads", type=_positive_int, default=None, help="작업 스레드 상한 (기본: NCRANK_THREADS 또는 1)")
    common.add_argument("--log-level", default=None, choices=["DEBUG", "INFO", "WARNING", "ERROR"])

    parser = _Parser(prog="ncrank", description=get_app_config("description"))
    parser.add_argument("--version", action="version", version=f"ncrank {get_app_config('version')}")
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    rank = sub.add_parser("rank", parents=[common], help="랭크 인증서 JSON")
    rank.add_argument("input_path")
    rank.add_argument("--y", type=_positive_float)
    rank.add_argument("--eps", type=_positive_float)
    rank.add_argument("--reg", type=parse_regularity)
    rank.add_argument("--block", type=parse_block)
    rank.add_argument("--auto-block", action="store_true")

    bound = sub.add_parser("bound", parents=[common], help="모멘트 기반 하한")
    bound.add_argument("input_path")

    theta = sub.add_parser("theta", parents=[common], help="θ 스캔 CSV")
    theta.add_argument("input_path")
    theta.add_argument("--ymin", type=_positive_float, required=True)
    theta.add_argument("--ymax", type=_positive_float, required=True)
    theta.add_argument("--points", type=_positive_int, required=True)
    theta.add_argument("--eps", type=_positive_float)
    theta.add_argument("--trace", metavar="PATH")

    density = sub.add_parser("density", parents=[common], help="밀도 CSV")
    density.add_argument("input_path")
    density.add_argument("--tmin", type=_finite_float, required=True)
    density.add_argument("--tmax", type=_finite_float, required=True)
    density.add_argument("--points", type=_positive_int, required=True)
    density.add_argument("--imag", type=_positive_float)

    iterations = sub.add_parser("iterations", parents=[common], help="스칼라 반복 횟수")
    iterations.add_argument("--beta", type=_positive_float, required=True)
    iterations.add_argument("--delta", type=_positive_float, required=True)
    iterations.add_argument("--omega", type=_positive_float, default=1.0)
    iterations.add_argument("--radius", type=_radius_choice, default="explicit")
    iterations.add_argument("--mode", choices=[m.value for m in TerminationMode], required=True)
    iterations.add_argument("--check", action="store_true", help="실제 반복 루프로 교차 확인")

    mc = sub.add_parser("mc", parents=[common], help="GUE 표본 스펙트럼 CSV")
    mc.add_argument("input_path")
    mc.add_argument("--dim", type=_positive_int, required=True)
    mc.add_argument("--samples", type=_positive_int, required=True)
    mc.add_argument("--seed", type=_seed, required=True)
    mc.add_argument("--metadata", metavar="PATH")

    return parser


def parse_invocation(argv: Optional[Sequence[str]] = None) -> CliInvocation:
    namespace = vars(build_parser().parse_args(argv))
    subcommand = namespace.pop("subcommand")
    input_path = namespace.pop("input_path", None)
    return CliInvocation(subcommand, input_path, namespace)


def _load(invocation: CliInvocation) -> Pencil:
    return resolve_pencil_source(invocation.input_path)


def _as_linear(p: Pencil) -> LinearPencil:
    if isinstance(p, GeneralPencil):
        logger.warning("⚠️ 에르미트가 아닌 펜슬이므로 2N 에르미트화 펜슬을 사용합니다")
        return hermitize(p)
    return p


def _run_rank(invocation: CliInvocation, out) -> int:
    flags = invocation.flags
    options = RankOptions(
        y=flags["y"],
        eps=flags["eps"],
        regularity=flags["reg"],
        block=flags["block"],
        auto_block=flags["auto_block"],
        threads=flags["threads"],
    )
    certificate = certify_rank(_load(invocation), options)
    write_certificate(out, certificate)
    return EXIT_OK if certificate.exact is not None else EXIT_BOUNDS_ONLY


def _run_bound(invocation: CliInvocation, out) -> int:
    pencil = _load(invocation)
    linear = _as_linear(pencil)
    moments = moment_triple(covariance_map(linear))
    atom = moment_atom_bound(moments)
    lower = moment_rank_lower_bound(linear)
    if isinstance(pencil, GeneralPencil):
        lower = -(-lower // 2)
    write_json(out, {
        "N": pencil.dim,
        "hermitized": isinstance(pencil, GeneralPencil),
        "moments": {"a2": moments.a2, "a4": moments.a4, "a6": moments.a6},
        "atom_bound": atom,
        "lower": lower,
    })
    return EXIT_OK


def _run_theta(invocation: CliInvocation, out) -> int:
    flags = invocation.flags
    pencil = _as_linear(_load(invocation))
    grid = default_y_grid(flags["ymin"], flags["ymax"], flags["points"])
    eps = flags["eps"] if flags["eps"] is not None else 1.0 / (4.0 * pencil.dim)

    records: List[Tuple[float, TraceRecord]] = []
    trace = (lambda y, record: records.append((y, record))) if flags["trace"] else None
    samples = theta_scan(pencil, grid, eps, threads=flags["threads"], trace=trace)
    write_theta_csv(out, samples)
    if flags["trace"] and not save_text(flags["trace"], write_trace_csv, records):
        return EXIT_VALIDATION
    return EXIT_SOLVER if any(not s.ok for s in samples) else EXIT_OK


def _run_density(invocation: CliInvocation, out) -> int:
    flags = invocation.flags
    pencil = _as_linear(_load(invocation))
    grid = stieltjes_density(
        pencil, flags["tmin"], flags["tmax"], flags["points"],
        eps_im=flags["imag"], threads=flags["threads"],
    )
    write_density_csv(out, grid)
    return EXIT_SOLVER if grid.missing else EXIT_OK


def _run_iterations(invocation: CliInvocation, out) -> int:
    flags = invocation.flags
    beta, delta, omega = flags["beta"], flags["delta"], flags["omega"]
    radius = flags["radius"]
    if radius == "explicit":
        radius = explicit_radius(beta)
    elif radius == "optimal":
        radius = optimal_radius(beta)
    mode = TerminationMode.parse(flags["mode"])

    count = scalar_termination_count(beta, delta, omega=omega, radius=radius, mode=mode)
    out.write(f"{count}\n")

    if flags["check"]:
        ep, c = scalar_problem(beta)
        cfg = SolverConfig.build(ep, c, radius=radius, target_delta=delta,
                                 termination_mode=mode, omega=omega)
        outcome = solve_fixed_point(ep, c, cfg)
        if not outcome.converged or outcome.iterations != count:
            logger.warning(
                f"⚠️ 반복 루프 결과 {outcome.iterations} (수렴={outcome.converged}) 가 닫힌 형태 {count} 와 다릅니다"
            )
            print(f"check: loop={outcome.iterations} closed_form={count}", file=sys.stderr)
    return EXIT_OK


def _run_mc(invocation: CliInvocation, out) -> int:
    flags = invocation.flags
    pencil = _as_linear(_load(invocation))
    cfg = McConfig(flags["dim"], flags["samples"], flags["seed"])
    spectrum = sample_spectrum(pencil, cfg, threads=flags["threads"])
    write_spectrum_csv(out, spectrum)
    metadata = spectrum_metadata(cfg)
    if flags["metadata"]:
        if not save_text(flags["metadata"], write_json, metadata):
            return EXIT_VALIDATION
    else:
        logger.info(f"메타데이터: {metadata}")
    return EXIT_OK


HANDLERS = {
    "rank": _run_rank,
    "bound": _run_bound,
    "theta": _run_theta,
    "density": _run_density,
    "iterations": _run_iterations,
    "mc": _run_mc,
}


def run(invocation: CliInvocation, out=None) -> int:
    """하위 명령 실행 후 종료 코드 반환"""
    out = sys.stdout if out is None else out
    level = invocation.flags.get("log_level")
    if level:
        logging.getLogger().setLevel(level)
    threads = invocation.flags.get("threads")
    if threads is not None:
        logger.debug(f"스레드 상한 {get_thread_count(threads)}")

    try:
        return HANDLERS[invocation.subcommand](invocation, out)
    except SolverError as e:
        logger.error(f"❌ 솔버 실패: {e}")
        print(f"ncrank: solver error: {e}", file=sys.stderr)
        return EXIT_SOLVER
    except NCRankError as e:
        print(f"ncrank: {e}", file=sys.stderr)
        return EXIT_VALIDATION


def main(argv: Optional[Sequence[str]] = None) -> int:
    initialize_app()
    try:
        invocation = parse_invocation(argv)
    except CliUsageError as e:
        print(str(e), file=sys.stderr)
        return EXIT_VALIDATION
    return run(invocation)
