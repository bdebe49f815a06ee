"""
θ 함수 근사, 원자 질량 상한, 랭크 인증서

θ(y) = −y·Im tr_N G(iy) 는 y↓0 에서 μ({0}) 로 감소하며
rank(A) = N(1 − μ({0})) 관계로 내부 랭크를 판정합니다.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .cauchy_solver import (
    EvaluationPoint,
    SolveOutcome,
    SolverConfig,
    TerminationMode,
    TraceRecord,
    solve_or_raise,
)
from .config import get_numeric_config, get_rank_config, get_scan_config, get_thread_count
from .exceptions import (
    InconsistentBoundsError,
    InconsistentMomentsError,
    InfeasibleParametersError,
    PreconditionError,
    SolverError,
    UnsupportedInputError,
    ZeroBlockContradictionError,
)
from .pencil import CovarianceMap, LinearPencil, Pencil, covariance_map, hermitize

logger = logging.getLogger(__name__)

ThetaTraceSink = Callable[[float, TraceRecord], None]


class MethodTag(str, Enum):
    MOMENT_BOUND = "MomentBound"
    THETA_SCAN = "ThetaScan"
    EXACT_REGULAR = "ExactRegular"
    ZERO_BLOCK = "ZeroBlock"


@dataclass(frozen=True)
class ThetaSample:
    """θ(y) 의 인증된 근사 (|θ(y) − θ̃| < eps)"""

    y: float
    theta_tilde: float
    eps: float
    solver_iterations: int
    failure: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.failure is None


@dataclass(frozen=True)
class RegularityInfo:
    """ν([−r, r]) ≤ c·r^β  (0 < r < r0)"""

    c: float
    beta: float
    r0: float

    def __post_init__(self):
        if not self.c >= 0.0:
            raise PreconditionError(f"c 는 0 이상이어야 합니다: {self.c}")
        if not 0.0 < self.beta <= 1.0:
            raise PreconditionError(f"β 는 (0, 1] 범위여야 합니다: {self.beta}")
        if not self.r0 > 0.0:
            raise PreconditionError(f"r0 는 양수여야 합니다: {self.r0}")


@dataclass(frozen=True)
class MomentTriple:
    """절대 모멘트 𝔞₂, 𝔞₄, 𝔞₆"""

    a2: float
    a4: float
    a6: float

    def __post_init__(self):
        if min(self.a2, self.a4, self.a6) < 0.0:
            raise InconsistentMomentsError(f"모멘트는 음수일 수 없습니다: {self}")
        slack = get_numeric_config("moment_slack")
        if self.a4 ** 2 > self.a2 * self.a6 * (1.0 + slack) + slack:
            raise InconsistentMomentsError(
                f"코시-슈바르츠 위반: 𝔞₄²={self.a4 ** 2:.12g} > 𝔞₂𝔞₆={self.a2 * self.a6:.12g}"
            )


@dataclass(frozen=True)
class RankCertificate:
    dim: int
    lower_bound: int
    upper_bound: Optional[int] = None
    exact: Optional[int] = None
    method_tags: Tuple[MethodTag, ...] = ()
    warning_flags: Tuple[str, ...] = ()
    samples: Tuple[ThetaSample, ...] = ()
    lower_source: Optional[MethodTag] = None
    upper_source: Optional[MethodTag] = None

    def __post_init__(self):
        if self.upper_bound is not None and self.lower_bound > self.upper_bound:
            raise InconsistentBoundsError(
                f"하한 {self.lower_bound} 이 상한 {self.upper_bound} 보다 큽니다"
            )

    def to_dict(self) -> Dict:
        return {
            "N": self.dim,
            "lower": self.lower_bound,
            "upper": self.upper_bound,
            "exact": self.exact,
            "methods": [tag.value for tag in self.method_tags],
            "samples": [
                {"y": s.y, "theta": s.theta_tilde, "eps": s.eps}
                for s in self.samples
                if s.ok
            ],
            "lower_source": self.lower_source.value if self.lower_source else None,
            "upper_source": self.upper_source.value if self.upper_source else None,
            "warnings": list(self.warning_flags),
        }


@dataclass(frozen=True)
class RankOptions:
    y: Optional[float] = None
    eps: Optional[float] = None
    regularity: Optional[RegularityInfo] = None
    block: Optional[Tuple[Sequence[int], Sequence[int]]] = None  # 0 기반 (rows, cols)
    auto_block: bool = False
    y_grid: Optional[Sequence[float]] = None
    warm_start: Optional[bool] = None
    threads: Optional[int] = None


def _require_linear(p: Pencil) -> LinearPencil:
    if not isinstance(p, LinearPencil):
        raise PreconditionError("에르미트 펜슬이 필요합니다 (일반 펜슬은 hermitize 후 사용)")
    return p


# ---------------------------------------------------------------------------
# θ 근사
# ---------------------------------------------------------------------------

def _solve_theta(p: LinearPencil, c: CovarianceMap, y: float, eps: float,
                 w_start=None, trace: Optional[ThetaTraceSink] = None) -> Tuple[ThetaSample, SolveOutcome]:
    if not y > 0.0 or not eps > 0.0:
        raise PreconditionError(f"y, eps 는 양수여야 합니다: y={y}, eps={eps}")
    ep = EvaluationPoint.at_imaginary(y, p.dim, p.mean)
    # ‖Δ_b‖ < yε/(1+ε) 와 동치
    cfg = SolverConfig.build(ep, c, target_delta=eps / y, termination_mode=TerminationMode.RESIDUAL)
    sink = None if trace is None else (lambda record: trace(y, record))
    outcome = solve_or_raise(ep, c, cfg, w_start=w_start, trace=sink)
    theta = -y * float(np.trace(outcome.w).imag) / p.dim
    return ThetaSample(y, theta, eps, outcome.iterations), outcome


def theta_at(p: LinearPencil, y: float, eps: float, trace: Optional[ThetaTraceSink] = None) -> ThetaSample:
    """θ̃ = −y·Im tr_N(w̃), b = iy·1 − mean"""
    p = _require_linear(p)
    sample, _ = _solve_theta(p, covariance_map(p), y, eps, trace=trace)
    return sample


def _validate_grid(y_values: Sequence[float]) -> List[float]:
    values = [float(y) for y in y_values]
    if not values:
        raise PreconditionError("y 목록이 비어 있습니다")
    if any(not y > 0.0 for y in values):
        raise PreconditionError("y 값은 모두 양수여야 합니다")
    if any(b >= a for a, b in zip(values, values[1:])):
        raise PreconditionError("y 값은 순감소해야 합니다")
    return values


def _failed_sample(y: float, eps: float, error: SolverError) -> ThetaSample:
    iterations = getattr(getattr(error, "outcome", None), "iterations", 0)
    logger.error(f"❌ y={y:.3e} 에서 θ 계산 실패: {error}")
    return ThetaSample(y, math.nan, eps, iterations, failure=str(error))


def theta_scan(
    p: LinearPencil,
    y_values: Sequence[float],
    eps: float,
    warm_start: Optional[bool] = None,
    threads: Optional[int] = None,
    trace: Optional[ThetaTraceSink] = None,
    stop_when: Optional[Callable[[ThetaSample], bool]] = None,
) -> List[ThetaSample]:
    """감소하는 y 격자에서 θ̃ 를 차례로 계산"""
    p = _require_linear(p)
    values = _validate_grid(y_values)
    if warm_start is None:
        warm_start = get_scan_config("warm_start")
    c = covariance_map(p)

    workers = get_thread_count(threads)
    if not warm_start and workers > 1 and stop_when is None and trace is None:
        def run(y: float) -> ThetaSample:
            try:
                return _solve_theta(p, c, y, eps)[0]
            except SolverError as e:
                return _failed_sample(y, eps, e)

        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run, values))

    samples = []
    previous = None
    for y in values:
        try:
            sample, outcome = _solve_theta(p, c, y, eps, w_start=previous, trace=trace)
            previous = outcome.w if warm_start else None
        except SolverError as e:
            sample = _failed_sample(y, eps, e)
            previous = None
        logger.info(f"θ̃({y:.3e}) = {sample.theta_tilde:.6f} ({sample.solver_iterations}회)")
        samples.append(sample)
        if stop_when is not None and sample.ok and stop_when(sample):
            break
    return samples


def default_y_grid(y_min: float, y_max: float, points: int) -> List[float]:
    """로그 간격의 감소 격자"""
    if not 0.0 < y_min < y_max or points < 2:
        raise PreconditionError(f"잘못된 격자: ymin={y_min}, ymax={y_max}, points={points}")
    return [float(y) for y in np.logspace(math.log10(y_max), math.log10(y_min), points)]


# ---------------------------------------------------------------------------
# 모멘트 기반 상한
# ---------------------------------------------------------------------------

def moment_triple(c: CovarianceMap) -> MomentTriple:
    """𝔞₂ = tr η(1), 𝔞₄ = 2tr η(1)², 𝔞₆ = 2tr η(1)³ + 3tr η(η(η(1)))"""
    if not c.source.is_centered:
        raise UnsupportedInputError("평균이 0이 아닌 펜슬의 모멘트는 지원하지 않습니다")
    dim = c.dim
    one = c.identity_image()
    square = one @ one

    def tr(matrix: np.ndarray) -> float:
        return float(np.trace(matrix).real) / dim

    return MomentTriple(tr(one), 2.0 * tr(square), 2.0 * tr(square @ one) + 3.0 * tr(c(c(one))))


def moment_atom_bound(m: MomentTriple) -> float:
    """k=2 모멘트로 얻는 μ({0}) 상한"""
    if m.a2 == 0.0:
        return 1.0
    ratio = m.a6 * m.a2 / m.a4 ** 2 - 1.0
    share = m.a2 ** 2 / m.a4
    if ratio <= get_numeric_config("moment_slack"):
        return 1.0 - share
    # ρ(π/2 − arctan ρ) = arctan(s)/s, s = 1/ρ
    s = math.sqrt(ratio)
    return 1.0 - share * math.atan(s) / s


def theta_derivative_lower_bound(m: MomentTriple, y: float) -> float:
    """θ'(y) ≥ 2𝔞₂²y / (𝔞₂y⁴ + 2𝔞₄y² + 𝔞₆)"""
    if not y > 0.0:
        raise PreconditionError(f"y 는 양수여야 합니다: {y}")
    denominator = m.a2 * y ** 4 + 2.0 * m.a4 * y ** 2 + m.a6
    if denominator == 0.0:
        return 0.0
    return 2.0 * m.a2 ** 2 * y / denominator


def _floor(value: float) -> int:
    return math.floor(value + get_numeric_config("rounding_slack"))


def _ceil(value: float) -> int:
    return math.ceil(value - get_numeric_config("rounding_slack"))


def moment_rank_lower_bound(p: LinearPencil) -> int:
    """rank(A) ≥ ⌈N(1 − 모멘트 상한)⌉"""
    p = _require_linear(p)
    bound = moment_atom_bound(moment_triple(covariance_map(p)))
    return min(p.dim, max(0, _ceil(p.dim * (1.0 - bound))))


# ---------------------------------------------------------------------------
# 랭크 판정 절차
# ---------------------------------------------------------------------------

def regular_theta_excess(reg: RegularityInfo, y: float) -> float:
    """θ(y) − μ({0}) ≤ (c+1)·y^{2β/(2+β)}"""
    return (reg.c + 1.0) * y ** (2.0 * reg.beta / (2.0 + reg.beta))


def _log_regular_threshold(dim: int, reg: RegularityInfo) -> float:
    first = (2.0 + reg.beta) / 2.0 * math.log(reg.r0)
    second = (2.0 + reg.beta) / (2.0 * reg.beta) * -math.log(4.0 * dim * (reg.c + 1.0))
    return min(first, second)


def regular_y_threshold(dim: int, reg: RegularityInfo) -> float:
    """min{r0^{(2+β)/2}, (1/(4N(c+1)))^{(2+β)/(2β)}}"""
    return math.exp(_log_regular_threshold(dim, reg))


def rank_exact_regular(p: LinearPencil, reg: RegularityInfo) -> RankCertificate:
    """정칙형 정보가 있을 때 μ({0}) 를 정확히 판정"""
    p = _require_linear(p)
    dim = p.dim
    options = get_rank_config()
    log_y = _log_regular_threshold(dim, reg) + math.log(options["exact_y_safety"])
    if log_y < math.log(np.finfo(float).tiny):
        raise InfeasibleParametersError(
            f"필요한 y ≈ 10^{log_y / math.log(10.0):.1f} 이 배정밀도 범위 밖입니다"
        )
    y = math.exp(log_y)
    eps = 1.0 / (4.0 * dim)
    c = covariance_map(p)

    warnings = [] if p.is_centered else ["nonzero_mean"]
    samples = []
    for attempt in range(options["tie_retries"] + 1):
        sample, _ = _solve_theta(p, c, y, eps)
        samples.append(sample)
        scaled = dim * sample.theta_tilde
        if abs(scaled - math.floor(scaled) - 0.5) > options["tie_tolerance"]:
            exact = dim - int(round(scaled))
            exact = min(dim, max(0, exact))
            logger.info(f"✅ 정칙형 판정: rank={exact} (y={y:.3e}, Nθ̃={scaled:.6f})")
            return RankCertificate(
                dim, exact, exact, exact,
                method_tags=(MethodTag.EXACT_REGULAR,),
                warning_flags=tuple(warnings),
                samples=tuple(samples),
                lower_source=MethodTag.EXACT_REGULAR,
                upper_source=MethodTag.EXACT_REGULAR,
            )
        logger.warning(f"⚠️ Nθ̃={scaled:.12f} 가 반정수에 가까움, y 를 줄여 재시도 ({attempt + 1})")
        y *= options["tie_shrink"]

    warnings.append("indeterminate_tie")
    return RankCertificate(
        dim, 0,
        method_tags=(MethodTag.EXACT_REGULAR,),
        warning_flags=tuple(warnings),
        samples=tuple(samples),
    )


def scan_lower_bound(dim: int, sample: ThetaSample) -> int:
    """N − ⌊N(θ̃ + ε)⌋"""
    return min(dim, max(0, dim - _floor(dim * (sample.theta_tilde + sample.eps))))


def rank_lower_bound_scan(p: LinearPencil, y: float, eps: float) -> RankCertificate:
    """rank(A) ≥ N − ⌊N(θ̃ + ε)⌋"""
    p = _require_linear(p)
    sample = theta_at(p, y, eps)
    lower = scan_lower_bound(p.dim, sample)
    full = lower == p.dim
    return RankCertificate(
        p.dim, lower,
        upper_bound=p.dim if full else None,
        exact=p.dim if full else None,
        method_tags=(MethodTag.THETA_SCAN,),
        warning_flags=() if p.is_centered else ("nonzero_mean",),
        samples=(sample,),
        lower_source=MethodTag.THETA_SCAN,
        upper_source=MethodTag.THETA_SCAN if full else None,
    )


def _support(p: Pencil) -> np.ndarray:
    return np.any(p.coeffs != 0, axis=0)


def _check_indices(indices: Sequence[int], dim: int, name: str) -> List[int]:
    values = sorted(set(int(i) for i in indices))
    if len(values) != len(list(indices)):
        raise PreconditionError(f"{name} 에 중복 인덱스가 있습니다")
    if values and (values[0] < 0 or values[-1] >= dim):
        raise PreconditionError(f"{name} 인덱스가 범위 [0, {dim}) 밖입니다: {values}")
    return values


def zero_block_upper_bound(p: Pencil, rows: Sequence[int], cols: Sequence[int]) -> int:
    """영 블록 rows×cols 로부터 rank ≤ 2N − |rows| − |cols|"""
    dim = p.dim
    rows = _check_indices(rows, dim, "rows")
    cols = _check_indices(cols, dim, "cols")
    if rows and cols:
        block = p.coeffs[:, rows][:, :, cols]
        hits = np.argwhere(block != 0)
        if len(hits):
            k, i, j = hits[0]
            raise ZeroBlockContradictionError(
                f"변수 {k + 1} 의 항목 ({rows[i] + 1}, {cols[j] + 1}) 이 0이 아닙니다"
            )
    return min(dim, 2 * dim - len(rows) - len(cols))


def find_zero_block(p: Pencil, max_dim: Optional[int] = None) -> Optional[Tuple[List[int], List[int]]]:
    """|rows| + |cols| 가 최대인 영 블록 (N ≤ max_dim 에서 전수 탐색)"""
    if max_dim is None:
        max_dim = get_rank_config("zero_block_search_max_dim")
    dim = p.dim
    if dim > max_dim:
        raise PreconditionError(f"N={dim} > {max_dim}: 영 블록 전수 탐색 불가, 인덱스를 직접 지정하세요")

    support = _support(p)
    full = (1 << dim) - 1
    zero_cols = [
        sum(1 << j for j in range(dim) if not support[i, j])
        for i in range(dim)
    ]

    best_score, best = dim, None
    allowed = [full] * (1 << dim)
    for mask in range(1, 1 << dim):
        low = mask & -mask
        row = low.bit_length() - 1
        cols = allowed[mask ^ low] & zero_cols[row]
        allowed[mask] = cols
        if not cols:
            continue
        score = bin(mask).count("1") + bin(cols).count("1")
        if score > best_score:
            best_score, best = score, (mask, cols)

    if best is None:
        return None
    mask, cols = best
    return (
        [i for i in range(dim) if mask >> i & 1],
        [j for j in range(dim) if cols >> j & 1],
    )


def _resolve_block(p: Pencil, options: RankOptions, warnings: List[str]):
    """지정된 영 블록, 또는 auto_block 이면 탐색 결과 (N 이 한도를 넘으면 경고 후 None)"""
    if options.block is not None or not options.auto_block:
        return options.block
    if p.dim <= get_rank_config("zero_block_search_max_dim"):
        return find_zero_block(p)
    logger.warning(f"⚠️ N={p.dim} 은 영 블록 전수 탐색 한도를 넘어 생략합니다")
    warnings.append("zero_block_search_skipped")
    return None


def _linear_certificate(p: LinearPencil, options: RankOptions) -> RankCertificate:
    dim = p.dim
    tags, warnings = [], []
    if not p.is_centered:
        warnings.append("nonzero_mean")

    upper, upper_source = None, None
    block = _resolve_block(p, options, warnings)
    if block is not None:
        upper = zero_block_upper_bound(p, *block)
        upper_source = MethodTag.ZERO_BLOCK
        tags.append(MethodTag.ZERO_BLOCK)

    lower, lower_source = 0, None
    if p.is_centered:
        lower = moment_rank_lower_bound(p)
        lower_source = MethodTag.MOMENT_BOUND
        tags.append(MethodTag.MOMENT_BOUND)

    target = dim if upper is None else upper
    samples: List[ThetaSample] = []
    if lower < target:
        eps = options.eps if options.eps is not None else 1.0 / (4.0 * dim)
        if options.y is not None:
            grid = [options.y]
        else:
            grid = list(options.y_grid or get_scan_config("y_grid"))
        samples = theta_scan(
            p, grid, eps,
            warm_start=options.warm_start,
            threads=options.threads,
            stop_when=lambda s: scan_lower_bound(dim, s) >= target,
        )
        tags.append(MethodTag.THETA_SCAN)
        for sample in samples:
            if sample.ok and scan_lower_bound(dim, sample) > lower:
                lower, lower_source = scan_lower_bound(dim, sample), MethodTag.THETA_SCAN
        if any(not s.ok for s in samples):
            warnings.append("theta_sample_failed")

    exact = None
    if options.regularity is not None:
        regular = rank_exact_regular(p, options.regularity)
        tags.append(MethodTag.EXACT_REGULAR)
        samples.extend(regular.samples)
        warnings.extend(w for w in regular.warning_flags if w not in warnings)
        if regular.exact is not None:
            exact = regular.exact
            if exact > lower:
                lower, lower_source = exact, MethodTag.EXACT_REGULAR
            if upper is None or exact < upper:
                upper, upper_source = exact, MethodTag.EXACT_REGULAR

    if lower == dim and upper is None:
        upper, upper_source = dim, lower_source
    if exact is None and upper is not None and lower == upper:
        exact = lower

    return RankCertificate(
        dim, lower, upper, exact,
        method_tags=tuple(tags),
        warning_flags=tuple(warnings),
        samples=tuple(samples),
        lower_source=lower_source,
        upper_source=upper_source,
    )


def certify_rank(p: Pencil, options: Optional[RankOptions] = None) -> RankCertificate:
    """모멘트 하한, θ 스캔, 영 블록 상한, 정칙형 판정을 합친 인증서"""
    options = options or RankOptions()
    if isinstance(p, LinearPencil):
        certificate = _linear_certificate(p, options)
        logger.info(
            f"✅ 랭크 인증: N={p.dim}, 하한={certificate.lower_bound}, "
            f"상한={certificate.upper_bound}, 정확={certificate.exact}"
        )
        return certificate

    # 일반 펜슬: 2N 에르미트화 후 절반
    dim = p.dim
    inner = _linear_certificate(hermitize(p), replace(options, block=None, auto_block=False))
    lower = min(dim, -(-inner.lower_bound // 2))
    upper = None if inner.upper_bound is None else inner.upper_bound // 2
    upper_source = inner.upper_source
    tags = list(inner.method_tags)
    warnings = list(inner.warning_flags)

    block = _resolve_block(p, options, warnings)
    if block is not None:
        block_bound = zero_block_upper_bound(p, *block)
        tags.append(MethodTag.ZERO_BLOCK)
        if upper is None or block_bound < upper:
            upper, upper_source = block_bound, MethodTag.ZERO_BLOCK

    exact = lower if upper is not None and lower == upper else None
    return RankCertificate(
        dim, lower, upper, exact,
        method_tags=tuple(tags),
        warning_flags=tuple(warnings) + ("hermitized",),
        samples=inner.samples,
        lower_source=inner.lower_source,
        upper_source=upper_source,
    )


# ---------------------------------------------------------------------------
# θ 법칙 점검
# ---------------------------------------------------------------------------

def theta_law_violations(
    samples: Sequence[ThetaSample],
    known_atom: Optional[float] = None,
    large_y: float = 1e3,
    second_moment: Optional[float] = None,
) -> List[str]:
    """단조성, 1/(2y) 도함수 상한, 큰 y 극한, 원자 상한 성질 위반 목록"""
    problems = []
    good = [s for s in samples if s.ok]
    for s in good:
        if not (s.theta_tilde + s.eps > 0.0 and s.theta_tilde - s.eps < 1.0):
            problems.append(f"y={s.y:.3e}: θ̃={s.theta_tilde} 가 (0, 1] 과 양립하지 않음")
        if s.y >= large_y:
            tolerance = 2.0 * s.eps + (second_moment / s.y ** 2 if second_moment else 0.0)
            if abs(s.theta_tilde - 1.0) > tolerance:
                problems.append(f"y={s.y:.3e}: 큰 y 에서 θ̃={s.theta_tilde} 가 1 에서 벗어남")
        if known_atom is not None and s.theta_tilde + s.eps < known_atom - 1e-12:
            problems.append(f"y={s.y:.3e}: θ̃+ε={s.theta_tilde + s.eps} < 원자 {known_atom}")

    for a, b in zip(good, good[1:]):
        if b.y >= a.y:
            continue
        slack = a.eps + b.eps
        if b.theta_tilde > a.theta_tilde + slack:
            problems.append(f"y={b.y:.3e}: 단조성 위반 ({b.theta_tilde} > {a.theta_tilde} + {slack})")
        gap = a.y - b.y
        if (a.theta_tilde - b.theta_tilde) / gap > 1.0 / (2.0 * b.y) + slack / gap:
            problems.append(f"y={b.y:.3e}: 도함수 상한 위반")
    return problems
