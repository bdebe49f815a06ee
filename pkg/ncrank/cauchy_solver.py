"""
행렬값 반원 고정점 방정식 솔버

w = h_b(w) := (b − η(w))⁻¹ 를 하반평면에서 단순 반복으로 풀고,
사전(a priori) 반복 횟수와 사후(a posteriori) 잔차 기반 종료 조건으로
‖w̃ − w*‖ 오차를 보증합니다.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterator, Optional, Tuple

import numpy as np
from scipy.linalg.lapack import get_lapack_funcs

from .config import get_solver_config
from .exceptions import (
    IterationOverflowError,
    NumericalInstabilityError,
    PreconditionError,
    SolverNonConvergenceError,
)
from .pencil import CovarianceMap, LinearPencil, as_complex_matrix, covariance_map, operator_norm

logger = logging.getLogger(__name__)

INT64_MAX = 2 ** 63 - 1
EXPLICIT_RADIUS_FACTOR = 1.0 / math.sqrt(2.0) - 0.5
STEP_RESOLUTION = 16.0 * float(np.finfo(float).eps)


class TerminationMode(str, Enum):
    APRIORI = "apriori"
    RESIDUAL = "residual"
    STEP = "step"

    @classmethod
    def parse(cls, value) -> "TerminationMode":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            names = ", ".join(m.value for m in cls)
            raise PreconditionError(f"알 수 없는 종료 조건 '{value}' (가능: {names})") from None


@dataclass(frozen=True, eq=False)
class EvaluationPoint:
    """Im(b) 가 양의 정부호인 평가점 b"""

    b: np.ndarray
    im_inv_norm: float
    b_norm: float

    @classmethod
    def from_matrix(cls, b) -> "EvaluationPoint":
        matrix = as_complex_matrix(b, "b")
        imag = (matrix - matrix.conj().T) / 2j
        smallest = float(np.linalg.eigvalsh(0.5 * (imag + imag.conj().T))[0])
        if not smallest > 0.0:
            raise PreconditionError(f"Im(b) 가 양의 정부호가 아닙니다 (최소 고유값 {smallest:.3e})")
        matrix.setflags(write=False)
        return cls(matrix, 1.0 / smallest, operator_norm(matrix))

    @classmethod
    def at_point(cls, z: complex, dim: int, mean: Optional[np.ndarray] = None) -> "EvaluationPoint":
        """b = z·1 − mean"""
        b = z * np.eye(dim, dtype=np.complex128)
        if mean is not None:
            b = b - mean
        return cls.from_matrix(b)

    @classmethod
    def at_imaginary(cls, y: float, dim: int, mean: Optional[np.ndarray] = None) -> "EvaluationPoint":
        """b = iy·1 − mean"""
        if not y > 0.0:
            raise PreconditionError(f"y 는 양수여야 합니다: {y}")
        return cls.at_point(1j * y, dim, mean)

    @property
    def dim(self) -> int:
        return int(self.b.shape[0])


def m_r(ep: EvaluationPoint, c: CovarianceMap, radius: float) -> float:
    """m_r = ‖b‖ + r‖η‖"""
    return ep.b_norm + radius * c.norm_eta


def imag_part_bound(ep: EvaluationPoint, c: CovarianceMap, radius: float) -> float:
    """h_b(D_r) 원소의 허수부 상한 크기 m_r⁻²‖Im b⁻¹‖⁻¹"""
    return 1.0 / (m_r(ep, c, radius) ** 2 * ep.im_inv_norm)


def strict_inclusion_margin(ep: EvaluationPoint, c: CovarianceMap, radius: float) -> float:
    return min(radius - ep.im_inv_norm, imag_part_bound(ep, c, radius))


def explicit_radius(beta: float) -> float:
    """r = 1/β + (1/√2 − 1/2)β"""
    if not beta > 0.0:
        raise PreconditionError(f"β 는 양수여야 합니다: {beta}")
    return 1.0 / beta + EXPLICIT_RADIUS_FACTOR * beta


def optimal_radius(beta: float) -> float:
    """(β + r)²(r − 1/β) = β 의 유일한 실근 r > 1/β"""
    if not beta > 0.0:
        raise PreconditionError(f"β 는 양수여야 합니다: {beta}")

    def cubic(r: float) -> float:
        return (beta + r) ** 2 * (r - 1.0 / beta) - beta

    def slope(r: float) -> float:
        return 2.0 * (beta + r) * (r - 1.0 / beta) + (beta + r) ** 2

    low, high = 1.0 / beta, 1.0 / beta + beta
    r = high
    for _ in range(200):
        value = cubic(r)
        if value > 0.0:
            high = r
        else:
            low = r
        candidate = r - value / slope(r)
        if not low < candidate < high:
            candidate = 0.5 * (low + high)
        if abs(candidate - r) <= 1e-16 * r:
            r = candidate
            break
        r = candidate

    # 근의 오른쪽에 두어 ε 가 ‖b‖, r 에만 의존하도록 함
    while cubic(r) < 0.0:
        r = math.nextafter(r, math.inf)
    return r


def default_radius(ep: EvaluationPoint, c: CovarianceMap, omega: Optional[float] = None) -> float:
    """스칼라 명시 반경 r = 1/β + (1/√2 − 1/2)β 의 행렬 일반화"""
    if omega is None:
        omega = get_solver_config("omega")
    beta = 1.0 / ep.im_inv_norm
    extra = EXPLICIT_RADIUS_FACTOR * beta
    if c.norm_eta > 0.0:
        extra /= c.norm_eta
    radius = ep.im_inv_norm + extra
    if radius <= omega:
        radius = omega + extra
    return radius


@dataclass(frozen=True)
class SolverConfig:
    radius_r: float
    epsilon_dom: float
    contraction_q: float
    max_iterations: int
    target_delta: float
    termination_mode: TerminationMode
    omega: float = 1.0

    @classmethod
    def build(
        cls,
        ep: EvaluationPoint,
        c: CovarianceMap,
        radius: Optional[float] = None,
        target_delta: Optional[float] = None,
        termination_mode=None,
        max_iterations: Optional[int] = None,
        omega: Optional[float] = None,
    ) -> "SolverConfig":
        """ε, q 를 유도해 일관된 설정을 생성"""
        defaults = get_solver_config()
        omega = defaults["omega"] if omega is None else float(omega)
        target_delta = defaults["target_delta"] if target_delta is None else float(target_delta)
        mode = TerminationMode.parse(defaults["termination_mode"] if termination_mode is None else termination_mode)
        max_iterations = defaults["max_iterations"] if max_iterations is None else int(max_iterations)
        if radius is None:
            radius = default_radius(ep, c, omega)

        if not radius > ep.im_inv_norm:
            raise PreconditionError(f"반경 r={radius} 는 ‖Im(b)⁻¹‖={ep.im_inv_norm} 보다 커야 합니다")
        if not omega > 0.0 or not omega < radius:
            raise PreconditionError(f"시작점 -iω·1 이 D_r 밖입니다: ω={omega}, r={radius}")
        if not target_delta > 0.0:
            raise PreconditionError(f"target_delta 는 양수여야 합니다: {target_delta}")
        if max_iterations < 1:
            raise PreconditionError(f"max_iterations 는 1 이상이어야 합니다: {max_iterations}")

        epsilon = strict_inclusion_margin(ep, c, radius)
        q = 1.0 / (1.0 + epsilon / (2.0 * radius))
        return cls(float(radius), epsilon, q, max_iterations, target_delta, mode, omega)


@dataclass(frozen=True, eq=False)
class SolveOutcome:
    w: np.ndarray
    iterations: int
    residual_norm: float
    certified_error: float
    terminated_by: TerminationMode
    converged: bool = True


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    residual: float
    step_norm: float


@dataclass(frozen=True, eq=False)
class FixedPointStep:
    """반복 한 번의 결과: w_k, Δ_b(w_k), w_k − w_{k−1}"""

    iteration: int
    w: np.ndarray
    delta: np.ndarray
    step: np.ndarray

    @property
    def residual(self) -> float:
        return operator_norm(self.delta)

    @property
    def step_norm(self) -> float:
        return operator_norm(self.step)


TraceSink = Callable[[TraceRecord], None]

# 복소 배정밀도 (zgetrf, zgetri)
_GETRF, _GETRI = get_lapack_funcs(("getrf", "getri"), (np.empty((1, 1), dtype=np.complex128),))


def _lu_inverse(matrix: np.ndarray) -> Optional[np.ndarray]:
    """LU (부분 피벗) 역행렬, 특이하거나 유한하지 않으면 None

    LAPACK getrf/getri 직접 호출 (인자 검사 없음)
    """
    lu, piv, info = _GETRF(matrix)
    if info != 0:
        return None
    inverse, info = _GETRI(lu, piv, overwrite_lu=1)
    if info != 0 or not np.isfinite(inverse).all():
        return None
    return inverse


def _check_lower_half_plane(w: np.ndarray, strict: bool = False):
    imag = (w - w.conj().T) / 2j
    top = float(np.linalg.eigvalsh(0.5 * (imag + imag.conj().T))[-1])
    tolerance = 0.0 if strict else 1e-12 * max(1.0, operator_norm(w))
    if top > tolerance or (strict and top >= 0.0):
        raise PreconditionError(f"Im(w) 가 음의 (반)정부호가 아닙니다 (최대 고유값 {top:.3e})")


def apply_h(ep: EvaluationPoint, c: CovarianceMap, w) -> np.ndarray:
    """h_b(w) = (b − η(w))⁻¹"""
    matrix = as_complex_matrix(w, "w", ep.dim)
    _check_lower_half_plane(matrix)
    inverse = _lu_inverse(ep.b - c(matrix))
    if inverse is None:
        raise PreconditionError("b − η(w) 가 특이 행렬입니다")
    return inverse


def residual_matrix(ep: EvaluationPoint, c: CovarianceMap, w) -> np.ndarray:
    """Δ_b(w) = b − w⁻¹ − η(w)"""
    matrix = as_complex_matrix(w, "w", ep.dim)
    inverse = _lu_inverse(matrix)
    if inverse is None:
        raise PreconditionError("w 가 특이 행렬입니다")
    return ep.b - inverse - c(matrix)


def residual_delta(ep: EvaluationPoint, c: CovarianceMap, w) -> float:
    """‖Δ_b(w)‖"""
    return operator_norm(residual_matrix(ep, c, w))


def delta_sandwich(ep: EvaluationPoint, c: CovarianceMap, radius: float, w) -> Tuple[float, float]:
    """h_b(D_r) 안의 w 에 대한 ‖Δ_b(w)‖ 의 하한과 상한"""
    matrix = as_complex_matrix(w, "w", ep.dim)
    step = operator_norm(apply_h(ep, c, matrix) - matrix)
    lower = step / radius ** 2
    upper = m_r(ep, c, radius) ** 4 * ep.im_inv_norm ** 2 * step
    return lower, upper


def _a_priori_count(im_inv_norm: float, radius: float, epsilon: float, norm_eta: float,
                    first_step: float, target_delta: float) -> int:
    """(‖Im b⁻¹‖·2r/ε)²‖η‖‖h(w0)−w0‖ q^{n−1} ≤ δ 인 최소 n (로그 공간)"""
    if first_step == 0.0 or norm_eta == 0.0:
        return 1
    log_constant = (
        2.0 * math.log(im_inv_norm * 2.0 * radius / epsilon)
        + math.log(norm_eta)
        + math.log(first_step)
    )
    excess = log_constant - math.log(target_delta)
    if excess <= 0.0:
        return 1
    rate = math.log1p(epsilon / (2.0 * radius))
    steps = excess / rate
    if not math.isfinite(steps) or steps >= INT64_MAX - 1:
        raise IterationOverflowError(f"사전 반복 횟수가 64비트 범위를 넘습니다 (≈{steps:.3e})")
    return 1 + math.ceil(steps)


def _scalar_a_priori_count(beta: float, radius: float, first_step: float, target_delta: float) -> int:
    """b = iβ, η = id 에서 n = 1 + ⌈log(δ/K)/log Q⌉ 를 double 로 그대로 계산

    K = 4r²(β+r)⁴/β⁴·‖h(w0)−w0‖, Q = 2r(β+r)²/(2r(β+r)² + β).
    Q 는 이 형태 그대로 계산합니다 (log Q 의 반올림이 횟수에 그대로 반영됨).
    """
    if first_step == 0.0:
        return 1
    constant = 4.0 * radius ** 2 * (beta + radius) ** 4 / beta ** 4 * first_step
    scale = 2.0 * radius * (beta + radius) ** 2
    contraction = scale / (scale + beta)
    if not contraction < 1.0:
        raise IterationOverflowError(f"축소율 Q 가 double 에서 1 로 반올림됩니다 (β={beta})")
    steps = math.log(target_delta / constant) / math.log(contraction)
    if steps <= 0.0:
        return 1
    if not math.isfinite(steps) or steps >= INT64_MAX - 1:
        raise IterationOverflowError(f"사전 반복 횟수가 64비트 범위를 넘습니다 (≈{steps:.3e})")
    return 1 + math.ceil(steps)


def _standard_scalar_beta(ep: EvaluationPoint, c: CovarianceMap, cfg: SolverConfig) -> Optional[float]:
    """b = iβ, ‖η‖ = 1 인 1×1 문제이고 ε = β/(β+r)² 이면 β, 아니면 None"""
    if ep.dim != 1 or not math.isclose(c.norm_eta, 1.0, rel_tol=1e-15):
        return None
    b = complex(ep.b[0, 0])
    if b.real != 0.0 or not b.imag > 0.0:
        return None
    # r − ‖Im b⁻¹‖ 은 상쇄 오차가 있으므로 반경 크기의 반올림 여유를 둠
    gap = cfg.radius_r - ep.im_inv_norm
    if imag_part_bound(ep, c, cfg.radius_r) > gap + 64.0 * np.finfo(float).eps * cfg.radius_r:
        return None
    return b.imag


def a_priori_iteration_count(ep: EvaluationPoint, c: CovarianceMap, cfg: SolverConfig, w0) -> int:
    """‖h_bⁿ(w0) − w*‖ ≤ target_delta 를 보장하는 최소 n ≥ 1"""
    matrix = as_complex_matrix(w0, "w0", ep.dim)
    first_step = operator_norm(apply_h(ep, c, matrix) - matrix)
    beta = _standard_scalar_beta(ep, c, cfg)
    if beta is not None:
        return _scalar_a_priori_count(beta, cfg.radius_r, first_step, cfg.target_delta)
    return _a_priori_count(ep.im_inv_norm, cfg.radius_r, cfg.epsilon_dom, c.norm_eta,
                           first_step, cfg.target_delta)


def iterate_fixed_point(ep: EvaluationPoint, c: CovarianceMap, w_start) -> Iterator[FixedPointStep]:
    """w_k = h_bᵏ(w_start), k = 1, 2, … 를 차례로 생성"""
    v = np.array(w_start, dtype=np.complex128)
    eta_v = c(v)
    iteration = 0
    while True:
        iteration += 1
        w = _lu_inverse(ep.b - eta_v)
        if w is None:
            raise NumericalInstabilityError(f"{iteration}번째 반복에서 b − η(w) 역행렬 실패")
        eta_w = c(w)
        # Δ_b(h_b(v)) = η(v) − η(h_b(v))
        yield FixedPointStep(iteration, w, eta_v - eta_w, w - v)
        v, eta_v = w, eta_w


def _resolve_start(ep: EvaluationPoint, cfg: SolverConfig, w_start) -> np.ndarray:
    seed = -1j * cfg.omega * np.eye(ep.dim, dtype=np.complex128)
    if w_start is None:
        return seed
    start = as_complex_matrix(w_start, "w_start", ep.dim)
    if operator_norm(start) >= cfg.radius_r:
        logger.debug("⚠️ 웜 스타트 점이 D_r 밖이라 기본 시작점 사용")
        return seed
    return start


def _crossed(matrix: np.ndarray, threshold: float, fro_factor: float) -> Tuple[bool, float]:
    """‖matrix‖ < threshold 판정

    ‖M‖ ≥ ‖M‖_F/√N 이므로 프로베니우스 노름이 √N·threshold 이상이면 연산자 노름을 구하지 않습니다.
    """
    if math.sqrt(np.vdot(matrix, matrix).real) >= threshold * fro_factor:
        return False, math.inf
    value = operator_norm(matrix)
    return value < threshold, value


def solve_fixed_point(
    ep: EvaluationPoint,
    c: CovarianceMap,
    cfg: SolverConfig,
    w_start=None,
    trace: Optional[TraceSink] = None,
) -> SolveOutcome:
    """선택한 종료 조건이 만족될 때까지 단순 반복"""
    if ep.im_inv_norm > get_solver_config("condition_log_threshold"):
        logger.warning(
            f"⚠️ ‖Im(b)⁻¹‖={ep.im_inv_norm:.3e}, cond(b)≈{np.linalg.cond(ep.b):.3e}"
        )

    mode = cfg.termination_mode
    start = _resolve_start(ep, cfg, w_start)
    beta = 1.0 / ep.im_inv_norm
    fro_factor = math.sqrt(ep.dim)

    a_priori_steps = None
    if mode is TerminationMode.APRIORI:
        try:
            w0 = _lu_inverse(ep.b - c(start))
            if w0 is None:
                raise NumericalInstabilityError("시작점에서 b − η(w) 역행렬 실패")
            a_priori_steps = a_priori_iteration_count(ep, c, cfg, w0)
            if a_priori_steps + 1 > cfg.max_iterations:
                logger.warning(
                    f"⚠️ 사전 반복 횟수 {a_priori_steps} 가 max_iterations 초과, 잔차 조건으로 전환"
                )
                mode = TerminationMode.RESIDUAL
        except IterationOverflowError as e:
            logger.warning(f"⚠️ {e}, 잔차 조건으로 전환")
            mode = TerminationMode.RESIDUAL

    sigma = cfg.target_delta * beta / (1.0 + cfg.target_delta * beta)
    residual_threshold = sigma * beta
    if c.norm_eta > 0.0:
        step_threshold = (
            cfg.epsilon_dom ** 2 * cfg.target_delta
            / (4.0 * cfg.radius_r ** 2 * c.norm_eta * ep.im_inv_norm ** 2)
        )
    else:
        step_threshold = math.inf
    # 반복값 크기 ‖Im b⁻¹‖ 의 반올림 단위보다 작은 스텝은 관측할 수 없음
    step_floor = STEP_RESOLUTION * ep.im_inv_norm
    if mode is TerminationMode.STEP and step_threshold < step_floor:
        logger.warning(
            f"⚠️ 스텝 임계값 {step_threshold:.3e} 이 배정밀도 해상도 {step_floor:.3e} 미만, 잔차 조건으로 전환"
        )
        mode = TerminationMode.RESIDUAL

    logger.debug(f"🔄 고정점 반복 시작: N={ep.dim}, mode={mode.value}, δ={cfg.target_delta:.3e}")

    last = None
    for current in iterate_fixed_point(ep, c, start):
        last = current
        if trace is not None:
            trace(TraceRecord(current.iteration, current.residual, current.step_norm))

        k = current.iteration
        if mode is TerminationMode.RESIDUAL:
            done, residual = _crossed(current.delta, residual_threshold, fro_factor)
            if done:
                error = ep.im_inv_norm ** 2 * residual / (1.0 - sigma)
                logger.debug(f"✅ 잔차 조건 만족: n={k}, ‖Δ‖={residual:.3e}")
                return SolveOutcome(current.w, k, residual, error, mode)
        elif mode is TerminationMode.STEP:
            if k >= 2:
                done, _ = _crossed(current.step, step_threshold, fro_factor)
                if done:
                    logger.debug(f"✅ 스텝 조건 만족: n={k - 1}")
                    return SolveOutcome(current.w, k - 1, current.residual, cfg.target_delta, mode)
        elif k == a_priori_steps + 1:
            logger.debug(f"✅ 사전 반복 완료: n={a_priori_steps}")
            return SolveOutcome(current.w, a_priori_steps, current.residual, cfg.target_delta, mode)

        if k >= cfg.max_iterations:
            break

    residual = last.residual
    logger.warning(f"⚠️ 최대 반복 {cfg.max_iterations} 도달, ‖Δ‖={residual:.3e}")
    return SolveOutcome(last.w, last.iteration, residual, math.inf, mode, converged=False)


def solve_or_raise(ep: EvaluationPoint, c: CovarianceMap, cfg: SolverConfig,
                   w_start=None, trace: Optional[TraceSink] = None) -> SolveOutcome:
    """수렴하지 않으면 SolverNonConvergenceError"""
    outcome = solve_fixed_point(ep, c, cfg, w_start=w_start, trace=trace)
    if not outcome.converged:
        raise SolverNonConvergenceError(
            f"{outcome.iterations}회 반복 후에도 수렴하지 않았습니다 (‖Δ‖={outcome.residual_norm:.3e})",
            outcome,
        )
    return outcome


# ---------------------------------------------------------------------------
# 스칼라 표준 반원 경우의 닫힌 형태 (η = id, b = iβ)
# ---------------------------------------------------------------------------

def _scalar_constants(beta: float, omega: float) -> Tuple[float, float, float]:
    if not beta > 0.0 or not omega > 0.0:
        raise PreconditionError(f"β, ω 는 양수여야 합니다: β={beta}, ω={omega}")
    root = math.sqrt(beta * beta / 4.0 + 1.0)
    q_plus = beta / 2.0 + root
    q_minus = beta / 2.0 - root
    rho = q_minus / q_plus
    alpha = (q_minus + omega) / (q_plus + omega)
    return q_plus, rho, alpha


def scalar_fixed_point(beta: float) -> complex:
    """−iω*, ω* = −β/2 + √(β²/4 + 1)"""
    return -1j * (-beta / 2.0 + math.sqrt(beta * beta / 4.0 + 1.0))


def scalar_closed_form_iterate(beta: float, omega: float, n: int) -> complex:
    """h_bⁿ(−iω) = −i(1/q₊)(1 − αρⁿ⁻¹)/(1 − αρⁿ)"""
    if n < 1:
        raise PreconditionError(f"n 은 1 이상이어야 합니다: {n}")
    q_plus, rho, alpha = _scalar_constants(beta, omega)
    return -1j / q_plus * (1.0 - alpha * rho ** (n - 1)) / (1.0 - alpha * rho ** n)


def scalar_closed_form_residual(beta: float, omega: float, n: int) -> complex:
    """Δ_b(h_bⁿ(−iω))"""
    if n < 1:
        raise PreconditionError(f"n 은 1 이상이어야 합니다: {n}")
    q_plus, rho, alpha = _scalar_constants(beta, omega)
    return (
        -1j * q_plus * alpha * (1.0 - rho) ** 2 * rho ** (n - 1)
        / ((1.0 - alpha * rho ** n) * (1.0 - alpha * rho ** (n - 1)))
    )


def scalar_closed_form_step(beta: float, omega: float, n: int) -> complex:
    """h_bⁿ⁺¹(−iω) − h_bⁿ(−iω)"""
    if n < 1:
        raise PreconditionError(f"n 은 1 이상이어야 합니다: {n}")
    q_plus, rho, alpha = _scalar_constants(beta, omega)
    return (
        -1j / q_plus * alpha * (1.0 - rho) ** 2 * rho ** (n - 1)
        / ((1.0 - alpha * rho ** (n + 1)) * (1.0 - alpha * rho ** n))
    )


def scalar_problem(beta: float) -> Tuple[EvaluationPoint, CovarianceMap]:
    """b = iβ, η = id 인 스칼라 문제"""
    pencil = LinearPencil(np.ones((1, 1, 1), dtype=np.complex128))
    return EvaluationPoint.at_imaginary(beta, 1), covariance_map(pencil)


def scalar_a_priori_count(beta: float, delta: float, omega: float = 1.0,
                          radius: Optional[float] = None) -> int:
    """스칼라 경우 w0 = h_b(−iω) 에서의 사전 반복 횟수"""
    ep, c = scalar_problem(beta)
    cfg = SolverConfig.build(
        ep, c,
        radius=explicit_radius(beta) if radius is None else radius,
        target_delta=delta,
        termination_mode=TerminationMode.APRIORI,
        omega=omega,
    )
    if _standard_scalar_beta(ep, c, cfg) is None:
        w0 = apply_h(ep, c, -1j * omega * np.eye(1))
        return a_priori_iteration_count(ep, c, cfg, w0)
    # ‖h_b(w0) − w0‖ = |ω − 1/(β+ω)| / (β(β+ω) + 1)
    first_step = abs(omega - 1.0 / (beta + omega)) / (beta * (beta + omega) + 1.0)
    return _scalar_a_priori_count(beta, cfg.radius_r, first_step, delta)


def scalar_termination_count(beta: float, delta: float, omega: float = 1.0,
                             radius: Optional[float] = None, mode=TerminationMode.RESIDUAL,
                             max_iterations: Optional[int] = None) -> int:
    """닫힌 형태로 계산한 종료 시점의 반복 횟수"""
    mode = TerminationMode.parse(mode)
    if radius is None:
        radius = explicit_radius(beta)
    if mode is TerminationMode.APRIORI:
        return scalar_a_priori_count(beta, delta, omega, radius)
    if max_iterations is None:
        max_iterations = get_solver_config("max_iterations")

    # ‖b‖ = β, ‖η‖ = 1, ‖Im b⁻¹‖ = 1/β
    epsilon = min(radius - 1.0 / beta, beta / (beta + radius) ** 2)
    if mode is TerminationMode.RESIDUAL:
        sigma = delta * beta / (1.0 + delta * beta)
        threshold = sigma * beta
        quantity = scalar_closed_form_residual
    else:
        threshold = epsilon ** 2 * delta * beta ** 2 / (4.0 * radius ** 2)
        quantity = scalar_closed_form_step

    for n in range(1, max_iterations + 1):
        if abs(quantity(beta, omega, n)) < threshold:
            return n
    raise SolverNonConvergenceError(f"{max_iterations}회 안에 종료 조건에 도달하지 않았습니다")
