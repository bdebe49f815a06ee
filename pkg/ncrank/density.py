"""스틸체스 역변환으로 스펙트럼 밀도 샘플 생성"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid

from .cauchy_solver import EvaluationPoint, SolverConfig, TerminationMode, solve_or_raise
from .config import get_density_config, get_scan_config, get_thread_count
from .exceptions import PreconditionError, SolverError
from .pencil import CovarianceMap, LinearPencil, covariance_map

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class DensityGrid:
    """−(1/π)·Im tr_N G(t + i·eps_im) 샘플 (누락값은 NaN)"""

    t_values: np.ndarray
    eps_im: float
    densities: np.ndarray

    def __post_init__(self):
        t_values = np.asarray(self.t_values, dtype=float)
        densities = np.asarray(self.densities, dtype=float)
        if t_values.shape != densities.shape or t_values.ndim != 1:
            raise PreconditionError("t_values 와 densities 의 길이가 다릅니다")
        if np.any(np.diff(t_values) <= 0):
            raise PreconditionError("t_values 는 증가해야 합니다")
        object.__setattr__(self, "t_values", t_values)
        object.__setattr__(self, "densities", densities)

    @property
    def missing(self) -> int:
        return int(np.count_nonzero(np.isnan(self.densities)))


def _density_point(p: LinearPencil, c: CovarianceMap, t: float, eps_im: float, w_start=None):
    ep = EvaluationPoint.at_point(complex(t, eps_im), p.dim, p.mean)
    cfg = SolverConfig.build(
        ep, c,
        target_delta=eps_im * get_density_config("delta_factor"),
        termination_mode=TerminationMode.RESIDUAL,
    )
    outcome = solve_or_raise(ep, c, cfg, w_start=w_start)
    return -float(np.trace(outcome.w).imag) / (math.pi * p.dim), outcome.w


def stieltjes_density(
    p: LinearPencil,
    t_min: float,
    t_max: float,
    points: int,
    eps_im: Optional[float] = None,
    warm_start: Optional[bool] = None,
    threads: Optional[int] = None,
) -> DensityGrid:
    """등간격 t 격자에서 밀도 계산"""
    if not isinstance(p, LinearPencil):
        raise PreconditionError("에르미트 펜슬이 필요합니다")
    if eps_im is None:
        eps_im = get_density_config("eps_im")
    if not t_min < t_max:
        raise PreconditionError(f"tmin < tmax 여야 합니다: {t_min}, {t_max}")
    if points < 2:
        raise PreconditionError(f"points 는 2 이상이어야 합니다: {points}")
    if not eps_im > 0.0:
        raise PreconditionError(f"eps_im 은 양수여야 합니다: {eps_im}")
    if warm_start is None:
        warm_start = get_scan_config("warm_start")

    c = covariance_map(p)
    t_values = np.linspace(t_min, t_max, points)
    densities = np.full(points, np.nan)
    workers = get_thread_count(threads)

    if not warm_start and workers > 1:
        def run(t: float) -> float:
            try:
                return _density_point(p, c, float(t), eps_im)[0]
            except SolverError as e:
                logger.error(f"❌ t={t:.6g} 밀도 계산 실패: {e}")
                return math.nan

        with ThreadPoolExecutor(max_workers=workers) as pool:
            densities[:] = list(pool.map(run, t_values))
    else:
        previous = None
        for k, t in enumerate(t_values):
            try:
                densities[k], w = _density_point(p, c, float(t), eps_im, previous)
                previous = w if warm_start else None
            except SolverError as e:
                logger.error(f"❌ t={t:.6g} 밀도 계산 실패: {e}")
                previous = None

    grid = DensityGrid(t_values, eps_im, densities)
    if grid.missing:
        logger.warning(f"⚠️ 밀도 누락 {grid.missing}/{points}")
    return grid


def total_mass(grid: DensityGrid) -> float:
    """사다리꼴 적분 (누락값 제외)"""
    keep = ~np.isnan(grid.densities)
    return float(trapezoid(grid.densities[keep], grid.t_values[keep]))


def cumulative_distribution(grid: DensityGrid) -> np.ndarray:
    """t 격자에서의 누적 분포 (누락값은 선형 보간)"""
    keep = ~np.isnan(grid.densities)
    if not np.any(keep):
        raise PreconditionError("밀도 값이 모두 누락되었습니다")
    densities = np.interp(grid.t_values, grid.t_values[keep], grid.densities[keep])
    return cumulative_trapezoid(densities, grid.t_values, initial=0.0)


def default_window(p: LinearPencil) -> Tuple[float, float]:
    """스펙트럼을 덮는 대칭 구간"""
    c = covariance_map(p)
    half = 2.2 * math.sqrt(c.norm_eta)
    if p.mean is not None:
        half += float(np.max(np.abs(np.linalg.eigvalsh(p.mean))))
    half = max(half, 1e-3)
    return -half, half
