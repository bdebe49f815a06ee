"""
몬테카를로 오라클

GUE 행렬로 S_d = a₀⊗1 + Σ aᵢ⊗Xᵢ 를 표본 추출해 솔버 결과와 독립적으로 비교합니다.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, Optional, Sequence

import numpy as np

from .config import get_mc_config, get_thread_count
from .density import DensityGrid, cumulative_distribution, default_window, stieltjes_density
from .exceptions import PreconditionError
from .pencil import LinearPencil, covariance_map

logger = logging.getLogger(__name__)

KS_CHUNK = 64


@dataclass(frozen=True)
class McConfig:
    matrix_dim: int
    samples: int
    seed: int

    def __post_init__(self):
        if self.matrix_dim < 2:
            raise PreconditionError(f"행렬 크기 d 는 2 이상이어야 합니다: {self.matrix_dim}")
        if self.samples < 1:
            raise PreconditionError(f"표본 수는 1 이상이어야 합니다: {self.samples}")
        if not 0 <= self.seed < 2 ** 64:
            raise PreconditionError(f"seed 는 64비트 부호 없는 정수여야 합니다: {self.seed}")


def gue_matrix(rng: np.random.Generator, dim: int) -> np.ndarray:
    """(G + G*)/√(2d): 비대각 복소 분산 1/d, 대각 실수 분산 1/d"""
    g = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / math.sqrt(2.0)
    return (g + g.conj().T) / math.sqrt(2.0 * dim)


def _sample_eigenvalues(p: LinearPencil, dim: int, seed: np.random.SeedSequence) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(seed))
    total = np.kron(p.mean_matrix(), np.eye(dim))
    for coeff in p.coeffs:
        total = total + np.kron(coeff, gue_matrix(rng, dim))
    return np.linalg.eigvalsh(total)


def sample_spectrum(p: LinearPencil, cfg: McConfig, threads: Optional[int] = None) -> np.ndarray:
    """모든 표본의 고유값을 모아 오름차순 정렬"""
    if not isinstance(p, LinearPencil):
        raise PreconditionError("에르미트 펜슬이 필요합니다")
    children = np.random.SeedSequence(cfg.seed).spawn(cfg.samples)
    workers = min(get_thread_count(threads), cfg.samples)
    logger.info(f"🎲 표본 추출: N={p.dim}, d={cfg.matrix_dim}, samples={cfg.samples}, seed={cfg.seed}")

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda s: _sample_eigenvalues(p, cfg.matrix_dim, s), children))
    else:
        parts = [_sample_eigenvalues(p, cfg.matrix_dim, s) for s in children]
    return np.sort(np.concatenate(parts))


def spectrum_scale(p: LinearPencil) -> float:
    """‖η(1)‖^{1/2}"""
    return math.sqrt(covariance_map(p).norm_eta)


def smoothed_cdf(spectrum: Sequence[float], t_values: np.ndarray, eps_im: float) -> np.ndarray:
    """코시 핵으로 평활한 경험 분포 (1/2 + arctan((t − λ)/ε)/π 의 평균)"""
    eigenvalues = np.asarray(spectrum, dtype=float)
    result = np.empty(len(t_values))
    for start in range(0, len(t_values), KS_CHUNK):
        chunk = t_values[start:start + KS_CHUNK, None]
        result[start:start + KS_CHUNK] = np.mean(
            0.5 + np.arctan((chunk - eigenvalues[None, :]) / eps_im) / math.pi, axis=1
        )
    return result


def ks_distance(
    spectrum: Sequence[float],
    p: Optional[LinearPencil] = None,
    grid: Optional[DensityGrid] = None,
    eps_im: Optional[float] = None,
    points: Optional[int] = None,
    threads: Optional[int] = None,
) -> float:
    """경험 분포와 적분한 스틸체스 밀도 사이의 콜모고로프-스미르노프 거리

    두 분포를 같은 높이 ε 의 코시 핵으로 평활해 원자가 있어도 비교 가능하게 하고,
    격자 왼쪽 끝부터의 질량으로 맞춥니다.
    """
    eigenvalues = np.asarray(spectrum, dtype=float)
    if eigenvalues.size == 0:
        raise PreconditionError("스펙트럼이 비어 있습니다")
    if grid is None:
        if p is None:
            raise PreconditionError("펜슬 또는 밀도 격자가 필요합니다")
        t_min, t_max = default_window(p)
        if eps_im is None:
            eps_im = 0.01 * spectrum_scale(p) or 1e-3
        if points is None:
            points = int(math.ceil(4.0 * (t_max - t_min) / eps_im)) + 1
        grid = stieltjes_density(p, t_min, t_max, points, eps_im=eps_im, threads=threads)

    model = cumulative_distribution(grid)
    empirical = smoothed_cdf(eigenvalues, grid.t_values, grid.eps_im)
    empirical = empirical - empirical[0]
    return float(np.max(np.abs(empirical - model)))


def empirical_moments(spectrum: Sequence[float], k: int) -> float:
    """tr(S_d^{2k})/(Nd) = 고유값 2k 제곱의 평균"""
    eigenvalues = np.asarray(spectrum, dtype=float)
    if eigenvalues.size == 0:
        raise PreconditionError("스펙트럼이 비어 있습니다")
    return float(np.mean(eigenvalues ** (2 * k)))


def zero_window_mass(spectrum: Sequence[float], scale: float, window: Optional[float] = None) -> float:
    """|λ| ≤ window·scale 인 고유값 비율"""
    if window is None:
        window = get_mc_config("window")
    eigenvalues = np.asarray(spectrum, dtype=float)
    if eigenvalues.size == 0:
        raise PreconditionError("스펙트럼이 비어 있습니다")
    return float(np.mean(np.abs(eigenvalues) <= window * scale))


def spectrum_metadata(cfg: McConfig) -> Dict:
    return {
        "seed": cfg.seed,
        "d": cfg.matrix_dim,
        "samples": cfg.samples,
        "generator": get_mc_config("generator"),
    }
