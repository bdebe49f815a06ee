"""
ncrank: 선형 행렬 펜슬의 비가환 내부 랭크 계산 패키지

이 패키지는 다음 기능을 제공합니다:
- 펜슬 파일 해석, 에르미트화, 공분산 사상 η
- 행렬값 반원 고정점 솔버 (사전/사후 오차 보증)
- θ 함수 근사와 랭크 인증서
- 스틸체스 역변환 밀도, 몬테카를로 오라클

버전: 1.0.0
"""

import logging

from .atom_rank import (
    MethodTag,
    MomentTriple,
    RankCertificate,
    RankOptions,
    RegularityInfo,
    ThetaSample,
    certify_rank,
    find_zero_block,
    moment_atom_bound,
    moment_rank_lower_bound,
    moment_triple,
    rank_exact_regular,
    rank_lower_bound_scan,
    theta_at,
    theta_law_violations,
    theta_scan,
    zero_block_upper_bound,
)
from .cauchy_solver import (
    EvaluationPoint,
    SolveOutcome,
    SolverConfig,
    TerminationMode,
    a_priori_iteration_count,
    apply_h,
    explicit_radius,
    optimal_radius,
    residual_delta,
    scalar_closed_form_iterate,
    scalar_termination_count,
    solve_fixed_point,
)
from .density import DensityGrid, stieltjes_density, total_mass
from .exceptions import (
    DimensionMismatchError,
    InconsistentBoundsError,
    InconsistentMomentsError,
    InfeasibleParametersError,
    IterationOverflowError,
    NCRankError,
    NonFiniteEntryError,
    NumericalInstabilityError,
    PencilFormatError,
    PreconditionError,
    PresetError,
    SolverError,
    SolverNonConvergenceError,
    StorageError,
    UnsupportedInputError,
    ZeroBlockContradictionError,
)
from .mc_oracle import McConfig, ks_distance, sample_spectrum
from .pencil import (
    CovarianceMap,
    GeneralPencil,
    LinearPencil,
    covariance_map,
    eta_apply,
    eta_norm,
    hermitize,
    parse_pencil,
)
from .presets import DEFAULT_PRESETS, get_all_preset_names, load_preset

# 패키지 정보
__version__ = "1.0.0"


def setup_logger(name="ncrank", level=logging.INFO):
    """로거를 설정합니다."""
    logger = logging.getLogger(name)
    logger.setLevel(level)

    if not logger.handlers:
        handler = logging.StreamHandler()
        formatter = logging.Formatter(
            '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
        )
        handler.setFormatter(formatter)
        logger.addHandler(handler)

    return logger


logging.getLogger(__name__).addHandler(logging.NullHandler())

__all__ = [
    # Pencil
    "LinearPencil",
    "GeneralPencil",
    "CovarianceMap",
    "covariance_map",
    "parse_pencil",
    "hermitize",
    "eta_apply",
    "eta_norm",

    # Solver
    "EvaluationPoint",
    "SolverConfig",
    "SolveOutcome",
    "TerminationMode",
    "apply_h",
    "residual_delta",
    "a_priori_iteration_count",
    "optimal_radius",
    "explicit_radius",
    "solve_fixed_point",
    "scalar_closed_form_iterate",
    "scalar_termination_count",

    # Atom / rank
    "ThetaSample",
    "RegularityInfo",
    "MomentTriple",
    "RankCertificate",
    "RankOptions",
    "MethodTag",
    "theta_at",
    "theta_scan",
    "moment_triple",
    "moment_atom_bound",
    "moment_rank_lower_bound",
    "rank_exact_regular",
    "rank_lower_bound_scan",
    "zero_block_upper_bound",
    "find_zero_block",
    "certify_rank",
    "theta_law_violations",

    # Density / oracle
    "DensityGrid",
    "stieltjes_density",
    "total_mass",
    "McConfig",
    "sample_spectrum",
    "ks_distance",

    # Presets
    "DEFAULT_PRESETS",
    "load_preset",
    "get_all_preset_names",

    # Utilities
    "setup_logger",

    # Exceptions
    "NCRankError",
    "PencilFormatError",
    "DimensionMismatchError",
    "NonFiniteEntryError",
    "PreconditionError",
    "SolverError",
    "NumericalInstabilityError",
    "IterationOverflowError",
    "SolverNonConvergenceError",
    "InconsistentBoundsError",
    "UnsupportedInputError",
    "InconsistentMomentsError",
    "InfeasibleParametersError",
    "ZeroBlockContradictionError",
    "PresetError",
    "StorageError",
]
