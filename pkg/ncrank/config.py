import logging
import os
import sys
from typing import Any, Dict, Optional

# 앱 기본 설정
APP_CONFIG = {
    "name": "ncrank",
    "version": "1.0.0",
    "description": "선형 행렬 펜슬의 비가환 내부 랭크 계산 도구",
    "author": "ncrank developers",
}

# 수치 허용 오차
NUMERIC_CONFIG = {
    "hermitian_rtol": 1e-12,  # 에르미트 판정 상대 오차
    "psd_tolerance": 1e-10,
    "moment_slack": 1e-12,  # 코시-슈바르츠 판정 여유
    "rounding_slack": 1e-9,  # floor/ceil 경계 여유
}

# 고정점 솔버 설정
SOLVER_CONFIG = {
    "omega": 1.0,  # 시작점 -iω·1
    "target_delta": 1e-8,
    "termination_mode": "residual",
    "max_iterations": 20_000_000,
    "condition_log_threshold": 1e8,
}

# θ 스캔 설정
SCAN_CONFIG = {
    "y_grid": [10.0 ** (-k) for k in range(0, 8)],
    "warm_start": True,
}

# 랭크 판정 설정
RANK_CONFIG = {
    "zero_block_search_max_dim": 12,
    "exact_y_safety": 0.5,
    "tie_tolerance": 1e-9,
    "tie_retries": 3,
    "tie_shrink": 0.1,
}

# 밀도 설정
DENSITY_CONFIG = {
    "eps_im": 1e-3,
    "delta_factor": 1e-4,  # 솔버 허용 오차 = eps_im * delta_factor
}

# 몬테카를로 오라클 설정
MC_CONFIG = {
    "generator": "PCG64",
    "window": 1e-3,
}

# 출력 형식
OUTPUT_CONFIG = {
    "csv_float_format": ".17g",
    "json_indent": 2,
}


def get_app_config(key: str = None) -> Any:
    """앱 설정 조회"""
    if key:
        return APP_CONFIG.get(key)
    return APP_CONFIG


def get_numeric_config(key: str = None) -> Any:
    """수치 허용 오차 조회"""
    if key:
        return NUMERIC_CONFIG.get(key)
    return NUMERIC_CONFIG


def get_solver_config(key: str = None) -> Any:
    """솔버 설정 조회"""
    if key:
        return SOLVER_CONFIG.get(key)
    return SOLVER_CONFIG


def get_scan_config(key: str = None) -> Any:
    """θ 스캔 설정 조회"""
    if key:
        return SCAN_CONFIG.get(key)
    return SCAN_CONFIG


def get_rank_config(key: str = None) -> Any:
    """랭크 판정 설정 조회"""
    if key:
        return RANK_CONFIG.get(key)
    return RANK_CONFIG


def get_density_config(key: str = None) -> Any:
    """밀도 설정 조회"""
    if key:
        return DENSITY_CONFIG.get(key)
    return DENSITY_CONFIG


def get_mc_config(key: str = None) -> Any:
    """몬테카를로 설정 조회"""
    if key:
        return MC_CONFIG.get(key)
    return MC_CONFIG


def get_output_config(key: str = None) -> Any:
    """출력 형식 조회"""
    if key:
        return OUTPUT_CONFIG.get(key)
    return OUTPUT_CONFIG


def get_thread_count(cli_value: Optional[int] = None) -> int:
    """작업 스레드 수 (--threads > NCRANK_THREADS > 1)"""
    if cli_value is not None:
        return max(1, int(cli_value))

    env_value = os.getenv("NCRANK_THREADS", "").strip()
    if env_value:
        try:
            return max(1, int(env_value))
        except ValueError:
            logging.getLogger(__name__).warning(
                f"⚠️ NCRANK_THREADS 값이 정수가 아닙니다: {env_value!r}, 1로 진행"
            )
    return 1


def load_environment():
    """환경 변수 로드"""
    try:
        from dotenv import load_dotenv
        load_dotenv()
    except ImportError:
        pass  # python-dotenv가 설치되지 않은 경우 무시


# 개발/프로덕션 환경 설정
ENVIRONMENT = os.getenv("NCRANK_ENV", "production")
DEBUG = ENVIRONMENT == "development"

APP_CONFIG["debug"] = DEBUG

# 로깅 설정
LOGGING_CONFIG = {
    "level": "DEBUG" if DEBUG else os.getenv("LOG_LEVEL", "WARNING").upper(),
    "format": "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
}


def setup_logging() -> logging.Logger:
    """로깅 설정 (표준 에러로만 출력)"""
    level = getattr(logging, LOGGING_CONFIG["level"], logging.WARNING)
    logging.basicConfig(
        level=level,
        format=LOGGING_CONFIG["format"],
        stream=sys.stderr,
    )
    return logging.getLogger("ncrank")


def get_system_info() -> Dict:
    """시스템 정보 조회"""
    import platform

    import numpy
    import pydantic
    import scipy

    return {
        "python_version": sys.version,
        "platform": platform.platform(),
        "numpy_version": numpy.__version__,
        "scipy_version": scipy.__version__,
        "pydantic_version": pydantic.VERSION,
        "app_version": APP_CONFIG["version"],
    }


def initialize_app() -> logging.Logger:
    """앱 초기화"""
    load_environment()
    logger = setup_logging()
    logger.debug(f"ncrank v{APP_CONFIG['version']} 시작 ({ENVIRONMENT})")
    return logger
