import numpy as np
import pytest

from ncrank.cauchy_solver import scalar_problem
from ncrank.pencil import LinearPencil
from ncrank.presets import load_preset


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="긴 수용 테스트도 실행")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: 긴 수용 테스트 (작은 y, 몬테카를로)")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="--runslow 옵션이 필요합니다")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


def random_hermitian(rng: np.random.Generator, dim: int, low: int = -3, high: int = 3) -> np.ndarray:
    """정수 항목 [low, high] 의 에르미트 행렬"""
    real = rng.integers(low, high + 1, size=(dim, dim)).astype(float)
    imag = rng.integers(low, high + 1, size=(dim, dim)).astype(float)
    upper = np.triu(real + 1j * imag, 1)
    return upper + upper.conj().T + np.diag(np.diag(real))


def random_pencil(rng: np.random.Generator, max_dim: int = 4, max_vars: int = 3) -> LinearPencil:
    while True:
        dim = int(rng.integers(1, max_dim + 1))
        num_vars = int(rng.integers(1, max_vars + 1))
        coeffs = np.stack([random_hermitian(rng, dim) for _ in range(num_vars)])
        if np.any(coeffs):
            return LinearPencil(coeffs)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def semicircle():
    return load_preset("semicircle")


@pytest.fixture
def example_pencil():
    return load_preset("moment_example")


@pytest.fixture
def scalar_unit():
    """b = i, η = id"""
    return scalar_problem(1.0)
