"""
선형 행렬 펜슬 표현과 공분산 사상 η

A = a₁⊗x₁ + … + aₙ⊗xₙ (+ 평균 a₀) 형태의 펜슬을 검증하고,
η(b) = Σ aᵢ b aᵢ 와 그 노름 ‖η‖ = ‖η(1)‖ 을 제공합니다.
"""

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Any, List, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, StrictBool, StrictInt, ValidationError, field_validator

from .config import get_numeric_config
from .exceptions import (
    DimensionMismatchError,
    NonFiniteEntryError,
    PencilFormatError,
    PreconditionError,
)

logger = logging.getLogger(__name__)


def _readonly(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


def as_complex_matrix(data: Any, name: str = "matrix", dim: Optional[int] = None) -> np.ndarray:
    """N×N 유한 복소 행렬로 변환 (복사본)"""
    matrix = np.array(data, dtype=np.complex128)
    if matrix.ndim == 0:
        matrix = matrix.reshape(1, 1)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] == 0:
        raise DimensionMismatchError(f"정사각 행렬이 아닙니다: shape={matrix.shape}", name)
    if dim is not None and matrix.shape[0] != dim:
        raise DimensionMismatchError(f"크기 {matrix.shape[0]} ≠ 기대값 {dim}", name)
    if not np.all(np.isfinite(matrix)):
        raise NonFiniteEntryError("NaN 또는 Inf 항목이 있습니다", name)
    return matrix


def hermitian_defect(matrix: np.ndarray) -> float:
    """max|M − M*| / max(1, max|M|)"""
    scale = max(1.0, float(np.max(np.abs(matrix))))
    return float(np.max(np.abs(matrix - matrix.conj().T))) / scale


def is_hermitian(matrix: np.ndarray, rtol: Optional[float] = None) -> bool:
    if rtol is None:
        rtol = get_numeric_config("hermitian_rtol")
    return hermitian_defect(matrix) <= rtol


def as_hermitian(data: Any, name: str = "matrix", dim: Optional[int] = None) -> np.ndarray:
    """에르미트 행렬 검증 후 (M+M*)/2 로 대칭화"""
    matrix = as_complex_matrix(data, name, dim)
    if not is_hermitian(matrix):
        raise PreconditionError(
            f"{name}: 에르미트 행렬이 아닙니다 (defect={hermitian_defect(matrix):.3e})"
        )
    return 0.5 * (matrix + matrix.conj().T)


def operator_norm(matrix: np.ndarray) -> float:
    """연산자 노름: M*M 고유값의 최댓값의 제곱근"""
    if matrix.shape == (1, 1):
        return float(abs(matrix[0, 0]))
    gram = matrix.conj().T @ matrix
    top = float(np.linalg.eigvalsh(gram)[-1])
    return math.sqrt(max(top, 0.0))


@dataclass(frozen=True, eq=False)
class LinearPencil:
    """에르미트 계수 a₁…aₙ 와 선택적 평균 a₀ 를 갖는 펜슬"""

    coeffs: np.ndarray  # (n, N, N)
    mean: Optional[np.ndarray] = None
    allow_zero: bool = False

    def __post_init__(self):
        raw = np.array(self.coeffs, dtype=np.complex128)
        if raw.ndim != 3 or raw.shape[0] == 0:
            raise DimensionMismatchError(f"계수 배열 shape={raw.shape} 은 (n, N, N) 이어야 합니다", "coeffs")
        dim = raw.shape[1]
        stacked = np.stack(
            [as_hermitian(raw[k], f"coeffs[{k}]", dim) for k in range(raw.shape[0])]
        )
        object.__setattr__(self, "coeffs", _readonly(stacked))

        if self.mean is not None:
            mean = as_hermitian(self.mean, "mean", dim)
            object.__setattr__(self, "mean", _readonly(mean) if np.any(mean) else None)

        if not self.allow_zero and not np.any(stacked):
            raise PreconditionError("모든 계수가 0입니다 (영 펜슬은 allow_zero=True 로 명시)")

    @classmethod
    def zero(cls, dim: int, num_vars: int = 1) -> "LinearPencil":
        """명시적 영 펜슬"""
        return cls(np.zeros((num_vars, dim, dim), dtype=np.complex128), allow_zero=True)

    @property
    def dim(self) -> int:
        return int(self.coeffs.shape[1])

    @property
    def num_vars(self) -> int:
        return int(self.coeffs.shape[0])

    @property
    def is_centered(self) -> bool:
        return self.mean is None

    def mean_matrix(self) -> np.ndarray:
        if self.mean is None:
            return np.zeros((self.dim, self.dim), dtype=np.complex128)
        return self.mean


@dataclass(frozen=True, eq=False)
class GeneralPencil:
    """에르미트가 아닐 수도 있는 정사각 계수의 펜슬"""

    coeffs: np.ndarray

    def __post_init__(self):
        raw = np.array(self.coeffs, dtype=np.complex128)
        if raw.ndim != 3 or raw.shape[0] == 0:
            raise DimensionMismatchError(f"계수 배열 shape={raw.shape} 은 (n, N, N) 이어야 합니다", "coeffs")
        dim = raw.shape[1]
        stacked = np.stack(
            [as_complex_matrix(raw[k], f"coeffs[{k}]", dim) for k in range(raw.shape[0])]
        )
        object.__setattr__(self, "coeffs", _readonly(stacked))

    @property
    def dim(self) -> int:
        return int(self.coeffs.shape[1])

    @property
    def num_vars(self) -> int:
        return int(self.coeffs.shape[0])


Pencil = Union[LinearPencil, GeneralPencil]


@dataclass(frozen=True, eq=False)
class CovarianceMap:
    """완전 양사상 η(b) = Σ aᵢ b aᵢ"""

    source: LinearPencil
    norm_eta: float = field(init=False)

    def __post_init__(self):
        identity_image = np.sum(self.source.coeffs @ self.source.coeffs, axis=0)
        # η(1) 은 양반정치이므로 최대 고유값이 곧 노름
        top = float(np.linalg.eigvalsh(0.5 * (identity_image + identity_image.conj().T))[-1])
        object.__setattr__(self, "norm_eta", max(top, 0.0))

    @property
    def dim(self) -> int:
        return self.source.dim

    def __call__(self, b: np.ndarray) -> np.ndarray:
        coeffs = self.source.coeffs
        return np.sum((coeffs @ b) @ coeffs, axis=0)

    def identity_image(self) -> np.ndarray:
        return self(np.eye(self.dim, dtype=np.complex128))


def covariance_map(p: LinearPencil) -> CovarianceMap:
    return CovarianceMap(p)


def eta_apply(c: CovarianceMap, b: Any) -> np.ndarray:
    """η(b) = Σ aᵢ b aᵢ"""
    matrix = as_complex_matrix(b, "b", c.dim)
    return c(matrix)


def eta_norm(c: CovarianceMap) -> float:
    """‖η‖ = ‖η(1)‖"""
    return c.norm_eta


def eta_identity(c: CovarianceMap) -> np.ndarray:
    """η(1) = Σ aᵢ²"""
    return c.identity_image()


def hermitize(p: GeneralPencil) -> LinearPencil:
    """[[0, aᵢ], [aᵢ*, 0]] 블록으로 2N×2N 에르미트 펜슬 생성 (랭크는 2배)"""
    n, dim = p.num_vars, p.dim
    blocks = np.zeros((n, 2 * dim, 2 * dim), dtype=np.complex128)
    blocks[:, :dim, dim:] = p.coeffs
    blocks[:, dim:, :dim] = np.conj(np.transpose(p.coeffs, (0, 2, 1)))
    return LinearPencil(blocks, allow_zero=not np.any(p.coeffs))


# ---------------------------------------------------------------------------
# 펜슬 파일 형식
# ---------------------------------------------------------------------------

class MatrixEntry(BaseModel):
    """복소 항목 {"re": <float>, "im": <float>}"""

    model_config = ConfigDict(extra="forbid", allow_inf_nan=False)

    re: float = 0.0
    im: float = 0.0

    @field_validator("re", "im", mode="before")
    @classmethod
    def _require_number(cls, value: Any) -> Any:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValueError(f"숫자가 아닙니다: {value!r}")
        return value


Block = List[List[MatrixEntry]]


class PencilFile(BaseModel):
    """펜슬 파일 스키마 (크기 일관성은 parse_pencil 에서 검사)"""

    model_config = ConfigDict(extra="forbid")

    n: StrictInt = Field(gt=0)
    N: StrictInt = Field(gt=0)
    coeffs: List[Block]
    mean: Optional[Block] = None
    allow_zero: StrictBool = False


_ERROR_MESSAGES = {
    "missing": "필수 필드가 없습니다",
    "extra_forbidden": "알 수 없는 필드입니다",
    "greater_than": "양의 정수가 필요합니다",
    "int_type": "정수가 필요합니다",
    "bool_type": "불리언 값이 필요합니다",
    "list_type": "목록이 필요합니다",
    "model_type": '{"re": <float>, "im": <float>} 형식의 객체가 필요합니다',
}


def _location(loc: Sequence[Union[int, str]]) -> str:
    """('coeffs', 0, 1, 2, 're') → 'coeffs[0][1][2].re'"""
    path = ""
    for part in loc:
        if isinstance(part, int):
            path += f"[{part}]"
        else:
            path += f".{part}" if path else str(part)
    return path


def _format_error(error: ValidationError) -> PencilFormatError:
    first = error.errors()[0]
    position = _location(first["loc"]) or None
    if first["type"] == "finite_number":
        return NonFiniteEntryError(f"유한하지 않은 값: {first['input']!r}", position)
    message = _ERROR_MESSAGES.get(first["type"], first["msg"])
    if first["type"] not in ("missing", "extra_forbidden"):
        message += f" (입력 {first['input']!r})"
    return PencilFormatError(message, position)


def _block_matrix(block: Block, dim: int, path: str) -> np.ndarray:
    if len(block) != dim:
        raise DimensionMismatchError(f"행 수 {len(block)} ≠ N={dim}", path)
    for i, row in enumerate(block):
        if len(row) != dim:
            raise DimensionMismatchError(f"열 수 {len(row)} ≠ N={dim}", f"{path}[{i}]")
    return np.array([[complex(e.re, e.im) for e in row] for row in block], dtype=np.complex128)


def parse_pencil(text: str) -> Pencil:
    """펜슬 파일 텍스트를 LinearPencil 또는 GeneralPencil 로 해석"""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise PencilFormatError(e.msg, f"line {e.lineno}, column {e.colno}") from e

    if not isinstance(data, dict):
        raise PencilFormatError("최상위 값은 객체여야 합니다", "line 1, column 1")
    try:
        document = PencilFile.model_validate(data)
    except ValidationError as e:
        raise _format_error(e) from e

    num_vars, dim = document.n, document.N
    if len(document.coeffs) != num_vars:
        raise DimensionMismatchError(f"계수 개수 {len(document.coeffs)} ≠ n={num_vars}", "coeffs")
    matrices = np.stack([_block_matrix(block, dim, f"coeffs[{k}]") for k, block in enumerate(document.coeffs)])
    mean = None if document.mean is None else _block_matrix(document.mean, dim, "mean")

    if all(is_hermitian(m) for m in matrices):
        if mean is not None and not is_hermitian(mean):
            raise PencilFormatError("평균 행렬이 에르미트가 아닙니다", "mean")
        pencil = LinearPencil(matrices, mean=mean, allow_zero=document.allow_zero)
        logger.debug(f"에르미트 펜슬 로드: N={dim}, n={num_vars}")
        return pencil

    if mean is not None:
        raise PencilFormatError("평균 행렬은 에르미트 계수와만 함께 쓸 수 있습니다", "mean")
    logger.debug(f"일반 펜슬 로드: N={dim}, n={num_vars}")
    return GeneralPencil(matrices)


def _block_rows(matrix: np.ndarray) -> List[str]:
    return [
        json.dumps([{"re": float(z.real), "im": float(z.imag)} for z in row])
        for row in matrix
    ]


def _format_block(matrix: np.ndarray, indent: str) -> str:
    inner = indent + "  "
    return "[\n" + ",\n".join(inner + row for row in _block_rows(matrix)) + "\n" + indent + "]"


def pencil_to_text(p: Pencil) -> str:
    """펜슬 파일 텍스트로 직렬화 (행 단위 한 줄)"""
    parts = [f'  "n": {p.num_vars},', f'  "N": {p.dim},']
    blocks = ",\n".join("    " + _format_block(m, "    ") for m in p.coeffs)
    parts.append('  "coeffs": [\n' + blocks + "\n  ]")
    if isinstance(p, LinearPencil):
        if p.mean is not None:
            parts[-1] += ","
            parts.append('  "mean": ' + _format_block(p.mean, "  "))
        if p.allow_zero and not np.any(p.coeffs):
            parts[-1] += ","
            parts.append('  "allow_zero": true')
    return "{\n" + "\n".join(parts) + "\n}\n"


def pencil_from_matrices(coeffs: Sequence[Any], mean: Any = None, allow_zero: bool = False) -> Pencil:
    """계수 목록에서 펜슬 생성 (에르미트 여부로 종류 결정)"""
    checked = [as_complex_matrix(m, f"coeffs[{k}]") for k, m in enumerate(coeffs)]
    if not checked:
        raise PreconditionError("계수가 하나 이상 필요합니다")
    for k, m in enumerate(checked):
        if m.shape != checked[0].shape:
            raise DimensionMismatchError(f"크기 {m.shape[0]} ≠ {checked[0].shape[0]}", f"coeffs[{k}]")
    matrices = np.stack(checked)
    if all(is_hermitian(m) for m in matrices):
        return LinearPencil(matrices, mean=mean, allow_zero=allow_zero)
    return GeneralPencil(matrices)
