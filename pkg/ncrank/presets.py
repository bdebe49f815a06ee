"""이름 있는 예제 펜슬 프리셋"""

import logging
import math
from typing import Callable, Dict, List, Optional

import numpy as np

from .exceptions import PreconditionError, PresetError
from .pencil import LinearPencil, Pencil, pencil_to_text

logger = logging.getLogger(__name__)

PRESET_PREFIX = "preset:"


def _unit(dim: int, i: int, j: int) -> np.ndarray:
    matrix = np.zeros((dim, dim), dtype=np.complex128)
    matrix[i, j] = 1.0
    return matrix


def example_family_pencil(t: float) -> LinearPencil:
    """η_t(b) = (e₁₃+e₃₁)b(e₁₃+e₃₁) + (e₂₃+e₃₂)b(e₂₃+e₃₂) + t·e₁₁be₁₁"""
    if not t >= 0.0:
        raise PreconditionError(f"t 는 0 이상이어야 합니다: {t}")
    return LinearPencil(np.stack([
        _unit(3, 0, 2) + _unit(3, 2, 0),
        _unit(3, 1, 2) + _unit(3, 2, 1),
        math.sqrt(t) * _unit(3, 0, 0),
    ]))


def _semicircle() -> LinearPencil:
    return LinearPencil(np.ones((1, 1, 1), dtype=np.complex128))


def _full_3x3() -> LinearPencil:
    """i·[[0, 2x₁−x₃, x₂], [−2x₁+x₃, 0, x₃], [−x₂, −x₃, 0]]"""
    e = lambda i, j: _unit(3, i, j)
    return LinearPencil(np.stack([
        2j * (e(0, 1) - e(1, 0)),
        1j * (e(0, 2) - e(2, 0)),
        1j * (-e(0, 1) + e(1, 0) + e(1, 2) - e(2, 1)),
    ]))


def _border(column: List[float]) -> np.ndarray:
    """마지막 행과 열에만 값이 있는 대칭 5×5 행렬"""
    matrix = np.zeros((5, 5), dtype=np.complex128)
    matrix[:, 4] = column
    matrix[4, :] = column
    return matrix


def _a0() -> LinearPencil:
    return LinearPencil(np.stack([
        _border([1, -4, -10, -2, -1]),
        _border([7, -4, 7, -6, -7]),
    ]))


def _a1() -> LinearPencil:
    coeffs = np.array(_a0().coeffs)
    coeffs[0, 0, 0] = 0.1
    return LinearPencil(coeffs)


def _a2() -> LinearPencil:
    coeffs = np.array(_a1().coeffs)
    coeffs[1, 1, 1] = 0.001
    return LinearPencil(coeffs)


# 기본 프리셋 정의
DEFAULT_PRESETS: Dict[str, Dict] = {
    "semicircle": {
        "builder": _semicircle,
        "known_rank": 1,
        "description": "표준 반원 원소 (N=1, a₁=1). 원자가 없습니다.",
    },
    "moment_example": {
        "builder": lambda: example_family_pencil(0.0),
        "known_rank": 2,
        "description": "η_t 예제 펜슬의 t=0 경우. 모멘트 하한 2 가 정확합니다.",
    },
    "full_3x3": {
        "builder": _full_3x3,
        "known_rank": 3,
        "description": "i 를 곱한 반대칭 3×3 펜슬. 완전(full) 랭크 3.",
    },
    "a0": {
        "builder": _a0,
        "known_rank": 2,
        "description": "4×4 영 블록을 갖는 5×5 펜슬. 내부 랭크 2.",
    },
    "a1": {
        "builder": _a1,
        "known_rank": 3,
        "description": "a0 의 x₁ 계수 (1,1) 에 0.1 추가. 내부 랭크 3.",
    },
    "a2": {
        "builder": _a2,
        "known_rank": 4,
        "description": "a1 의 x₂ 계수 (2,2) 에 0.001 추가. 내부 랭크 4.",
    },
}


def _entry(preset_name: str) -> Dict:
    if preset_name not in DEFAULT_PRESETS:
        names = ", ".join(get_all_preset_names())
        raise PresetError(f"알 수 없는 프리셋 '{preset_name}' (가능: {names})")
    return DEFAULT_PRESETS[preset_name]


def load_preset(preset_name: str) -> LinearPencil:
    """프리셋 펜슬 생성"""
    builder: Callable[[], LinearPencil] = _entry(preset_name)["builder"]
    return builder()


def get_all_preset_names() -> List[str]:
    """모든 프리셋 이름 목록 조회"""
    return sorted(DEFAULT_PRESETS)


def is_default_preset(preset_name: str) -> bool:
    """기본 프리셋인지 확인"""
    return preset_name in DEFAULT_PRESETS


def get_preset_description(preset_name: str) -> str:
    return _entry(preset_name)["description"]


def get_known_rank(preset_name: str) -> Optional[int]:
    return _entry(preset_name).get("known_rank")


def export_preset(preset_name: str) -> str:
    """프리셋을 펜슬 파일 텍스트로 내보내기"""
    return pencil_to_text(load_preset(preset_name))


def resolve_pencil_source(source: str) -> Pencil:
    """파일 경로 또는 'preset:<이름>' 에서 펜슬 로드"""
    if source.startswith(PRESET_PREFIX):
        name = source[len(PRESET_PREFIX):]
        logger.debug(f"프리셋 '{name}' 사용")
        return load_preset(name)

    from .storage import read_pencil_file
    return read_pencil_file(source)
