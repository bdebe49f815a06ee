"""ncrank 예외 계층"""

from typing import Any, Optional


class NCRankError(Exception):
    """ncrank 관련 기본 예외"""
    pass


class PencilFormatError(NCRankError, ValueError):
    """펜슬 파일 형식 오류 (위치 정보 포함)"""

    def __init__(self, message: str, position: Optional[str] = None):
        self.position = position
        if position:
            message = f"{position}: {message}"
        super().__init__(message)


class DimensionMismatchError(PencilFormatError):
    """행렬 크기 불일치"""
    pass


class NonFiniteEntryError(PencilFormatError):
    """NaN/Inf 항목"""
    pass


class PreconditionError(NCRankError, ValueError):
    """입력 전제 조건 위반"""
    pass


class SolverError(NCRankError):
    """고정점 솔버 관련 기본 예외"""
    pass


class NumericalInstabilityError(SolverError):
    """반복값이 유한하지 않거나 역행렬이 특이함"""
    pass


class IterationOverflowError(SolverError):
    """사전 반복 횟수가 64비트 범위를 넘음"""
    pass


class SolverNonConvergenceError(SolverError):
    """최대 반복 횟수 초과 (부분 결과 포함)"""

    def __init__(self, message: str, outcome: Any = None):
        self.outcome = outcome
        super().__init__(message)


class UnsupportedInputError(NCRankError, ValueError):
    """지원하지 않는 입력 (예: 평균이 0이 아닌 펜슬의 모멘트)"""
    pass


class InconsistentMomentsError(NCRankError, ValueError):
    """코시-슈바르츠 조건을 만족하지 않는 모멘트"""
    pass


class InfeasibleParametersError(NCRankError, ValueError):
    """배정밀도로 표현할 수 없는 매개변수"""
    pass


class ZeroBlockContradictionError(NCRankError, ValueError):
    """영 블록이라고 주어진 부분에 0이 아닌 항목이 있음"""
    pass


class PresetError(NCRankError, KeyError):
    """프리셋 관련 예외"""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else ""


class InconsistentBoundsError(SolverError):
    """하한이 상한보다 큼 (수치 오염 신호)"""
    pass


class StorageError(NCRankError, OSError):
    """파일 입출력 관련 예외"""
    pass
