"""펜슬 파일, 인증서 JSON, CSV 출력 저장"""

import csv
import json
import logging
import math
import os
from typing import Any, Dict, Iterable, Sequence, TextIO, Tuple

from .atom_rank import RankCertificate, ThetaSample
from .cauchy_solver import TraceRecord
from .config import get_output_config
from .density import DensityGrid
from .exceptions import PencilFormatError, StorageError
from .pencil import Pencil, parse_pencil, pencil_to_text

logger = logging.getLogger(__name__)


def format_float(value: float) -> str:
    """17 유효숫자, 누락값은 빈 칸"""
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    return format(float(value), get_output_config("csv_float_format"))


def read_pencil_file(path: str) -> Pencil:
    """펜슬 파일 로드"""
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise StorageError(f"펜슬 파일을 읽을 수 없습니다: {path} ({e.strerror})") from e
    try:
        return parse_pencil(text)
    except PencilFormatError as e:
        raise type(e)(f"{path}: {e}") from e


def write_pencil_file(path: str, p: Pencil) -> bool:
    """펜슬 파일 저장"""
    try:
        directory = os.path.dirname(path)
        if directory and not os.path.exists(directory):
            os.makedirs(directory)
        with open(path, "w", encoding="utf-8") as f:
            f.write(pencil_to_text(p))
        return True
    except OSError as e:
        logger.error(f"❌ 펜슬 저장 실패: {e}")
        return False


def write_json(stream: TextIO, data: Dict[str, Any]):
    """고정 형식 JSON (indent 2, 끝 줄바꿈)"""
    json.dump(data, stream, ensure_ascii=False, indent=get_output_config("json_indent"))
    stream.write("\n")


def write_certificate(stream: TextIO, certificate: RankCertificate):
    write_json(stream, certificate.to_dict())


def _csv_writer(stream: TextIO, header: Sequence[str]):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(header)
    return writer


def write_theta_csv(stream: TextIO, samples: Iterable[ThetaSample]):
    """y,theta,eps,iterations"""
    writer = _csv_writer(stream, ["y", "theta", "eps", "iterations"])
    for s in samples:
        writer.writerow([format_float(s.y), format_float(s.theta_tilde), format_float(s.eps), s.solver_iterations])


def write_density_csv(stream: TextIO, grid: DensityGrid):
    """t,density"""
    writer = _csv_writer(stream, ["t", "density"])
    for t, value in zip(grid.t_values, grid.densities):
        writer.writerow([format_float(t), format_float(value)])


def write_spectrum_csv(stream: TextIO, spectrum: Iterable[float]):
    """eigenvalue"""
    writer = _csv_writer(stream, ["eigenvalue"])
    for value in spectrum:
        writer.writerow([format_float(value)])


def write_trace_csv(stream: TextIO, rows: Iterable[Tuple[float, TraceRecord]]):
    """y,iteration,residual,step_norm"""
    writer = _csv_writer(stream, ["y", "iteration", "residual", "step_norm"])
    for y, record in rows:
        writer.writerow([format_float(y), record.iteration, format_float(record.residual), format_float(record.step_norm)])


def save_text(path: str, writer, *args) -> bool:
    """경로에 CSV/JSON 저장 (writer(stream, *args))"""
    try:
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer(f, *args)
        return True
    except OSError as e:
        logger.error(f"❌ 파일 저장 실패: {path} ({e})")
        return False
