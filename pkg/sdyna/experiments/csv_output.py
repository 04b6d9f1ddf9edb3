#!/usr/bin/env python3
"""Deterministic CSV output of experiment rows"""

import csv
import io
import logging
from dataclasses import astuple, dataclass, fields
from pathlib import Path
from typing import Any, Iterable, List, Optional, TextIO, Union

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CsvRow:
    run: int
    t: Optional[int] = None
    action: Optional[str] = None
    reward: Optional[float] = None
    r_disc: Optional[float] = None
    model_nodes: Optional[int] = None
    xi: Optional[float] = None
    q_chi2: Optional[float] = None
    seed: Optional[int] = None
    tau: Optional[float] = None
    n: Optional[int] = None
    error: Optional[str] = None


HEADER = [f.name for f in fields(CsvRow)]


def format_cell(value: Any) -> str:
    """Blank for missing values, shortest round-trip text for floats"""
    if value is None:
        return ''
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_rows(rows: Iterable[CsvRow], stream: TextIO) -> int:
    writer = csv.writer(stream, lineterminator='\n')
    writer.writerow(HEADER)
    count = 0
    for row in rows:
        writer.writerow([format_cell(v) for v in astuple(row)])
        count += 1
    return count


def write_csv(rows: List[CsvRow], out: Union[str, Path]) -> Path:
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='') as f:
        count = write_rows(rows, f)
    logger.info(f"Wrote {count} rows to {path}")
    return path


def rows_to_text(rows: Iterable[CsvRow]) -> str:
    buffer = io.StringIO()
    write_rows(rows, buffer)
    return buffer.getvalue()
