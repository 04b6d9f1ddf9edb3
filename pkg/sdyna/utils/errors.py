#!/usr/bin/env python3
"""Exception hierarchy for sdyna

Every error carries the process exit code the CLI reports for it.
"""

from typing import List, Optional


class SdynaError(Exception):
    """Base class for all sdyna errors"""
    exit_code = 1


class TreeStructureError(SdynaError):
    """A decision tree violates its structural invariants"""
    exit_code = 2


class DomainError(SdynaError, ValueError):
    """A value lies outside its variable's domain, or a vector has the wrong length"""
    exit_code = 2


class StatisticsError(SdynaError, ValueError):
    """Invalid input to a chi-square computation"""
    exit_code = 2


class NumericError(SdynaError, ArithmeticError):
    """A numerical evaluation did not produce a finite result"""
    exit_code = 3


class ConvergenceError(SdynaError):
    """An iterative solver hit its iteration limit"""
    exit_code = 3

    def __init__(self, message: str, last_delta: float, iterations: int):
        super().__init__(f"{message} (last delta {last_delta:.3e} after {iterations} iterations)")
        self.last_delta = last_delta
        self.iterations = iterations


class ProblemFormatError(SdynaError):
    """A problem or tree file could not be parsed"""
    exit_code = 2

    def __init__(self, message: str, path: Optional[str] = None,
                 line: Optional[int] = None, field: Optional[str] = None):
        where = []
        if path:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        if field:
            where.append(f"field '{field}'")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(f"{prefix}{message}")
        self.path = path
        self.line = line
        self.field = field


class ValidationError(SdynaError):
    """A problem definition violates one or more invariants"""
    exit_code = 2

    def __init__(self, violations: List[str]):
        super().__init__("; ".join(violations))
        self.violations = list(violations)


class InfeasibleEnumerationError(SdynaError):
    """A ground enumeration would exceed the configured cap"""
    exit_code = 4


class SimulationError(SdynaError):
    """The environment was driven outside its contract"""
    exit_code = 2


class MetricConsistencyError(SdynaError):
    """Metric inputs contradict the metric's premises (e.g. V_pi above V*)"""
    exit_code = 3
