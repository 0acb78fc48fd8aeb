"""Verification outcomes and the error hierarchy shared by every module."""
from __future__ import annotations

import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterator

PASS = "pass"
FAIL = "fail"
ERROR = "error"


class NilspaceError(Exception):
    """Base class for all errors raised by the package."""


class InputError(NilspaceError):
    """Malformed or inconsistent input (non-total table, bad corner, ...)."""


class ResourceError(NilspaceError):
    """A search exceeded its node budget or a brute-force bound."""

    def __init__(self, message: str, partial: int | None = None):
        super().__init__(message)
        self.partial = partial


class StructureError(NilspaceError):
    """Structure-group data is missing or fails verification."""


class InternalConsistencyError(NilspaceError):
    """Two routes that must agree did not; usually flags an invalid input space."""


class NotConsistent(NilspaceError):
    def __init__(self, message: str, witness: Any = None):
        super().__init__(message)
        self.witness = witness


def jsonable(obj: Any) -> Any:
    """Convert tuples, sets and fractions into plain JSON values."""
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (set, frozenset)):
        return sorted((jsonable(v) for v in obj), key=repr)
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, float):
        return obj
    if hasattr(obj, "to_json"):
        return obj.to_json()
    return repr(obj)


@dataclass
class Report:
    command: str
    verdict: str = PASS
    witnesses: list = field(default_factory=list)
    counts: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)
    elapsed: float = 0.0
    seed: int | None = None
    message: str = ""

    def __bool__(self) -> bool:
        return self.verdict == PASS

    @property
    def ok(self) -> bool:
        return self.verdict == PASS

    def fail(self, message: str, witness: Any = None) -> "Report":
        self.verdict = FAIL
        self.message = message
        if witness is not None:
            self.witnesses.append(witness)
        return self

    def to_json(self, timing: bool = False) -> dict:
        out = {
            "command": self.command,
            "verdict": self.verdict,
            "message": self.message,
            "witnesses": jsonable(self.witnesses),
            "counts": jsonable(self.counts),
            "details": jsonable(self.details),
            "seed": self.seed,
        }
        if timing:
            out["elapsed"] = round(self.elapsed, 6)
        return out

    def summary(self) -> str:
        line = f"[{self.verdict.upper():5s}] {self.command}"
        if self.message:
            line += f": {self.message}"
        return line


@contextmanager
def timed(report: Report) -> Iterator[Report]:
    t0 = time.perf_counter()
    try:
        yield report
    finally:
        report.elapsed = time.perf_counter() - t0
