"""Signed numbers stored as ``sign * exp(log_abs)``."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CancellationError


@dataclass(frozen=True)
class LogNumber:
    sign: int
    log_abs: float

    def __post_init__(self):
        if self.sign not in (-1, 0, 1):
            raise ValueError("sign must be -1, 0 or 1")
        if self.sign == 0:
            object.__setattr__(self, "log_abs", -math.inf)
        elif math.isnan(self.log_abs) or self.log_abs == -math.inf:
            raise ValueError("nonzero LogNumber needs a finite or +inf log_abs")

    @classmethod
    def zero(cls) -> LogNumber:
        return cls(0, -math.inf)

    @classmethod
    def from_value(cls, value: float) -> LogNumber:
        if value == 0:
            return cls.zero()
        return cls(1 if value > 0 else -1, math.log(abs(value)))

    @property
    def log10_abs(self) -> float:
        return self.log_abs / math.log(10.0)

    def to_float(self) -> float:
        if self.sign == 0:
            return 0.0
        return self.sign * math.exp(self.log_abs)

    __float__ = to_float

    def __neg__(self) -> LogNumber:
        return LogNumber(-self.sign, self.log_abs)

    def __mul__(self, other) -> LogNumber:
        other = _coerce(other)
        if self.sign == 0 or other.sign == 0:
            return LogNumber.zero()
        return LogNumber(self.sign * other.sign, self.log_abs + other.log_abs)

    __rmul__ = __mul__

    def __truediv__(self, other) -> LogNumber:
        other = _coerce(other)
        if other.sign == 0:
            raise ZeroDivisionError("division by a zero LogNumber")
        if self.sign == 0:
            return LogNumber.zero()
        return LogNumber(self.sign * other.sign, self.log_abs - other.log_abs)

    def __add__(self, other) -> LogNumber:
        return log_sum([self, _coerce(other)])

    __radd__ = __add__

    def __sub__(self, other) -> LogNumber:
        return log_sum([self, -_coerce(other)])

    def __rsub__(self, other) -> LogNumber:
        return log_sum([_coerce(other), -self])

    def scaled(self, log_factor: float) -> LogNumber:
        if self.sign == 0:
            return self
        return LogNumber(self.sign, self.log_abs + log_factor)

    def ratio_to(self, other: LogNumber) -> float:
        """``self / other`` as a float (may overflow to inf)."""
        return (self / other).to_float()


def _coerce(value) -> LogNumber:
    if isinstance(value, LogNumber):
        return value
    return LogNumber.from_value(float(value))


def log_sum(terms, check_cancellation: float | None = None) -> LogNumber:
    """Exact-sign sum of LogNumbers.

    With ``check_cancellation=eps`` raises CancellationError when the result
    is smaller than ``eps`` times the largest term.
    """
    terms = [t for t in terms if t.sign != 0]
    if not terms:
        return LogNumber.zero()
    signs = np.array([t.sign for t in terms], dtype=float)
    logs = np.array([t.log_abs for t in terms], dtype=float)
    return signed_logsumexp(signs, logs, check_cancellation)


def signed_logsumexp(signs, logs, check_cancellation: float | None = None) -> LogNumber:
    """Sum of ``signs[i] * exp(logs[i])`` returned as a LogNumber."""
    signs = np.asarray(signs, dtype=float).ravel()
    logs = np.asarray(logs, dtype=float).ravel()
    keep = signs != 0
    signs, logs = signs[keep], logs[keep]
    if logs.size == 0:
        return LogNumber.zero()
    top = float(np.max(logs))
    if top == math.inf:
        raise OverflowError("infinite term in log-domain sum")
    scaled = np.exp(logs - top)
    pos = math.fsum(scaled[signs > 0])
    neg = math.fsum(scaled[signs < 0])
    total = pos - neg
    # the largest term has scaled magnitude exactly 1
    if check_cancellation is not None and abs(total) < check_cancellation:
        raise CancellationError(
            f"signed sum cancelled to {abs(total):.3e} of its largest part"
        )
    if total == 0:
        return LogNumber.zero()
    return LogNumber(1 if total > 0 else -1, top + math.log(abs(total)))
