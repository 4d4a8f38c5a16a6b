"""Certification flags carried by every reported number."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any


class Cert(str, enum.Enum):
    EXACT = "EXACT"
    LOWER = "LOWER"
    UPPER = "UPPER"
    ESTIMATE = "ESTIMATE"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class Flagged:
    """A value together with what it is known to be relative to the truth."""

    value: Any
    cert: Cert
    note: str = ""

    def __float__(self) -> float:
        return float(self.value)

    def __str__(self) -> str:
        return f"{_fmt(self.value)} {self.cert}"


@dataclass(frozen=True)
class CertifiedInterval:
    """Closed interval known to contain the true value."""

    lower: float
    upper: float
    lower_witness: Any = field(default=None, compare=False)
    upper_witness: Any = field(default=None, compare=False)

    def __post_init__(self):
        if self.lower > self.upper + 1e-9:
            raise ValueError(f"interval lower {self.lower} exceeds upper {self.upper}")

    @property
    def exact(self) -> bool:
        return self.upper - self.lower <= 1e-9

    @property
    def cert(self) -> Cert:
        return Cert.EXACT if self.exact else Cert.ESTIMATE

    def scaled(self, t: float) -> "CertifiedInterval":
        return CertifiedInterval(t * self.lower, t * self.upper, self.lower_witness, self.upper_witness)

    def __str__(self) -> str:
        if self.exact:
            return f"{_fmt(self.lower)} EXACT"
        return f"[{_fmt(self.lower)}, {_fmt(self.upper)}] LOWER/UPPER"


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)
