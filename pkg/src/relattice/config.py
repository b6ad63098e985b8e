"""Run configuration: working precision, tolerance exponents, grids, output.

Tolerances are stated as fractions of the working precision: a check at
``prec`` bits with fraction ``f`` passes when the residual is at most
``2^(-f * prec)`` (relative to the natural scale of the quantity).
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from pathlib import Path

DEFAULT_PREC = 256
MAX_PREC = 1 << 14
PREC_ENV = "RELATTICE_PREC"


@dataclass(frozen=True)
class Tolerances:
    zero_block: Fraction = Fraction(1, 2)
    identity_residual: Fraction = Fraction(1, 2)
    round_trip: Fraction = Fraction(1, 4)
    # successive condition numbers must agree to 2^-cond_agreement_bits
    cond_agreement_bits: int = 32

    def exponent(self, name: str, prec: int) -> int:
        frac = getattr(self, name)
        return -int(frac * prec)


TOLERANCES = Tolerances()


def default_precision() -> int:
    raw = os.environ.get(PREC_ENV)
    if raw is None:
        return DEFAULT_PREC
    try:
        prec = int(raw)
    except ValueError:
        raise ValueError(f"{PREC_ENV}={raw!r} is not an integer") from None
    if prec < 53:
        raise ValueError(f"{PREC_ENV} must be at least 53 bits")
    return prec


@dataclass
class RunConfig:
    precision_bits: int = field(default_factory=default_precision)
    zero_block: str = "1/2"
    round_trip: str = "1/4"
    identity_residual: str = "1/2"
    r_range: tuple[int, int] = (2, 4)
    p_range: tuple[int, int] = (3, 7)
    q_range: tuple[int, int] | None = None
    output: str = "text"
    seed: int = 0
    jobs: int = 1

    def __post_init__(self):
        if self.precision_bits < 53:
            raise ValueError("precision_bits must be at least 53")
        if self.output not in ("json", "csv", "text"):
            raise ValueError(f"unknown output format {self.output!r}")
        lo, hi = self.r_range
        if lo < 2 or hi < lo:
            raise ValueError("r range must satisfy 2 <= lo <= hi")
        self.r_range = (int(lo), int(hi))
        self.p_range = tuple(int(v) for v in self.p_range)
        if self.q_range is not None:
            self.q_range = tuple(int(v) for v in self.q_range)

    @property
    def tolerances(self) -> Tolerances:
        return Tolerances(
            zero_block=Fraction(self.zero_block),
            round_trip=Fraction(self.round_trip),
            identity_residual=Fraction(self.identity_residual),
        )

    @classmethod
    def from_file(cls, path: str | Path, **overrides) -> "RunConfig":
        data = json.loads(Path(path).read_text())
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        for key in ("r_range", "p_range", "q_range"):
            if data.get(key) is not None:
                data[key] = tuple(data[key])
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**data)

    def to_dict(self) -> dict:
        return asdict(self)
