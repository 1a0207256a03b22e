"""Weighted sequence spaces and truncated moment vectors.

The state of the quantum field enters the dynamics as a truncated sequence of
triples (phi-phi, phi-pi, pi-pi).  Norm bounds for the evolution operator are
phrased on weighted l^p spaces whose weights grow either geometrically
(``c * omega**n``) or factorially (``(2n)! * omega**(2n)``); the R^3 factor of
each triple is measured in the max norm throughout, matching the matrix norms
used by the generator bounds.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DomainError

_SCAN_LIMIT = 4096


@dataclass(frozen=True)
class GeometricWeights:
    """w_n = c * omega**n with c, omega > 0."""

    c: float
    omega: float

    def __post_init__(self) -> None:
        if not (self.c > 0 and math.isfinite(self.c)):
            raise DomainError(f"c must be positive, got {self.c}")
        if not (self.omega > 0 and math.isfinite(self.omega)):
            raise DomainError(f"omega must be positive, got {self.omega}")

    def weight(self, n: int) -> float:
        return self.c * self.omega**n

    def log_weight(self, n: int) -> float:
        return math.log(self.c) + n * math.log(self.omega)

    def weights(self, count: int) -> np.ndarray:
        return self.c * self.omega ** np.arange(count, dtype=float)


@dataclass(frozen=True)
class FactorialWeights:
    """w_n = (2n)! * omega**(2n) with omega > 0."""

    omega: float

    def __post_init__(self) -> None:
        if not (self.omega > 0 and math.isfinite(self.omega)):
            raise DomainError(f"omega must be positive, got {self.omega}")

    def weight(self, n: int) -> float:
        return math.exp(self.log_weight(n))

    def log_weight(self, n: int) -> float:
        return math.lgamma(2 * n + 1) + 2 * n * math.log(self.omega)

    def weights(self, count: int) -> np.ndarray:
        n = np.arange(count, dtype=float)
        from scipy.special import gammaln

        return np.exp(gammaln(2 * n + 1) + 2 * n * math.log(self.omega))


@dataclass(frozen=True)
class ExplicitWeights:
    """An explicit finite table of positive weights."""

    values: tuple[float, ...]

    def __post_init__(self) -> None:
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise DomainError("explicit weights need at least one entry")
        if not all(math.isfinite(v) and v > 0 for v in vals):
            raise DomainError("explicit weights must be finite and positive")
        object.__setattr__(self, "values", vals)

    def weight(self, n: int) -> float:
        return self.values[n]

    def log_weight(self, n: int) -> float:
        return math.log(self.values[n])

    def weights(self, count: int) -> np.ndarray:
        if count > len(self.values):
            raise DomainError(
                f"explicit weight table has {len(self.values)} entries, {count} requested"
            )
        return np.asarray(self.values[:count], dtype=float)


WeightSpec = Union[GeometricWeights, FactorialWeights, ExplicitWeights]


@dataclass(frozen=True)
class MomentVector:
    """Truncated moment sequence: entries[n] = (M_ff_n, M_fp_n, M_pp_n).

    ``order`` is the largest retained index N; the infinite tail is treated as
    zero, which is invariant under the moment dynamics.
    """

    entries: np.ndarray

    def __post_init__(self) -> None:
        e = np.array(self.entries, dtype=float)
        if e.ndim != 2 or e.shape[1] != 3 or e.shape[0] < 1:
            raise ValueError(f"entries must have shape (N+1, 3), got {e.shape}")
        if not np.all(np.isfinite(e)):
            raise ValueError("non-finite moment entries")
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    @staticmethod
    def zeros(order: int) -> "MomentVector":
        return MomentVector(np.zeros((order + 1, 3)))

    @property
    def order(self) -> int:
        return self.entries.shape[0] - 1

    def triple(self, n: int) -> tuple[float, float, float]:
        row = self.entries[n]
        return (float(row[0]), float(row[1]), float(row[2]))

    def __add__(self, other: "MomentVector") -> "MomentVector":
        if not isinstance(other, MomentVector):
            return NotImplemented
        if other.order != self.order:
            raise ValueError("moment vectors of different order")
        return MomentVector(self.entries + other.entries)

    def __sub__(self, other: "MomentVector") -> "MomentVector":
        if not isinstance(other, MomentVector):
            return NotImplemented
        if other.order != self.order:
            raise ValueError("moment vectors of different order")
        return MomentVector(self.entries - other.entries)

    def __mul__(self, scalar: float) -> "MomentVector":
        if not isinstance(scalar, (int, float)):
            return NotImplemented
        return MomentVector(self.entries * float(scalar))

    __rmul__ = __mul__


@dataclass(frozen=True)
class NormSpec:
    """l^p norm over the weighted sequence, max norm on each R^3 triple."""

    p: float
    weights: WeightSpec

    def __post_init__(self) -> None:
        if not self.p >= 1:
            raise DomainError(f"p must be >= 1 (or inf), got {self.p}")


def weighted_norm(m: MomentVector, spec: NormSpec) -> float:
    """Weighted l^p norm of a moment vector; returns sup for p = inf."""
    amp = np.max(np.abs(m.entries), axis=1)
    ratios = amp / spec.weights.weights(m.order + 1)
    if math.isinf(spec.p):
        return float(np.max(ratios))
    return float(np.sum(ratios**spec.p) ** (1.0 / spec.p))


def left_shift(m: MomentVector) -> MomentVector:
    """(LM)_n = M_{n+1}; drops the leading triple and the order by one."""
    if m.order < 1:
        raise DomainError("cannot shift an order-0 moment vector")
    return MomentVector(m.entries[1:])


def _explicit_window(w: WeightSpec, v: WeightSpec, m: int) -> int | None:
    """Largest scan index imposed by explicit weight tables, if any."""
    top: int | None = None
    if isinstance(w, ExplicitWeights):
        top = len(w.values) - 1 - m
    if isinstance(v, ExplicitWeights):
        t = len(v.values) - 1
        top = t if top is None else min(top, t)
    return top


def shift_norm_bound(w: WeightSpec, v: WeightSpec, m: int = 1) -> float:
    """Operator bound sup_n w_{n+m} / v_n for the m-fold left shift.

    Maps from the w-weighted space into the v-weighted space; returns ``inf``
    when the shift is unbounded between the two spaces.
    """
    if m < 0:
        raise DomainError("shift count must be non-negative")

    if isinstance(w, GeometricWeights) and isinstance(v, GeometricWeights):
        # ratio = (c_w/c_v) * omega^m * (omega/upsilon)^n
        if w.omega > v.omega:
            return math.inf
        return (w.c / v.c) * w.omega**m

    if isinstance(w, FactorialWeights) and isinstance(v, FactorialWeights):
        if w.omega > v.omega or (w.omega == v.omega and m > 0):
            return math.inf
        # multiplicative recurrence keeps small cases exact
        ratio = math.factorial(2 * m) * w.omega ** (2 * m)
        best = ratio
        q = (w.omega / v.omega) ** 2
        for n in range(_SCAN_LIMIT):
            factor = (
                (2 * n + 2 * m + 2) * (2 * n + 2 * m + 1) / ((2 * n + 2) * (2 * n + 1))
            ) * q
            ratio *= factor
            best = max(best, ratio)
            if factor <= 1.0:
                # the per-step factor decreases monotonically, so once at or
                # below one the ratios never rise again
                break
        return best

    if isinstance(w, FactorialWeights) and isinstance(v, GeometricWeights):
        return math.inf

    top = _explicit_window(w, v, m)
    if top is not None and top < 0:
        raise DomainError("explicit weight table too short for this shift")
    limit = _SCAN_LIMIT if top is None else top + 1

    best = -math.inf
    rising_tail = 0
    prev = -math.inf
    for n in range(limit):
        lr = w.log_weight(n + m) - v.log_weight(n)
        best = max(best, lr)
        rising_tail = rising_tail + 1 if lr >= prev else 0
        prev = lr
    if top is None and rising_tail >= 64:
        return math.inf
    return math.exp(best)
