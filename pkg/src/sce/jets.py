"""Truncated jet arithmetic for scalar functions of conformal time.

A :class:`TimeJet` stores a function value together with its first ``order``
tau-derivatives.  Binary operations truncate to the smaller operand order, so
derivative information degrades explicitly rather than silently: dividing an
order-4 jet by an order-2 jet yields an order-2 jet.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError

_Number = (int, float)


@dataclass(frozen=True)
class TimeJet:
    """Value plus tau-derivatives ``(f, f', ..., f^(d))`` of a scalar function."""

    derivs: tuple[float, ...]

    def __post_init__(self) -> None:
        vals = tuple(float(x) for x in self.derivs)
        if not vals:
            raise ValueError("a jet needs at least its value")
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"non-finite jet entries: {vals}")
        object.__setattr__(self, "derivs", vals)

    @staticmethod
    def constant(value: float, order: int = 0) -> "TimeJet":
        return TimeJet((float(value),) + (0.0,) * order)

    @property
    def order(self) -> int:
        return len(self.derivs) - 1

    @property
    def value(self) -> float:
        return self.derivs[0]

    def truncated(self, order: int) -> "TimeJet":
        if order > self.order:
            raise ValueError(f"cannot extend an order-{self.order} jet to order {order}")
        return TimeJet(self.derivs[: order + 1])

    def d(self) -> "TimeJet":
        """Tau-derivative jet, one order lower."""
        if self.order == 0:
            raise ValueError("order-0 jet carries no derivative information")
        return TimeJet(self.derivs[1:])

    def _coerce(self, other) -> "TimeJet | None":
        if isinstance(other, TimeJet):
            return other
        if isinstance(other, _Number):
            return TimeJet.constant(float(other), self.order)
        return None

    def __neg__(self) -> "TimeJet":
        return TimeJet(tuple(-v for v in self.derivs))

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        k = min(self.order, o.order)
        return TimeJet(tuple(self.derivs[i] + o.derivs[i] for i in range(k + 1)))

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        k = min(self.order, o.order)
        return TimeJet(tuple(self.derivs[i] - o.derivs[i] for i in range(k + 1)))

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o - self

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        k = min(self.order, o.order)
        out = tuple(
            math.fsum(math.comb(n, i) * self.derivs[i] * o.derivs[n - i] for i in range(n + 1))
            for n in range(k + 1)
        )
        return TimeJet(out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if o.derivs[0] == 0.0:
            raise DomainError("division by a jet with zero value")
        k = min(self.order, o.order)
        h: list[float] = []
        for n in range(k + 1):
            acc = self.derivs[n] - math.fsum(
                math.comb(n, i) * h[i] * o.derivs[n - i] for i in range(n)
            )
            h.append(acc / o.derivs[0])
        return TimeJet(tuple(h))

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o / self


def jet_exp(u: TimeJet) -> TimeJet:
    """exp(u) as a jet, via e^(k) = sum C(k-1, i) u^(i+1) e^(k-1-i)."""
    e = [math.exp(u.value)]
    for k in range(1, u.order + 1):
        e.append(
            math.fsum(math.comb(k - 1, i) * u.derivs[i + 1] * e[k - 1 - i] for i in range(k))
        )
    return TimeJet(tuple(e))
