"""Evolution of truncated moment vectors and the associated norm bounds.

Two independent integration routes are provided.  ``evolve_rk`` integrates the
truncated linear system with an adaptive embedded Runge-Kutta method and is
the production path; ``evolve_dyson`` sums the time-ordered (Picard) series
with nested quadrature and exists to cross-validate the first route and to
mirror the structure of the operator-norm bounds.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad, solve_ivp

from .errors import DomainError, StepFailureError
from .kinematics import apply_generator_array
from .seqspace import GeometricWeights, MomentVector, NormSpec, weighted_norm

DEFAULT_TOL = 1e-10

GEOMETRIC = "geometric"
FACTORIAL = "factorial"


@dataclass(frozen=True)
class PotentialTrajectory:
    """A potential V(tau) on some interval, with declared smoothness.

    ``continuity`` records the number of continuous derivatives the caller
    guarantees; ``jet_fn`` optionally supplies tau-jets for consumers that
    need derivatives of V.
    """

    fn: Callable[[float], float]
    continuity: float = math.inf
    jet_fn: Optional[Callable[[float, int], object]] = None

    def __call__(self, tau: float) -> float:
        return float(self.fn(tau))


def constant_potential(value: float) -> PotentialTrajectory:
    return PotentialTrajectory(lambda tau: value)


def sinusoid_potential(base: float, amplitude: float, frequency: float = 1.0) -> PotentialTrajectory:
    return PotentialTrajectory(lambda tau: base + amplitude * math.sin(frequency * tau))


@dataclass(frozen=True)
class BoundReport:
    """Evaluated operator-norm bound for the moment evolution.

    ``c_omega`` is the exponent constant (the omega = 0 variant in the
    factorial regime), ``shift_gain`` the weight-change constant K of that
    regime (None for geometric weights), and ``valid`` records whether the
    bound's smallness hypothesis holds; an invalid factorial bound is +inf.
    """

    c_omega: float
    shift_gain: Optional[float]
    bound: float
    regime: str
    valid: bool


def _potential_integral(v: PotentialTrajectory, tau0: float, tau1: float) -> float:
    if tau1 == tau0:
        return 0.0
    val, _ = quad(lambda t: math.sqrt(1.0 + v(t) ** 2), tau0, tau1, limit=200, epsabs=1e-13, epsrel=1e-13)
    return val


def _flat_rhs(v: PotentialTrajectory, n_rows: int) -> Callable[[float, np.ndarray], np.ndarray]:
    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        vt = v(t)
        if not math.isfinite(vt):
            # hand the step controller a rejected step rather than poisoning
            # the solution silently
            return np.full_like(y, np.nan)
        return apply_generator_array(y.reshape(n_rows, 3), vt).reshape(-1)

    return rhs


def moment_atol(entries: np.ndarray, tol: float) -> np.ndarray:
    """Per-component absolute tolerances anchored to each row's magnitude.

    Factorially growing tails put entries of vastly different size into one
    state vector; a scalar absolute tolerance would force the step controller
    to resolve rounding noise of the largest rows.
    """
    row_scale = 1.0 + np.max(np.abs(entries), axis=1)
    return tol * np.repeat(row_scale, 3)


def evolve_rk(
    m0: MomentVector,
    v: PotentialTrajectory,
    tau0: float,
    tau1: float,
    tol: float = DEFAULT_TOL,
    method: str = "DOP853",
) -> MomentVector:
    """Adaptive Runge-Kutta solution of M' = S(tau) M on the truncated subspace."""
    if tol <= 0:
        raise DomainError("tolerance must be positive")
    if tau1 == tau0:
        return m0
    n_rows = m0.order + 1
    sol = solve_ivp(
        _flat_rhs(v, n_rows),
        (tau0, tau1),
        m0.entries.reshape(-1),
        method=method,
        rtol=tol,
        atol=moment_atol(m0.entries, tol),
    )
    if not sol.success:
        raise StepFailureError(f"moment evolution failed on [{tau0}, {tau1}]: {sol.message}")
    return MomentVector(sol.y[:, -1].reshape(n_rows, 3))


def _cumulative_simpson(values: np.ndarray, h: float) -> np.ndarray:
    """Cumulative integral on a uniform grid with an odd number of nodes."""
    n = values.shape[0]
    if n % 2 == 0:
        raise ValueError("cumulative Simpson needs an odd node count")
    out = np.zeros_like(values)
    if n == 1:
        return out
    f0, f1, f2 = values[0:-2:2], values[1:-1:2], values[2::2]
    pair_inc = h * (f0 + 4.0 * f1 + f2) / 3.0
    even = np.cumsum(pair_inc, axis=0)
    out[2::2] = even
    half = h * (5.0 * f0 + 8.0 * f1 - f2) / 12.0
    out[1] = half[0]
    out[3::2] = even[:-1] + half[1:]
    return out


def evolve_dyson(
    m0: MomentVector,
    v: PotentialTrajectory,
    tau0: float,
    tau1: float,
    terms: int = 16,
    quad_nodes: int = 257,
) -> MomentVector:
    """Partial sum of the time-ordered series, terms U_0 through U_terms.

    Iterated integrals are evaluated in Picard form on a fixed composite
    Simpson grid; accuracy is controlled solely by ``terms`` and
    ``quad_nodes``.  For backward evolution the series alternates sign.
    """
    if terms < 1:
        raise DomainError("need at least one series term")
    if quad_nodes < 2:
        raise DomainError("need at least two quadrature nodes")
    if tau1 == tau0:
        return m0
    n_nodes = quad_nodes if quad_nodes % 2 == 1 else quad_nodes + 1
    # backward evolution is the forward Picard scheme in the reversed time
    # s = tau0 - tau with generator -S, which sums the inverse (sign-alternating
    # anti-ordered) series
    sign = 1.0 if tau1 > tau0 else -1.0
    span = abs(tau1 - tau0)
    grid = tau0 + sign * np.linspace(0.0, span, n_nodes)
    h = span / (n_nodes - 1)
    vs = np.array([v(t) for t in grid])
    if not np.all(np.isfinite(vs)):
        raise DomainError("potential is not finite on the integration grid")

    n_rows = m0.order + 1
    psi = np.broadcast_to(m0.entries, (n_nodes, n_rows, 3)).copy()
    total = m0.entries.copy()
    for _ in range(terms):
        integrand = np.empty_like(psi)
        ff, fp, pp = psi[..., 0], psi[..., 1], psi[..., 2]
        integrand[..., 0] = 2.0 * fp
        integrand[..., 1] = -vs[:, None] * ff + pp
        integrand[:, :-1, 1] += ff[:, 1:]
        integrand[..., 2] = -2.0 * vs[:, None] * fp
        integrand[:, :-1, 2] += 2.0 * fp[:, 1:]
        psi = sign * _cumulative_simpson(integrand, h)
        total = total + psi[-1]
    return MomentVector(total)


def geometric_bound(
    v: PotentialTrajectory, omega: float, tau0: float, tau1: float
) -> BoundReport:
    """Exponential norm bound exp(C_omega) valid on geometric-weight spaces."""
    if omega <= 0:
        raise DomainError("omega must be positive")
    c = 2.0 * omega * abs(tau1 - tau0) + 2.0 * abs(_potential_integral(v, tau0, tau1))
    return BoundReport(c_omega=c, shift_gain=None, bound=math.exp(c), regime=GEOMETRIC, valid=True)


def factorial_bound(
    v: PotentialTrajectory, omega: float, upsilon: float, tau0: float, tau1: float
) -> BoundReport:
    """Short-time norm bound between factorial-weight spaces.

    The weight-change constant is K = 2 upsilon omega / (upsilon - omega); the
    bound only exists while C_0 K < 1, and ``valid`` records that hypothesis.
    """
    if upsilon <= omega:
        raise DomainError(f"need upsilon > omega, got {upsilon} <= {omega}")
    if omega < 1:
        raise DomainError("factorial regime requires omega >= 1")
    c0 = 2.0 * abs(_potential_integral(v, tau0, tau1))
    gain = 2.0 * upsilon * omega / (upsilon - omega)
    ck = c0 * gain
    if ck < 1.0:
        correction = (
            (c0 * gain**3 / (2.0 * math.pi))
            * math.sqrt(upsilon / omega)
            * (3.0 - 2.0 * ck)
            / (1.0 - ck) ** 2
        )
        bound = math.exp(c0) + correction
        valid = True
    else:
        bound = math.inf
        valid = False
    return BoundReport(c_omega=c0, shift_gain=gain, bound=bound, regime=FACTORIAL, valid=valid)


def perturbation_gap(
    m: MomentVector,
    m_tilde: MomentVector,
    v: PotentialTrajectory,
    v_tilde: PotentialTrajectory,
    omega: float,
    tau0: float,
    tau1: float,
    tol: float = 1e-12,
) -> tuple[float, float]:
    """Evolved-state gap against its two-term perturbation bound.

    Returns (lhs, rhs) with lhs = ||U M - U~ M~|| in the sup norm with
    geometric weights omega**n, and rhs the bound
    exp(C) ||M - M~|| + 2 exp(C + C~) ||M~|| int |V - V~|.
    """
    spec = NormSpec(math.inf, GeometricWeights(1.0, omega))
    lhs = weighted_norm(
        evolve_rk(m, v, tau0, tau1, tol=tol) - evolve_rk(m_tilde, v_tilde, tau0, tau1, tol=tol),
        spec,
    )
    c = geometric_bound(v, omega, tau0, tau1).c_omega
    c_tilde = geometric_bound(v_tilde, omega, tau0, tau1).c_omega
    dv, _ = quad(lambda t: abs(v(t) - v_tilde(t)), tau0, tau1, limit=200, epsabs=1e-13, epsrel=1e-13)
    rhs = math.exp(c) * weighted_norm(m - m_tilde, spec) + 2.0 * math.exp(c + c_tilde) * weighted_norm(
        m_tilde, spec
    ) * abs(dv)
    return lhs, rhs
