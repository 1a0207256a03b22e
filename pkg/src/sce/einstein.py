"""Traced and energy components of the semiclassical field equations on flat
homogeneous backgrounds, and the coupled scale-factor/moment integrator.

Residual conventions
--------------------
Both residuals are scaled by 1/kappa relative to the raw tensor components,
matching the expanded forms the solver integrates:

* trace residual   = R/kappa + <T>     (zero iff the traced equation holds),
* energy residual  = <T_00> - G_00/kappa  (zero iff the energy constraint holds).

The zero sets are unchanged by this scaling and the energy residual still
obeys the propagation law d(res)/dtau = -2 (a'/a) res along trace solutions.
"""
from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline

from .errors import DomainError, SingularityError, StepFailureError
from .jets import TimeJet, jet_exp
from .kinematics import (
    CouplingParams,
    PI2,
    apply_generator_array,
    potential,
    thermal_moments,
    stationary_moments,
)
from .propagator import _cumulative_simpson, moment_atol
from .seqspace import MomentVector

Triple = Sequence[float]

DEFAULT_TOL = 1e-10
POLE_RTOL = 1e-8
A_FLOOR = 1e-8
A_CEILING = 1e6

HALT_COMPLETED = "completed"
HALT_SCALE_FACTOR_ZERO = "scale-factor-zero"
HALT_BLOW_UP = "blow-up"
HALT_LOG_POLE = "log-pole"
HALT_HUBBLE_POLE = "hubble-pole"


class SolverMode(enum.Enum):
    FOURTH_ORDER = "fourth-order"
    CONFORMAL = "conformal-second-order"


@dataclass(frozen=True)
class PhysicsParams:
    """Couplings, renormalisation constants and the free log scale."""

    coupling: CouplingParams
    kappa: float
    c1: float
    c2: float
    c3: float
    c4: float
    lam0: float

    def __post_init__(self) -> None:
        if not (self.kappa > 0 and math.isfinite(self.kappa)):
            raise DomainError(f"kappa must be positive, got {self.kappa}")
        if not (self.lam0 > 0 and math.isfinite(self.lam0)):
            raise DomainError(f"lambda0 must be positive, got {self.lam0}")
        for name in ("c1", "c2", "c3", "c4"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")


@dataclass(frozen=True)
class ScaleFactorJet:
    """Scale factor and conformal-time derivatives (a, a', a'', a''' [, a''''])."""

    a: float
    a1: float = 0.0
    a2: float = 0.0
    a3: float = 0.0
    a4: Optional[float] = None

    def __post_init__(self) -> None:
        if not (self.a > 0 and math.isfinite(self.a)):
            raise DomainError(f"scale factor must be positive, got {self.a}")

    def require_a4(self) -> float:
        if self.a4 is None:
            raise ValueError("this operation needs the fourth derivative a4")
        return self.a4

    def as_timejet(self) -> TimeJet:
        vals = (self.a, self.a1, self.a2, self.a3)
        if self.a4 is not None:
            vals = vals + (self.a4,)
        return TimeJet(vals)


@dataclass(frozen=True)
class BackgroundField:
    """Conformally rescaled classical background pair (a*phi, d(a*phi)/dtau)."""

    phi: float = 0.0
    pi: float = 0.0

    def is_zero(self) -> bool:
        return self.phi == 0.0 and self.pi == 0.0


@dataclass(frozen=True)
class SCEInitialData:
    jet: ScaleFactorJet
    moments: MomentVector
    background: BackgroundField = BackgroundField()


@dataclass(frozen=True)
class SCETrajectory:
    """Sampled solution with per-sample diagnostics.

    ``a4`` is NaN in second-order modes, where the fourth derivative is not
    part of the dynamics.
    """

    tau: np.ndarray
    a: np.ndarray
    a1: np.ndarray
    a2: np.ndarray
    a3: np.ndarray
    a4: np.ndarray
    moments: np.ndarray
    background: np.ndarray
    ricci: np.ndarray
    g00: np.ndarray
    trace_residual: np.ndarray
    energy_residual: np.ndarray
    mode: SolverMode
    halt_reason: str = HALT_COMPLETED
    halt_tau: Optional[float] = None
    picard_gaps: Optional[tuple[float, ...]] = None

    def __post_init__(self) -> None:
        if np.any(np.diff(self.tau) <= 0):
            raise ValueError("sample times must be strictly increasing")

    @property
    def n_samples(self) -> int:
        return self.tau.size

    def jet(self, i: int) -> ScaleFactorJet:
        a4 = float(self.a4[i])
        return ScaleFactorJet(
            float(self.a[i]),
            float(self.a1[i]),
            float(self.a2[i]),
            float(self.a3[i]),
            None if math.isnan(a4) else a4,
        )

    def moment_vector(self, i: int) -> MomentVector:
        return MomentVector(self.moments[i])

    def background_field(self, i: int) -> BackgroundField:
        return BackgroundField(float(self.background[i, 0]), float(self.background[i, 1]))


# ---------------------------------------------------------------------------
# pointwise equations


def v1_coincidence(jet: ScaleFactorJet, p: PhysicsParams) -> float:
    """State-independent coincidence limit entering the renormalised trace."""
    a4 = jet.require_a4()
    a, a1, a2, a3 = jet.a, jet.a1, jet.a2, jet.a3
    m, xi = p.coupling.m, p.coupling.xi
    six = 6.0 * xi - 1.0
    return (
        m**4 / 8.0
        + (a1**4 / a**8 - a2 * a1**2 / a**7) / 60.0
        + six * m**2 * a2 / (4.0 * a**3)
        + six**2 * a2**2 / (8.0 * a**6)
        + (5.0 * xi - 1.0)
        / 20.0
        * (6.0 * a2 * a1**2 / a**7 - 3.0 * a2**2 / a**6 - 4.0 * a3 * a1 / a**6 + a4 / a**5)
    )


def _background_trace(a: float, a1: float, a2: float, bg: BackgroundField, p: PhysicsParams) -> float:
    if bg.is_zero():
        return 0.0
    m, xi = p.coupling.m, p.coupling.xi
    six = 6.0 * xi - 1.0
    phi = bg.phi / a
    phidot = bg.pi / a - bg.phi * a1 / a**2
    ricci = 6.0 * a2 / a**3
    return (six * (xi * ricci + m**2) - m**2) * phi**2 - six * phidot**2 / a**2


def _background_energy(a: float, a1: float, bg: BackgroundField, p: PhysicsParams) -> float:
    if bg.is_zero():
        return 0.0
    m, xi = p.coupling.m, p.coupling.xi
    phi = bg.phi / a
    phidot = bg.pi / a - bg.phi * a1 / a**2
    g00 = 3.0 * a1**2 / a**2
    return (
        0.5 * phidot**2
        + 0.5 * a**2 * m**2 * phi**2
        + xi * (g00 * phi**2 + 3.0 * (a1 / a) * 2.0 * phi * phidot)
    )


def _a4_coefficient(a: float, p: PhysicsParams) -> tuple[float, float]:
    """Coefficient of the fourth-derivative bracket, with a positivity scale."""
    xi = p.coupling.xi
    six = 6.0 * xi - 1.0
    log_term = math.log(a * p.lam0)
    coeff = (
        -12.0 * (3.0 * p.c3 + p.c4)
        - 1.0 / (480.0 * PI2)
        + six / (48.0 * PI2)
        + six**2 * log_term / (16.0 * PI2)
    )
    scale = (
        12.0 * abs(3.0 * p.c3 + p.c4)
        + 1.0 / (480.0 * PI2)
        + abs(six) / (48.0 * PI2)
        + six**2 * abs(log_term) / (16.0 * PI2)
    )
    return coeff, scale


def _trace_terms(
    a: float,
    a1: float,
    a2: float,
    a3: float,
    a4: float,
    m0: Triple,
    m1: Triple,
    bg: BackgroundField,
    p: PhysicsParams,
) -> np.ndarray:
    """Additive contributions of the expanded traced equation (long form)."""
    m, xi = p.coupling.m, p.coupling.xi
    six = 6.0 * xi - 1.0
    log_term = math.log(a * p.lam0)
    coeff, _ = _a4_coefficient(a, p)
    mff0, mfp0, mpp0 = m0
    mff1 = m1[0]
    return np.array(
        [
            coeff * a4 / a**5,
            coeff * (-4.0 * a3 * a1 / a**6 - 3.0 * a2**2 / a**6 + 6.0 * a2 * a1**2 / a**7),
            six**2 / (32.0 * PI2) * (4.0 * a3 * a1 / a**6 + 3.0 * a2**2 / a**6 - 10.0 * a2 * a1**2 / a**7),
            (-a2 * a1**2 / a**7 + a1**4 / a**8) / (240.0 * PI2),
            (
                6.0 / p.kappa
                + m**2 * (-6.0 * p.c2 + 1.0 / (48.0 * PI2) + six * (1.0 + log_term) / (8.0 * PI2))
            )
            * a2
            / a**3,
            six * m**2 * a1**2 / (16.0 * PI2 * a**4),
            m**4 * (4.0 * p.c1 + 1.0 / (32.0 * PI2) + log_term / (8.0 * PI2)),
            -(m**2) * mff0 / a**2,
            six
            * (
                (6.0 * xi * a2 / a**5 - a1**2 / a**6 + m**2 / a**2) * mff0
                + 2.0 * a1 * mfp0 / a**5
                - (mpp0 + mff1) / a**4
            ),
            _background_trace(a, a1, a2, bg, p),
        ]
    )


def trace_terms(
    jet: ScaleFactorJet, m0: Triple, m1: Triple, bg: BackgroundField, p: PhysicsParams
) -> np.ndarray:
    """Term-by-term values of the traced equation at a full jet (a4 required)."""
    return _trace_terms(jet.a, jet.a1, jet.a2, jet.a3, jet.require_a4(), m0, m1, bg, p)


def trace_rhs(
    jet: ScaleFactorJet,
    m0: Triple,
    m1: Triple,
    bg: BackgroundField,
    p: PhysicsParams,
    pole_rtol: float = POLE_RTOL,
) -> float:
    """The unique a'''' solving the traced equation at this state.

    Raises :class:`SingularityError` when the fourth-derivative coefficient is
    degenerate (the logarithmic pole, or exactly conformal parameters).
    """
    if jet.a <= 0:
        raise DomainError("scale factor must be positive")
    coeff, scale = _a4_coefficient(jet.a, p)
    if abs(coeff) <= pole_rtol * scale:
        raise SingularityError(
            HALT_LOG_POLE, detail="fourth-derivative coefficient vanishes at this scale factor"
        )
    terms = _trace_terms(jet.a, jet.a1, jet.a2, jet.a3, 0.0, m0, m1, bg, p)
    return -float(np.sum(terms[1:])) * jet.a**5 / coeff


def trace_residual(
    jet: ScaleFactorJet, m0: Triple, m1: Triple, bg: BackgroundField, p: PhysicsParams
) -> float:
    """Value of the expanded traced equation at a full jet (zero on solutions)."""
    return float(np.sum(trace_terms(jet, m0, m1, bg, p)))


def _regularization_differences(a_jet: TimeJet, p: PhysicsParams) -> tuple[float, float, float, float]:
    """Counterterm mismatches (d_ff, d_fp, d_pp, d_laplacian_ff) at coincidence.

    These are the corrections translating moment data into the coincidence
    limits consumed by the component form of the stress-energy expressions.
    """
    a, a1, a2, a3, a4 = a_jet.derivs
    v = potential(a_jet, p.coupling)
    v0, v1, v2 = v.derivs
    log_term = math.log(a * p.lam0)
    dq1 = a2 / a - (a1 / a) ** 2
    dq2 = a3 / a - a2 * a1 / a**2
    d2q2 = a4 / a - 2.0 * a3 * a1 / a**2 - a2**2 / a**2 + 2.0 * a2 * a1**2 / a**3
    d_ff = v0 * log_term / (8.0 * PI2) + a2 / (48.0 * PI2 * a)
    d_fp = v1 * log_term / (16.0 * PI2) + (6.0 * v0 * a1 / a + dq2) / (96.0 * PI2)
    d_pp = (
        (v0**2 + v2) * log_term / (32.0 * PI2)
        + (dq1**2 + 2.0 * (a2 / a) ** 2 + 4.0 * d2q2) / (960.0 * PI2)
        + (3.0 * v0**2 - 6.0 * v0 * (a1 / a) ** 2 + 4.0 * v0 * a2 / a + 12.0 * v1 * a1 / a + v2)
        / (192.0 * PI2)
    )
    d_lap_ff = (
        (3.0 * v0**2 + v2) * (5.0 / 6.0 + log_term) / (32.0 * PI2)
        + v0 * (a1 / a) ** 2 / (32.0 * PI2)
        + (11.0 * dq1**2 - 2.0 * (a2 / a) ** 2 + 12.0 * (a1 / a) * dq2) / (960.0 * PI2)
    )
    return d_ff, d_fp, d_pp, d_lap_ff


def trace_from_components(
    jet: ScaleFactorJet, m0: Triple, m1: Triple, bg: BackgroundField, p: PhysicsParams
) -> float:
    """Traced-equation residual assembled from its component pieces.

    Builds the renormalised trace out of coincidence limits, the counterterm
    mismatches and the geometric coincidence term, instead of the expanded
    long form; agreement of the two routes is a transcription check.
    """
    a4 = jet.require_a4()
    a, a1, a2, a3 = jet.a, jet.a1, jet.a2, jet.a3
    if a <= 0:
        raise DomainError("scale factor must be positive")
    m, xi = p.coupling.m, p.coupling.xi
    six = 6.0 * xi - 1.0
    a_jet = jet.as_timejet()
    d_ff, d_fp, d_pp, d_lap_ff = _regularization_differences(a_jet, p)
    mff0, mfp0, mpp0 = m0
    mff1 = m1[0]

    ricci = 6.0 * a2 / a**3
    box_r = 6.0 * (a4 / a**5 - 4.0 * a3 * a1 / a**6 - 3.0 * a2**2 / a**6 + 6.0 * a2 * a1**2 / a**7)

    w00 = (mff0 - d_ff) / a**2
    w_lap = (mff1 - d_lap_ff) / a**2
    w_tt = (
        (mpp0 - d_pp) / a**2
        + a1**2 * (mff0 - d_ff) / a**4
        - 2.0 * a1 * (mfp0 - d_fp) / a**3
    )

    trace = (
        (six * (xi * ricci + m**2) - m**2) * w00
        - six * (w_lap + w_tt) / a**2
        - (9.0 * xi - 2.0) * v1_coincidence(jet, p) / (2.0 * PI2)
        + 4.0 * p.c1 * m**4
        - p.c2 * m**2 * ricci
        - (6.0 * p.c3 + 2.0 * p.c4) * box_r
        + _background_trace(a, a1, a2, bg, p)
    )
    return ricci / p.kappa + trace


def energy_terms(
    jet: ScaleFactorJet, m0: Triple, m1: Triple, bg: BackgroundField, p: PhysicsParams
) -> np.ndarray:
    """Additive contributions of the expanded energy constraint."""
    a, a1, a2, a3 = jet.a, jet.a1, jet.a2, jet.a3
    if a <= 0:
        raise DomainError("scale factor must be positive")
    m, xi = p.coupling.m, p.coupling.xi
    six = 6.0 * xi - 1.0
    log_term = math.log(a * p.lam0)
    mff0, mfp0, mpp0 = m0
    mff1 = m1[0]
    third_coeff = (
        6.0 * (3.0 * p.c3 + p.c4)
        + 1.0 / (960.0 * PI2)
        - six / (96.0 * PI2)
        - six**2 * log_term / (32.0 * PI2)
    )
    return np.array(
        [
            third_coeff * (2.0 * a3 * a1 / a**4 - a2**2 / a**4 - 4.0 * a2 * a1**2 / a**5),
            -(six**2) * a2 * a1**2 / (16.0 * PI2 * a**5),
            a1**4 / (960.0 * PI2 * a**6),
            (
                -3.0 / p.kappa
                + m**2 * (3.0 * p.c2 - 1.0 / (96.0 * PI2) - six * (1.0 + log_term) / (16.0 * PI2))
            )
            * a1**2
            / a**2,
            -(m**4) * (p.c1 + log_term / (32.0 * PI2)) * a**2,
            0.5 * m**2 * mff0,
            six * (-(a1**2) * mff0 / (2.0 * a**4) + a1 * mfp0 / a**3),
            (mpp0 - mff1) / (2.0 * a**2),
            _background_energy(a, a1, bg, p),
        ]
    )


def energy_residual(
    jet: ScaleFactorJet, m0: Triple, m1: Triple, bg: BackgroundField, p: PhysicsParams
) -> float:
    """Energy-constraint residual <T_00> - G_00/kappa; zero on admissible data."""
    return float(np.sum(energy_terms(jet, m0, m1, bg, p)))


CONFORMAL_XI = 1.0 / 6.0


def conformal_combo(p: PhysicsParams) -> float:
    """3 c3 + c4 offset from the value that removes all higher derivatives."""
    return 3.0 * p.c3 + p.c4 + 1.0 / (5760.0 * PI2)


def is_conformal_reduced(p: PhysicsParams, rtol: float = 1e-12) -> bool:
    """True when the parameters drop every third and fourth order term."""
    return abs(p.coupling.xi - CONFORMAL_XI) <= rtol and abs(conformal_combo(p)) <= rtol / (
        5760.0 * PI2
    ) + rtol * abs(3.0 * p.c3 + p.c4)


def conformal_rhs(
    a: float, a1: float, m_ff0: float, p: PhysicsParams, pole_rtol: float = POLE_RTOL
) -> float:
    """Second-order acceleration in the conformally reduced case.

    Only valid for xi = 1/6 with the higher-derivative terms cancelled; the
    denominator vanishes at a critical squared Hubble rate, which is reported
    as a pole.
    """
    if a <= 0:
        raise DomainError("scale factor must be positive")
    if not is_conformal_reduced(p):
        raise DomainError(
            "conformal reduction requires xi = 1/6 and the cancelling higher-derivative constants"
        )
    m = p.coupling.m
    den = a1**2 / a**4 - 1440.0 * PI2 / p.kappa + (1440.0 * PI2 * p.c2 - 5.0) * m**2
    den_scale = a1**2 / a**4 + 1440.0 * PI2 / p.kappa + abs(1440.0 * PI2 * p.c2 - 5.0) * m**2
    if abs(den) <= pole_rtol * den_scale:
        raise SingularityError(HALT_HUBBLE_POLE, detail="critical Hubble rate reached")
    num = (
        a1**4 / a**5
        + 0.5 * m**4 * a**3 * (1920.0 * PI2 * p.c1 + 15.0 + 60.0 * math.log(a * p.lam0))
        - 240.0 * PI2 * m**2 * a * m_ff0
    )
    return num / den


def _degenerate_a2(
    a: float, a1: float, m0: Triple, bg: BackgroundField, p: PhysicsParams, pole_rtol: float = POLE_RTOL
) -> float:
    """Acceleration from the long-form trace equation when it degenerates.

    With exactly conformal parameters the fourth- and third-order brackets
    carry zero coefficients, leaving an equation linear in a''.  This is an
    independent transcription of the reduction behind :func:`conformal_rhs`.
    """
    m = p.coupling.m
    log_term = math.log(a * p.lam0)
    mff0 = m0[0]
    # coefficient of a2 and the a2-free remainder of the degenerate equation
    coeff = -(a1**2) / (240.0 * PI2 * a**7) + (
        6.0 / p.kappa + m**2 * (-6.0 * p.c2 + 1.0 / (48.0 * PI2))
    ) / a**3
    rest = (
        a1**4 / (240.0 * PI2 * a**8)
        + m**4 * (4.0 * p.c1 + 1.0 / (32.0 * PI2) + log_term / (8.0 * PI2))
        - m**2 * mff0 / a**2
        + _background_trace(a, a1, 0.0, bg, p)
    )
    scale = abs(a1**2 / (240.0 * PI2 * a**7)) + abs(
        (6.0 / p.kappa + m**2 * (-6.0 * p.c2 + 1.0 / (48.0 * PI2))) / a**3
    )
    if abs(coeff) <= pole_rtol * scale:
        raise SingularityError(HALT_HUBBLE_POLE, detail="critical Hubble rate reached")
    return -rest / coeff


def calibrate_c1(m_pp0: float, m: float, lam0: float) -> float:
    """Cosmological-constant counterterm making the static energy residual vanish.

    The physics is independent of the free scale: doubling lam0 shifts c1 by
    -log(2)/(32 pi^2) and leaves the residuals at the calibration point
    unchanged.
    """
    if m <= 0:
        raise DomainError("c1 calibration needs m > 0; the constant decouples at m = 0")
    if lam0 <= 0:
        raise DomainError("lambda0 must be positive")
    return m_pp0 / m**4 - math.log(lam0) / (32.0 * PI2)


def static_thermal_state(beta: float, m: float, order: int) -> MomentVector:
    """Stationary moment vector carrying the thermal energy density.

    A genuinely massless thermal state cannot statically source flat space
    (its radiation pressure leaves a nonzero trace), so this reference
    configuration keeps the thermal M_pp_0, cancels the static trace through
    M_ff_1, and completes the tail with the thermal phi-phi profile under the
    massive stationarity relation.
    """
    if m <= 0:
        raise DomainError("the static thermal configuration needs m > 0")
    if order < 2:
        raise DomainError("order must be at least 2")
    th = thermal_moments(beta, order)
    pp0 = th.entries[0, 2]
    ff1 = 3.0 * pp0 + m**4 / (32.0 * PI2)
    ff0 = (pp0 + ff1) / m**2
    profile = np.concatenate(([ff0, ff1], th.entries[2:, 0]))
    return stationary_moments(profile, m)


def background_rhs(bg: BackgroundField, v: float) -> BackgroundField:
    """Time derivative of the rescaled background pair: (pi, -V phi)."""
    return BackgroundField(bg.pi, -v * bg.phi)


# ---------------------------------------------------------------------------
# coupled integration


def _potential_value(a: float, a2: float, coupling: CouplingParams) -> float:
    return (6.0 * coupling.xi - 1.0) * a2 / a + coupling.m**2 * a**2


def _count_jet(mode: SolverMode, degenerate: bool) -> int:
    if mode is SolverMode.FOURTH_ORDER and not degenerate:
        return 4
    return 2


class _System:
    """Packs/unpacks the joint state and provides the RHS plus halt events."""

    def __init__(
        self,
        params: PhysicsParams,
        mode: SolverMode,
        order: int,
        degenerate: bool,
        pole_rtol: float,
        a_floor: float,
        a_ceiling: float,
        a4_blend: Optional[Callable[[float, np.ndarray, float], float]] = None,
    ):
        self.p = params
        self.mode = mode
        self.order = order
        self.degenerate = degenerate
        self.pole_rtol = pole_rtol
        self.a_floor = a_floor
        self.a_ceiling = a_ceiling
        self.n_jet = _count_jet(mode, degenerate)
        self.a4_blend = a4_blend

    def pack(self, jet: ScaleFactorJet, bg: BackgroundField, m: MomentVector) -> np.ndarray:
        head = [jet.a, jet.a1, jet.a2, jet.a3][: self.n_jet]
        return np.concatenate([head, [bg.phi, bg.pi], m.entries.reshape(-1)])

    def atol(self, y0: np.ndarray, tol: float) -> np.ndarray:
        head = tol * (1.0 + np.abs(y0[: self.n_jet + 2]))
        tail = moment_atol(y0[self.n_jet + 2 :].reshape(self.order + 1, 3), tol)
        return np.concatenate([head, tail])

    def unpack(self, y: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        nj = self.n_jet
        return y[:nj], y[nj : nj + 2], y[nj + 2 :].reshape(self.order + 1, 3)

    def acceleration(self, jet: np.ndarray, moments: np.ndarray, bg: np.ndarray) -> float:
        m0 = moments[0]
        if self.mode is SolverMode.CONFORMAL:
            return conformal_rhs(jet[0], jet[1], m0[0], self.p, self.pole_rtol)
        return _degenerate_a2(
            jet[0], jet[1], m0, BackgroundField(bg[0], bg[1]), self.p, self.pole_rtol
        )

    def rhs(self, t: float, y: np.ndarray) -> np.ndarray:
        jet, bg, moments = self.unpack(y)
        a = jet[0]
        if not np.all(np.isfinite(y)) or a <= 0:
            return np.full_like(y, np.nan)
        out = np.empty_like(y)
        try:
            if self.n_jet == 4:
                a4 = trace_rhs(
                    ScaleFactorJet(a, jet[1], jet[2], jet[3]),
                    moments[0],
                    moments[1],
                    BackgroundField(bg[0], bg[1]),
                    self.p,
                    self.pole_rtol,
                )
                if self.a4_blend is not None:
                    a4 = self.a4_blend(t, jet, a4)
                out[:4] = (jet[1], jet[2], jet[3], a4)
                a2 = jet[2]
            else:
                a2 = self.acceleration(jet, moments, bg)
                out[:2] = (jet[1], a2)
        except (SingularityError, DomainError):
            return np.full_like(y, np.nan)
        v = _potential_value(a, a2, self.p.coupling)
        out[self.n_jet] = bg[1]
        out[self.n_jet + 1] = -v * bg[0]
        apply_generator_array(moments, v, out[self.n_jet + 2 :].reshape(self.order + 1, 3))
        return out

    def events(self):
        def floor_event(t, y):
            return y[0] - self.a_floor

        floor_event.terminal = True

        def ceiling_event(t, y):
            return self.a_ceiling - y[0]

        ceiling_event.terminal = True

        evs = [(floor_event, HALT_SCALE_FACTOR_ZERO), (ceiling_event, HALT_BLOW_UP)]

        if self.n_jet == 4:

            def pole_event(t, y):
                coeff, scale = _a4_coefficient(max(y[0], 1e-300), self.p)
                return abs(coeff) - self.pole_rtol * scale

            pole_event.terminal = True
            evs.append((pole_event, HALT_LOG_POLE))
        else:

            def hubble_event(t, y):
                a, a1 = y[0], y[1]
                if a <= 0:
                    return 1.0
                m = self.p.coupling.m
                den = a1**2 / a**4 - 1440.0 * PI2 / self.p.kappa + (
                    1440.0 * PI2 * self.p.c2 - 5.0
                ) * m**2
                den_scale = (
                    a1**2 / a**4
                    + 1440.0 * PI2 / self.p.kappa
                    + abs(1440.0 * PI2 * self.p.c2 - 5.0) * m**2
                )
                return abs(den) - self.pole_rtol * den_scale

            hubble_event.terminal = True
            evs.append((hubble_event, HALT_HUBBLE_POLE))
        return evs


def _sample_and_assemble(
    system: _System,
    sol,
    tau0: float,
    n_samples: int,
    params: PhysicsParams,
    halt_reason: str,
    halt_tau: Optional[float],
    picard_gaps: Optional[tuple[float, ...]] = None,
) -> SCETrajectory:
    t_end = sol.t[-1]
    ts = np.linspace(tau0, t_end, n_samples)
    states = sol.sol(ts)
    return _assemble_from_states(
        system, ts, states, params, halt_reason, halt_tau, picard_gaps
    )


def _assemble_from_states(
    system: _System,
    ts: np.ndarray,
    states: np.ndarray,
    params: PhysicsParams,
    halt_reason: str,
    halt_tau: Optional[float],
    picard_gaps: Optional[tuple[float, ...]] = None,
) -> SCETrajectory:
    n = ts.size
    nj = system.n_jet
    a = states[0]
    a1 = states[1]
    bg = states[nj : nj + 2].T.copy()
    moments = states[nj + 2 :].T.reshape(n, system.order + 1, 3).copy()

    a2 = np.empty(n)
    a3 = np.empty(n)
    a4 = np.full(n, np.nan)
    trace_res = np.empty(n)
    energy_res = np.empty(n)

    if nj == 4:
        a2[:] = states[2]
        a3[:] = states[3]
        for i in range(n):
            jet = ScaleFactorJet(a[i], a1[i], a2[i], a3[i])
            bgf = BackgroundField(bg[i, 0], bg[i, 1])
            m0, m1 = moments[i, 0], moments[i, 1]
            try:
                a4_trace = trace_rhs(jet, m0, m1, bgf, params, system.pole_rtol)
            except SingularityError:
                a4_trace = math.nan
            if system.a4_blend is not None:
                # report the fourth derivative the blended dynamics actually used,
                # and the equation residual it leaves
                a4[i] = system.a4_blend(float(ts[i]), states[:4, i], a4_trace)
                trace_res[i] = trace_residual(replace(jet, a4=a4[i]), m0, m1, bgf, params)
            else:
                a4[i] = a4_trace
                trace_res[i] = trace_from_components(replace(jet, a4=a4[i]), m0, m1, bgf, params)
            energy_res[i] = energy_residual(jet, m0, m1, bgf, params)
    else:
        for i in range(n):
            jet_arr = np.array([a[i], a1[i]])
            a2[i] = system.acceleration(jet_arr, moments[i], bg[i])
        a3[:] = np.gradient(a2, ts, edge_order=2) if n >= 3 else 0.0
        for i in range(n):
            jet = ScaleFactorJet(a[i], a1[i], a2[i], a3[i])
            bgf = BackgroundField(bg[i, 0], bg[i, 1])
            m0, m1 = moments[i, 0], moments[i, 1]
            if system.mode is SolverMode.CONFORMAL:
                den = (
                    a1[i] ** 2 / a[i] ** 4
                    - 1440.0 * PI2 / params.kappa
                    + (1440.0 * PI2 * params.c2 - 5.0) * params.coupling.m**2
                )
                num = (
                    a1[i] ** 4 / a[i] ** 5
                    + 0.5
                    * params.coupling.m**4
                    * a[i] ** 3
                    * (1920.0 * PI2 * params.c1 + 15.0 + 60.0 * math.log(a[i] * params.lam0))
                    - 240.0 * PI2 * params.coupling.m**2 * a[i] * m0[0]
                )
                trace_res[i] = a2[i] * den - num
            else:
                terms = _trace_terms(a[i], a1[i], a2[i], 0.0, 0.0, m0, m1, bgf, params)
                trace_res[i] = float(np.sum(terms))
            energy_res[i] = energy_residual(jet, m0, m1, bgf, params)

    return SCETrajectory(
        tau=ts,
        a=a.copy(),
        a1=a1.copy(),
        a2=a2,
        a3=a3,
        a4=a4,
        moments=moments,
        background=bg,
        ricci=6.0 * a2 / a**3,
        g00=3.0 * a1**2 / a**2,
        trace_residual=trace_res,
        energy_residual=energy_res,
        mode=system.mode,
        halt_reason=halt_reason,
        halt_tau=halt_tau,
        picard_gaps=picard_gaps,
    )


def _check_initial_poles(system: _System, y0: np.ndarray, tau0: float) -> None:
    for ev, reason in system.events():
        if ev(tau0, y0) <= 0:
            raise SingularityError(reason, tau=tau0, detail="pole condition violated at the initial data")


def solve_sce(
    init: SCEInitialData,
    params: PhysicsParams,
    mode: SolverMode,
    span: tuple[float, float],
    tol: float = DEFAULT_TOL,
    n_samples: int = 201,
    pole_rtol: float = POLE_RTOL,
    a_floor: float = A_FLOOR,
    a_ceiling: float = A_CEILING,
) -> SCETrajectory:
    """Co-evolve the scale-factor jet and the truncated moment hierarchy.

    In fourth-order mode the traced equation supplies a''''; with exactly
    conformal parameters that coefficient vanishes identically and the solver
    integrates the degenerate second-order reduction of the same equation
    instead.  Conformal mode uses the printed second-order form directly.
    Poles and blow-ups terminate the run with a typed halt reason rather than
    an exception; genuinely inadmissible initial data raise.
    """
    tau0, tau1 = span
    if not tau1 > tau0:
        raise DomainError("span must be increasing")
    if tol <= 0:
        raise DomainError("tolerance must be positive")
    if init.moments.order < 1:
        raise DomainError("need at least moment order 1 to close the equations")

    degenerate = mode is SolverMode.FOURTH_ORDER and is_conformal_reduced(params)
    if mode is SolverMode.CONFORMAL and not is_conformal_reduced(params):
        raise DomainError("conformal mode requires the conformally reduced parameter set")

    system = _System(params, mode, init.moments.order, degenerate, pole_rtol, a_floor, a_ceiling)
    y0 = system.pack(init.jet, init.background, init.moments)
    _check_initial_poles(system, y0, tau0)

    events = system.events()
    sol = solve_ivp(
        system.rhs,
        (tau0, tau1),
        y0,
        method="DOP853",
        rtol=tol,
        atol=system.atol(y0, tol),
        dense_output=True,
        events=[ev for ev, _ in events],
    )
    if sol.status == -1:
        raise StepFailureError(f"coupled integration failed: {sol.message}")
    halt_reason = HALT_COMPLETED
    halt_tau: Optional[float] = None
    if sol.status == 1:
        for (ev, reason), hits in zip(events, sol.t_events):
            if hits.size:
                halt_reason = reason
                halt_tau = float(hits[0])
                break
    return _sample_and_assemble(system, sol, tau0, n_samples, params, halt_reason, halt_tau)


def constraint_monitor(traj: SCETrajectory, params: PhysicsParams) -> np.ndarray:
    """Per-sample (energy residual, propagation defect) along a trajectory.

    The defect is the finite-difference derivative of the residual minus the
    transport law -2 (a'/a) residual; it vanishes along solutions of the
    traced equation up to discretisation error.
    """
    res = traj.energy_residual
    dres = np.gradient(res, traj.tau, edge_order=2)
    defect = dres + 2.0 * (traj.a1 / traj.a) * res
    return np.column_stack([res, defect])


def picard_solve(
    init: SCEInitialData,
    params: PhysicsParams,
    mode: SolverMode,
    span: tuple[float, float],
    iterations: int,
    n_grid: int = 129,
    tol: float = 1e-12,
) -> SCETrajectory:
    """Fixed-point iteration of the integral map behind the local solver.

    Each sweep freezes the scale-factor path, evolves moments and background
    along it, and integrates the jet equations against the frozen data; the
    sup gaps between successive paths are recorded on the returned trajectory.
    Iterating on too long an interval diverges, mirroring the contraction
    hypothesis.
    """
    tau0, tau1 = span
    if not tau1 > tau0:
        raise DomainError("span must be increasing")
    if iterations < 0:
        raise DomainError("iterations must be non-negative")
    if n_grid % 2 == 0:
        n_grid += 1
    degenerate = mode is SolverMode.FOURTH_ORDER and is_conformal_reduced(params)
    if mode is SolverMode.CONFORMAL and not is_conformal_reduced(params):
        raise DomainError("conformal mode requires the conformally reduced parameter set")
    system = _System(params, mode, init.moments.order, degenerate, POLE_RTOL, A_FLOOR, A_CEILING)
    nj = system.n_jet

    ts = np.linspace(tau0, tau1, n_grid)
    h = (tau1 - tau0) / (n_grid - 1)
    jet0 = np.array([init.jet.a, init.jet.a1, init.jet.a2, init.jet.a3][:nj])
    path = np.tile(jet0, (n_grid, 1))
    moments_grid = np.tile(init.moments.entries, (n_grid, 1, 1))
    bg_grid = np.tile([init.background.phi, init.background.pi], (n_grid, 1))

    gaps: list[float] = []
    scale = 1.0 + float(np.max(np.abs(jet0)))

    for _ in range(iterations):
        a_spline = CubicSpline(ts, path[:, 0])
        if nj == 4:
            a2_spline = CubicSpline(ts, path[:, 2])

            def v_of_t(t: float) -> float:
                return _potential_value(float(a_spline(t)), float(a2_spline(t)), params.coupling)

        else:

            def v_of_t(t: float) -> float:
                a_val = float(a_spline(t))
                return params.coupling.m**2 * a_val * a_val

        moments_grid, bg_grid = _evolve_state_along(
            v_of_t, init.moments, init.background, ts, tol
        )

        phi = np.empty_like(path)
        for i in range(n_grid):
            jet_i = path[i]
            if nj == 4:
                f_i = trace_rhs(
                    ScaleFactorJet(jet_i[0], jet_i[1], jet_i[2], jet_i[3]),
                    moments_grid[i, 0],
                    moments_grid[i, 1],
                    BackgroundField(bg_grid[i, 0], bg_grid[i, 1]),
                    params,
                )
                phi[i] = (jet_i[1], jet_i[2], jet_i[3], f_i)
            else:
                f_i = system.acceleration(jet_i, moments_grid[i], bg_grid[i])
                phi[i] = (jet_i[1], f_i)

        new_path = jet0 + _cumulative_simpson(phi, h)
        gap = float(np.max(np.abs(new_path - path)))
        gaps.append(gap)
        if not math.isfinite(gap) or gap > 1e8 * scale:
            raise StepFailureError(
                "fixed-point iteration diverged; the interval exceeds the contraction range"
            )
        path = new_path

    states = np.concatenate([path.T, bg_grid.T, moments_grid.reshape(n_grid, -1).T])
    return _assemble_from_states(
        system, ts, states, params, HALT_COMPLETED, None, picard_gaps=tuple(gaps)
    )


def _evolve_state_along(
    v_of_t: Callable[[float], float],
    m_init: MomentVector,
    bg_init: BackgroundField,
    ts: np.ndarray,
    tol: float,
) -> tuple[np.ndarray, np.ndarray]:
    order = m_init.order

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        v = v_of_t(t)
        if not math.isfinite(v):
            return np.full_like(y, np.nan)
        out = np.empty_like(y)
        out[0] = y[1]
        out[1] = -v * y[0]
        apply_generator_array(y[2:].reshape(order + 1, 3), v, out[2:].reshape(order + 1, 3))
        return out

    y0 = np.concatenate([[bg_init.phi, bg_init.pi], m_init.entries.reshape(-1)])
    atol = np.concatenate([tol * (1.0 + np.abs(y0[:2])), moment_atol(m_init.entries, tol)])
    sol = solve_ivp(rhs, (ts[0], ts[-1]), y0, method="DOP853", rtol=tol, atol=atol, t_eval=ts)
    if not sol.success:
        raise StepFailureError(f"state evolution along the frozen path failed: {sol.message}")
    bg_grid = sol.y[:2].T.copy()
    moments_grid = sol.y[2:].T.reshape(ts.size, order + 1, 3).copy()
    return moments_grid, bg_grid


# ---------------------------------------------------------------------------
# tow-in construction of admissible initial data


def _cinf_step(x: float) -> float:
    """C-infinity monotone step: 0 for x <= 0, 1 for x >= 1."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    b = math.exp(-1.0 / x)
    c = math.exp(-1.0 / (1.0 - x))
    return b / (b + c)


@dataclass(frozen=True)
class SmoothSwitch:
    """Smooth monotone blend: 0 up to tau_on, 1 from tau_off onward."""

    tau_on: float
    tau_off: float

    def __post_init__(self) -> None:
        if not self.tau_off > self.tau_on:
            raise DomainError("switch needs tau_off > tau_on")

    def __call__(self, tau: float) -> float:
        return _cinf_step((tau - self.tau_on) / (self.tau_off - self.tau_on))


def _step_jet(x: float, order: int = 3) -> TimeJet:
    """Jet of the C-infinity step at x (derivatives in x)."""
    if x <= 0.0 or x >= 1.0:
        return TimeJet.constant(0.0 if x <= 0.0 else 1.0, order)
    xj = TimeJet((x,) + (1.0,) + (0.0,) * (order - 1))
    b = jet_exp(-1.0 / xj)
    c = jet_exp(-1.0 / (1.0 - xj))
    return b / (b + c)


@functools.lru_cache(maxsize=8)
def _gauss_nodes(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(n)


class TowProfile:
    """Prescribed scale-factor history with jets through fourth order."""

    def jet(self, tau: float) -> ScaleFactorJet:  # pragma: no cover - interface
        raise NotImplementedError

    def d4(self, tau: float) -> float:  # pragma: no cover - interface
        raise NotImplementedError


@dataclass(frozen=True)
class MinkowskiRampProfile(TowProfile):
    """Initially static history whose expansion rate ramps smoothly to ``rate``.

    a(tau) = a0 + rate * integral of the smooth step ((tau - tau_on)/width).
    """

    a0: float = 1.0
    rate: float = 0.05
    tau_on: float = 0.0
    width: float = 1.0

    _GAUSS = 48

    def _x(self, tau: float) -> float:
        return (tau - self.tau_on) / self.width

    def _step_integral(self, x: float) -> float:
        if x <= 0.0:
            return 0.0
        if x >= 1.0:
            # the step is symmetric about 1/2, so its mass on [0, 1] is 1/2
            return 0.5 + (x - 1.0)
        nodes, weights = _gauss_nodes(self._GAUSS)
        half = 0.5 * x
        pts = half * (nodes + 1.0)
        return half * float(np.sum(weights * np.array([_cinf_step(t) for t in pts])))

    def jet(self, tau: float) -> ScaleFactorJet:
        x = self._x(tau)
        s = _step_jet(x)
        a = self.a0 + self.rate * self.width * self._step_integral(x)
        return ScaleFactorJet(
            a,
            self.rate * s.derivs[0],
            self.rate * s.derivs[1] / self.width,
            self.rate * s.derivs[2] / self.width**2,
            self.rate * s.derivs[3] / self.width**3,
        )

    def d4(self, tau: float) -> float:
        s = _step_jet(self._x(tau))
        return self.rate * s.derivs[3] / self.width**3


@dataclass(frozen=True)
class CubicBumpProfile(TowProfile):
    """Base profile plus a compact third-derivative kick of strength ``c``.

    Adds c/2 * integral (tau - eta)^2 chi_delta(eta - tau_c) d eta, which
    shifts the third derivative at tau_c by c while perturbing lower jets
    only at order c * delta^(3 - j).
    """

    base: TowProfile
    c: float
    delta: float
    tau_c: float

    _GAUSS = 64

    def _chi(self, x: float) -> float:
        u = x / self.delta
        if abs(u) >= 1.0:
            return 0.0
        return math.exp(1.0 - 1.0 / (1.0 - u * u))

    def _chi_d(self, x: float) -> float:
        u = x / self.delta
        if abs(u) >= 1.0:
            return 0.0
        q = 1.0 - u * u
        return self._chi(x) * (-2.0 * u / q**2) / self.delta

    def _kick(self, tau: float, moment: int) -> float:
        lo = self.tau_c - self.delta
        hi = min(tau, self.tau_c + self.delta)
        if hi <= lo:
            return 0.0
        nodes, weights = _gauss_nodes(self._GAUSS)
        mid, half = 0.5 * (hi + lo), 0.5 * (hi - lo)
        pts = mid + half * nodes
        vals = np.array([(tau - e) ** moment * self._chi(e - self.tau_c) for e in pts])
        return half * float(np.sum(weights * vals))

    def jet(self, tau: float) -> ScaleFactorJet:
        base = self.base.jet(tau)
        return ScaleFactorJet(
            base.a + 0.5 * self.c * self._kick(tau, 2),
            base.a1 + self.c * self._kick(tau, 1),
            base.a2 + self.c * self._kick(tau, 0),
            base.a3 + self.c * self._chi(tau - self.tau_c),
            (base.a4 if base.a4 is not None else 0.0) + self.c * self._chi_d(tau - self.tau_c),
        )

    def d4(self, tau: float) -> float:
        return self.base.d4(tau) + self.c * self._chi_d(tau - self.tau_c)


def tow_in(
    profile: TowProfile,
    m_init: MomentVector,
    params: PhysicsParams,
    tau_tow: float,
    tau_init: float,
    tau_free: float,
    tau_stop: float,
    switch: Optional[Callable[[float], float]] = None,
    bg_init: BackgroundField = BackgroundField(),
    tol: float = DEFAULT_TOL,
    n_samples: int = 201,
) -> SCETrajectory:
    """Blend from a prescribed history into the fully coupled trace dynamics.

    Up to ``tau_init`` the fourth derivative comes from the profile, beyond
    ``tau_free`` from the traced equation, with a smooth monotone switch in
    between.  The moment hierarchy and background always evolve under the
    actual (blended) geometry.
    """
    if not tau_tow < tau_init < tau_free <= tau_stop:
        raise DomainError("need tau_tow < tau_init < tau_free <= tau_stop")
    chi = switch if switch is not None else SmoothSwitch(tau_init, tau_free)

    def blend(t: float, jet: np.ndarray, a4_trace: float) -> float:
        x = chi(t)
        if x <= 0.0:
            return profile.d4(t)
        if x >= 1.0:
            return a4_trace
        return (1.0 - x) * profile.d4(t) + x * a4_trace

    def blended_rhs_guard(t: float) -> bool:
        return chi(t) > 0.0

    system = _System(
        params,
        SolverMode.FOURTH_ORDER,
        m_init.order,
        degenerate=False,
        pole_rtol=POLE_RTOL,
        a_floor=A_FLOOR,
        a_ceiling=A_CEILING,
        a4_blend=blend,
    )

    # while the switch is fully off, skip the trace equation entirely so a
    # towed background may pass through regions where it would be singular
    base_rhs = system.rhs

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        if blended_rhs_guard(t):
            return base_rhs(t, y)
        jet, bg, moments = system.unpack(y)
        a = jet[0]
        if not np.all(np.isfinite(y)) or a <= 0:
            return np.full_like(y, np.nan)
        out = np.empty_like(y)
        out[:4] = (jet[1], jet[2], jet[3], profile.d4(t))
        v = _potential_value(a, jet[2], params.coupling)
        out[4] = bg[1]
        out[5] = -v * bg[0]
        apply_generator_array(moments, v, out[6:].reshape(m_init.order + 1, 3))
        return out

    jet0 = profile.jet(tau_tow)
    y0 = system.pack(jet0, bg_init, m_init)

    floor_ev, ceil_ev = [ev for ev, _ in system.events()[:2]]
    sol = solve_ivp(
        rhs,
        (tau_tow, tau_stop),
        y0,
        method="DOP853",
        rtol=tol,
        atol=system.atol(y0, tol),
        dense_output=True,
        events=[floor_ev, ceil_ev],
    )
    if sol.status == -1:
        raise StepFailureError(f"tow-in integration failed: {sol.message}")
    halt_reason = HALT_COMPLETED
    halt_tau: Optional[float] = None
    if sol.status == 1:
        reasons = [HALT_SCALE_FACTOR_ZERO, HALT_BLOW_UP]
        for reason, hits in zip(reasons, sol.t_events):
            if hits.size:
                halt_reason = reason
                halt_tau = float(hits[0])
                break
    return _sample_and_assemble(system, sol, tau_tow, n_samples, params, halt_reason, halt_tau)


@dataclass(frozen=True)
class TowSetup:
    """Everything a shooting run needs except the kick strength."""

    profile: TowProfile
    m_init: MomentVector
    params: PhysicsParams
    tau_tow: float
    tau_init: float
    tau_free: float
    tau_stop: float
    delta: float
    bg_init: BackgroundField = BackgroundField()
    tol: float = DEFAULT_TOL
    n_samples: int = 201


def _towed_with_kick(setup: TowSetup, c: float, tau_end: float, n_samples: int) -> SCETrajectory:
    profile = CubicBumpProfile(setup.profile, c, setup.delta, setup.tau_init)
    return tow_in(
        profile,
        setup.m_init,
        setup.params,
        setup.tau_tow,
        setup.tau_init,
        setup.tau_free,
        tau_end,
        bg_init=setup.bg_init,
        tol=setup.tol,
        n_samples=n_samples,
    )


def shoot_energy_constraint(
    setup: TowSetup,
    c_range: tuple[float, float],
    rel_tol: float = 1e-10,
    max_iter: int = 60,
) -> tuple[float, SCETrajectory]:
    """Bisect the kick strength until the energy constraint holds at hand-off.

    The endpoint residuals must straddle zero, and the expansion rate at
    ``tau_free`` must be away from zero or the constraint loses its handle on
    the third derivative.
    """

    def residual_at_free(c: float) -> tuple[float, float]:
        traj = _towed_with_kick(setup, c, setup.tau_free, n_samples=9)
        if traj.halt_reason != HALT_COMPLETED:
            raise SingularityError(traj.halt_reason, tau=traj.halt_tau, detail="pole during blend")
        i = traj.n_samples - 1
        if abs(traj.a1[i]) < 1e-10 * (1.0 + abs(traj.a[i])):
            raise SingularityError(
                HALT_HUBBLE_POLE, tau=setup.tau_free, detail="a' = 0 at hand-off; no shooting handle"
            )
        scale = float(
            np.max(
                np.abs(
                    energy_terms(
                        traj.jet(i),
                        traj.moments[i, 0],
                        traj.moments[i, 1],
                        traj.background_field(i),
                        setup.params,
                    )
                )
            )
        )
        return float(traj.energy_residual[i]), scale

    lo, hi = c_range
    if not hi > lo:
        raise DomainError("c-range must be increasing")
    g_lo, scale_lo = residual_at_free(lo)
    g_hi, scale_hi = residual_at_free(hi)
    if math.copysign(1.0, g_lo) == math.copysign(1.0, g_hi):
        raise DomainError(
            f"energy residuals at the range endpoints have the same sign "
            f"({g_lo:.3e}, {g_hi:.3e}); widen the range"
        )

    c_mid, g_mid, scale_mid = lo, g_lo, scale_lo
    for _ in range(max_iter):
        c_mid = 0.5 * (lo + hi)
        g_mid, scale_mid = residual_at_free(c_mid)
        if abs(g_mid) <= rel_tol * scale_mid:
            break
        if math.copysign(1.0, g_mid) == math.copysign(1.0, g_lo):
            lo, g_lo = c_mid, g_mid
        else:
            hi, g_hi = c_mid, g_mid

    traj = _towed_with_kick(setup, c_mid, setup.tau_stop, setup.n_samples)
    return c_mid, traj
