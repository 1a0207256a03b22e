"""Potential, moment-system generator, coefficient recurrences, reference states.

Conventions
-----------
Moments are normalised in position space: M_n is the n-fold radial Laplacian
of the regularised equal-time data at coinciding points.  With this choice the
massive-vacuum values below are exact, while the momentum-space integral picks
up a factor 1/(2 pi^2) from Fourier inversion.  ``thermal_moments`` can emit
the larger momentum-space ("paper") normalisation for literature comparison;
everything consumed by the field equations uses the canonical one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import digamma, zeta

from .errors import DomainError
from .jets import TimeJet
from .seqspace import MomentVector

PI2 = math.pi**2


@dataclass(frozen=True)
class CouplingParams:
    """Mass and curvature coupling of the scalar field."""

    m: float
    xi: float

    def __post_init__(self) -> None:
        if not (self.m >= 0 and math.isfinite(self.m)):
            raise DomainError(f"mass must be non-negative, got {self.m}")
        if not math.isfinite(self.xi):
            raise DomainError("non-finite curvature coupling")


def potential(a: TimeJet, params: CouplingParams) -> TimeJet:
    """Conformal-frame potential V = (6 xi - 1) a''/a + a^2 m^2 as a jet.

    The scale-factor jet must carry two more derivative orders than the
    requested V-jet.
    """
    if a.value <= 0:
        raise DomainError(f"scale factor must be positive, got {a.value}")
    if a.order < 2:
        raise ValueError("scale-factor jet needs at least two derivatives")
    base = a.truncated(a.order - 2)
    return (6.0 * params.xi - 1.0) * (a.d().d() / base) + params.m**2 * (base * base)


def generator_matrices(v: float) -> tuple[np.ndarray, np.ndarray]:
    """The 3x3 blocks A(V), B of the moment-system generator A x 1 + B x L."""
    a = np.array([[0.0, 2.0, 0.0], [-v, 0.0, 1.0], [0.0, -2.0 * v, 0.0]])
    b = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 2.0, 0.0]])
    return a, b


def generator_norms(v: float) -> tuple[float, float]:
    """Matrix norms (||A||, ||B||) = (2 sqrt(1+V^2), 2) entering all bounds."""
    return 2.0 * math.sqrt(1.0 + v * v), 2.0


def apply_generator_array(entries: np.ndarray, v: float, out: np.ndarray | None = None) -> np.ndarray:
    """Generator action on raw (N+1, 3) entries with zero-padded tail."""
    if out is None:
        out = np.empty_like(entries)
    ff, fp, pp = entries[:, 0], entries[:, 1], entries[:, 2]
    out[:, 0] = 2.0 * fp
    out[:, 1] = -v * ff + pp
    out[:-1, 1] += ff[1:]
    out[:, 2] = -2.0 * v * fp
    out[:-1, 2] += 2.0 * fp[1:]
    return out


def apply_generator(m: MomentVector, v: float) -> MomentVector:
    """(S M)_n = A(V) M_n + B M_{n+1}, with M_{N+1} treated as zero."""
    return MomentVector(apply_generator_array(m.entries, float(v)))


@dataclass(frozen=True)
class HadamardCoeffs:
    """Counterterm expansion coefficients as jets in conformal time.

    ``alphas[j]``/``betas[j]`` hold alpha_j, beta_j for j = 0..J and
    ``gammas[j]`` holds gamma_j for j = 0..J-1; gamma_{-1} is stored
    separately.  alpha_0 = gamma_{-1} = 1/2 and beta_0 = 0 always.
    """

    alphas: tuple[TimeJet, ...]
    betas: tuple[TimeJet, ...]
    gammas: tuple[TimeJet, ...]
    gamma_init: TimeJet

    @property
    def levels(self) -> int:
        return len(self.alphas) - 1

    def alpha(self, j: int) -> TimeJet:
        return self.alphas[j]

    def beta(self, j: int) -> TimeJet:
        return self.betas[j]

    def gamma(self, j: int) -> TimeJet:
        if j == -1:
            return self.gamma_init
        return self.gammas[j]


def hadamard_coeffs(v: TimeJet, levels: int) -> HadamardCoeffs:
    """Solve the coefficient recurrences up to alpha_J, beta_J, gamma_{J-1}.

    Each level consumes two tau-derivatives of V, so the V-jet must have
    order >= 2 * levels.
    """
    if levels < 0:
        raise DomainError("levels must be non-negative")
    if v.order < 2 * levels:
        raise ValueError(
            f"V-jet order {v.order} insufficient for {levels} levels (needs >= {2 * levels})"
        )
    alphas = [TimeJet.constant(0.5, v.order)]
    betas = [TimeJet.constant(0.0, v.order)]
    gammas: list[TimeJet] = []
    for j in range(levels):
        conv = TimeJet.constant(0.0, v.order)
        for i in range(1, j + 1):
            conv = conv + (alphas[i] * gammas[j - i] - betas[i] * betas[j - i])
        half = 0.5 * (v * alphas[j] + betas[j].d())
        gammas.append(half - conv)
        alphas.append(-1.0 * half - conv)
        betas.append(-0.25 * v.d() * alphas[j] - 0.25 * betas[j].d().d() - v * betas[j])
    return HadamardCoeffs(tuple(alphas), tuple(betas), tuple(gammas), TimeJet.constant(0.5, v.order))


def purity_residual(coeffs: HadamardCoeffs, j: int) -> TimeJet:
    """alpha_{j+1} + gamma_j + 2 sum_{i=1}^{j} (alpha_i gamma_{j-i} - beta_i beta_{j-i}).

    Vanishes identically for coefficients produced by :func:`hadamard_coeffs`;
    a nonzero value measures how far a perturbed coefficient family is from
    the pure-state normalisation.
    """
    if not 0 <= j <= coeffs.levels - 1:
        raise DomainError(f"purity level {j} out of range for {coeffs.levels} levels")
    acc = coeffs.alpha(j + 1) + coeffs.gamma(j)
    for i in range(1, j + 1):
        acc = acc + 2.0 * (coeffs.alpha(i) * coeffs.gamma(j - i) - coeffs.beta(i) * coeffs.beta(j - i))
    return acc


def binom_half(j: int) -> float:
    """binom(1/2, j), exact combinatorial form."""
    if j == 0:
        return 1.0
    return (-1.0) ** (j - 1) * math.comb(2 * j, j) / (4.0**j * (2 * j - 1))


def binom_minus_half(j: int) -> float:
    """binom(-1/2, j), exact combinatorial form."""
    return (-1.0) ** j * math.comb(2 * j, j) / 4.0**j


def minkowski_coeffs(m: float, levels: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Closed-form constant-potential coefficients (V = m^2).

    Returns arrays (alpha_j)_{j<=J}, (beta_j)_{j<=J}, (gamma_j)_{-1<=j<=J-1},
    the last indexed with an offset so gamma[j+1] = gamma_j.
    """
    alphas = np.array([0.5 * binom_minus_half(j) * m ** (2 * j) for j in range(levels + 1)])
    betas = np.zeros(levels + 1)
    gammas = np.array([0.5 * binom_half(j) * m ** (2 * j) for j in range(levels + 1)])
    return alphas, betas, gammas


def vacuum_moments(m: float, mu: float, order: int) -> MomentVector:
    """Moments of the massive vacuum on a static background, truncated at ``order``.

    ``mu`` is the regularisation length scale of the counterterm family.  All
    phi-pi components vanish; the massless limit is exactly zero.
    """
    if m < 0:
        raise DomainError("mass must be non-negative")
    if mu <= 0:
        raise DomainError("scale mu must be positive")
    if order < 0:
        raise DomainError("order must be non-negative")
    entries = np.zeros((order + 1, 3))
    if m == 0.0:
        return MomentVector(entries)
    log_term = math.log(0.5 * m * mu)
    for n in range(order + 1):
        common = log_term + digamma(2 * n + 2)
        ff = (
            (0.5 * m) ** (2 * n + 2)
            * (common - 0.5 * (digamma(n + 1) + digamma(n + 2)))
            * math.comb(2 * n + 1, n + 1)
            / (2.0 * PI2)
        )
        pp = (
            (0.5 * m) ** (2 * n + 4)
            * (common - 0.5 * (digamma(n + 1) + digamma(n + 3)))
            * (math.factorial(2 * n + 1) / (math.factorial(n) * math.factorial(n + 2)))
            / PI2
        )
        entries[n, 0] = ff
        entries[n, 2] = pp
    return MomentVector(entries)


def thermal_moments(beta: float, order: int, paper_convention: bool = False) -> MomentVector:
    """Moments of the massless thermal state at inverse temperature ``beta``.

    The canonical (position-space) normalisation is returned by default;
    ``paper_convention=True`` emits values larger by 2 pi^2, matching the
    momentum-space display often quoted alongside the zeta-function form.
    """
    if beta <= 0:
        raise DomainError("inverse temperature must be positive")
    if order < 0:
        raise DomainError("order must be non-negative")
    norm = 1.0 if paper_convention else 1.0 / (2.0 * PI2)
    entries = np.zeros((order + 1, 3))
    for n in range(order + 1):
        sign = (-1.0) ** n
        entries[n, 0] = sign * beta ** (-2 * n - 2) * zeta(2 * n + 2) * math.factorial(2 * n + 1) * norm
        entries[n, 2] = sign * beta ** (-2 * n - 4) * zeta(2 * n + 4) * math.factorial(2 * n + 3) * norm
    return MomentVector(entries)


def stationary_moments(phi_phi: np.ndarray, m: float) -> MomentVector:
    """Build a time-translation-invariant moment vector from a phi-phi profile.

    Chooses M_pp_n = m^2 M_ff_n - M_ff_{n+1} (zero-padded tail), which makes
    the generator with V = m^2 annihilate the vector at every retained index.
    """
    ff = np.asarray(phi_phi, dtype=float)
    if ff.ndim != 1 or ff.size < 1:
        raise ValueError("phi-phi profile must be a non-empty 1-d array")
    entries = np.zeros((ff.size, 3))
    entries[:, 0] = ff
    entries[:, 2] = m**2 * ff
    entries[:-1, 2] -= ff[1:]
    return MomentVector(entries)
