"""Brute-force validation in momentum space.

A smooth, compactly supported bump in the mode data is a difference of two
solutions of the field's Cauchy-data dynamics, so its moments obey the
truncated hierarchy exactly while avoiding every distributional subtlety of
the counterterms.  Evolving the bump per mode and extracting moments by
quadrature therefore gives an independent check on the hierarchy propagator.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import DomainError, StepFailureError
from .propagator import PotentialTrajectory, evolve_rk
from .seqspace import MomentVector

TWO_PI2 = 2.0 * math.pi**2

DEFAULT_NODES = 2048


@dataclass(frozen=True)
class ModeField:
    """Sampled mode triples on a strictly increasing positive k-grid.

    ``weights`` are quadrature weights for integrals dk over the grid.
    """

    k: np.ndarray
    values: np.ndarray
    weights: np.ndarray

    def __post_init__(self) -> None:
        k = np.asarray(self.k, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if k.ndim != 1 or k.size < 2:
            raise ValueError("k-grid must be a 1-d array with at least two nodes")
        if np.any(k <= 0) or np.any(np.diff(k) <= 0):
            raise ValueError("k-grid must be strictly increasing and positive")
        if vals.shape != (k.size, 3):
            raise ValueError(f"values must have shape ({k.size}, 3)")
        if w.shape != k.shape:
            raise ValueError("one quadrature weight per node required")
        if not (np.all(np.isfinite(vals)) and np.all(np.isfinite(w))):
            raise ValueError("non-finite mode data")
        for arr in (k, vals, w):
            arr.setflags(write=False)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "weights", w)

    @property
    def n_modes(self) -> int:
        return self.k.size


@dataclass(frozen=True)
class BumpSpec:
    """Smooth compact bump (1 - u^2)^power around ``center`` with radius ``radius``.

    The amplitude triple scales the three mode components independently.  The
    profile vanishes with its first power-1 derivatives at the support edges.
    """

    center: float
    radius: float
    amplitude: tuple[float, float, float]
    power: int = 8

    def __post_init__(self) -> None:
        if not (self.center > 0 and self.radius > 0):
            raise DomainError("bump needs positive center and radius")
        if self.center - self.radius <= 0:
            raise DomainError("bump support must stay inside (0, inf)")
        if self.power < 2:
            raise DomainError("bump power must be at least 2")
        object.__setattr__(self, "amplitude", tuple(float(a) for a in self.amplitude))

    @property
    def support(self) -> tuple[float, float]:
        return (self.center - self.radius, self.center + self.radius)

    def profile(self, k: np.ndarray) -> np.ndarray:
        u = (np.asarray(k, dtype=float) - self.center) / self.radius
        shape = np.where(np.abs(u) < 1.0, (1.0 - u**2) ** self.power, 0.0)
        return shape[:, None] * np.asarray(self.amplitude)


def _simpson_type_weights(n_nodes: int, h: float) -> np.ndarray:
    """Composite Simpson weights on a uniform grid, 3/8 rule on a leftover tail."""
    if n_nodes < 4:
        raise ValueError("need at least four quadrature nodes")
    w = np.zeros(n_nodes)
    intervals = n_nodes - 1
    simpson_end = intervals if intervals % 2 == 0 else intervals - 3
    for i in range(0, simpson_end, 2):
        w[i] += h / 3.0
        w[i + 1] += 4.0 * h / 3.0
        w[i + 2] += h / 3.0
    if simpson_end != intervals:
        i = simpson_end
        w[i] += 3.0 * h / 8.0
        w[i + 1] += 9.0 * h / 8.0
        w[i + 2] += 9.0 * h / 8.0
        w[i + 3] += 3.0 * h / 8.0
    return w


def log_grid(k_lo: float, k_hi: float, n_nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Log-spaced nodes with dk quadrature weights (Simpson in log k)."""
    if not 0 < k_lo < k_hi:
        raise DomainError("need 0 < k_lo < k_hi")
    t = np.linspace(math.log(k_lo), math.log(k_hi), n_nodes)
    k = np.exp(t)
    w = _simpson_type_weights(n_nodes, t[1] - t[0]) * k
    return k, w


def bump_field(spec: BumpSpec, n_nodes: int = DEFAULT_NODES) -> ModeField:
    """Sample a bump on the default log-spaced grid over its support."""
    lo, hi = spec.support
    k, w = log_grid(lo, hi, n_nodes)
    return ModeField(k=k, values=spec.profile(k), weights=w)


def mode_rhs(g: tuple[float, float, float], k: float, v: float) -> tuple[float, float, float]:
    """Right-hand side of a single mode: (2 g2, -(k^2+V) g1 + g3, -2 (k^2+V) g2)."""
    if k < 0:
        raise DomainError("wavenumber must be non-negative")
    w2 = k * k + v
    return (2.0 * g[1], -w2 * g[0] + g[2], -2.0 * w2 * g[1])


def _evolve_block(
    k: np.ndarray,
    values: np.ndarray,
    v: PotentialTrajectory,
    tau0: float,
    tau1: float,
    tol: float,
) -> np.ndarray:
    k2 = k * k

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        vt = v(t)
        if not math.isfinite(vt):
            return np.full_like(y, np.nan)
        g = y.reshape(-1, 3)
        w2 = k2 + vt
        out = np.empty_like(g)
        out[:, 0] = 2.0 * g[:, 1]
        out[:, 1] = -w2 * g[:, 0] + g[:, 2]
        out[:, 2] = -2.0 * w2 * g[:, 1]
        return out.reshape(-1)

    sol = solve_ivp(rhs, (tau0, tau1), values.reshape(-1), method="DOP853", rtol=tol, atol=tol)
    if not sol.success:
        raise StepFailureError(f"mode evolution failed on [{tau0}, {tau1}]: {sol.message}")
    return sol.y[:, -1].reshape(-1, 3)


def evolve_modes(
    field: ModeField,
    v: PotentialTrajectory,
    tau0: float,
    tau1: float,
    tol: float = 1e-10,
    threads: int = 1,
) -> ModeField:
    """Evolve every mode under the common potential; modes never couple.

    With ``threads > 1`` the k-grid is split into contiguous blocks solved in
    a thread pool; results are reassembled by index, so the outcome does not
    depend on scheduling.
    """
    if tol <= 0:
        raise DomainError("tolerance must be positive")
    if tau1 == tau0:
        return field
    if threads <= 1:
        out = _evolve_block(field.k, field.values, v, tau0, tau1, tol)
        return ModeField(field.k, out, field.weights)
    bounds = np.linspace(0, field.n_modes, threads + 1).astype(int)
    chunks = [(bounds[i], bounds[i + 1]) for i in range(threads) if bounds[i] < bounds[i + 1]]
    out = np.empty_like(field.values)
    with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
        futures = [
            (lo, hi, pool.submit(_evolve_block, field.k[lo:hi], field.values[lo:hi], v, tau0, tau1, tol))
            for lo, hi in chunks
        ]
        for lo, hi, fut in futures:
            out[lo:hi] = fut.result()
    return ModeField(field.k, out, field.weights)


def j_invariant(field: ModeField) -> np.ndarray:
    """Per-mode conserved quantity g_ff * g_pp - g_fp^2 (>= 1/4 for states)."""
    g = field.values
    return g[:, 0] * g[:, 2] - g[:, 1] ** 2


def moments_from_field(field: ModeField, order: int) -> MomentVector:
    """Quadrature moments M_n = (-1)^n / (2 pi^2) int k^(2n+2) g(k) dk."""
    if order < 0:
        raise DomainError("order must be non-negative")
    entries = np.empty((order + 1, 3))
    wk2 = field.weights * field.k**2
    for n in range(order + 1):
        scale = (-1.0) ** n / TWO_PI2
        factor = wk2 * field.k ** (2 * n)
        entries[n] = scale * (factor @ field.values)
    return MomentVector(entries)


def bump_moments(spec: BumpSpec, order: int, n_nodes: int = DEFAULT_NODES) -> MomentVector:
    """Moments of a bump field; plain integrals since the bump is smooth and compact."""
    return moments_from_field(bump_field(spec, n_nodes), order)


def oracle_compare(
    spec: BumpSpec,
    v: PotentialTrajectory,
    tau0: float,
    tau1: float,
    order: int,
    tol: float = 1e-12,
    safety: float = 16.0,
    n_nodes: int = DEFAULT_NODES,
    threads: int = 1,
) -> float:
    """Largest truncation-clean discrepancy between the two evolution routes.

    Evolves the bump once per mode and once through the truncated hierarchy,
    then compares moments on indices the truncation cannot have polluted:
    n <= order - ceil(|tau1 - tau0| * safety).
    """
    keep = order - math.ceil(abs(tau1 - tau0) * safety)
    if keep < 0:
        raise DomainError(
            f"span too long for a truncation-clean comparison at order {order} "
            f"(retained index would be {keep})"
        )
    field = bump_field(spec, n_nodes)
    direct = moments_from_field(evolve_modes(field, v, tau0, tau1, tol=tol, threads=threads), order)
    hierarchy = evolve_rk(moments_from_field(field, order), v, tau0, tau1, tol=tol)
    gap = np.abs(direct.entries[: keep + 1] - hierarchy.entries[: keep + 1])
    return float(gap.max())
