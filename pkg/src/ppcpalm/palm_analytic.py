"""Closed-form / quadrature evaluators for the Palm characterization of a
stationary PPCP: the reduced Palm intensity measure, the stationary and
Palm generating functionals, the nearest-neighbor distance CCDF, and a
two-sided Monte Carlo verifier of the exchange formula connecting the
Palm distributions of the parent and cluster processes.

All test functions are radial with h == 1 outside a declared radius, so
every integral here is one-dimensional through the ring kernel.  The
kernels are isotropic, hence Q^- = Q throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .pointproc import ClusterSpec, SimConfig, _ppcp_points, replication_rng, sample_palm_ppcp
from .quadrature import QuadPolicy, integrate
from .sinr_mc import EstimateCI, _make_ci

__all__ = [
    "RadialTestFunction",
    "PalmFunctional",
    "ExchangeResult",
    "ball_indicator",
    "palm_intensity_ball",
    "offspring_pgfl",
    "stationary_pgfl",
    "palm_pgfl",
    "nnd_ccdf",
    "verify_exchange",
]

# Tail-mass threshold for truncating the improper radial integrals.
_TAIL = 1e-16
_PGFL_POLICY = QuadPolicy(rel_tol=1e-9, abs_tol=1e-12)


@dataclass(frozen=True)
class RadialTestFunction:
    """Radial map h: [0, inf) -> [0, 1] with h(s) = 1 for s > rho_h.

    ``h`` must accept numpy arrays.  The bounded deviation-from-1 support
    keeps all PGFL integrals convergent.
    """

    h: Callable[[np.ndarray], np.ndarray]
    rho_h: float

    def __post_init__(self):
        if self.rho_h < 0:
            raise ValueError("rho_h must be nonnegative")


def ball_indicator(r: float) -> RadialTestFunction:
    """h = 1 - indicator(s <= r): void test function of the ball b_0(r)."""
    return RadialTestFunction(h=lambda s: (np.asarray(s, dtype=float) > r).astype(float),
                              rho_h=r)


@dataclass(frozen=True)
class PalmFunctional:
    """Nonnegative functional of a reduced Palm sample.

    ``fn`` receives the (n, 2) array of points of the reduced pattern
    (origin point removed) and returns a scalar.  ``support_radius``
    documents how far from the origin the functional looks; the caller
    must size the simulation window accordingly.
    """

    fn: Callable[[np.ndarray], float]
    support_radius: float = math.inf


@dataclass(frozen=True)
class ExchangeResult:
    lhs: EstimateCI
    rhs: EstimateCI
    flagged: bool

    def cis_overlap(self) -> bool:
        return self.lhs.ci_low <= self.rhs.ci_high and self.rhs.ci_low <= self.lhs.ci_high


def palm_intensity_ball(spec: ClusterSpec, r: float) -> float:
    """Reduced-Palm mean count in the ball of radius r.

    Equals the stationary term lambda_parent * mu * pi r^2 plus the mean
    count of the cluster forced to have a point at the origin.
    """
    if r < 0:
        raise ValueError("r must be nonnegative")
    if r == 0:
        return 0.0
    k = spec.kernel
    rho = k.trunc_radius(_TAIL)

    def f(u):
        return k.ball_prob(u, r) * k.density(u) * u

    second = 2.0 * math.pi * spec.mu * integrate(f, 0.0, rho, _PGFL_POLICY).value
    return spec.lambda_total * math.pi * r * r + second


def _htilde(spec: ClusterSpec, h: RadialTestFunction, u: np.ndarray) -> np.ndarray:
    """PGFL of one offspring cluster whose parent sits at distance u."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if h.rho_h == 0.0:
        return np.ones_like(u)

    def f(s):
        return (1.0 - h.h(s))[:, None] * spec.kernel.ring_kernel(s[:, None], u[None, :])

    integral = np.atleast_1d(np.asarray(integrate(f, 0.0, h.rho_h, _PGFL_POLICY).value))
    return np.exp(-spec.mu * np.clip(integral, 0.0, None))


def offspring_pgfl(spec: ClusterSpec, h: RadialTestFunction, x) -> float:
    """Generating functional h~(x) of a cluster whose parent is shifted to x.

    ``x`` may be a planar point or a plain distance from the origin; by
    isotropy only the distance matters.
    """
    u = float(np.hypot(*x)) if np.ndim(x) == 1 else float(x)
    if u < 0:
        raise ValueError("distance must be nonnegative")
    if u > h.rho_h + spec.kernel.trunc_radius(_TAIL):
        return 1.0
    return float(_htilde(spec, h, u)[0])


def stationary_pgfl(spec: ClusterSpec, h: RadialTestFunction) -> float:
    """Generating functional of the stationary PPCP for a radial h."""
    upper = h.rho_h + spec.kernel.trunc_radius(_TAIL)
    if h.rho_h == 0.0:
        return 1.0

    def f(u):
        return (1.0 - _htilde(spec, h, u)) * u

    outer = integrate(f, 0.0, upper, _PGFL_POLICY).value
    return float(np.exp(-spec.lambda_parent * 2.0 * math.pi * max(outer, 0.0)))


def _palm_factor(spec: ClusterSpec, h: RadialTestFunction) -> float:
    """Integral of h~ against Q^-: PGFL of the cluster owning the origin."""
    k = spec.kernel
    rho = k.trunc_radius(_TAIL)

    def f(u):
        return _htilde(spec, h, u) * k.density(u) * u

    val = 2.0 * math.pi * integrate(f, 0.0, rho, _PGFL_POLICY).value
    return float(min(val, 1.0))


def palm_pgfl(spec: ClusterSpec, h: RadialTestFunction) -> float:
    """Generating functional of the reduced Palm version of the PPCP."""
    if h.rho_h == 0.0:
        return 1.0
    return stationary_pgfl(spec, h) * _palm_factor(spec, h)


def nnd_ccdf(spec: ClusterSpec, r: float) -> float:
    """Complementary nearest-neighbor distance distribution at radius r.

    Shares the palm_pgfl code path with the ball-void test function, so
    the structural identity with the Palm PGFL holds exactly.
    """
    if r < 0:
        raise ValueError("r must be nonnegative")
    if r == 0:
        return 1.0
    return palm_pgfl(spec, ball_indicator(r))


def verify_exchange(spec: ClusterSpec, W: PalmFunctional,
                    cfg: SimConfig) -> ExchangeResult:
    """Estimate both sides of the exchange formula and report CIs.

    Left side: lambda_total times the mean of W over Palm samples of the
    cluster process.  Right side: lambda_parent times the mean, over Palm
    samples of the parent process (parent at the origin with its own
    cluster, everything else stationary), of the sum of W evaluated on
    the pattern re-centered at each offspring of the origin parent.
    """
    n = cfg.replications
    lhs_vals = np.empty(n)
    for i in range(n):
        rng = replication_rng(cfg.seed, i)
        pat = sample_palm_ppcp(spec, cfg, rng)
        lhs_vals[i] = W.fn(pat.reduced_points())

    rhs_vals = np.empty(n)
    for i in range(n):
        rng = replication_rng(cfg.seed, n + i)
        k0 = rng.poisson(spec.mu)
        own = spec.kernel.sample_offset(rng, size=k0)
        rest, _, _ = _ppcp_points(spec, cfg, rng)
        pts = np.vstack([own, rest])
        total = 0.0
        for j in range(k0):
            shifted = np.delete(pts, j, axis=0) - own[j]
            total += W.fn(shifted)
        rhs_vals[i] = total

    lhs = _make_ci(lhs_vals, spec.lambda_total, cfg.confidence_level, 0, cfg.seed)
    rhs = _make_ci(rhs_vals, spec.lambda_parent, cfg.confidence_level, 0, cfg.seed)
    flagged = not (np.all(np.isfinite(lhs_vals)) and np.all(np.isfinite(rhs_vals)))
    return ExchangeResult(lhs=lhs, rhs=rhs, flagged=flagged)
