"""Deterministic evaluation of the D2D coverage probability and the
expected number of discovered devices for a PPCP-deployed network, via
nested adaptive quadrature of the radial (d = 2) reduction, plus the
homogeneous-PPP baselines used for comparison.

``mode="nearest"`` gives the nearest-transmitter coverage probability;
``mode="discovery"`` extends the partner-side integral down to zero
distance, which turns the same pipeline into the expected number of
decodable transmitters.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.interpolate import CubicSpline

from .pointproc import ClusterSpec
from .quadrature import QuadPolicy, integrate, integrate_semi_infinite
from .sinr_mc import NetworkSpec

__all__ = [
    "ConvergenceError",
    "c_hat",
    "e_hat",
    "i_hat",
    "coverage",
    "discovery",
    "ppp_coverage",
    "ppp_discovery",
]

_TAIL = 1e-16
_MODES = ("nearest", "discovery")
# The cached factors (e_hat and the other-cluster density) are always
# built at this fixed tight tolerance so that the user-facing policy only
# drives the outer quadrature; loosening or tightening the policy then
# perturbs the result through well-estimated outer errors alone.
_CACHE_POLICY = QuadPolicy(rel_tol=1e-9, abs_tol=1e-13)


class ConvergenceError(RuntimeError):
    """Quadrature failed to meet its tolerance; carries the partial value."""

    def __init__(self, message: str, partial: float, achieved_tol: float):
        super().__init__(f"{message} (partial={partial!r}, achieved_tol={achieved_tol!r})")
        self.partial = partial
        self.achieved_tol = achieved_tol


def _kernel_scale(spec: ClusterSpec) -> float:
    return spec.kernel.trunc_radius(1e-6)


def _check_mode(mode: str):
    if mode not in _MODES:
        raise ValueError(f"mode must be one of {_MODES}, got {mode!r}")


def c_hat(s, r, theta, spec: ClusterSpec, net: NetworkSpec,
          mode: str = "nearest", policy: QuadPolicy | None = None):
    """Laplace-type factor of one cluster with parent at distance r when
    the typical device decodes a transmitter at distance s.

    Accepts a scalar or array ``r``; the integral over the partner-cluster
    radius shares one set of adaptive nodes across all r values.
    """
    _check_mode(mode)
    if not s > 0:
        raise ValueError("s must be positive")
    if np.any(np.asarray(r) < 0):
        raise ValueError("r must be nonnegative")
    if not theta > 0:
        raise ValueError("theta must be positive")
    if policy is None:
        policy = QuadPolicy()
    k = spec.kernel
    r_arr = np.atleast_1d(np.asarray(r, dtype=float))
    lo = s if mode == "nearest" else 0.0
    hi = float(r_arr.max()) + k.trunc_radius(_TAIL)
    pmu = net.p * spec.mu
    # Complement of the inner integral, accumulated without cancellation:
    # the cluster mass below the association distance (exact ball
    # probability) plus the weighted mass beyond it with the weight
    # complement theta l(q)/l(s) / (1 + theta l(q)/l(s)).
    comp = np.zeros_like(r_arr)
    if mode == "nearest":
        comp += np.atleast_1d(k.ball_prob(r_arr, s))
    if hi > lo:
        s_pow = theta * s**net.beta

        def f(q):
            qb = q**net.beta
            weight_comp = s_pow / (qb + s_pow)
            return weight_comp[:, None] * k.ring_kernel(q[:, None], r_arr[None, :])

        comp += np.atleast_1d(np.asarray(integrate(f, lo, hi, policy).value))
    out = np.exp(-pmu * np.clip(comp, 0.0, 1.0))
    return float(out[0]) if np.ndim(r) == 0 else out


def e_hat(s, theta, spec: ClusterSpec, net: NetworkSpec,
          mode: str = "nearest", policy: QuadPolicy | None = None) -> float:
    """Factor from all clusters other than the typical device's and its
    partner's: exp(-2 pi lambda_parent * integral of [1 - c_hat(s, v)] v dv)."""
    _check_mode(mode)
    if not s > 0:
        raise ValueError("s must be positive")
    if policy is None:
        policy = QuadPolicy()

    def f(v):
        return (1.0 - c_hat(s, v, theta, spec, net, mode, policy)) * v

    scale = s * (1.0 + theta**(1.0 / net.beta)) + _kernel_scale(spec)
    res = integrate_semi_infinite(f, 0.0, scale, policy)
    return float(math.exp(-2.0 * math.pi * spec.lambda_parent * max(res.value, 0.0)))


def _other_cluster_density(s, theta, spec, net, mode, policy) -> float:
    """Partner density contribution from clusters other than the origin's:
    2 pi lambda_parent * integral of c_hat(s, r) g(s|r) r dr.  Independent
    of the origin-parent distance u."""
    k = spec.kernel
    rho = k.trunc_radius(_TAIL)
    lo = max(0.0, s - rho)
    hi = s + rho

    def f(r):
        return c_hat(s, r, theta, spec, net, mode, policy) * k.ring_kernel(s, r) * r

    res = integrate(f, lo, hi, policy)
    return float(2.0 * math.pi * spec.lambda_parent * max(res.value, 0.0))


def i_hat(s, u, theta, spec: ClusterSpec, net: NetworkSpec,
          mode: str = "nearest", policy: QuadPolicy | None = None) -> float:
    """Radial density of the communication partner at distance s when the
    typical device's parent sits at distance u: same-cluster ring kernel
    plus the other-cluster term."""
    _check_mode(mode)
    if not s > 0:
        raise ValueError("s must be positive")
    if u < 0:
        raise ValueError("u must be nonnegative")
    if policy is None:
        policy = QuadPolicy()
    return float(spec.kernel.ring_kernel(s, u)) + _other_cluster_density(
        s, theta, spec, net, mode, policy)


class _SCache:
    """Cubic-spline cache of e_hat (through its exponent) and the
    other-cluster density on a linear s-grid; both are independent of the
    outer u variable and are always built at the fixed cache tolerance."""

    _GRID_POINTS = 64

    def __init__(self, theta, spec, net, mode):
        self.policy = _CACHE_POLICY
        s_hi = max(_kernel_scale(spec), 1.0)
        while e_hat(s_hi, theta, spec, net, mode, self.policy) > 1e-14 and s_hi < 1e4:
            s_hi *= 1.6
        self.s_hi = s_hi
        self.s_lo = s_hi * 1e-4
        # geometric points resolve the curvature near s = 0, linear points
        # resolve the Gaussian-like tail of the exponent
        grid = np.unique(np.concatenate([
            np.geomspace(self.s_lo, self.s_hi, self._GRID_POINTS),
            np.linspace(self.s_lo, self.s_hi, self._GRID_POINTS),
        ]))
        e_vals = np.array([e_hat(s, theta, spec, net, mode, self.policy) for s in grid])
        j_vals = np.array([_other_cluster_density(s, theta, spec, net, mode, self.policy)
                           for s in grid])
        # e_hat decays like exp(-c s^2); its exponent is the smooth object
        self._exponent_spline = CubicSpline(grid, -np.log(np.maximum(e_vals, 1e-300)))
        self._j_spline = CubicSpline(grid, j_vals)
        self._args = (theta, spec, net, mode)

    def e(self, s):
        return np.exp(-self._exponent_spline(s))

    def j(self, s):
        return np.maximum(self._j_spline(s), 0.0)

    def validate(self, n_probe: int = 10, rel_tol: float = 1e-5):
        """Spot-check the spline against direct evaluation."""
        rng = np.random.default_rng(0)
        theta, spec, net, mode = self._args
        probes = np.exp(rng.uniform(math.log(self.s_lo * 1.01),
                                    math.log(self.s_hi * 0.99), n_probe))
        for s in probes:
            direct = e_hat(s, theta, spec, net, mode, self.policy)
            # mixed tolerance: deep-tail values only need absolute accuracy
            # (an absolute error of 1e-7 moves the result by well under 1e-5)
            if abs(self.e(s) - direct) > rel_tol * direct * 10 + 1e-7:
                raise ConvergenceError(
                    f"e_hat cache validation failed at s={s}", float(self.e(s)),
                    abs(self.e(s) - direct) / direct)


def _cp(theta, spec: ClusterSpec, net: NetworkSpec, policy, mode) -> float:
    if not theta > 0:
        raise ValueError("theta must be positive")
    if policy is None:
        policy = QuadPolicy()
    k = spec.kernel
    cache = _SCache(theta, spec, net, mode)
    cache.validate()
    s_lo, s_hi = cache.s_lo, cache.s_hi
    theta_n = theta * net.noise

    def inner(u: float) -> float:
        def fs(s_arr):
            chat = np.array([c_hat(si, u, theta, spec, net, mode, policy)
                             for si in s_arr])
            g = np.atleast_1d(k.ring_kernel(s_arr, u))
            noise_fac = np.exp(-theta_n * s_arr**net.beta) if theta_n > 0 else 1.0
            return noise_fac * cache.e(s_arr) * chat * (g + cache.j(s_arr))

        return integrate(fs, s_lo, s_hi, policy).value

    u_max = k.trunc_radius(1e-14)

    def fu(u_arr):
        vals = np.array([inner(u) for u in np.atleast_1d(u_arr)])
        return vals * np.atleast_1d(k.density(u_arr)) * u_arr

    res = integrate(fu, 0.0, u_max, policy)
    value = 2.0 * math.pi * (1.0 - net.p) * net.p * spec.mu * float(res.value)
    if not res.converged:
        raise ConvergenceError(f"{mode} quadrature did not converge at theta={theta}",
                               value, res.abs_err_est)
    return value


def coverage(theta, spec: ClusterSpec, net: NetworkSpec,
             policy: QuadPolicy | None = None) -> float:
    """Coverage probability CP(theta) under nearest-transmitter association."""
    return _cp(theta, spec, net, policy, "nearest")


def discovery(theta, spec: ClusterSpec, net: NetworkSpec,
              policy: QuadPolicy | None = None) -> float:
    """Expected number of transmitters the typical device can decode."""
    return _cp(theta, spec, net, policy, "discovery")


def ppp_discovery(theta, p, beta) -> float:
    """Closed-form discovered-device count for homogeneous-PPP devices
    with zero noise: (1-p) (beta / 2 pi) sin(2 pi / beta) theta^(-2/beta)."""
    if not theta > 0:
        raise ValueError("theta must be positive")
    if not beta > 2:
        raise ValueError("beta must exceed 2")
    if not 0 < p < 1:
        raise ValueError("p must be in (0, 1)")
    return (1.0 - p) * (beta / (2.0 * math.pi)) * math.sin(2.0 * math.pi / beta) \
        * theta**(-2.0 / beta)


def ppp_coverage(theta, p, lambda_total, beta,
                 policy: QuadPolicy | None = None) -> float:
    """Nearest-transmitter Rayleigh coverage for homogeneous-PPP devices
    with zero noise: (1-p) / (1 + rho(theta, beta)).

    Independent of the device intensity (``lambda_total`` is accepted for
    interface symmetry; with N = 0 the result is scale invariant).
    """
    if not theta > 0:
        raise ValueError("theta must be positive")
    if not beta > 2:
        raise ValueError("beta must exceed 2")
    if not 0 < p < 1:
        raise ValueError("p must be in (0, 1)")
    if policy is None:
        policy = QuadPolicy(rel_tol=1e-9, abs_tol=1e-12)
    a = theta**(-2.0 / beta)

    def f(u):
        return 1.0 / (1.0 + u**(beta / 2.0))

    rho = theta**(2.0 / beta) * integrate_semi_infinite(f, a, max(a, 1.0), policy).value
    return (1.0 - p) / (1.0 + rho)
