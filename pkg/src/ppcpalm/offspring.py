"""Offspring displacement kernels for planar cluster processes.

Two isotropic, diffuse displacement laws are supported: a Gaussian
("Thomas") kernel with variance sigma2 per axis and a uniform-disk
("Matern") kernel with a fixed radius.  Each kernel exposes the scalar
quantities the analytic formulas are built from:

* ``density(s)``       -- radial density f(s) with Q(dy) = f(||y||) dy,
* ``ball_prob(x, r)``  -- probability a displaced point lands in the ball
                          of radius r centered at distance x from the parent,
* ``ring_kernel(s, r)``-- radial density of the distance to an offspring
                          whose parent sits at distance r,
* ``sample_offset(rng)`` -- one planar draw,
* ``trunc_radius(eps)`` -- radius outside which the kernel mass is <= eps.

The kernel set is closed: adding a variant requires all five operations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .quadrature import QuadPolicy, integrate

__all__ = ["OffspringKernel", "ThomasKernel", "MaternKernel", "kernel_from_config"]

# Tight policy for the radial CDF integral; shared with the PGFL code.
_BALL_POLICY = QuadPolicy(rel_tol=1e-10, abs_tol=1e-13)


def _check_nonnegative(**kwargs):
    for name, value in kwargs.items():
        if np.any(np.asarray(value) < 0):
            raise ValueError(f"{name} must be nonnegative")


class OffspringKernel:
    """Base class for isotropic offspring displacement distributions."""

    def density(self, s):
        raise NotImplementedError

    def ball_prob(self, x_dist, r):
        raise NotImplementedError

    def ring_kernel(self, s, r):
        raise NotImplementedError

    def sample_offset(self, rng, size=None):
        raise NotImplementedError

    def trunc_radius(self, eps: float) -> float:
        raise NotImplementedError

    def to_config(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class ThomasKernel(OffspringKernel):
    """Isotropic bivariate normal displacement with variance sigma2 per axis."""

    sigma2: float

    def __post_init__(self):
        if self.sigma2 <= 0:
            raise ValueError("sigma2 must be positive")

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)

    def density(self, s):
        _check_nonnegative(s=s)
        s = np.asarray(s, dtype=float)
        out = np.exp(-s * s / (2.0 * self.sigma2)) / (2.0 * math.pi * self.sigma2)
        return out if out.ndim else float(out)

    def ring_kernel(self, s, r):
        _check_nonnegative(s=s, r=r)
        s = np.asarray(s, dtype=float)
        r = np.asarray(r, dtype=float)
        # Rice density with the Bessel factor kept in scaled form:
        # (s/sig2) * exp(-(s-r)^2 / (2 sig2)) * e^{-sr/sig2} I0(sr/sig2)
        z = s * r / self.sigma2
        out = (s / self.sigma2) * np.exp(-(s - r) ** 2 / (2.0 * self.sigma2)) * special.i0e(z)
        return out if out.ndim else float(out)

    def ball_prob(self, x_dist, r):
        _check_nonnegative(x_dist=x_dist, r=r)
        x = np.atleast_1d(np.asarray(x_dist, dtype=float))
        scalar = np.ndim(x_dist) == 0 and np.ndim(r) == 0
        r = float(r)
        if r == 0.0:
            out = np.zeros_like(x)
            return float(out[0]) if scalar else out
        # Integrate the ring kernel over the radial window where it has
        # mass; beyond ~10 sigma from x the contribution is below 1e-21.
        reach = 10.0 * self.sigma
        hi = min(r, float(np.max(x)) + reach)
        out = np.empty_like(x)
        done = x - reach >= r          # ball entirely in the far tail
        out[done] = 0.0
        todo = ~done
        if np.any(todo):
            xs = x[todo]

            def f(q):
                return self.ring_kernel(q[:, None], xs[None, :])

            res = integrate(f, 0.0, hi, _BALL_POLICY)
            vals = np.atleast_1d(np.asarray(res.value))
            out[todo] = np.clip(vals, 0.0, 1.0)
        return float(out[0]) if scalar else out

    def sample_offset(self, rng, size=None):
        n = 1 if size is None else size
        z = rng.normal(0.0, self.sigma, size=(n, 2))
        return z[0] if size is None else z

    def trunc_radius(self, eps: float) -> float:
        if not 0 < eps < 1:
            raise ValueError("eps must be in (0, 1)")
        return self.sigma * math.sqrt(-2.0 * math.log(eps))

    def to_config(self) -> dict:
        return {"type": "thomas", "sigma2": self.sigma2}


@dataclass(frozen=True)
class MaternKernel(OffspringKernel):
    """Uniform displacement on the disk of the given radius."""

    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("radius must be positive")

    def density(self, s):
        _check_nonnegative(s=s)
        s = np.asarray(s, dtype=float)
        out = np.where(s <= self.radius, 1.0 / (math.pi * self.radius**2), 0.0)
        return out if out.ndim else float(out)

    def ring_kernel(self, s, r):
        _check_nonnegative(s=s, r=r)
        s = np.asarray(s, dtype=float)
        r = np.asarray(r, dtype=float)
        R = self.radius
        # Angular measure of {phi : ||s e(phi) - r e1|| <= R}; the arccos
        # argument is clamped against roundoff at tangency.
        sr = s * r
        with np.errstate(divide="ignore", invalid="ignore"):
            cos_arg = np.where(sr > 0, (s * s + r * r - R * R) / (2.0 * sr), 0.0)
        phi = np.where(
            s + r <= R, math.pi,
            np.where(np.abs(s - r) >= R, 0.0, np.arccos(np.clip(cos_arg, -1.0, 1.0))),
        )
        out = 2.0 * s * phi / (math.pi * R * R)
        return out if out.ndim else float(out)

    def ball_prob(self, x_dist, r):
        _check_nonnegative(x_dist=x_dist, r=r)
        x = np.asarray(x_dist, dtype=float)
        r = float(r)
        R = self.radius
        # Lens area of disk(0, r) and disk(x, R), normalized by pi R^2.
        with np.errstate(divide="ignore", invalid="ignore"):
            a1 = np.arccos(np.clip((x * x + r * r - R * R) / (2.0 * x * r), -1.0, 1.0))
            a2 = np.arccos(np.clip((x * x + R * R - r * r) / (2.0 * x * R), -1.0, 1.0))
        tri = 0.5 * np.sqrt(np.clip(
            (-x + r + R) * (x + r - R) * (x - r + R) * (x + r + R), 0.0, None))
        lens = r * r * a1 + R * R * a2 - tri
        contained = x + R <= r          # support inside the ball
        swallowed = x + r <= R          # ball inside the support
        disjoint = x >= r + R
        out = np.where(disjoint, 0.0,
                       np.where(contained, 1.0,
                                np.where(swallowed, (r / R) ** 2,
                                         lens / (math.pi * R * R))))
        out = np.clip(out, 0.0, 1.0)
        return out if out.ndim else float(out)

    def sample_offset(self, rng, size=None):
        n = 1 if size is None else size
        rad = self.radius * np.sqrt(rng.random(n))
        ang = rng.random(n) * (2.0 * math.pi)
        z = np.column_stack((rad * np.cos(ang), rad * np.sin(ang)))
        return z[0] if size is None else z

    def trunc_radius(self, eps: float) -> float:
        if not 0 < eps < 1:
            raise ValueError("eps must be in (0, 1)")
        return self.radius

    def to_config(self) -> dict:
        return {"type": "matern", "radius": self.radius}


def kernel_from_config(cfg: dict) -> OffspringKernel:
    """Build a kernel from {"type": "thomas", "sigma2": ...} style config."""
    kind = cfg.get("type")
    if kind == "thomas":
        return ThomasKernel(sigma2=float(cfg["sigma2"]))
    if kind == "matern":
        return MaternKernel(radius=float(cfg["radius"]))
    raise ValueError(f"unknown kernel type: {kind!r}")
