"""Samplers for planar point patterns: PPP parents, offspring clusters,
the stationary Poisson-Poisson cluster process, its Palm version, and
independent thinning into transmitters.

All samplers take a numpy Generator.  Replication-level reproducibility
comes from :func:`replication_rng`, which derives one counter-based
stream per (seed, replication index).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .offspring import OffspringKernel

__all__ = [
    "ClusterSpec",
    "PointPattern",
    "SimConfig",
    "replication_rng",
    "sample_parent_ppp",
    "sample_cluster",
    "sample_ppcp",
    "sample_palm_ppcp",
    "thin",
    "nearest_transmitter",
]


@dataclass(frozen=True)
class ClusterSpec:
    """Parent intensity, mean cluster size and displacement kernel of a PPCP."""

    lambda_parent: float
    mu: float
    kernel: OffspringKernel

    def __post_init__(self):
        if not self.lambda_parent > 0:
            raise ValueError("lambda_parent must be positive")
        if not self.mu > 0:
            raise ValueError("mu must be positive")

    @property
    def lambda_total(self) -> float:
        return self.lambda_parent * self.mu


@dataclass(frozen=True)
class SimConfig:
    """Monte Carlo run settings."""

    window_radius: float
    replications: int
    seed: int
    tail_eps: float = 1e-6
    confidence_level: float = 0.95

    def __post_init__(self):
        if not self.window_radius > 0:
            raise ValueError("window_radius must be positive")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if not 0 < self.confidence_level < 1:
            raise ValueError("confidence_level must be in (0, 1)")


@dataclass
class PointPattern:
    """A finite planar point set with optional per-point marks.

    ``window_radius`` is the radius of the circular observation window
    centered at the origin.  If ``origin_index`` is set, that point is the
    distinguished Palm point at (0, 0).
    """

    points: np.ndarray                       # shape (n, 2)
    window_radius: float
    cluster_id: Optional[np.ndarray] = None  # int per point
    is_transmitter: Optional[np.ndarray] = None
    fading: Optional[np.ndarray] = None
    origin_index: Optional[int] = None

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 2)

    def __len__(self) -> int:
        return len(self.points)

    def reduced_points(self) -> np.ndarray:
        """Points with the distinguished origin point removed."""
        if self.origin_index is None:
            return self.points
        mask = np.ones(len(self.points), dtype=bool)
        mask[self.origin_index] = False
        return self.points[mask]

    def to_json(self) -> str:
        doc = {
            "window": {"shape": "disk", "radius": self.window_radius},
            "points": self.points.tolist(),
            "marks": None,
            "origin_index": self.origin_index,
        }
        if any(m is not None for m in (self.cluster_id, self.is_transmitter, self.fading)):
            doc["marks"] = {
                "cluster_id": None if self.cluster_id is None else self.cluster_id.tolist(),
                "is_transmitter": None if self.is_transmitter is None else self.is_transmitter.tolist(),
                "fading": None if self.fading is None else self.fading.tolist(),
            }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "PointPattern":
        doc = json.loads(text)
        marks = doc.get("marks") or {}

        def arr(key, dtype):
            v = marks.get(key)
            return None if v is None else np.asarray(v, dtype=dtype)

        return cls(
            points=np.asarray(doc["points"], dtype=float).reshape(-1, 2),
            window_radius=float(doc["window"]["radius"]),
            cluster_id=arr("cluster_id", int),
            is_transmitter=arr("is_transmitter", bool),
            fading=arr("fading", float),
            origin_index=doc.get("origin_index"),
        )


def replication_rng(seed: int, replication: int) -> np.random.Generator:
    """Independent counter-based stream for one (seed, replication) pair."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(replication,))
    return np.random.Generator(np.random.Philox(ss))


def _uniform_disk(radius: float, n: int, rng) -> np.ndarray:
    rad = radius * np.sqrt(rng.random(n))
    ang = rng.random(n) * (2.0 * math.pi)
    return np.column_stack((rad * np.cos(ang), rad * np.sin(ang)))


def sample_parent_ppp(lam: float, radius: float, rng) -> PointPattern:
    """Homogeneous PPP of intensity lam on the disk of the given radius."""
    if not lam > 0:
        raise ValueError("intensity must be positive")
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    area = math.pi * radius * radius
    n = rng.poisson(lam * area)
    return PointPattern(points=_uniform_disk(radius, n, rng), window_radius=radius)


def sample_cluster(mu: float, kernel: OffspringKernel, center, rng) -> PointPattern:
    """One finite Poisson(mu) offspring cluster around ``center``."""
    if not mu > 0:
        raise ValueError("mu must be positive")
    center = np.asarray(center, dtype=float)
    n = rng.poisson(mu)
    pts = center + kernel.sample_offset(rng, size=n)
    return PointPattern(points=pts, window_radius=np.inf)


def _ppcp_points(spec: ClusterSpec, cfg: SimConfig, rng, extra_parent=None):
    """Raw PPCP sample restricted to the observation disk.

    Parents are drawn on the window dilated by the kernel truncation
    radius at cfg.tail_eps so clusters leaking into the window are kept.
    Returns (points, cluster_id).
    """
    dilation = spec.kernel.trunc_radius(cfg.tail_eps)
    sample_radius = cfg.window_radius + dilation
    area = math.pi * sample_radius**2
    n_parents = rng.poisson(spec.lambda_parent * area)
    parents = _uniform_disk(sample_radius, n_parents, rng)
    if extra_parent is not None:
        parents = np.vstack([parents, np.asarray(extra_parent, dtype=float)])
        n_parents += 1
    counts = rng.poisson(spec.mu, size=n_parents)
    cluster_id = np.repeat(np.arange(n_parents), counts)
    total = int(counts.sum())
    pts = parents[cluster_id] + spec.kernel.sample_offset(rng, size=total)
    keep = np.einsum("ij,ij->i", pts, pts) <= cfg.window_radius**2
    return pts[keep], cluster_id[keep], n_parents


def sample_ppcp(spec: ClusterSpec, cfg: SimConfig, rng) -> PointPattern:
    """Stationary PPCP restricted to the observation disk."""
    pts, cid, _ = _ppcp_points(spec, cfg, rng)
    return PointPattern(points=pts, window_radius=cfg.window_radius, cluster_id=cid)


def sample_palm_ppcp(spec: ClusterSpec, cfg: SimConfig, rng) -> PointPattern:
    """Palm version of the PPCP: stationary sample plus one extra cluster
    whose parent is placed so that one of its offspring sits at the origin.

    The origin point itself is appended last with ``origin_index`` set;
    dropping it gives the reduced Palm version.
    """
    z = spec.kernel.sample_offset(rng)
    pts, cid, n_parents = _ppcp_points(spec, cfg, rng, extra_parent=-z)
    # the forced offspring at the origin belongs to the extra parent's
    # cluster (index n_parents - 1); _ppcp_points already gave that parent
    # its Poisson(mu) additional offspring
    pts = np.vstack([pts, [[0.0, 0.0]]])
    cid = np.append(cid, n_parents - 1)
    return PointPattern(points=pts, window_radius=cfg.window_radius,
                        cluster_id=cid, origin_index=len(pts) - 1)


def thin(pat: PointPattern, p: float, rng) -> PointPattern:
    """Mark each point as transmitter with independent probability p.

    Positions are untouched.  The origin point (if any) receives a mark
    like every other point; coverage estimation ignores it and applies the
    receiving-mode factor (1 - p) analytically.
    """
    if not 0 < p < 1:
        raise ValueError("p must be in (0, 1)")
    marks = rng.random(len(pat)) < p
    return PointPattern(points=pat.points, window_radius=pat.window_radius,
                        cluster_id=pat.cluster_id, is_transmitter=marks,
                        fading=pat.fading, origin_index=pat.origin_index)


def nearest_transmitter(pat: PointPattern):
    """Index and distance of the transmitter closest to the origin.

    The distinguished origin point is excluded.  Returns None when the
    pattern holds no eligible transmitter (the caller should treat the
    replication as censored).
    """
    if pat.is_transmitter is None:
        raise ValueError("pattern has no transmitter marks; call thin() first")
    mask = pat.is_transmitter.copy()
    if pat.origin_index is not None:
        mask[pat.origin_index] = False
    idx = np.flatnonzero(mask)
    if len(idx) == 0:
        return None
    d = np.hypot(pat.points[idx, 0], pat.points[idx, 1])
    j = int(np.argmin(d))
    return int(idx[j]), float(d[j])
