"""Command-line front end.

Subcommands:

* ``run <config>``: run an experiment described by a YAML or JSON config
  file (or a previously written run manifest) and write CSV data, a PNG
  rendering and a JSON manifest.
* ``reproduce fig2|fig3``: run the built-in coverage / discovery curve
  experiments (clustered devices, three kernel variances, PPP baseline)
  with Monte Carlo overlays.
* ``verify``: quick self-check suites.

Exit codes: 0 success, 2 config error, 3 convergence or censoring
failure.  The environment variable ``PPCPALM_THREADS`` sets the number
of worker processes used for the analytic curve evaluations.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
import yaml

from . import report
from .coverage_analytic import (
    ConvergenceError,
    coverage,
    discovery,
    ppp_coverage,
    ppp_discovery,
)
from .offspring import ThomasKernel, kernel_from_config
from .palm_analytic import (
    PalmFunctional,
    ball_indicator,
    nnd_ccdf,
    palm_intensity_ball,
    palm_pgfl,
    verify_exchange,
)
from .pointproc import ClusterSpec, SimConfig
from .quadrature import QuadPolicy
from .sinr_mc import (
    CensoringError,
    NetworkSpec,
    estimate_coverage,
    estimate_discovery,
    estimate_nnd,
)

_MODES = ("coverage", "discovery", "nnd", "palm-verify")

_CURVE_HEADER = ["theta", "sigma2", "analytic", "mc_mean", "mc_ci_low",
                 "mc_ci_high", "n", "n_censored", "ppp"]
_NND_HEADER = ["r", "analytic", "mc_mean", "mc_ci_low", "mc_ci_high",
               "n", "n_censored"]
_EXCHANGE_HEADER = ["functional", "lhs_mean", "lhs_ci_low", "lhs_ci_high",
                    "rhs_mean", "rhs_ci_low", "rhs_ci_high", "overlap"]


class ConfigError(Exception):
    """Invalid or missing configuration field."""


_REQUIRED = object()


def _get(doc: dict, dotted: str, typ=None, default=_REQUIRED):
    """Fetch doc[a][b]... for dotted path 'a.b'; raise naming the field."""
    node = doc
    for part in dotted.split("."):
        if not isinstance(node, dict) or part not in node:
            if default is not _REQUIRED:
                return default
            raise ConfigError(f"missing config field '{dotted}'")
        node = node[part]
    if typ is not None:
        try:
            if typ is list:
                if not isinstance(node, (list, tuple)):
                    raise TypeError
                return list(node)
            return typ(node)
        except (TypeError, ValueError):
            raise ConfigError(f"config field '{dotted}' must be of type {typ.__name__}")
    return node


def load_config(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text()
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config: {exc}")
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a mapping")
    # a run manifest carries its config under the 'config' key
    if "config" in doc and "mode" not in doc:
        doc = doc["config"]
        if not isinstance(doc, dict):
            raise ConfigError("config field 'config' must be a mapping")
    return doc


def _parse_common(doc: dict):
    mode = _get(doc, "mode", str)
    if mode not in _MODES:
        raise ConfigError(f"config field 'mode' must be one of {_MODES}, got {mode!r}")
    try:
        kernel = kernel_from_config(_get(doc, "cluster.kernel"))
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"config field 'cluster.kernel' invalid: {exc}")
    try:
        spec = ClusterSpec(
            lambda_parent=_get(doc, "cluster.lambda_parent", float),
            mu=_get(doc, "cluster.mu", float),
            kernel=kernel,
        )
    except ValueError as exc:
        raise ConfigError(f"config section 'cluster' invalid: {exc}")
    try:
        net = NetworkSpec(
            p=_get(doc, "network.p", float),
            beta=_get(doc, "network.beta", float),
            noise=_get(doc, "network.noise", float, 0.0),
        )
    except ValueError as exc:
        raise ConfigError(f"config section 'network' invalid: {exc}")
    try:
        sim = SimConfig(
            window_radius=_get(doc, "sim.window_radius", float),
            replications=_get(doc, "sim.replications", int),
            seed=_get(doc, "sim.seed", int),
            tail_eps=_get(doc, "sim.tail_eps", float, 1e-6),
            confidence_level=_get(doc, "sim.confidence_level", float, 0.95),
        )
    except ValueError as exc:
        raise ConfigError(f"config section 'sim' invalid: {exc}")
    try:
        quad = QuadPolicy(
            rel_tol=_get(doc, "quad.rel_tol", float, 1e-6),
            abs_tol=_get(doc, "quad.abs_tol", float, 1e-10),
        )
    except ValueError as exc:
        raise ConfigError(f"config section 'quad' invalid: {exc}")
    out = _get(doc, "output_path", str)
    return mode, spec, net, sim, quad, out


def _sorted_positive(doc, field) -> list[float]:
    grid = [float(v) for v in _get(doc, field, list)]
    if not grid:
        raise ConfigError(f"config field '{field}' must be nonempty")
    if any(v <= 0 for v in grid):
        raise ConfigError(f"config field '{field}' entries must be positive")
    if sorted(grid) != grid:
        raise ConfigError(f"config field '{field}' must be sorted ascending")
    return grid


def _n_workers() -> int:
    try:
        return max(1, int(os.environ.get("PPCPALM_THREADS", "1")))
    except ValueError:
        return 1


def _analytic_cell(args):
    mode, theta, spec, net, quad = args
    fn = coverage if mode == "coverage" else discovery
    return fn(theta, spec, net, quad)


def _curve_experiment(doc, mode, spec, net, sim, quad, out_prefix):
    thetas = _sorted_positive(doc, "theta_grid")
    sigma2_list = _get(doc, "sigma2_list", None, None)
    if sigma2_list is not None:
        if not isinstance(spec.kernel, ThomasKernel):
            raise ConfigError("config field 'sigma2_list' requires a thomas kernel")
        sigma2_list = [float(v) for v in sigma2_list]
        if not sigma2_list or any(v <= 0 for v in sigma2_list):
            raise ConfigError("config field 'sigma2_list' entries must be positive")
        specs = [(s2, ClusterSpec(spec.lambda_parent, spec.mu, ThomasKernel(s2)))
                 for s2 in sigma2_list]
    else:
        s2 = spec.kernel.sigma2 if isinstance(spec.kernel, ThomasKernel) else float("nan")
        specs = [(s2, spec)]

    est_fn = estimate_coverage if mode == "coverage" else estimate_discovery
    ppp_fn = (lambda th: ppp_coverage(th, net.p, spec.lambda_total, net.beta)) \
        if mode == "coverage" else (lambda th: ppp_discovery(th, net.p, net.beta))

    cells = [(mode, th, sp, net, quad) for _, sp in specs for th in thetas]
    workers = _n_workers()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            analytic = list(pool.map(_analytic_cell, cells))
    else:
        analytic = [_analytic_cell(c) for c in cells]

    rows = []
    mc_by_label = {}
    analytic_by_label = {}
    idx = 0
    for s2, sp in specs:
        label = f"sigma2={s2:g}" if not math.isnan(s2) else "cluster"
        means, los, his, avals = [], [], [], []
        for th in thetas:
            est = est_fn(sp, net, th, sim)
            a = analytic[idx]
            idx += 1
            rows.append([th, s2, a, est.mean, est.ci_low, est.ci_high,
                         est.n_effective, est.n_censored, ppp_fn(th)])
            means.append(est.mean)
            los.append(est.ci_low)
            his.append(est.ci_high)
            avals.append(a)
        mc_by_label[label] = (means, los, his)
        analytic_by_label[label] = avals

    csv_path = f"{out_prefix}.csv"
    png_path = f"{out_prefix}.png"
    report.write_csv(csv_path, _CURVE_HEADER, rows)
    ppp_curve = [ppp_fn(th) for th in thetas]
    ylabel = "coverage probability" if mode == "coverage" else "discovered devices"
    report.render_curves(png_path, thetas, analytic_by_label, mc=mc_by_label,
                         baseline=("PPP", ppp_curve), ylabel=ylabel)
    return [csv_path, png_path]


def _nnd_experiment(doc, spec, sim, out_prefix):
    r_grid = _sorted_positive(doc, "r_grid")
    ests = estimate_nnd(spec, r_grid, sim)
    rows = []
    means, los, his, avals = [], [], [], []
    for r, est in zip(r_grid, ests):
        a = nnd_ccdf(spec, r)
        rows.append([r, a, est.mean, est.ci_low, est.ci_high,
                     est.n_effective, est.n_censored])
        means.append(est.mean)
        los.append(est.ci_low)
        his.append(est.ci_high)
        avals.append(a)
    csv_path = f"{out_prefix}.csv"
    png_path = f"{out_prefix}.png"
    report.write_csv(csv_path, _NND_HEADER, rows)
    report.render_curves(png_path, r_grid, {"analytic": avals},
                         mc={"empirical": (means, los, his)},
                         xlabel="r", ylabel="nearest-neighbor CCDF", logx=False)
    return [csv_path, png_path]


def _canonical_functionals(spec):
    """The three standard test functionals for the exchange check."""
    rb = 2.0

    def count_ball(pts):
        return float(np.sum(np.einsum("ij,ij->i", pts, pts) <= rb * rb))

    def radial_product(pts):
        r = np.hypot(pts[:, 0], pts[:, 1])
        return float(np.prod(np.minimum(r / rb, 1.0)))

    return [
        ("one", PalmFunctional(fn=lambda pts: 1.0, support_radius=0.0)),
        ("ball_count", PalmFunctional(fn=count_ball, support_radius=rb)),
        ("radial_product", PalmFunctional(fn=radial_product, support_radius=rb)),
    ]


def _exchange_experiment(spec, sim, out_prefix):
    rows = []
    for name, W in _canonical_functionals(spec):
        res = verify_exchange(spec, W, sim)
        rows.append([name, res.lhs.mean, res.lhs.ci_low, res.lhs.ci_high,
                     res.rhs.mean, res.rhs.ci_low, res.rhs.ci_high,
                     int(res.cis_overlap())])
    csv_path = f"{out_prefix}.csv"
    report.write_csv(csv_path, _EXCHANGE_HEADER, rows)
    return [csv_path]


def run_experiment(doc: dict) -> list[str]:
    """Execute one experiment config; returns the list of files written."""
    mode, spec, net, sim, quad, out_prefix = _parse_common(doc)
    t0 = time.time()
    if mode in ("coverage", "discovery"):
        outputs = _curve_experiment(doc, mode, spec, net, sim, quad, out_prefix)
    elif mode == "nnd":
        outputs = _nnd_experiment(doc, spec, sim, out_prefix)
    else:
        outputs = _exchange_experiment(spec, sim, out_prefix)
    manifest_path = f"{out_prefix}.manifest.json"
    report.write_manifest(manifest_path, doc, sim.seed, time.time() - t0, outputs)
    return outputs + [manifest_path]


def _reproduce_doc(figure: str, out_dir: str, seed: int, reps: int) -> dict:
    thetas = [float(f"{t:.10g}") for t in np.geomspace(0.01, 100.0, 13)]
    return {
        "mode": "coverage" if figure == "fig2" else "discovery",
        "output_path": str(Path(out_dir) / figure),
        "cluster": {
            "lambda_parent": 1.0 / math.pi,
            "mu": 10.0,
            "kernel": {"type": "thomas", "sigma2": 1.0},
        },
        "network": {"p": 0.5, "beta": 4.0, "noise": 0.0},
        "theta_grid": thetas,
        "sigma2_list": [0.25, 1.0, 4.0],
        "sim": {"window_radius": 30.0, "replications": reps, "seed": seed},
        "quad": {"rel_tol": 1e-6, "abs_tol": 1e-10},
    }


def _cmd_run(args) -> int:
    doc = load_config(args.config)
    outputs = run_experiment(doc)
    for path in outputs:
        print(f"wrote {path}")
    return 0


def _cmd_reproduce(args) -> int:
    doc = _reproduce_doc(args.figure, args.out, args.seed, args.reps)
    outputs = run_experiment(doc)
    for path in outputs:
        print(f"wrote {path}")
    return 0


def _verify_palm(seed, reps) -> bool:
    spec = ClusterSpec(1.0 / math.pi, 10.0, ThomasKernel(1.0))
    ok = True
    for r in (0.5, 1.0, 2.0):
        a = nnd_ccdf(spec, r)
        b = palm_pgfl(spec, ball_indicator(r))
        line_ok = abs(a - b) <= 1e-12 and 0.0 <= a <= 1.0
        ok &= line_ok
        print(f"nnd/pgfl identity r={r}: {a:.10g} vs {b:.10g} "
              f"{'PASS' if line_ok else 'FAIL'}")
    # closed-form reference for the normal kernel
    r = 2.0
    got = palm_intensity_ball(spec, r)
    want = spec.lambda_total * math.pi * r * r + spec.mu * (1.0 - math.exp(-r * r / 4.0))
    line_ok = abs(got - want) <= 1e-8
    ok &= line_ok
    print(f"palm intensity ball r=2: {got:.10g} vs {want:.10g} "
          f"{'PASS' if line_ok else 'FAIL'}")
    return ok


def _verify_exchange_suite(seed, reps) -> bool:
    spec = ClusterSpec(1.0 / math.pi, 10.0, ThomasKernel(1.0))
    sim = SimConfig(window_radius=8.0, replications=reps, seed=seed)
    ok = True
    for name, W in _canonical_functionals(spec):
        res = verify_exchange(spec, W, sim)
        line_ok = res.cis_overlap() and not res.flagged
        ok &= line_ok
        print(f"exchange {name}: lhs={res.lhs.mean:.5g} rhs={res.rhs.mean:.5g} "
              f"{'PASS' if line_ok else 'FAIL'}")
    return ok


def _verify_coverage_suite(seed, reps) -> bool:
    spec = ClusterSpec(1.0 / math.pi, 10.0, ThomasKernel(1.0))
    net = NetworkSpec(0.5, 4.0, 0.0)
    sim = SimConfig(window_radius=30.0, replications=reps, seed=seed)
    a = coverage(1.0, spec, net)
    est = estimate_coverage(spec, net, 1.0, sim)
    ok = est.contains(a)
    print(f"coverage theta=1: analytic={a:.6g} mc=[{est.ci_low:.6g}, "
          f"{est.ci_high:.6g}] {'PASS' if ok else 'FAIL'}")
    return ok


def _cmd_verify(args) -> int:
    suites = {
        "palm": _verify_palm,
        "exchange": _verify_exchange_suite,
        "coverage": _verify_coverage_suite,
    }
    names = [args.suite] if args.suite else list(suites)
    ok = all(suites[name](args.seed, args.reps) for name in names)
    print("verification PASSED" if ok else "verification FAILED")
    return 0 if ok else 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ppcpalm",
        description="Palm calculus of Poisson-Poisson cluster processes: "
                    "analytic curves with Monte Carlo cross-validation.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment config file")
    p_run.add_argument("config", help="YAML or JSON config (or run manifest)")
    p_run.set_defaults(fn=_cmd_run)

    p_rep = sub.add_parser("reproduce", help="reproduce the built-in curve experiments")
    p_rep.add_argument("figure", choices=("fig2", "fig3"))
    p_rep.add_argument("--out", default="out", help="output directory")
    p_rep.add_argument("--seed", type=int, default=1)
    p_rep.add_argument("--reps", type=int, default=10000,
                       help="Monte Carlo replications per curve point")
    p_rep.set_defaults(fn=_cmd_reproduce)

    p_ver = sub.add_parser("verify", help="run self-check suites")
    p_ver.add_argument("--suite", choices=("palm", "exchange", "coverage"))
    p_ver.add_argument("--seed", type=int, default=1)
    p_ver.add_argument("--reps", type=int, default=20000)
    p_ver.set_defaults(fn=_cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (CensoringError, ConvergenceError) as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
