"""Command-line front end: parameter sweeps, figure data, oracle comparisons.

Every command writes deterministic CSV (17 significant digits, fixed row
order) so identical invocations produce byte-identical files.   Exit codes:
0 success, 1 tolerance or convergence failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import catlab, fock, observables as obs, reference, wigner as wig
from .errors import ConvergenceError, InputDomainError, OptolossError
from .kernels import (ConstantCoupling, CouplingKernels, f_coeffs_constant,
                      profile_from_csv)
from .quadrature import QuadConfig

TWO_PI = 2.0 * np.pi


def _fmt(x) -> str:
    return f"{float(x):.17g}"


def _parse_floats(text: str):
    return [float(tok) for tok in text.split(",") if tok.strip() != ""]


def _jobs_default() -> int:
    try:
        return max(1, int(os.environ.get("OPTOLOSS_JOBS", "1")))
    except ValueError:
        return 1


def _apply_config(args: argparse.Namespace, parser: argparse.ArgumentParser):
    """Fill unset flags from a flat key = value file (flags win)."""
    if not getattr(args, "config", None):
        return args
    overrides = {}
    with open(args.config, encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InputDomainError(f"config line without '=': {line!r}")
            key, val = (part.strip() for part in line.split("=", 1))
            overrides[key.replace("-", "_")] = val
    for key, val in overrides.items():
        if not hasattr(args, key):
            raise InputDomainError(f"unknown config key {key!r}")
        if key in args._explicit:
            continue
        current = getattr(args, key)
        if isinstance(current, bool):
            setattr(args, key, val.lower() in ("1", "true", "yes", "on"))
        elif isinstance(current, int):
            setattr(args, key, int(val))
        elif isinstance(current, float):
            setattr(args, key, float(val))
        else:
            setattr(args, key, val)
    return args


class _TrackingParser(argparse.ArgumentParser):
    """Remembers which destinations were set on the command line."""

    def parse_args(self, argv=None, namespace=None):
        ns = super().parse_args(argv, namespace)
        tokens = sys.argv[1:] if argv is None else list(argv)
        explicit = set()
        for tok in tokens:
            if tok.startswith("--"):
                explicit.add(tok[2:].split("=", 1)[0].replace("-", "_"))
        ns._explicit = explicit
        return ns


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_fcoeffs(args) -> int:
    taus = np.linspace(0.0, args.tau_max, args.steps + 1)
    if args.profile:
        kern = CouplingKernels(profile_from_csv(args.profile), args.tau_max)
    else:
        kern = CouplingKernels(ConstantCoupling(args.g0), args.tau_max)
    fa, fp, fm = kern.f_arrays(taus)
    a = fa + fp * fm
    g = fm - 1j * fp
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["tau", "F_a", "F_plus", "F_minus", "A", "re_G", "im_G"])
        for row in zip(taus, fa, fp, fm, a, g.real, g.imag):
            w.writerow([_fmt(v) for v in row])
    return 0


def cmd_photon(args) -> int:
    taus = np.linspace(0.0, args.tau_max, args.steps + 1)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["tau", "n"])
        for t in taus:
            w.writerow([_fmt(t), _fmt(obs.photon_number(args.alpha, args.kappa, t))])
    return 0


def _quadrature_case(params):
    alpha, g0, kappa, taus, with_oracle = params
    init = obs.InitialState(alpha=alpha, mech=obs.MechCoherent(0.0))
    sysp = obs.SystemParams(g_profile=ConstantCoupling(g0), kappa=kappa)
    tx, tp = obs.quadrature_trace(init, sysp, taus)
    rows = []
    oracle_vals = None
    if with_oracle:
        pairs = max(64, 8 * (len(taus) - 1))
        cfg = reference.ReferenceConfig(pairs_per_period=int(np.ceil(
            pairs * TWO_PI / max(taus[-1], 1e-9))))
        sol = reference.solve_blocks(alpha, g0, kappa, list(taus[1:]), cfg=cfg)
        oracle_vals = [sol.expect_a(t) for t in taus[1:]]
    for i, t in enumerate(taus):
        row = [kappa, t, tx.values[i], tp.values[i]]
        if with_oracle:
            ea = (alpha + 0j) if i == 0 else oracle_vals[i - 1]
            row += [np.sqrt(2.0) * ea.real, np.sqrt(2.0) * ea.imag]
        rows.append(row)
    return rows


def cmd_quadratures(args) -> int:
    kappas = _parse_floats(args.kappa_list)
    if args.tau_max == 0.0:
        taus = np.array([0.0])
    else:
        taus = np.linspace(0.0, args.tau_max, args.steps + 1)
    cases = [(args.alpha, args.g0, k, taus, args.oracle) for k in kappas]
    results = _run_pool(_quadrature_case, cases, args.jobs)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        header = ["kappa", "tau", "X", "P"]
        if args.oracle:
            header += ["X_oracle", "P_oracle"]
        w.writerow(header)
        for rows in results:
            for row in rows:
                w.writerow([_fmt(v) for v in row])
    if args.oracle:
        worst = 0.0
        for rows in results:
            for row in rows:
                worst = max(worst, abs(row[2] - row[4]), abs(row[3] - row[5]))
        if worst > args.oracle_tol:
            print(f"oracle deviation {worst:.3e} exceeds {args.oracle_tol:.1e}",
                  file=sys.stderr)
            return 1
    return 0


def _fidelity_case(params):
    alpha2, g0, kappa = params
    alpha = np.sqrt(alpha2)
    f = obs.cat_fidelity(alpha, g0, kappa)
    lo, hi = obs.fidelity_bounds(alpha, kappa)
    return [alpha2, kappa, f, lo, hi]


def cmd_fidelity(args) -> int:
    alpha2s = _parse_floats(args.alpha2_list)
    if args.kappa_list:
        kappas = _parse_floats(args.kappa_list)
    else:
        kappas = list(np.linspace(0.0, args.kappa_max, args.kappa_steps + 1))
    cases = [(a2, args.g0, k) for a2 in alpha2s for k in kappas]
    rows = _run_pool(_fidelity_case, cases, args.jobs)
    bad = 0
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["alpha2", "kappa", "F", "lower", "upper"])
        for row in rows:
            w.writerow([_fmt(v) for v in row])
            if not (row[3] - 1e-12 <= row[2] <= row[4] + 1e-12):
                bad += 1
    if bad:
        print(f"{bad} rows violate the fidelity bounds", file=sys.stderr)
        return 1
    return 0


def _wigner_case(params):
    alpha, g0, kappa, gmin, gmax, gnum, out_dir = params
    rho_c = catlab.noisy_cat_density(alpha, g0, kappa)
    grid = wig.GridSpec(x_min=gmin, x_max=gmax, n_x=gnum,
                        p_min=gmin, p_max=gmax, n_p=gnum)
    wg = wig.wigner(rho_c, grid)
    path = os.path.join(out_dir, f"wigner_g{g0:.6g}_k{kappa:.6g}.csv")
    wg.to_csv(path)
    return (path, wig.negativity_volume(wg))


def cmd_wigner(args) -> int:
    g0s = _parse_floats(args.g0_list)
    kappas = _parse_floats(args.kappa_list)
    os.makedirs(args.out_dir, exist_ok=True)
    gmin, gmax, gnum = (float(x) for x in args.grid.split(","))
    cases = [(args.alpha, g0, k, gmin, gmax, int(gnum), args.out_dir)
             for g0 in g0s for k in kappas]
    results = _run_pool(_wigner_case, cases, args.jobs)
    with open(os.path.join(args.out_dir, "negativity.csv"), "w", newline="",
              encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["g0", "kappa", "negativity_volume", "file"])
        for (g0, k), (path, neg) in zip(((g, k) for g in g0s for k in kappas), results):
            w.writerow([_fmt(g0), _fmt(k), _fmt(neg), os.path.basename(path)])
    return 0


def cmd_cat(args) -> int:
    g0 = args.g0 if args.g0 is not None else catlab.components_to_coupling(args.components)
    if args.kappa > 0.0:
        rho_c = catlab.noisy_cat_density(args.alpha, g0, args.kappa, n_cav=args.levels)
        dims = fock.FockDims(n_cav=rho_c.shape[0], n_mech=2)
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["n", "m", "re", "im"])
            for i in range(rho_c.shape[0]):
                for j in range(rho_c.shape[0]):
                    w.writerow([i, j, _fmt(rho_c[i, j].real), _fmt(rho_c[i, j].imag)])
        return 0
    vec = catlab.ideal_cat_state(args.alpha, g0,
                                 args.levels or reference.cavity_levels_for(args.alpha, 1e-12))
    catlab.cat_to_csv(vec, args.out)
    return 0


def _oracle_cases(which: str):
    if which == "trivial":
        return [("photon", dict(alpha=1.0, g0=0.0, kappa=0.0, tol=1e-12)),
                ("expect_a", dict(alpha=0.5, g0=0.0, kappa=0.0, tol=1e-10))]
    return [("photon", dict(alpha=1.0, g0=0.5, kappa=0.5, tol=1e-6)),
            ("photon", dict(alpha=1.0, g0=1.0, kappa=0.1, tol=1e-6)),
            ("expect_a", dict(alpha=1.0, g0=0.5, kappa=0.2, tol=1e-5)),
            ("fidelity", dict(alpha=1.0, g0=0.5, kappa=0.1, tol=1e-6)),
            ("thermal", dict(alpha=1.0, g0=0.5, kappa=0.2, nbar=2.0, tol=1e-5))]


def _run_oracle_case(kind, p):
    """Max |analytic - brute force| for one comparison case."""
    if kind == "photon":
        dims = fock.FockDims(19, 14)
        psi_c = fock.coherent_state(p["alpha"], dims.n_cav)
        rho0 = fock.product_state(psi_c, fock.coherent_state(0.0, dims.n_mech), dims)
        taus = [TWO_PI / 3, TWO_PI]
        states = fock.evolve(rho0, ConstantCoupling(p["g0"]), p["kappa"], TWO_PI,
                             snapshots=taus)
        na = fock.number_cav(dims)
        dev = max(abs(fock.expectation(na, st).real
                      - obs.photon_number(p["alpha"], p["kappa"], t))
                  for st, t in zip(states, taus))
        return dev
    if kind == "expect_a":
        taus = [TWO_PI / 4, TWO_PI / 2, TWO_PI]
        cfg = reference.ReferenceConfig(block_levels=32, pairs_per_period=1024)
        sol = reference.solve_blocks(p["alpha"], p["g0"], p["kappa"], taus, cfg=cfg)
        init = obs.InitialState(alpha=p["alpha"])
        sysp = obs.SystemParams(g_profile=ConstantCoupling(p["g0"]), kappa=p["kappa"])
        return max(abs(obs.expect_a(init, sysp, t) - sol.expect_a(t)) for t in taus)
    if kind == "fidelity":
        rho_c = catlab.noisy_cat_density(p["alpha"], p["g0"], p["kappa"])
        ideal = catlab.ideal_cat_state(p["alpha"], p["g0"], rho_c.shape[0])
        brute = fock.state_fidelity(ideal, rho_c)
        return abs(brute - obs.cat_fidelity(p["alpha"], p["g0"], p["kappa"]))
    if kind == "thermal":
        tau = TWO_PI / 4
        cfg = reference.ReferenceConfig(block_levels=64, pairs_per_period=1024)
        sol = reference.solve_blocks(p["alpha"], p["g0"], p["kappa"], [tau],
                                     mech_nbar=p["nbar"], cfg=cfg)
        init = obs.InitialState(alpha=p["alpha"], mech=obs.MechThermal(p["nbar"]))
        sysp = obs.SystemParams(g_profile=ConstantCoupling(p["g0"]), kappa=p["kappa"])
        return abs(obs.expect_a_thermal(init, sysp, tau) - sol.expect_a(tau))
    raise InputDomainError(f"unknown oracle case {kind!r}")


def cmd_oracle_compare(args) -> int:
    cases = _oracle_cases(args.cases)
    failures = 0
    lines = []
    for kind, p in cases:
        dev = _run_oracle_case(kind, p)
        ok = dev <= p["tol"]
        failures += 0 if ok else 1
        desc = ", ".join(f"{k}={v}" for k, v in p.items() if k != "tol")
        lines.append(f"{'PASS' if ok else 'FAIL'} {kind:10s} max deviation "
                     f"{dev:.3e} (tol {p['tol']:.1e}) [{desc}]")
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    print("\n".join(lines))
    return 1 if failures else 0


# ---------------------------------------------------------------------------
# wiring
# ---------------------------------------------------------------------------

def _run_pool(fn, cases, jobs):
    if jobs <= 1 or len(cases) <= 1:
        return [fn(c) for c in cases]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, cases))


def build_parser() -> _TrackingParser:
    parser = _TrackingParser(prog="optoloss",
                             description="Lossy nonlinear optomechanics toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", default=None, help="flat key = value file; flags win")
        p.add_argument("--jobs", type=int, default=_jobs_default(),
                       help="worker processes for sweeps (env OPTOLOSS_JOBS)")

    p = sub.add_parser("fcoeffs", help="time kernels over a tau grid")
    p.add_argument("--g0", type=float, default=1.0)
    p.add_argument("--profile", default=None, help="CSV (tau,g) coupling profile")
    p.add_argument("--tau-max", type=float, default=TWO_PI)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--out", default="fcoeffs.csv")
    add_common(p)
    p.set_defaults(func=cmd_fcoeffs)

    p = sub.add_parser("photon", help="photon-number decay trace")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--kappa", type=float, default=0.1)
    p.add_argument("--tau-max", type=float, default=TWO_PI)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--out", default="photon.csv")
    add_common(p)
    p.set_defaults(func=cmd_photon)

    p = sub.add_parser("quadratures", help="intracavity quadrature trajectories")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--g0", type=float, default=1.0)
    p.add_argument("--kappa-list", default="0,0.2,0.5")
    p.add_argument("--tau-max", type=float, default=TWO_PI)
    p.add_argument("--steps", type=int, default=128)
    p.add_argument("--oracle", action="store_true",
                   help="append brute-force columns and verify agreement")
    p.add_argument("--oracle-tol", type=float, default=1e-5)
    p.add_argument("--out", default="quadratures.csv")
    add_common(p)
    p.set_defaults(func=cmd_quadratures)

    p = sub.add_parser("fidelity", help="cat fidelity and bounds vs kappa")
    p.add_argument("--alpha2-list", default="1,3,10",
                   help="initial photon numbers |alpha|^2")
    p.add_argument("--g0", type=float, default=0.5)
    p.add_argument("--kappa-list", default=None)
    p.add_argument("--kappa-max", type=float, default=0.5)
    p.add_argument("--kappa-steps", type=int, default=50)
    p.add_argument("--out", default="fidelity.csv")
    add_common(p)
    p.set_defaults(func=cmd_fidelity)

    p = sub.add_parser("wigner", help="Wigner grids of noisy cat states")
    p.add_argument("--alpha", type=float, default=float(np.sqrt(3.0)),
                   help="coherent amplitude (text and figure disagree on "
                        "|alpha|; sqrt(3) is the default reading)")
    p.add_argument("--g0-list", default="0.5,0.40824829046386302,0.35355339059327379")
    p.add_argument("--kappa-list", default="0,0.05,0.3")
    p.add_argument("--grid", default="-5,5,201", help="min,max,points per axis")
    p.add_argument("--out-dir", default="wigner_out")
    add_common(p)
    p.set_defaults(func=cmd_wigner)

    p = sub.add_parser("cat", help="ideal or lossy cat-state data")
    p.add_argument("--components", type=int, default=2, choices=(2, 3, 4))
    p.add_argument("--g0", type=float, default=None,
                   help="override the coupling implied by --components")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--kappa", type=float, default=0.0)
    p.add_argument("--levels", type=int, default=None)
    p.add_argument("--out", default="cat.csv")
    add_common(p)
    p.set_defaults(func=cmd_cat)

    p = sub.add_parser("oracle-compare", help="analytic vs brute-force report")
    p.add_argument("--cases", choices=("default", "trivial"), default="default")
    p.add_argument("--out", default="oracle_report.txt")
    add_common(p)
    p.set_defaults(func=cmd_oracle_compare)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config(args, parser)
        return args.func(args)
    except (InputDomainError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OptolossError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
