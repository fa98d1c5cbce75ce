"""Command-line front door.

Every subcommand emits machine-readable output (JSON for reports, CSV for
measures and grids) with a header recording lambda, digit precision,
table depth, truncation, seed, and the artifact version.  Exit codes:
0 success / all checks pass, 1 check failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from . import __version__, coeffs, dynamics, hull, ruelle
from .dyadic import kappa_map, modified_shift, parse_kappa, run_profile, shift
from .verify import ConfigError, RunConfig, report_to_json, run_all

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="juliahull",
        description="Hull of limit-periodic Jacobi matrices from z^2 - lambda: "
                    "tables, transfer operators, and certificate suites.")
    ap.add_argument("--lambda", dest="lam", default="4",
                    help="map parameter, a rational string such as 4 or 7/2")
    ap.add_argument("--digits", type=int, default=32,
                    help="trusted dyadic digits for parsed hull points")
    ap.add_argument("--depth", type=int, default=24,
                    help="float coefficient table depth (rows 2^depth)")
    ap.add_argument("--exact-depth", type=int, default=12,
                    help="exact rational table depth (rows 2^exact_depth)")
    ap.add_argument("--truncation", type=int, default=1024,
                    help="default window half-width for hull operators")
    ap.add_argument("--tol", action="append", default=[], metavar="NAME=VALUE",
                    help="tolerance override, repeatable")
    ap.add_argument("--seed", type=int, default=20260811)
    ap.add_argument("--out", default=None, help="output path (default stdout)")
    ap.add_argument("--allow-small-lambda", action="store_true")
    ap.add_argument("--version", action="version", version=__version__)

    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dyadic", help="digit arithmetic on one hull point")
    p.add_argument("--kappa", required=True)
    p.add_argument("--window", type=int, default=None)
    p.add_argument("--kappa-terms", type=int, default=16)

    p = sub.add_parser("coeffs", help="coefficient tables")
    ps = p.add_subparsers(dest="action", required=True)
    d = ps.add_parser("dump", help="CSV of exact rows")
    d.add_argument("--rows", type=int, default=None)
    a = ps.add_parser("at", help="coefficient at a dyadic point")
    a.add_argument("--kappa", required=True)

    p = sub.add_parser("dynamics", help="map dynamics and weight functions")
    ps = p.add_subparsers(dest="action", required=True)
    w = ps.add_parser("w", help="CSV of weight values with bounds")
    w.add_argument("--n-max", type=int, default=12)
    w.add_argument("--grid", type=int, default=41)
    o = ps.add_parser("orbit", help="critical orbit")
    o.add_argument("--n", type=int, default=12)
    q = ps.add_parser("quadrature", help="balanced-measure invariance residuals")
    q.add_argument("--depths", default="8,12,16")

    p = sub.add_parser("hull", help="windows, measures, identity checks")
    ps = p.add_subparsers(dest="action", required=True)
    m = ps.add_parser("measure", help="CSV of spectral measure atoms")
    m.add_argument("--kappa", required=True)
    v = ps.add_parser("v-identity")
    v.add_argument("--kappa", required=True)
    v.add_argument("--z-re", type=float, default=1.0)
    v.add_argument("--z-im", type=float, default=1.0)
    r = ps.add_parser("renorm")
    r.add_argument("--kappa", required=True)
    r.add_argument("--degree", type=int, default=8)
    f = ps.add_parser("reflect")
    f.add_argument("--kappa", required=True)
    ap_ = ps.add_parser("atom-probe")
    ap_.add_argument("--kappa", required=True)
    ap_.add_argument("--x", type=float, required=True)
    ap_.add_argument("--etas", default="1e-1,1e-2,1e-3")
    ps.add_parser("jminus")

    p = sub.add_parser("ruelle", help="matrix transfer operator")
    ps = p.add_subparsers(dest="action", required=True)
    for name in ("weights", "iterate", "f0", "positivity", "mass-growth"):
        s = ps.add_parser(name)
        s.add_argument("--kappa", required=True)
        if name != "weights":
            s.add_argument("--n", type=int, default=20)

    p = sub.add_parser("verify", help="run the certificate suite")
    p.add_argument("--check", action="append", default=None,
                   help="run only the named checks (repeatable)")
    p.add_argument("--inject-fault", action="store_true",
                   help="corrupt one table entry; the suite must fail")

    p = sub.add_parser("explore-measures",
                       help="histogram two spectral measures on a shared grid")
    p.add_argument("--kappa-a", required=True)
    p.add_argument("--kappa-b", required=True)
    p.add_argument("--bins", type=int, default=64)
    return ap


def _parse_tols(pairs) -> dict:
    out = {}
    for item in pairs:
        name, _, value = item.partition("=")
        if not value:
            raise ConfigError(f"bad --tol {item!r}; expected NAME=VALUE")
        out[name] = float(value)
    return out


def _config(args) -> RunConfig:
    cfg = RunConfig(lam=args.lam, dyadic_digits=args.digits,
                    table_depth=args.depth, exact_depth=args.exact_depth,
                    truncation=args.truncation, seed=args.seed,
                    tolerances=_parse_tols(args.tol),
                    allow_small_lambda=args.allow_small_lambda,
                    inject_fault=getattr(args, "inject_fault", False))
    cfg.validate()
    return cfg


def _header(cfg: RunConfig) -> dict:
    return {"artifact": "juliahull", "version": __version__, "lambda": cfg.lam,
            "dyadic_digits": cfg.dyadic_digits, "table_depth": cfg.table_depth,
            "exact_depth": cfg.exact_depth, "truncation": cfg.truncation,
            "seed": cfg.seed}


def _emit(args, text: str) -> None:
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_json(args, cfg: RunConfig, payload: dict) -> None:
    payload = {"header": _header(cfg), **payload}
    _emit(args, json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _emit_csv(args, cfg: RunConfig, columns, rows) -> None:
    lines = ["# " + json.dumps(_header(cfg), sort_keys=True)]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(str(v) for v in row))
    _emit(args, "\n".join(lines) + "\n")


def _table(cfg: RunConfig):
    return coeffs.cached_table(cfg.lam_fraction(), depth=cfg.table_depth,
                               exact_depth=cfg.exact_depth,
                               allow_small_lambda=cfg.allow_small_lambda)


def _cmd_dyadic(args, cfg: RunConfig) -> int:
    d = parse_kappa(args.kappa, cfg.dyadic_digits)
    prof = run_profile(d, args.window)
    terms = min(args.kappa_terms, d.precision - 1)
    payload = {
        "digits": d.digit_string(),
        "precision": d.precision,
        "representative": d.to_representative(),
        "odd": d.is_odd,
        "shift": shift(d).digit_string(),
        "modified_shift": modified_shift(d).digit_string(),
        "kappa_map": kappa_map(d, terms).digit_string(),
        "run_profile": {"max_zero_run": prof.max_zero_run,
                        "max_one_run": prof.max_one_run,
                        "window": prof.window,
                        "note": f"F_N classification valid within window "
                                f"W={prof.window} only"},
    }
    _emit_json(args, cfg, payload)
    return EXIT_OK


def _cmd_coeffs(args, cfg: RunConfig) -> int:
    table = _table(cfg)
    if args.action == "dump":
        rows = args.rows or (1 << (table.exact_depth or cfg.exact_depth))
        out = []
        for n in range(min(rows, table.rows)):
            if table.is_exact and n < len(table.a_sq_exact):
                q = table.a_sq_exact[n]
                out.append((n, q.numerator, q.denominator, repr(float(table.a_sq_float[n]))))
            else:
                out.append((n, "", "", repr(float(table.a_sq_float[n]))))
        _emit_csv(args, cfg, ("n", "a_sq_num", "a_sq_den", "a_sq_float"), out)
        return EXIT_OK
    d = parse_kappa(args.kappa, min(cfg.dyadic_digits, table.depth))
    dc = coeffs.a_at(table, d)
    _emit_json(args, cfg, {"value": dc.value, "error_bound": dc.error_bound,
                           "error_bound_kind": "empirical",
                           "representative": dc.representative})
    return EXIT_OK


def _cmd_dynamics(args, cfg: RunConfig) -> int:
    params = dynamics.MapParams(float(cfg.lam_fraction()))
    if args.action == "orbit":
        orb = dynamics.orbit_of_zero(params, args.n)
        rows = [(k, int(orb.signs[k]), repr(float(orb.log_abs[k])),
                 repr(float(orb.values[k]))) for k in range(len(orb))]
        _emit_csv(args, cfg, ("k", "sign", "log_abs", "value"), rows)
        return EXIT_OK
    if args.action == "quadrature":
        depths = [int(s) for s in args.depths.split(",")]
        payload = {"depths": depths, "residuals": {
            "x^2": [dynamics.invariance_residual(params, lambda x: x ** 2, d)
                    for d in depths],
            "x^4": [dynamics.invariance_residual(params, lambda x: x ** 4, d)
                    for d in depths]}}
        _emit_json(args, cfg, payload)
        return EXIT_OK
    rows = []
    for x in np.linspace(-params.xi, params.xi, args.grid):
        for n in range(args.n_max + 1):
            wv = dynamics.w_eval(params, float(x), n)
            rows.append((repr(wv.x), n, repr(wv.value), repr(wv.lower),
                         repr(wv.upper), wv.within_bounds))
    _emit_csv(args, cfg, ("x", "n", "w_value", "lower_bound", "upper_bound",
                          "within_bounds"), rows)
    return EXIT_OK


def _cmd_hull(args, cfg: RunConfig) -> int:
    table = _table(cfg)
    kap = parse_kappa(args.kappa, cfg.dyadic_digits) if hasattr(args, "kappa") else None
    if args.action == "measure":
        meas = hull.spectral_measure(hull.build_truncation(kap, cfg.truncation, table))
        rows = [(repr(float(x)), repr(float(w[0, 0])), repr(float(w[0, 1])),
                 repr(float(w[1, 1])))
                for x, w in zip(meas.xs, meas.weights)]
        _emit_csv(args, cfg, ("x", "W11", "W12", "W22"), rows)
        return EXIT_OK
    if args.action == "v-identity":
        rep = hull.check_V_identity(kap, complex(args.z_re, args.z_im),
                                    cfg.truncation, table)
        _emit_json(args, cfg, {"identity": "v_conjugation",
                               "kappa": rep.kappa_digits, "N": rep.half_width,
                               "z": {"re": args.z_re, "im": args.z_im},
                               "residual": rep.residual})
        return EXIT_OK
    if args.action == "renorm":
        rep = hull.check_renormalization(kap, args.degree, cfg.truncation, table)
        _emit_json(args, cfg, {"identity": "renormalization_pairing",
                               "kappa": rep.kappa_digits, "N": rep.half_width,
                               "degree": rep.degree,
                               "residual": rep.max_residual})
        return EXIT_OK
    if args.action == "reflect":
        resid = hull.reflection_check(kap, cfg.truncation, table)
        _emit_json(args, cfg, {"identity": "reflection",
                               "kappa": kap.digit_string(),
                               "N": cfg.truncation, "residual": resid})
        return EXIT_OK
    if args.action == "atom-probe":
        j = hull.build_truncation(kap, cfg.truncation, table)
        etas = [float(s) for s in args.etas.split(",")]
        rep = hull.atom_probe(j, args.x, etas)
        _emit_json(args, cfg, {"x": rep.x, "etas": list(rep.etas),
                               "values": list(rep.values),
                               "eta_min": rep.eta_min,
                               "unreliable": list(rep.unreliable),
                               "decreasing": rep.decreasing,
                               "note": "evidence at finite resolution, not proof"})
        return EXIT_OK
    xs, ws = hull.jminus_measure(cfg.truncation, table)
    rows = [(repr(float(x)), repr(float(w))) for x, w in zip(xs, ws)]
    _emit_csv(args, cfg, ("x", "mass"), rows)
    return EXIT_OK


def _cmd_ruelle(args, cfg: RunConfig) -> int:
    table = _table(cfg)
    kap = parse_kappa(args.kappa, max(cfg.dyadic_digits,
                                      getattr(args, "n", 0) + 27))
    if args.action == "weights":
        wt = ruelle.weight(kap, table)
        _emit_json(args, cfg, {"parity": "odd" if wt.parity else "even",
                               "a_pair": list(wt.a_pair),
                               "psi": list(wt.psi), "upsilon": list(wt.upsilon),
                               "phi": [list(r) for r in wt.phi]})
        return EXIT_OK
    if args.action == "iterate":
        hs = ruelle.iterate_h(kap, args.n, table)
        payload = {"n": args.n, "coefficients": [
            [[list(r) for r in a] for a in h.coeffs] for h in hs]}
        _emit_json(args, cfg, payload)
        return EXIT_OK
    if args.action == "f0":
        fs = ruelle.f0_recurrence(kap, args.n, table)
        _emit_json(args, cfg, {"n": args.n, "values": list(fs.values),
                               "min": fs.minimum()})
        return EXIT_OK
    if args.action == "positivity":
        rep = ruelle.positivity_certificate(kap, args.n, table)
        _emit_json(args, cfg, {"kappa": rep.kappa_digits,
                               "N_window": rep.window_run, "n": rep.n,
                               "min_eig": rep.min_eigenvalue,
                               "predicted_C1": rep.predicted_floor,
                               "pass": rep.strictly_positive and rep.above_prediction})
        return EXIT_OK
    rep = ruelle.mass_growth_probe(kap, args.n, table, cfg.truncation, 0.05)
    _emit_json(args, cfg, {"t_series": list(rep.t_series), "ratio": rep.ratio,
                           "pullback_residuals": list(rep.pullback_residuals),
                           "delta": rep.delta,
                           "control_growth_min": rep.control_growth_min,
                           "control_ok": rep.control_ok})
    return EXIT_OK


def _cmd_verify(args, cfg: RunConfig) -> int:
    t0 = time.time()
    names = set(args.check) if args.check else None
    report = run_all(cfg, names=names,
                     progress=lambda n: print(f"[verify] {n}", file=sys.stderr))
    _emit(args, report_to_json(report))
    elapsed = time.time() - t0
    print(f"[verify] {'PASS' if report['pass'] else 'FAIL'} in {elapsed:.1f}s",
          file=sys.stderr)
    return EXIT_OK if report["pass"] else EXIT_CHECK_FAILED


def _cmd_explore(args, cfg: RunConfig) -> int:
    table = _table(cfg)
    params = dynamics.MapParams(float(cfg.lam_fraction()))
    edge = params.xi + 0.05
    bins = np.linspace(-edge, edge, args.bins + 1)
    masses = {}
    for label, text in (("a", args.kappa_a), ("b", args.kappa_b)):
        kap = parse_kappa(text, cfg.dyadic_digits)
        meas = hull.spectral_measure(hull.build_truncation(kap, cfg.truncation,
                                                           table))
        hist, _ = np.histogram(meas.xs, bins=bins,
                               weights=meas.trace_masses())
        masses[label] = hist
    rows = [(repr(float(bins[i])), repr(float(bins[i + 1])),
             repr(float(masses["a"][i])), repr(float(masses["b"][i])))
            for i in range(args.bins)]
    lines = ["# " + json.dumps(_header(cfg), sort_keys=True),
             "# exploratory -- no singularity claim",
             ",".join(("bin_lo", "bin_hi", "mass_a", "mass_b"))]
    lines += [",".join(str(v) for v in r) for r in rows]
    _emit(args, "\n".join(lines) + "\n")
    return EXIT_OK


_COMMANDS = {
    "dyadic": _cmd_dyadic,
    "coeffs": _cmd_coeffs,
    "dynamics": _cmd_dynamics,
    "hull": _cmd_hull,
    "ruelle": _cmd_ruelle,
    "verify": _cmd_verify,
    "explore-measures": _cmd_explore,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _config(args)
        return _COMMANDS[args.command](args, cfg)
    except (ConfigError, coeffs.RegimeError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
