"""Command-line entry point.

Exit status: 0 on success with every check passing, 1 when a bound or
invariant check fails (the offending instance is in the report), 2 on a
usage error or an unsupported conductor.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import random
import sys
from pathlib import Path
from typing import Sequence

import gmpy2

from . import __version__
from .attack_audit import elos_inequality, immunity_report, root_scan, total_split_check
from .config import RunConfig
from .cyclotomic import (
    FieldSpec,
    InvalidConductor,
    cyclotomic_poly,
    expected_special_values,
    real_cyclotomic_any,
    real_cyclotomic_poly,
    special_values,
    verify_plus_minus_relation,
)
from .embeddings import build_VN, node_order, nodes
from .equivalence import ConstructionError, extract_Rm, round_trip_error, transformed, zero_block_residual
from .linalg import mpfr_str

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
ROUND_TRIP_VECTORS = 100


class UsageError(Exception):
    pass


def _s(x) -> str:
    return mpfr_str(x, 100)


def _spec(n: int) -> FieldSpec:
    try:
        return FieldSpec.from_n(n)
    except InvalidConductor as exc:
        raise UsageError(str(exc)) from None


def _emit(data: dict, fmt: str, out) -> None:
    if fmt == "json":
        json.dump(data, out, indent=2)
        out.write("\n")
    else:
        for k, v in _flatten(data):
            out.write(f"{k}: {v}\n")


def _flatten(d, prefix=""):
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            yield from _flatten(v, key + ".")
        elif isinstance(v, list):
            yield key, json.dumps(v)
        else:
            yield key, v


# --- subcommands -----------------------------------------------------------


def cmd_phi_plus(args, cfg: RunConfig, out) -> int:
    spec = _spec(args.n)
    f = real_cyclotomic_poly(spec)
    sv = special_values(spec)
    at1, at2 = expected_special_values(spec)
    units = all(v in (1, -1, 2, -2) for v in sv.as_dict().values())
    ok_relation = verify_plus_minus_relation(spec.n)
    data = {
        "n": str(spec.n),
        "case": spec.case.value,
        "degree": str(f.degree),
        "coefficients": [str(c) for c in f.coeffs],
        "polynomial": str(f),
        "special_values": {k: str(v) for k, v in sv.as_dict().items()},
        "closed_form": {"at1": str(at1), "at2": str(at2)},
        "closed_form_match": (sv.at1, sv.at2) == (at1, at2),
        "values_in_pm1_pm2": units,
        "even": f.is_even(),
        "plus_minus_relation": ok_relation,
        "pass": units and ok_relation,
    }
    _emit(data, cfg.output, out)
    return EXIT_OK if data["pass"] else EXIT_FAIL


def cmd_matrix(args, cfg: RunConfig, out) -> int:
    spec = _spec(args.n)
    VN = build_VN(spec, cfg.precision_bits)
    ns = nodes(spec, cfg.precision_bits)
    labels = dict(zip(ns.indices, ns.labels))
    buf = io.StringIO() if args.out is None else None
    target = buf if buf is not None else open(args.out, "w", newline="")
    try:
        w = csv.writer(target)
        w.writerow(["j", "class"] + [f"u_{i}" for i in range(spec.N)])
        for j, row in zip(node_order(spec), VN.to_strings()):
            w.writerow([j, labels[j].value] + row)
    finally:
        if buf is None:
            target.close()
    if buf is not None:
        out.write(buf.getvalue())
    return EXIT_OK


def equiv_report(spec: FieldSpec, cfg: RunConfig, seed: int = 0) -> dict:
    from .conditioning import report_dict, verify_bounds

    prec, tol = cfg.precision_bits, cfg.tolerances
    emap = extract_Rm(spec, prec, tol)
    VA = transformed(spec, prec, emap.ops, tol)
    worst, _ = zero_block_residual(VA, spec)
    rep = verify_bounds(spec, prec, tol)
    rng = random.Random(seed)
    errs = [round_trip_error(emap, [rng.randint(-100, 100) for _ in range(spec.m)]) for _ in range(ROUND_TRIP_VECTORS)]
    with gmpy2.context(precision=prec):
        rt_max = max(errs)
        rt_tol = gmpy2.mpfr(2) ** tol.exponent("round_trip", prec)
        zb_tol = build_VN(spec, prec).frobenius() * gmpy2.mpfr(2) ** tol.exponent("zero_block", prec)
    rt_ok = rt_max <= rt_tol
    d = report_dict(rep)
    return {
        "n": str(spec.n),
        "case": spec.case.value,
        "N": str(spec.N),
        "m": str(spec.m),
        "prec": str(prec),
        "lambda": str(emap.lam),
        "norm_Rm": _s(emap.Rm.frobenius()),
        "cond_Rm": d["conds"]["Rm"]["cond"],
        "zero_block_max": _s(worst),
        "zero_block_tolerance": _s(zb_tol),
        "round_trip_max_rel_error": _s(rt_max),
        "round_trip_tolerance": _s(rt_tol),
        "round_trip_ok": bool(rt_ok),
        "conds": d["conds"],
        "bounds": d["bounds"],
        "pass": bool(rt_ok and rep.passed),
    }


def cmd_equiv(args, cfg: RunConfig, out) -> int:
    spec = _spec(args.n)
    try:
        data = equiv_report(spec, cfg, cfg.seed)
    except ConstructionError as exc:
        _emit({"n": str(spec.n), "error": str(exc), "pass": False}, cfg.output, out)
        return EXIT_FAIL
    _emit(data, cfg.output, out)
    return EXIT_OK if data["pass"] else EXIT_FAIL


def cmd_cond(args, cfg: RunConfig, out) -> int:
    from .conditioning import CSV_COLUMNS, expand_grid, parse_grid, report_dict, report_row, verify_grid

    if args.n is not None and args.grid is not None:
        raise UsageError("give at most one of --n or --grid")
    try:
        if args.n is not None:
            specs = [_spec(args.n)]
        elif args.grid is not None:
            specs = parse_grid(args.grid)
        elif args.config is not None:
            specs = expand_grid(cfg.r_range, cfg.p_range, cfg.q_range)
        else:
            raise UsageError("give --n, --grid, or a --config with grid ranges")
    except (ValueError, InvalidConductor) as exc:
        raise UsageError(str(exc)) from None
    if not specs:
        raise UsageError("the grid is empty")
    try:
        reports = verify_grid(specs, cfg.precision_bits, cfg.jobs, cfg.tolerances)
    except ConstructionError as exc:
        out.write(f"construction error: {exc}\n")
        return EXIT_FAIL
    rows = [report_row(r) for r in reports]
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            _write_csv(fh, CSV_COLUMNS, rows)
    if cfg.output == "json":
        json.dump({"instances": [report_dict(r) for r in reports], "pass": all(r.passed for r in reports)}, out, indent=2)
        out.write("\n")
    else:
        _write_csv(out, CSV_COLUMNS, rows)
    if args.plot:
        from .plotting import plot_grid

        plot_grid(reports, args.plot)
    failed = [r for r in reports if not r.passed]
    for r in failed:
        sys.stderr.write(f"bound violation at n={r.n}: {', '.join(r.failures)}\n")
    return EXIT_FAIL if failed else EXIT_OK


def _write_csv(fh, columns, rows) -> None:
    w = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)


def _audit_poly(args) -> tuple[object, str, FieldSpec | None]:
    if args.plus:
        try:
            spec = FieldSpec.from_n(args.n)
        except InvalidConductor:
            spec = None
        f = real_cyclotomic_poly(spec) if spec else real_cyclotomic_any(args.n)
        return f, f"Phi+_{args.n}", spec
    return cyclotomic_poly(args.n), f"Phi_{args.n}", None


def cmd_audit(args, cfg: RunConfig, out) -> int:
    if args.n < 3 and args.plus:
        raise UsageError("--plus needs n >= 3")
    if args.n < 1:
        raise UsageError("n must be positive")
    f, name, spec = _audit_poly(args)
    results = []
    ok = True
    for q in args.q:
        try:
            rep = root_scan(f, q, args.max_order, args.max_residue, args.factor_hint or (), poly_id=name)
            split = total_split_check(f, q) if f.degree >= 1 and f.lead % q else None
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        imm = immunity_report(spec if spec else f, [q], poly_id=name).rows[0]
        entry = {
            "q": str(q),
            "q_minus_1_factored": rep.q_minus_1_factored,
            "order_scan_skipped": [str(d) for d in rep.order_scan_skipped],
            "roots_found": [
                {
                    "alpha": str(r.alpha),
                    "order": None if r.order is None else str(r.order),
                    "order_status": r.order_status,
                    "residue_magnitude": str(r.residue_magnitude),
                    "found_by": r.found_by,
                }
                for r in rep.roots_found
            ],
            "conditions": rep.conditions,
            "total_split": None
            if split is None
            else {"split": split.split, "distinct_roots": str(split.distinct_roots), "ramified": split.ramified},
            "special_point_roots": [str(a) for a in imm.roots],
            "immune_special_points": imm.immune,
        }
        if spec is not None:
            entry["immunity_predicted"] = imm.predicted_immune
            ok &= imm.immune and imm.consistent
        if args.sigma is not None:
            entry["elos"] = [
                _elos_dict(elos_inequality(r.alpha, args.degree or f.degree, q, args.sigma))
                for r in rep.roots_found
                if r.alpha >= 2
            ]
        results.append(entry)
    data = {"poly": name, "degree": str(f.degree), "audits": results, "pass": ok}
    _emit(data, "json" if cfg.output == "json" else "text", out)
    return EXIT_OK if ok else EXIT_FAIL


def _elos_dict(e) -> dict:
    return {
        "alpha": str(e.alpha),
        "n_degree": str(e.n_degree),
        "sigma": str(e.sigma),
        "lhs": str(e.lhs),
        "rhs": f"{e.rhs.numerator}/{e.rhs.denominator}",
        "rhs_decimal": _s(gmpy2.mpfr(gmpy2.mpq(e.rhs.numerator, e.rhs.denominator), 128)),
        "log2_lhs_over_rhs": repr(e.log2_ratio),
        "satisfied": e.satisfied,
    }


def cmd_simulate(args, cfg: RunConfig, out) -> int:
    from .rlwe_sim import (
        PlweParams,
        distinguisher,
        planted_root_poly,
        sample_mixed,
        sample_plwe,
        sample_uniform,
        transfer_samples,
        verify_samples,
    )

    spec = _spec(args.n)
    f = real_cyclotomic_poly(spec)
    alpha = args.alpha
    if args.plant:
        if alpha is None:
            raise UsageError("--plant needs --alpha")
        f = planted_root_poly(f, alpha, args.q)
    try:
        params = PlweParams(f, args.q, args.sigma, cfg.seed)
        ss = sample_plwe(params, args.count)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    emap = extract_Rm(spec, cfg.precision_bits, cfg.tolerances)
    tr = transfer_samples(emap, ss)
    samples_ok = verify_samples(ss)
    data = {
        "n": str(spec.n),
        "m": str(spec.m),
        "f": str(f),
        "q": str(args.q),
        "sigma": str(params.sigma),
        "seed": str(cfg.seed),
        "count": str(args.count),
        "samples_verified": samples_ok,
        "amplification": {k: repr(v) for k, v in tr.summary().items()},
        "norm_Rm": _s(tr.rm_norm),
        "amplification_lower_bound": repr(tr.lower_bound),
        "amplification_within_bounds": tr.within_bounds,
    }
    rates = true_g = None
    if args.distinguish:
        if alpha is None:
            alpha = _find_root(f, args.q)
        try:
            d = distinguisher(ss, alpha)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        du = distinguisher(sample_uniform(params, args.count), alpha)
        dm = distinguisher(sample_mixed(params, args.count), alpha)
        rates, true_g = list(d.rates), d.true_guess
        data["distinguisher"] = {
            "alpha": str(alpha),
            "true_guess": str(d.true_guess),
            "best_guess": str(d.best_guess),
            "true_rate": repr(d.true_rate),
            "best_wrong_rate": repr(d.best_wrong_rate),
            "uniform_rate_min": repr(float(du.rates.min())),
            "uniform_rate_max": repr(float(du.rates.max())),
            "mixed_true_rate": repr(dm.true_rate),
            "hits": {str(g): str(h) for g, h in zip(d.guesses, d.hits)},
        }
    data["pass"] = bool(samples_ok and tr.within_bounds)
    if args.plot:
        from .plotting import plot_simulation

        plot_simulation(tr.amplifications, float(tr.rm_norm), tr.lower_bound, rates, args.plot, true_g)
    _emit(data, "json" if cfg.output == "json" else "text", out)
    return EXIT_OK if data["pass"] else EXIT_FAIL


def _find_root(f, q: int) -> int:
    if q > 10**6:
        raise UsageError("give --alpha when q > 10^6")
    rep = root_scan(f, q, 0, 0, exhaustive=True)
    if not rep.roots_found:
        raise UsageError(f"f has no root mod {q}; use --plant --alpha A")
    return min(rep.roots_found, key=lambda r: r.residue_magnitude).alpha


# --- parser ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--prec", type=int, help="working precision in bits (default 256 or $RELATTICE_PREC)")
    common.add_argument("--config", type=Path, help="JSON run configuration")
    common.add_argument("--json", action="store_true", help="emit JSON")
    common.add_argument("--seed", type=int, help="random seed")

    p = argparse.ArgumentParser(prog="relattice", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("phi-plus", parents=[common], help="real cyclotomic polynomial and special values")
    s.add_argument("--n", type=int, required=True)
    s.set_defaults(func=cmd_phi_plus)

    s = sub.add_parser("matrix", parents=[common], help="write the row-permuted V_N as CSV")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--out", help="CSV path (stdout if omitted)")
    s.set_defaults(func=cmd_matrix)

    s = sub.add_parser("equiv", parents=[common], help="build R_m, lambda and check the map")
    s.add_argument("--n", type=int, required=True)
    s.set_defaults(func=cmd_equiv)

    s = sub.add_parser("cond", parents=[common], help="certify condition-number bounds")
    s.add_argument("--n", type=int)
    s.add_argument("--grid", help="r=a..b,p=a..b[,q=a..b] or n=12,20,...")
    s.add_argument("--csv", help="also write the CSV report here")
    s.add_argument("--plot", help="write a figure of conditions vs bounds here")
    s.add_argument("--jobs", type=int, help="worker processes")
    s.set_defaults(func=cmd_cond)

    s = sub.add_parser("audit", parents=[common], help="root-based attack conditions mod q")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--plus", action="store_true", help="audit Phi_n^+ instead of Phi_n")
    s.add_argument("--q", type=int, nargs="+", required=True)
    s.add_argument("--max-order", type=int, default=16)
    s.add_argument("--max-residue", type=int, default=4)
    s.add_argument("--factor-hint", type=int, nargs="*", help="known prime factors of q - 1")
    s.add_argument("--sigma", help="evaluate the noise inequality at this sigma")
    s.add_argument("--degree", type=int, help="n in the noise inequality (default deg f)")
    s.set_defaults(func=cmd_audit)

    s = sub.add_parser("simulate", parents=[common], help="PLWE samples, noise transfer, distinguisher")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--q", type=int, required=True)
    s.add_argument("--sigma", default="0.5")
    s.add_argument("--count", type=int, default=500)
    s.add_argument("--distinguish", action="store_true")
    s.add_argument("--alpha", type=int)
    s.add_argument("--plant", action="store_true", help="shift the constant term so alpha is a root mod q")
    s.add_argument("--plot", help="write a figure here")
    s.set_defaults(func=cmd_simulate)
    return p


def _config(args) -> RunConfig:
    overrides = {"precision_bits": args.prec, "seed": args.seed, "jobs": getattr(args, "jobs", None)}
    if args.json:
        overrides["output"] = "json"
    if args.config is not None:
        return RunConfig.from_file(args.config, **overrides)
    return RunConfig(**{k: v for k, v in overrides.items() if v is not None})


def run(argv: Sequence[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = _config(args)
        return args.func(args, cfg, out)
    except (UsageError, InvalidConductor, ValueError, OSError) as exc:
        sys.stderr.write(f"relattice {args.command}: {exc}\n")
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())
