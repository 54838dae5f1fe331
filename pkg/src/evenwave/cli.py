"""Command line entry point: ``evenwave <subcommand> [options]``.

Exit codes: 0 when every check passes, 1 when a numerical check fails,
2 for invalid input or configuration.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from evenwave import exponents as ex
from evenwave.config import ConfigError, load_config
from evenwave.scaling import (
    BranchError,
    ConsistencyError,
    InsufficientDetectionsError,
    SweepConfig,
    calibrate_constants,
    emit_report,
    read_csv,
    region_map,
    run_certificate_sweep,
    run_sweep,
    write_csv,
)

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


class InputError(ValueError):
    pass


def _out(args) -> Path:
    path = Path(args.out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _exponents(args) -> ex.ExponentSet:
    return ex.derive(args.p, args.q if args.q is not None else args.p, args.n, args.k, getattr(args, "branch", None))


def _say(msg: str) -> None:
    print(msg, flush=True)


# ---------------------------------------------------------------------------
# subcommands


def cmd_exponents(args) -> int:
    e = _exponents(args)
    rows = [
        ("p", e.p), ("q", e.q), ("n", e.n), ("k", e.k), ("F", e.F), ("gamma", e.gamma),
        ("mu", e.mu), ("nu", e.nu), ("branch", e.branch.value),
        ("lifespan_exponent", ex.lifespan_exponent(e)), ("strauss_root", ex.strauss_root(e.n)),
    ]
    path = write_csv(_out(args) / "exponents.csv", ("name", "value"), rows)
    for name, value in rows:
        _say(f"{name:>18} = {value}")
    _say(f"wrote {path}")
    return EXIT_OK


def cmd_region_map(args) -> int:
    rows = region_map(args.n, (args.pmin, args.pmax), (args.qmin, args.qmax), args.res, args.k)
    path = write_csv(_out(args) / "region_map.csv", ("p", "q", "F", "branch"), rows)
    _say(f"wrote {len(rows)} points to {path}")
    return EXIT_OK


def cmd_kernel_check(args) -> int:
    from evenwave.kernels import (
        K,
        KTILDE,
        check_recurrence,
        edge_ratio,
        recurrence_order,
        sample_queries,
        sample_recurrence_queries,
        seam_residual,
    )

    rng = np.random.default_rng(args.seed)
    m = args.m
    rows = []
    for j in range(0, min(m, 1) + 1):
        worst = max(edge_ratio(m, j, r, t) for _, r, t in sample_queries(K, args.samples, rng))
        rows.append((f"edge:j={j}", worst, 1e-6, worst < 1e-6))
        worst = max(seam_residual(m, j, r, t) for _, r, t in sample_queries(KTILDE, args.samples, rng))
        rows.append((f"seam:j={j}", worst, 1e-8, worst < 1e-8))
    for j in range(1, m + 1):
        for variant in (K, KTILDE):
            qs = sample_recurrence_queries(variant, args.samples, rng)
            res = max(check_recurrence(m, j, lam, r, t, 1e-3, variant) for lam, r, t in qs)
            order = min(recurrence_order(m, j, lam, r, t, 2e-2, variant) for lam, r, t in qs)
            rows.append((f"recurrence:{variant}:j={j}", res, 1e-4, res < 1e-4))
            rows.append((f"recurrence_order:{variant}:j={j}", order, 1.9, order >= 1.9))
    path = write_csv(_out(args) / "kernel_check.csv", ("check_id", "value", "threshold", "passed"), rows)
    for row in rows:
        _say(f"{'PASS' if row[3] else 'FAIL'} {row[0]} value={row[1]:.3e}")
    _say(f"wrote {path}")
    return EXIT_OK if all(row[3] for row in rows) else EXIT_FAIL


def cmd_free_solve(args) -> int:
    from evenwave.free_wave import data_family, free_solution

    prof = data_family(args.data, args.k)
    r = np.linspace(args.r_max / args.nr, args.r_max, args.nr)
    t = np.linspace(0.0, args.t_max, args.nt)
    tt, rr = np.meshgrid(t, r, indexing="ij")
    f = prof if args.component in ("f", "both") else prof.scaled(0.0)
    g = prof if args.component in ("g", "both") else prof.scaled(0.0)
    sol = free_solution(f, g, rr.ravel(), tt.ravel(), args.n, adaptive=False, level=args.level)
    rows = zip(rr.ravel(), tt.ravel(), sol.value.ravel(), sol.dr.ravel(), sol.dt.ravel())
    path = write_csv(_out(args) / "free_solution.csv", ("r", "t", "u", "u_r", "u_t"), rows)
    _say(f"wrote {path}")
    return EXIT_OK


def cmd_iterate(args) -> int:
    from evenwave.duhamel import SpacetimeGrid, build_operator_table
    from evenwave.free_wave import data_family
    from evenwave.oracle_fd import SystemData
    from evenwave.picard import iterate

    e = _exponents(args)
    T = args.T if args.T is not None else 5 * e.k
    grid = SpacetimeGrid.covering(T, e.k, args.grid)
    _say(f"building operator table: {grid.nr} radii x {grid.nt + 1} lags")
    table = build_operator_table(e.n, grid)
    prof = data_family(args.data, e.k)
    run = iterate(SystemData(prof, prof, prof, prof), e, args.eps, args.jmax, table=table)
    rows = [(r.j, r.norm1, r.norm2, r.diff1, r.diff2, r.in_ball, r.ratio) for r in run.reports]
    out = _out(args)
    write_csv(out / "iterates.csv", ("j", "norm1", "norm2", "diff1", "diff2", "in_ball", "ratio"), rows)
    tt, rr = grid.mesh()
    write_csv(out / "field.csv", ("r", "t", "u", "v"), zip(rr.ravel(), tt.ravel(), run.u.ravel(), run.v.ravel()))
    for row in rows:
        _say("j={} norm1={:.3e} norm2={:.3e} diff1={:.3e} in_ball={} ratio={:.3e}".format(*row[:4], row[5], row[6]))
    ok = all(r.in_ball for r in run.reports)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_apriori_check(args) -> int:
    from evenwave.apriori import Proposition, check_prop_bounds

    e = _exponents(args)
    T = args.T if args.T is not None else 20 * e.k
    entries = []
    for prop in Proposition:
        entries += check_prop_bounds(prop, e, args.grid, T)
    rows = [(x.check_id, x.sup_ratio, x.stable()) for x in entries]
    path = write_csv(_out(args) / "apriori.csv", ("check_id", "sup_ratio", "stable"), rows)
    bad = [x for x in entries if not x.stable()]
    for x in bad:
        _say(f"FAIL {x.check_id}: sup ratio {x.sup_ratio:.4g}, drift {x.drift:.3f}")
    _say(f"{len(entries) - len(bad)}/{len(entries)} bound ratios finite and stable; wrote {path}")
    return EXIT_OK if not bad else EXIT_FAIL


def cmd_fd_solve(args) -> int:
    from dataclasses import replace

    from evenwave.free_wave import data_family
    from evenwave.oracle_fd import FDConfig, RadialSolver, SystemData

    e = ex.derive(args.p, args.q if args.q is not None else args.p, args.n, args.k)
    dr = (args.tmax + e.k) / args.nr
    cfg = replace(FDConfig(), dr=dr, cfl=args.cfl, tmax=args.tmax, blow_factor=args.blow_threshold)
    prof = data_family(args.data, e.k)
    sol = RadialSolver(e.n, e.p, e.q, e.k, SystemData(prof, prof, prof, prof), args.eps, cfg)
    threshold = cfg.blow_factor * sol.amp0
    series = [(0.0, float(np.max(np.abs(sol.state.u))), float(np.max(np.abs(sol.state.v))))]
    next_out = args.every
    blown = False
    while sol.state.t < cfg.tmax:
        amp = sol.step(min(sol.stable_dt(), cfg.tmax - sol.state.t))
        if sol.state.t >= next_out or amp >= threshold:
            M = sol.active(sol.state.t)
            series.append((sol.state.t, float(np.max(np.abs(sol.state.u[:M]))), float(np.max(np.abs(sol.state.v[:M])))))
            next_out += args.every
        if amp >= threshold:
            blown = True
            break
    out = _out(args)
    write_csv(out / "timeseries.csv", ("t", "max_u", "max_v"), series)
    M = sol.active(sol.state.t)
    s = sol.state
    write_csv(out / "snapshot.csv", ("r", "u", "v", "u_t", "v_t"), zip(s.r[: M + 1], s.u[: M + 1], s.v[: M + 1], s.ut[: M + 1], s.vt[: M + 1]))
    _say(f"t_end={s.t:.6g} blow_up={'yes' if blown else 'no'}; wrote {out / 'timeseries.csv'}")
    return EXIT_OK


def _config(args) -> SweepConfig:
    if not args.config:
        raise ConfigError("--config is required")
    return load_config(args.config, args.out)


def cmd_sweep(args) -> int:
    cfg = _config(args)
    result = run_sweep(cfg)
    files = emit_report(cfg.out_dir, result)
    fit = result.fit
    _say(
        f"slope {fit.fitted_slope:.4f} vs {fit.theoretical_slope:.4f} "
        f"(rel. error {fit.relative_error:.3f}), r2 {fit.r2:.4f}: {'PASS' if fit.passed else 'FAIL'}"
    )
    _say("wrote " + ", ".join(str(f) for f in files))
    return EXIT_OK if fit.passed else EXIT_FAIL


def _measured_from_csv(path: Path):
    from evenwave.oracle_fd import BlowupRecord

    if not path.exists():
        return None
    out = []
    for row in read_csv(path):
        out.append(BlowupRecord(float(row["eps"]), float(row["t_blow"]), row["detected"] == "true", float(row["t_blow_refined"])))
    return out


def cmd_certify(args) -> int:
    cfg = _config(args)
    e = cfg.exponents
    measured = None
    result = None
    if args.measure:
        if e.branch.is_critical:
            _say("critical branch: exp(c eps^-a) lifespans cannot be simulated at desk scale; certificate only")
        else:
            result = run_sweep(cfg)
            measured = result.records
    else:
        measured = _measured_from_csv(Path(cfg.out_dir) / "sweep.csv")
    consts = calibrate_constants(cfg)
    _say(f"A={consts.A:.4g} C={consts.C:.4g} B={consts.B:.4g} E={consts.E:.4g} eps1={consts.eps1:.4g}")
    try:
        rows = run_certificate_sweep(cfg, consts, measured, strict=True)
        status = EXIT_OK
    except ConsistencyError as exc:
        _say(f"FAIL {exc}")
        rows = run_certificate_sweep(cfg, consts, measured, strict=False)
        status = EXIT_FAIL
    emit_report(cfg.out_dir, result, rows)
    for row in rows:
        _say(f"eps={row.eps:g} certificate={row.certificate:.4g} closed_form={row.closed_form:.4g} t_blow={row.t_blow:.4g}")
    return status


# ---------------------------------------------------------------------------
# parser


def _problem(sp, defaults=True):
    sp.add_argument("--n", type=int, default=6)
    sp.add_argument("--p", type=float, required=not defaults, default=1.6 if defaults else None)
    sp.add_argument("--q", type=float, default=None, help="defaults to p")
    sp.add_argument("--k", type=float, default=1.5)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="evenwave", description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--config", default=None, help="key = value configuration file")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("exponents", help="F, gamma, mu, nu and the lifespan branch")
    _problem(sp, defaults=False)
    sp.add_argument("--branch", default=None, choices=[b.value for b in ex.Branch])
    sp.set_defaults(func=cmd_exponents)

    sp = sub.add_parser("region-map", help="branch of every (p, q) on a rectangle")
    sp.add_argument("--n", type=int, default=6)
    sp.add_argument("--k", type=float, default=1.5)
    sp.add_argument("--pmin", type=float, default=1.05)
    sp.add_argument("--pmax", type=float, default=3.0)
    sp.add_argument("--qmin", type=float, default=1.05)
    sp.add_argument("--qmax", type=float, default=3.0)
    sp.add_argument("--res", type=int, default=50)
    sp.set_defaults(func=cmd_region_map)

    sp = sub.add_parser("kernel-check", help="edge, seam and recurrence identities of the kernels")
    sp.add_argument("--m", type=int, default=2)
    sp.add_argument("--samples", type=int, default=50)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_kernel_check)

    sp = sub.add_parser("free-solve", help="free solution on an (r, t) grid")
    sp.add_argument("--n", type=int, default=6)
    sp.add_argument("--k", type=float, default=1.5)
    sp.add_argument("--data", default="bump4")
    sp.add_argument("--component", choices=("f", "g", "both"), default="both")
    sp.add_argument("--r-max", type=float, default=6.0)
    sp.add_argument("--t-max", type=float, default=3.0)
    sp.add_argument("--nr", type=int, default=40)
    sp.add_argument("--nt", type=int, default=21)
    sp.add_argument("--level", type=int, default=4)
    sp.set_defaults(func=cmd_free_solve)

    sp = sub.add_parser("iterate", help="Picard iteration on an operator table")
    _problem(sp)
    sp.add_argument("--eps", type=float, default=1e-2)
    sp.add_argument("--T", type=float, default=None, help="defaults to 5k")
    sp.add_argument("--grid", type=float, default=0.15, help="grid spacing in r and t")
    sp.add_argument("--jmax", type=int, default=8)
    sp.add_argument("--data", default="bump4")
    sp.set_defaults(func=cmd_iterate)

    sp = sub.add_parser("apriori-check", help="bound ratios of the I_1..I_4 integrals")
    _problem(sp)
    sp.add_argument("--T", type=float, default=None, help="defaults to 20k")
    sp.add_argument("--grid", type=int, default=10, help="grid nodes per axis")
    sp.set_defaults(func=cmd_apriori_check)

    sp = sub.add_parser("fd-solve", help="finite-difference run of the nonlinear system")
    _problem(sp)
    sp.add_argument("--eps", type=float, default=1.0)
    sp.add_argument("--tmax", type=float, default=100.0)
    sp.add_argument("--nr", type=int, default=2000)
    sp.add_argument("--cfl", type=float, default=0.5)
    sp.add_argument("--blow-threshold", type=float, default=1e3, help="multiple of the initial amplitude")
    sp.add_argument("--every", type=float, default=1.0, help="time-series output interval")
    sp.add_argument("--data", default="bump4")
    sp.set_defaults(func=cmd_fd_solve)

    sp = sub.add_parser("sweep", help="blow-up times over an eps grid and the power-law fit")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("certify", help="lifespan certificates over the eps grid")
    sp.add_argument("--measure", action="store_true", help="also run the blow-up sweep for comparison")
    sp.set_defaults(func=cmd_certify)
    return parser


def _hoist_globals(argv):
    """Allow --out/--config after the subcommand as well as before it."""
    argv = list(argv)
    front = []
    i = 0
    while i < len(argv):
        if argv[i] in ("--out", "--config") and i + 1 < len(argv):
            front += argv[i : i + 2]
            del argv[i : i + 2]
            continue
        if argv[i].startswith(("--out=", "--config=")):
            front.append(argv.pop(i))
            continue
        i += 1
    return front + argv


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else argv
    args = parser.parse_args(_hoist_globals(argv))
    try:
        return args.func(args)
    except (ConfigError, ex.ExponentDomainError, BranchError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InsufficientDetectionsError as exc:
        print(f"FAIL: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
