"""Command-line interface: solve, fracstudy, cgstudy, calibrate.

A JSON config file provides the run parameters; every key can be overridden
on the command line by a flag of the same dotted name (e.g. --grid.n1 50).
All outputs are CSV plus a JSON manifest with the fully resolved settings.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from copy import deepcopy
from pathlib import Path

from . import __version__
from ._kernels import BACKEND
from .calibrate import (
    comparison_to_csv,
    grid_search,
    load_profile,
    surface_to_csv,
)
from .duct import (
    DuctModelParams,
    field_max,
    midline_profile,
    normalize_field,
    profile_to_csv,
    solve_duct,
)
from .errors import ProfileFormatError, SolverError, ValidationError
from .fracpower import (
    FracPowerConfig,
    clamp_theta_delta,
    inv_frac_power,
    trace_to_csv,
)
from .grid import CSV_FLOAT_FMT, ScalarField, field_to_csv, make_grid
from .laplacian import LaplacianOperator
from .multiterm import history_to_csv, kappa_bound, make_problem, pcg_solve

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_SOLVER = 2

DEFAULTS = {
    "grid": {"n1": 100, "n2": 100, "d": 1.0},
    "model": {"mu": 1.0, "alpha": 0.5, "variant": "two-term"},
    "fracpow": {"theta_delta": 2.0 * math.pi**2, "n0": 100, "inner_tol": 1e-12},
    "cg": {"tol": 1e-9, "max_iter": 500, "preconditioner": "spectral"},
    "output": {"directory": "out", "format": "csv"},
}


class _Parser(argparse.ArgumentParser):
    # usage errors must exit 1, not argparse's default 2
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(self.exit_with(message))

    @staticmethod
    def exit_with(message):
        print(f"error: {message}", file=sys.stderr)
        return EXIT_USAGE


def _merge_config(base: dict, override: dict, path: str = "") -> dict:
    out = deepcopy(base)
    for key, value in override.items():
        dotted = f"{path}{key}"
        if key not in base:
            raise ValidationError(f"unknown config key {dotted!r}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ValidationError(f"config key {dotted!r} must be a table")
            out[key] = _merge_config(base[key], value, path=f"{dotted}.")
        else:
            out[key] = type(base[key])(value) if not isinstance(value, str) else value
    return out


def _load_config(path: str | None) -> dict:
    if path is None:
        return deepcopy(DEFAULTS)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ValidationError("config file must hold a JSON object")
    return _merge_config(DEFAULTS, data)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="PATH", help="JSON config file")
    parser.add_argument("--out", metavar="DIR", help="output directory override")
    parser.add_argument("--threads", type=int, default=1, help="parallel sweep workers")
    for section, table in DEFAULTS.items():
        for key, default in table.items():
            flag = f"--{section}.{key}"
            kind = type(default) if not isinstance(default, str) else str
            parser.add_argument(
                flag,
                dest=f"{section}__{key}",
                type=kind,
                default=None,
                help=f"override {section}.{key} (default {default})",
                metavar="V",
            )


def _resolve_config(args) -> dict:
    cfg = _load_config(args.config)
    for section, table in DEFAULTS.items():
        for key in table:
            val = getattr(args, f"{section}__{key}", None)
            if val is not None:
                cfg[section][key] = val
    if args.out is not None:
        cfg["output"]["directory"] = args.out
    return cfg


def _float_list(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise ValidationError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text: str) -> list[int]:
    return [int(round(v)) for v in _float_list(text)]


def _fmt(value: float) -> str:
    return "%g" % value


def _outdir(cfg: dict) -> Path:
    out = Path(cfg["output"]["directory"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_manifest(out: Path, command: str, cfg: dict, extra: dict) -> None:
    manifest = {
        "command": command,
        "version": __version__,
        "kernel_backend": BACKEND,
        "config": cfg,
    }
    manifest.update(extra)
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _grid_from(cfg: dict, d: float | None = None):
    g = cfg["grid"]
    return make_grid(g["n1"], g["n2"], g["d"] if d is None else d)


def _effective_theta_delta(requested: float, grid) -> float:
    delta = LaplacianOperator(grid).min_eigenvalue()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return clamp_theta_delta(requested, delta)


# ---------------------------------------------------------------- solve ----


def cmd_solve(args) -> int:
    cfg = _resolve_config(args)
    grid = _grid_from(cfg)
    model = cfg["model"]
    params = DuctModelParams(
        mu=model["mu"], alpha=model["alpha"], d=cfg["grid"]["d"], variant=model["variant"]
    )
    fp = cfg["fracpow"]
    td_eff = _effective_theta_delta(fp["theta_delta"], grid)
    frac_cfg = FracPowerConfig(
        gamma=0.5, theta_delta=fp["theta_delta"], n0=fp["n0"], inner_tol=fp["inner_tol"]
    )
    out = _outdir(cfg)
    _write_manifest(out, "solve", cfg, {"theta_delta_effective": td_eff})

    field = solve_duct(
        params,
        grid,
        method="pcg",
        frac_cfg=frac_cfg,
        cg_tol=cfg["cg"]["tol"],
        cg_max_iter=cfg["cg"]["max_iter"],
        precond_backend=cfg["cg"]["preconditioner"],
    )
    with open(out / "field.csv", "w", encoding="utf-8") as fh:
        field_to_csv(field, fh)
    with open(out / "profile_x2_0.5.csv", "w", encoding="utf-8") as fh:
        profile_to_csv(midline_profile(field, 0.5), fh)
    peak, x1, x2 = field_max(field)
    with open(out / "wmax.csv", "w", encoding="utf-8") as fh:
        fh.write("w_max,x1,x2\n")
        fh.write(f"{CSV_FLOAT_FMT % peak},{CSV_FLOAT_FMT % x1},{CSV_FLOAT_FMT % x2}\n")
    print(f"w_max = {peak:.12g} at ({x1:.6g}, {x2:.6g}); outputs in {out}")
    return EXIT_OK


# ------------------------------------------------------------ fracstudy ----


def cmd_fracstudy(args) -> int:
    cfg = _resolve_config(args)
    n0_list = _int_list(args.n0_list)
    td_list = _float_list(args.theta_delta_list)
    beta_list = _float_list(args.beta_list)
    d_list = _float_list(args.d_list)
    if not (n0_list and td_list and beta_list and d_list):
        raise ValidationError("all sweep lists must be nonempty")
    out = _outdir(cfg)

    combos = [
        {"d": d, "beta": b, "theta_delta": td, "n0": n0}
        for d in d_list
        for b in beta_list
        for td in td_list
        for n0 in n0_list
    ]
    for combo in combos:
        combo["theta_delta_effective"] = _effective_theta_delta(
            combo["theta_delta"], _grid_from(cfg, d=combo["d"])
        )
    _write_manifest(out, "fracstudy", cfg, {"combinations": combos})

    def run(combo):
        grid = _grid_from(cfg, d=combo["d"])
        f = ScalarField.constant(grid, 1.0)
        fc = FracPowerConfig(
            gamma=combo["beta"],
            theta_delta=combo["theta_delta"],
            n0=combo["n0"],
            inner_tol=cfg["fracpow"]["inner_tol"],
        )
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            w, trace = inv_frac_power(f, fc)
        return w, trace

    results = _run_sweep(combos, run, args.threads)

    successes = 0
    table_rows = []
    for combo, outcome in zip(combos, results):
        tag = (
            f"b{_fmt(combo['beta'])}_td{_fmt(combo['theta_delta'])}"
            f"_n0{combo['n0']}_d{_fmt(combo['d'])}"
        )
        if isinstance(outcome, Exception):
            print(f"fracstudy {tag} failed: {outcome}", file=sys.stderr)
            continue
        successes += 1
        w, trace = outcome
        with open(out / f"trace_{tag}.csv", "w", encoding="utf-8") as fh:
            trace_to_csv(trace, fh)
        with open(out / f"profile_{tag}.csv", "w", encoding="utf-8") as fh:
            profile_to_csv(midline_profile(w, 0.5), fh)
        with open(out / f"field_{tag}.csv", "w", encoding="utf-8") as fh:
            field_to_csv(w, fh)
        peak, _, _ = field_max(w)
        table_rows.append((combo, peak))

    with open(out / "wmax_table.csv", "w", encoding="utf-8") as fh:
        fh.write("d,beta,theta_delta,theta_delta_effective,n0,w_max\n")
        for combo, peak in table_rows:
            fh.write(
                f"{CSV_FLOAT_FMT % combo['d']},{CSV_FLOAT_FMT % combo['beta']},"
                f"{CSV_FLOAT_FMT % combo['theta_delta']},"
                f"{CSV_FLOAT_FMT % combo['theta_delta_effective']},"
                f"{combo['n0']},{CSV_FLOAT_FMT % peak}\n"
            )
    print(f"fracstudy: {successes}/{len(combos)} combinations written to {out}")
    return EXIT_OK if successes else EXIT_SOLVER


# -------------------------------------------------------------- cgstudy ----


def cmd_cgstudy(args) -> int:
    cfg = _resolve_config(args)
    mu_list = _float_list(args.mu_list)
    alpha_list = _float_list(args.alpha_list)
    if not (mu_list and alpha_list):
        raise ValidationError("mu and alpha lists must be nonempty")
    grid = _grid_from(cfg)
    td_eff = _effective_theta_delta(cfg["fracpow"]["theta_delta"], grid)
    out = _outdir(cfg)
    combos = [{"mu": mu, "alpha": a} for mu in mu_list for a in alpha_list]
    _write_manifest(
        out, "cgstudy", cfg, {"combinations": combos, "theta_delta_effective": td_eff}
    )

    rhs = ScalarField.constant(grid, 1.0)

    def run(combo):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            prob = make_problem(
                combo["mu"],
                combo["alpha"],
                grid,
                rhs,
                theta_delta=cfg["fracpow"]["theta_delta"],
                n0=cfg["fracpow"]["n0"],
                inner_tol=cfg["fracpow"]["inner_tol"],
            )
            return pcg_solve(
                prob,
                tol=cfg["cg"]["tol"],
                max_iter=cfg["cg"]["max_iter"],
                precond_backend=cfg["cg"]["preconditioner"],
            )

    results = _run_sweep(combos, run, args.threads)

    successes = 0
    with open(out / "cg_summary.csv", "w", encoding="utf-8") as summary:
        summary.write("mu,alpha,kappa,iterations,converged\n")
        for combo, outcome in zip(combos, results):
            tag = f"mu{_fmt(combo['mu'])}_alpha{_fmt(combo['alpha'])}"
            if isinstance(outcome, Exception):
                print(f"cgstudy {tag} failed: {outcome}", file=sys.stderr)
                continue
            successes += 1
            _, report = outcome
            with open(out / f"cg_{tag}.csv", "w", encoding="utf-8") as fh:
                history_to_csv(report, fh)
            summary.write(
                f"{CSV_FLOAT_FMT % combo['mu']},{CSV_FLOAT_FMT % combo['alpha']},"
                f"{CSV_FLOAT_FMT % report.kappa_bound},{report.iterations},"
                f"{int(report.converged)}\n"
            )
    print(f"cgstudy: {successes}/{len(combos)} combinations written to {out}")
    return EXIT_OK if successes else EXIT_SOLVER


# ------------------------------------------------------------ calibrate ----


def cmd_calibrate(args) -> int:
    cfg = _resolve_config(args)
    mu_list = _float_list(args.mu_list)
    alpha_list = _float_list(args.alpha_list)
    cross_lines = _float_list(args.cross_lines)
    grid = _grid_from(cfg)
    profile = load_profile(args.profile, d=grid.d)
    td_eff = _effective_theta_delta(cfg["fracpow"]["theta_delta"], grid)
    out = _outdir(cfg)
    _write_manifest(
        out,
        "calibrate",
        cfg,
        {
            "profile": str(args.profile),
            "mu_list": mu_list,
            "alpha_list": alpha_list,
            "variant": args.variant,
            "normalization": args.normalization,
            "cross_lines": cross_lines,
            "theta_delta_effective": td_eff,
        },
    )

    fp = cfg["fracpow"]
    frac_cfg = FracPowerConfig(
        gamma=0.5, theta_delta=fp["theta_delta"], n0=fp["n0"], inner_tol=fp["inner_tol"]
    )
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        result = grid_search(
            mu_list,
            alpha_list,
            profile,
            grid,
            variant=args.variant,
            normalization=args.normalization,
            method=args.method,
            frac_cfg=frac_cfg,
            cg_tol=cfg["cg"]["tol"],
            cg_max_iter=cfg["cg"]["max_iter"],
            workers=args.threads,
        )

    with open(out / "surface.csv", "w", encoding="utf-8") as fh:
        surface_to_csv(result, fh)
    best_line = (
        f"best mu={result.best_mu:.12g} alpha={result.best_alpha:.12g} "
        f"sigma={result.best_sigma:.12g}"
    )
    with open(out / "best.txt", "w", encoding="utf-8") as fh:
        fh.write(best_line + "\n")

    # comparison along the requested cross-lines uses the best-fit field
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        best_field = solve_duct(
            DuctModelParams(
                mu=result.best_mu,
                alpha=result.best_alpha,
                d=grid.d,
                variant=args.variant,
            ),
            grid,
            method=args.method,
            frac_cfg=frac_cfg,
            cg_tol=cfg["cg"]["tol"],
            cg_max_iter=cfg["cg"]["max_iter"],
        )
        best_field = normalize_field(best_field, args.normalization)
    for line in cross_lines:
        with open(out / f"comparison_x1_{_fmt(line)}.csv", "w", encoding="utf-8") as fh:
            comparison_to_csv(best_field, profile, fh, x1_line=line, line_tol=args.line_tol)

    for mu, alpha, msg in result.failures:
        print(f"calibrate: lattice point (mu={mu}, alpha={alpha}) failed: {msg}", file=sys.stderr)
    print(best_line + f"; outputs in {out}")
    return EXIT_OK


# ---------------------------------------------------------------- wiring ---


def _run_sweep(combos, run, threads):
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        def guarded(combo):
            try:
                return run(combo)
            except (SolverError, ValidationError) as exc:
                return exc

        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(guarded, combos))
    results = []
    for combo in combos:
        try:
            results.append(run(combo))
        except (SolverError, ValidationError) as exc:
            results.append(exc)
    return results


def build_parser() -> _Parser:
    parser = _Parser(prog="fracduct", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve the duct model once")
    _add_common(p_solve)
    p_solve.set_defaults(func=cmd_solve)

    p_frac = sub.add_parser("fracstudy", help="fractional-power parameter sweeps")
    _add_common(p_frac)
    p_frac.add_argument("--n0-list", default="5,10,20,100", metavar="LIST")
    p_frac.add_argument(
        "--theta-delta-list",
        default=f"{math.pi**2},{2 * math.pi**2}",
        metavar="LIST",
    )
    p_frac.add_argument("--beta-list", default="0.25,0.5,0.75", metavar="LIST")
    p_frac.add_argument("--d-list", default="1", metavar="LIST")
    p_frac.set_defaults(func=cmd_fracstudy)

    p_cg = sub.add_parser("cgstudy", help="PCG convergence sweeps")
    _add_common(p_cg)
    p_cg.add_argument("--mu-list", default="1,10,100", metavar="LIST")
    p_cg.add_argument("--alpha-list", default="0.25,0.5,0.75", metavar="LIST")
    p_cg.set_defaults(func=cmd_cgstudy)

    p_cal = sub.add_parser("calibrate", help="grid-search (mu, alpha) against a profile")
    _add_common(p_cal)
    p_cal.add_argument("--profile", required=True, metavar="PATH")
    p_cal.add_argument("--mu-list", default="1,2,5,10,20,50,100", metavar="LIST")
    p_cal.add_argument("--alpha-list", default="0.25,0.3,0.3333333333333333,0.4,0.5", metavar="LIST")
    p_cal.add_argument("--variant", default="one-term", choices=("one-term", "two-term"))
    p_cal.add_argument("--normalization", default="max", choices=("max", "none"))
    p_cal.add_argument("--method", default="pcg", choices=("pcg", "spectral"))
    p_cal.add_argument("--cross-lines", default="0.5,0.7,0.9", metavar="LIST")
    p_cal.add_argument("--line-tol", type=float, default=1e-9)
    p_cal.set_defaults(func=cmd_calibrate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_USAGE
    try:
        return args.func(args)
    except (ValidationError, ProfileFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
