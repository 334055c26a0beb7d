"""Command-line front end.

Every subcommand writes CSV (default) or JSON.  Floats are written with 17
significant digits so identical inputs give byte-identical files.  Domain
errors exit with status 1 and print the error class name; usage and
configuration errors exit with status 2.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys
import warnings
from fractions import Fraction
from typing import Any, Callable, Sequence

import numpy as np

from . import __version__
from .charfun import DEFAULT_T_GRID, charfun, select_mode_series
from .cumulants import N_MAX, cumulant_diagnostics
from .errors import DomainError, NotCovered, InvalidSchedule
from ._parallel import parallel_map
from .limits import convergence_study, limit_law, region_classify, region_delta_exact
from .observables import BareDensity, Field, FluctuationObservable, QPDensity
from .spectrum import BoundaryElasticity, solve_1d_spectrum
from .thermo import (
    FixedMu,
    Scaled,
    ThermoSchedule,
    classify_phase,
    order_parameter,
    prepare_state,
    total_density,
)


class UsageError(Exception):
    """Bad flags or configuration; exit status 2."""


def _fmt(x: Any) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    if isinstance(x, Fraction):
        return format(float(x), ".17g")
    return str(x)


def _jsonable(x: Any) -> Any:
    if isinstance(x, (np.floating, Fraction)):
        return float(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


# ---------------------------------------------------------------------------
# Parsing helpers


def _float_list(text: str) -> list[float]:
    try:
        return [float(p) for p in str(text).split(",") if p.strip()]
    except ValueError as exc:
        raise UsageError(f"expected a comma-separated list of numbers, got {text!r}") from exc


def _int_vector(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(p) for p in str(text).split(",") if p.strip())
    except ValueError as exc:
        raise UsageError(f"expected a comma-separated integer vector, got {text!r}") from exc


def _frac_range(text: str) -> list[Fraction]:
    """``start:stop:step`` with stop included, in exact rationals."""
    parts = str(text).split(":")
    if len(parts) != 3:
        raise UsageError(f"grid must be start:stop:step, got {text!r}")
    try:
        a, b, h = (Fraction(p.strip()) for p in parts)
    except ValueError as exc:
        raise UsageError(f"bad grid {text!r}") from exc
    if h <= 0 or b < a:
        raise UsageError(f"bad grid {text!r}")
    n = int((b - a) / h)
    return [a + i * h for i in range(n + 1)]


def _boundary(text: str) -> BoundaryElasticity:
    t = str(text).strip().lower()
    if t in ("inf", "+inf", "dirichlet"):
        return BoundaryElasticity.dirichlet()
    try:
        return BoundaryElasticity(float(t))
    except ValueError as exc:
        raise UsageError(f"sigma must be a number or 'dirichlet', got {text!r}") from exc


def _t_grid(args) -> np.ndarray:
    if args.t_points is None and args.t_min is None and args.t_max is None:
        return DEFAULT_T_GRID.copy()
    lo = -8.0 if args.t_min is None else args.t_min
    hi = 8.0 if args.t_max is None else args.t_max
    pts = 161 if args.t_points is None else args.t_points
    if pts < 1 or hi < lo:
        raise UsageError("bad t grid")
    return np.linspace(lo, hi, pts)


def _schedule(args) -> ThermoSchedule:
    boundary = _boundary(args.sigma)
    if args.rho0 is not None:
        if args.h is None:
            raise UsageError("--rho0 needs --h")
        return ThermoSchedule.condensed(args.beta, args.nu, boundary, args.h, args.rho0, args.gamma, args.phi)
    h = 0.0 if args.h is None else args.h
    if args.mu is not None:
        if args.alpha is not None:
            raise UsageError("give either --mu or --alpha, not both")
        mode = FixedMu(args.mu)
    elif args.alpha is not None:
        mode = Scaled(args.c, args.alpha)
    else:
        raise UsageError("a schedule needs --mu, --alpha or --rho0")
    return ThermoSchedule(args.beta, args.nu, boundary, mode, h, args.gamma, args.phi)


def _observable(args, delta: float = 0.0) -> FluctuationObservable:
    kind = args.observable
    if kind is None:
        raise UsageError("--observable is required")
    k = _int_vector(args.k) if args.k is not None else (0,) * args.nu
    if len(k) == 1 and args.nu > 1 and args.k is not None and "," not in str(args.k):
        k = k * args.nu
    if len(k) != args.nu:
        raise UsageError(f"mode {k} does not match nu={args.nu}")
    if kind == "field":
        return FluctuationObservable(Field(k, args.sign), delta)
    if kind == "qp-density":
        return FluctuationObservable(QPDensity(k), delta)
    if kind == "bare-density":
        return FluctuationObservable(BareDensity(k), delta)
    raise UsageError(f"unknown observable {kind!r}")


def _resolve_delta(args, obs: FluctuationObservable, schedule: ThermoSchedule) -> FluctuationObservable:
    if str(args.delta).strip().lower() == "auto":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            delta, _ = limit_law(obs, schedule, args.E)
        args.delta_resolved = delta
    else:
        try:
            delta = float(args.delta)
        except ValueError as exc:
            raise UsageError(f"--delta must be a number or 'auto', got {args.delta!r}") from exc
        args.delta_resolved = delta
    return obs.with_delta(delta)


# ---------------------------------------------------------------------------
# Subcommands: each returns (columns, rows)

Rows = list[list[Any]]


def cmd_spectrum(args) -> tuple[list[str], Rows]:
    if args.nmax is None:
        raise UsageError("--nmax is required")
    rows = []
    for L in _float_list(args.L):
        tab = solve_1d_spectrum(_boundary(args.sigma), L, args.nmax, tol=args.tol)
        for n in range(tab.n_max + 1):
            rows.append([n, tab.eigenvalues[n], tab.brackets[n, 0], tab.brackets[n, 1], tab.parity[n], tab.deviations[n], L])
    return ["n", "epsilon", "bracket_lo", "bracket_hi", "parity", "deviation", "L"], rows


def cmd_density(args) -> tuple[list[str], Rows]:
    sch = _schedule(args)

    def cell(L: float):
        st = prepare_state(sch, L, args.cutoff)
        rep = total_density(st)
        op = order_parameter(st)
        return [L, rep.mu_L, rep.rho0_L, rep.rho_excited_L, rep.rho_total_L, rep.tail_bound, rep.limit_excited,
                (rep.rho_excited_L - rep.limit_excited) / rep.limit_excited, op.real, op.imag]

    rows = parallel_map(cell, _float_list(args.L))
    cols = ["L", "mu_L", "rho0_L", "rho_excited_L", "rho_total_L", "tail_bound", "rho_excited_limit",
            "relative_deviation", "order_parameter_re", "order_parameter_im"]
    return cols, rows


def cmd_phase(args) -> tuple[list[str], Rows]:
    sch = _schedule(args)
    phase = classify_phase(sch)
    return ["phase", "alpha_star", "mu_star", "z_star", "rho0"], [[phase.value, sch.alpha_star, sch.mu_star, sch.z_star, sch.rho0]]


def cmd_cumulants(args) -> tuple[list[str], Rows]:
    sch = _schedule(args)
    if args.observable not in (None, "qp-density"):
        raise UsageError("cumulants are computed for --observable qp-density")
    args.observable = "qp-density"
    obs = _resolve_delta(args, _observable(args), sch)
    orders = range(1, args.order + 1) if args.all_orders else [args.order]

    def cell(L: float):
        st = prepare_state(sch, L, args.cutoff)
        return [[L, n, r.value, r.n_diagrams, r.tail_estimate]
                for n in orders
                for r in [cumulant_diagnostics(n, obs, st, args.max_order)]]

    rows = [r for block in parallel_map(cell, _float_list(args.L)) for r in block]
    return ["L", "order", "value", "n_diagrams", "tail_estimate"], rows


def cmd_charfun(args) -> tuple[list[str], Rows]:
    sch = _schedule(args)
    obs = _resolve_delta(args, _observable(args), sch)
    t = _t_grid(args)

    def cell(L: float):
        st = prepare_state(sch, L, args.cutoff)
        o = obs
        if isinstance(obs.kind, Field) and args.E is not None:
            o = FluctuationObservable(Field(select_mode_series(args.E, st.table, sch.nu), obs.kind.sign), obs.delta)
        smp = charfun(o, st, t, args.method)
        return [[tt, v.real, v.imag, abs(v), e, L, smp.method]
                for tt, v, e in zip(smp.t_grid, smp.values, smp.error_estimate)]

    rows = [r for block in parallel_map(cell, _float_list(args.L)) for r in block]
    return ["t", "re", "im", "abs", "error_estimate", "L", "method"], rows


def cmd_converge(args) -> tuple[list[str], Rows]:
    sch = _schedule(args)
    base = _observable(args)
    obs = _resolve_delta(args, base, sch)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        _, law = limit_law(obs, sch, args.E)
    rep = convergence_study(obs, sch, _float_list(args.L), _t_grid(args), E_target=args.E,
                            law=law, delta=obs.delta, mode_cutoff=args.cutoff, method=args.method)
    args.law = rep.law
    rows = [[L, d, rep.delta, rep.order, rep.monotone_tail, rep.law] for L, d in zip(rep.L_list, rep.distances)]
    return ["L", "distance", "delta", "order", "monotone_tail", "law"], rows


def cmd_regions(args) -> tuple[list[str], Rows]:
    rows = []
    for a in _frac_range(args.alpha_grid):
        for g in _frac_range(args.gamma_grid):
            try:
                lab = region_classify(a, g, args.nu)
                rows.append([a, g, lab.region, region_delta_exact(a, g, args.nu), lab.declared_law])
            except NotCovered:
                rows.append([a, g, "not-covered", "", ""])
            except InvalidSchedule:
                rows.append([a, g, "inadmissible", "", ""])
    return ["alpha", "gamma", "region", "delta", "law_descriptor"], rows


COMMANDS: dict[str, Callable] = {
    "spectrum": cmd_spectrum,
    "density": cmd_density,
    "phase": cmd_phase,
    "cumulants": cmd_cumulants,
    "charfun": cmd_charfun,
    "converge": cmd_converge,
    "regions": cmd_regions,
}


# ---------------------------------------------------------------------------
# Parser and config


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # pragma: no cover - exercised through main
        raise UsageError(message)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key=value file; flags override its values")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--output", help="output file (default: standard output)")
    p.add_argument("--header", help="also write the effective configuration as JSON to this file")


def _add_gas(p: argparse.ArgumentParser) -> None:
    p.add_argument("--nu", type=int, default=1, help="space dimension")
    p.add_argument("--sigma", default="-1", help="boundary elasticity (number or 'dirichlet')")
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--mu", type=float, help="fixed chemical potential (normal phase)")
    p.add_argument("--c", type=float, default=1.0, help="scaled schedule prefactor")
    p.add_argument("--alpha", type=float, help="scaled schedule exponent")
    p.add_argument("--gamma", type=float, default=0.0, help="field exponent")
    p.add_argument("--h", type=float, help="field strength")
    p.add_argument("--phi", type=float, default=0.0, help="field phase")
    p.add_argument("--rho0", type=float, help="condensed schedule with this condensate density")
    p.add_argument("--L", default="100", help="box size or comma-separated list")
    p.add_argument("--cutoff", type=float, default=40.0, help="mode cutoff on beta*(eps - mu)")


def _add_observable(p: argparse.ArgumentParser) -> None:
    p.add_argument("--observable", choices=("field", "qp-density", "bare-density"))
    p.add_argument("--k", help="mode index, comma-separated (a single value is repeated over dimensions)")
    p.add_argument("--sign", type=int, choices=(1, -1), default=1, help="field component")
    p.add_argument("--E", type=float, help="target energy for field observables")
    p.add_argument("--delta", default="0", help="scaling exponent or 'auto'")
    p.add_argument("--method", choices=("determinant", "cumulant-series"), help="k != 0 density method")
    p.add_argument("--t-min", dest="t_min", type=float)
    p.add_argument("--t-max", dest="t_max", type=float)
    p.add_argument("--t-points", dest="t_points", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bosefluct", description="Finite-volume fluctuations of the free Bose gas with elastic walls.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("spectrum", help="one-dimensional eigenvalues with brackets")
    _add_common(p)
    p.add_argument("--sigma", default="-1")
    p.add_argument("--L", default="10")
    p.add_argument("--nmax", type=int)
    p.add_argument("--tol", type=float, default=1e-12)

    p = sub.add_parser("density", help="condensate and excited densities over box sizes")
    _add_common(p)
    _add_gas(p)

    p = sub.add_parser("phase", help="phase of a schedule")
    _add_common(p)
    _add_gas(p)

    p = sub.add_parser("cumulants", help="diagram-sum cumulants of a quasi-particle density")
    _add_common(p)
    _add_gas(p)
    _add_observable(p)
    p.add_argument("--order", type=int, default=2)
    p.add_argument("--all-orders", dest="all_orders", action="store_true", help="emit every order up to --order")
    p.add_argument("--max-order", dest="max_order", type=int, default=N_MAX)

    p = sub.add_parser("charfun", help="finite-volume characteristic function samples")
    _add_common(p)
    _add_gas(p)
    _add_observable(p)

    p = sub.add_parser("converge", help="distance to the declared limit law over an L sweep")
    _add_common(p)
    _add_gas(p)
    _add_observable(p)

    p = sub.add_parser("regions", help="(alpha, gamma) region map for the bare low-mode density")
    _add_common(p)
    p.add_argument("--nu", type=int, default=3)
    p.add_argument("--alpha-grid", dest="alpha_grid", default="0:1.5:0.05")
    p.add_argument("--gamma-grid", dest="gamma_grid", default="-1.5:1.5:0.05")
    return parser


def read_config(path: str) -> dict[str, str]:
    out: dict[str, str] = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    for num, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{num}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _apply_config(parser: argparse.ArgumentParser, argv: Sequence[str]) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if args.command is None:
        raise UsageError("a subcommand is required: " + " | ".join(COMMANDS))
    if not getattr(args, "config", None):
        return args
    cfg = read_config(args.config)
    sub = parser._subparsers._group_actions[0].choices[args.command]
    actions = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, value in cfg.items():
        if key not in actions or key in ("help", "config"):
            raise UsageError(f"unknown config key {key!r} for {args.command}")
        act = actions[key]
        if isinstance(act, argparse._StoreTrueAction):
            defaults[key] = value.lower() in ("1", "true", "yes")
            continue
        try:
            defaults[key] = act.type(value) if act.type else value
        except (TypeError, ValueError) as exc:
            raise UsageError(f"bad value for {key}: {value!r}") from exc
        if act.choices is not None and defaults[key] not in act.choices:
            raise UsageError(f"bad value for {key}: {value!r}")
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def _effective(args: argparse.Namespace) -> dict[str, Any]:
    skip = {"config", "output", "header"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def render(columns: list[str], rows: Rows, fmt: str, config: dict[str, Any]) -> str:
    if fmt == "json":
        doc = {"config": _jsonable(config), "columns": columns,
               "rows": [dict(zip(columns, _jsonable(list(r)))) for r in rows]}
        return json.dumps(doc, indent=1, sort_keys=False) + "\n"
    buf = io.StringIO()
    buf.write(",".join(columns) + "\n")
    for r in rows:
        buf.write(",".join(_fmt(x) for x in r) + "\n")
    return buf.getvalue()


def _join_negative_values(argv: list[str]) -> list[str]:
    """Attach values such as ``-1.5:1.5:0.05`` to their option so argparse does not read them as flags."""
    out: list[str] = []
    for tok in argv:
        prev = out[-1] if out else ""
        if (
            len(tok) > 1 and tok[0] == "-" and (tok[1].isdigit() or tok[1] == ".")
            and prev.startswith("--") and "=" not in prev
        ):
            out[-1] = f"{prev}={tok}"
        else:
            out.append(tok)
    return out


def run(argv: Sequence[str] | None = None) -> int:
    argv = _join_negative_values(list(sys.argv[1:] if argv is None else argv))
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        columns, rows = COMMANDS[args.command](args)
        text = render(columns, rows, args.format, _effective(args))
        if args.header:
            with open(args.header, "w", encoding="utf-8") as fh:
                fh.write(json.dumps(_jsonable(_effective(args)), indent=1) + "\n")
        if args.output:
            with open(args.output, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        return 0
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except DomainError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
