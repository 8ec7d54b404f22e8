"""Reproducible experiment runner (the ``lil-xing`` command).

Subcommands: analytic, mc, hitting, ldp-fit, sde-check, plot. Every run
writes a CSV whose header comments carry the full provenance (seed, grid,
build); identical (config, seed, workers) produce byte-identical files.
Seeds are mandatory for stochastic subcommands -- there is no silent
entropy. Exit codes: 1 for configuration errors, 2 for numerical
convergence failures.

Config files are plain ``key = value`` text (one experiment per file,
``#`` comments allowed); any key can be overridden by the matching
command-line flag. Unknown keys are rejected by name.
"""

from __future__ import annotations

import argparse
import math
import subprocess
import sys
from pathlib import Path

import numpy as np

from . import __version__, analytic, estimators, sde
from .analytic import Boundary, DeviationLevel, DomainError, QuadratureError
from .paths import GridParams

SCHEMA_VERSION = 1
STOCHASTIC_COMMANDS = {"mc", "hitting", "ldp-fit", "sde-check"}


class ConfigError(Exception):
    pass


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

def _parse_bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {s!r}")


def _parse_float_list(s: str) -> list[float]:
    return [float(x) for x in s.replace(",", " ").split()]


_CONFIG_KEYS = {
    "command": str,
    "t": float,
    "t_list": _parse_float_list,
    "eps": float,
    "eps_list": _parse_float_list,
    "sigma0": float,
    "model": str,
    "theta": float,
    "beta": float,
    "n": int,
    "seed": int,
    "workers": int,
    "grid_octaves": int,
    "points_per_octave": int,
    "bridge_correction": _parse_bool,
    "out": str,
    "a": float,
    "a_list": _parse_float_list,
    "bins": int,
    "c1": float,
    "c": float,
    "in": str,
}


def parse_config(path: str) -> dict:
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value, got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip().replace("-", "_")
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
        try:
            values[key] = _CONFIG_KEYS[key](val.strip())
        except ConfigError:
            raise
        except Exception as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key!r}: {exc}")
    return values


def _build_model(name: str, theta: float, beta: float, sigma0: float):
    """'bm' or a DiffusionSpec; accepts ou(0.5)/state_vol(0.1) sugar."""
    name = name.strip()
    if "(" in name and name.endswith(")"):
        base, _, arg = name[:-1].partition("(")
        try:
            value = float(arg)
        except ValueError:
            raise ConfigError(f"bad model parameter in {name!r}")
        name = base
        if name == "ou":
            theta = value
        elif name == "state_vol":
            beta = value
        else:
            raise ConfigError(f"model {name!r} takes no parameter")
    if name == "bm":
        return "bm"
    if name == "constant":
        return sde.DiffusionSpec.constant(sigma0)
    if name == "ou":
        return sde.DiffusionSpec.ou(theta, sigma0)
    if name == "state_vol":
        return sde.DiffusionSpec.state_vol(beta, sigma0)
    raise ConfigError(f"unknown model {name!r} (bm | constant | ou | state_vol)")


# ---------------------------------------------------------------------------
# CSV output
# ---------------------------------------------------------------------------

def _build_id() -> str:
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=Path(__file__).parent, capture_output=True, text=True, timeout=10,
        )
        if out.returncode == 0 and out.stdout.strip():
            return out.stdout.strip()
    except Exception:
        pass
    return f"lil-xing-{__version__}"


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, float):
        return f"{v:.12e}"
    return str(v)


def write_csv(path: str, command: str, args, columns: list[str], rows: list,
              extra_comments: list[str] | None = None) -> None:
    grid = f"octaves:{args.grid_octaves},ppo:{args.points_per_octave}"
    lines = [
        f"# lil-xing {__version__} schema={SCHEMA_VERSION}",
        f"# seed={args.seed if args.seed is not None else 'NA'} grid={grid} build={_build_id()}",
        f"# command={command}",
    ]
    lines.extend(f"# {c}" for c in (extra_comments or []))
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_csv(path: str) -> tuple[list[str], list[list[str]], list[str]]:
    comments, header, rows = [], None, []
    for raw in Path(path).read_text().splitlines():
        if raw.startswith("#"):
            comments.append(raw)
        elif header is None:
            header = raw.split(",")
        elif raw.strip():
            rows.append(raw.split(","))
    if header is None:
        raise ConfigError(f"{path}: no CSV header found")
    return header, rows, comments


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _grid_params(args) -> GridParams:
    return GridParams(octaves=args.grid_octaves,
                      points_per_octave=args.points_per_octave)


def _t_values(args) -> list[float]:
    ts = list(args.t_list) if args.t_list else []
    if args.t is not None:
        ts.append(args.t)
    if not ts:
        raise ConfigError("no time points: pass --t or --t-list")
    return ts


def _eps_values(args) -> list[float]:
    es = list(args.eps_list) if args.eps_list else []
    if args.eps is not None:
        es.append(args.eps)
    if not es:
        raise ConfigError("no deviation levels: pass --eps or --eps-list")
    return es


def cmd_analytic(args) -> int:
    cols = ["t", "eps", "loglog", "quadrature", "asymptotic", "reflection_lower"]
    rows = []
    for t in _t_values(args):
        for eps in _eps_values(args):
            level = DeviationLevel(epsilon=eps, sigma0=args.sigma0)
            st = analytic.ScaledTime(t)
            rows.append((t, eps, st.loglog,
                         analytic.crossing_prob_quadrature(t, level),
                         analytic.crossing_prob_asymptotic(t, eps),
                         analytic.reflection_lower_bound(t, eps)))
    write_csv(args.out, "analytic", args, cols, rows)
    print(f"analytic: {len(rows)} rows -> {args.out}")
    return 0


def cmd_mc(args) -> int:
    model = _build_model(args.model, args.theta, args.beta, args.sigma0)
    gp = _grid_params(args)
    cols = ["model", "t", "eps", "sigma0", "n", "p_hat", "std_err", "u_min",
            "truncation_bound", "n_excluded"]
    rows = []
    for t in _t_values(args):
        for eps in _eps_values(args):
            level = DeviationLevel(epsilon=eps, sigma0=args.sigma0)
            e = estimators.mc_crossing_prob(
                model, t, level, args.n, gp, args.seed,
                bridge_correction=args.bridge_correction, workers=args.workers)
            rows.append((e.model_tag, e.t, e.epsilon, e.sigma0, e.n, e.p_hat,
                         e.std_err, e.u_min, e.truncation_bound, e.n_excluded))
    write_csv(args.out, "mc", args, cols, rows)
    print(f"mc: {len(rows)} rows -> {args.out}")
    return 0


def cmd_hitting(args) -> int:
    a_values = list(args.a_list) if args.a_list else []
    if args.a is not None:
        a_values.append(args.a)
    if not a_values:
        raise ConfigError("no boundary scales: pass --a or --a-list")
    eps = args.eps if args.eps is not None else estimators.DEFAULT_HITTING_LEVEL.epsilon
    level = DeviationLevel(epsilon=eps, sigma0=args.sigma0)
    gp = _grid_params(args)
    cols = ["a", "eps", "bin_lo", "bin_hi", "hits", "cond_density",
            "lerche_cond_window", "lerche_cond_full"]
    rows = []
    extra = []
    for a in a_values:
        b = Boundary(level, a)
        hist = estimators.hitting_time_histogram(
            b, args.n, gp, args.seed, n_bins=args.bins,
            bridge_correction=args.bridge_correction, workers=args.workers)
        mass_win = analytic.lerche_mass(b, hist.u_min, 1.0)
        mass_full = analytic.lerche_mass(b, 0.0, 1.0)
        extra.append(f"a={a:g} p_hat={hist.p_hat:.12e} hits={hist.hits} "
                     f"unreliable={int(hist.unreliable)}")
        for i in range(hist.counts.size):
            lo, hi = hist.edges[i], hist.edges[i + 1]
            ref_win = analytic.lerche_mass(b, lo, hi) / mass_win / (hi - lo)
            ref_full = analytic.lerche_mass(b, lo, hi) / mass_full / (hi - lo)
            rows.append((a, eps, lo, hi, int(hist.counts[i]),
                         hist.conditional_density[i], ref_win, ref_full))
    write_csv(args.out, "hitting", args, cols, rows, extra)
    print(f"hitting: {len(rows)} rows -> {args.out}")
    return 0


def cmd_ldp_fit(args) -> int:
    model = _build_model(args.model, args.theta, args.beta, args.sigma0)
    ts = _t_values(args)
    eps_values = _eps_values(args)
    if len(eps_values) != 1:
        raise ConfigError("ldp-fit needs exactly one --eps")
    level = DeviationLevel(epsilon=eps_values[0], sigma0=args.sigma0)
    gp = _grid_params(args)
    ests = [estimators.mc_crossing_prob(model, t, level, args.n, gp, args.seed + i,
                                        bridge_correction=args.bridge_correction,
                                        workers=args.workers)
            for i, t in enumerate(ts)]
    fit = estimators.ldp_rate_fit(ests)
    cols = ["model", "t", "eps", "loglog", "p_hat", "std_err", "log_p_hat"]
    rows = [(e.model_tag, e.t, e.epsilon, analytic.ScaledTime(e.t).loglog,
             e.p_hat, e.std_err, math.log(e.p_hat)) for e in ests if e.p_hat > 0]
    extra = [f"fit slope={fit.slope:.12e} slope_stderr={fit.slope_stderr:.12e} "
             f"intercept={fit.intercept:.12e} r_squared={fit.r_squared:.12e} "
             f"excluded={len(fit.excluded_ts)}"]
    write_csv(args.out, "ldp-fit", args, cols, rows, extra)
    print(f"ldp-fit: slope={fit.slope:.4f} (stderr {fit.slope_stderr:.4f}) -> {args.out}")
    return 0


def cmd_sde_check(args) -> int:
    model = _build_model(args.model, args.theta, args.beta, args.sigma0)
    if model == "bm":
        raise ConfigError("sde-check needs a diffusion model, not bm")
    ts = _t_values(args)
    if len(ts) != 1:
        raise ConfigError("sde-check needs exactly one --t")
    t = ts[0]
    spec = model
    if args.c1 is not None:
        spec = sde.DiffusionSpec(drift=spec.drift, diffusion=spec.diffusion,
                                 sigma0=spec.sigma0, c1=args.c1, c2=spec.c2,
                                 family_tag=spec.family_tag, param=spec.param)
    gp = _grid_params(args)
    scan = sde.drift_qv_scan(spec, t, args.n, gp, args.seed, c=args.c)
    cols = ["check", "family", "t", "n", "value", "threshold", "passed"]
    rows = [
        ("drift_bound_violations", spec.family_tag, t, scan.n,
         float(scan.drift_violations), 0.0, scan.drift_violations == 0),
        ("d_gt_sqrt_t", spec.family_tag, t, scan.n,
         float(scan.d_gt_sqrt_t), 0.0, scan.d_gt_sqrt_t == 0),
        ("qv_violations", spec.family_tag, t, scan.n,
         float(scan.qv_violations), 0.0, scan.qv_violations == 0),
        ("max_qv_excess", spec.family_tag, t, scan.n, scan.max_qv_excess, 0.0,
         scan.max_qv_excess <= 0.0),
        ("diverged", spec.family_tag, t, scan.n, float(scan.n_diverged), 0.0,
         scan.n_diverged == 0),
        ("drift_sup_bound", spec.family_tag, t, scan.n, scan.drift_bound,
         math.sqrt(t), scan.drift_bound <= math.sqrt(t)),
    ]
    try:
        rows.append(("r_bound", spec.family_tag, t, scan.n,
                     sde.r_bound(t, spec, spec.c1), 1.0, True))
    except DomainError:
        rows.append(("r_bound", spec.family_tag, t, scan.n,
                     float("nan"), 1.0, False))
    if spec.driftless:
        ks = sde.dds_equivalence_check(spec, t, min(args.n, 10_000), gp,
                                       args.seed, workers=args.workers)
        rows.append(("dds_ks", spec.family_tag, t, ks.n, ks.statistic,
                     ks.threshold, ks.passed))
    write_csv(args.out, "sde-check", args, cols, rows)
    bad = [r[0] for r in rows if not r[-1]]
    print(f"sde-check: {len(rows)} checks -> {args.out}"
          + (f" (failing: {', '.join(bad)})" if bad else " (all passed)"))
    return 0


def cmd_plot(args) -> int:
    from ._svg import Plot

    if not args.infile:
        raise ConfigError("plot needs --in (CSV from a prior mc/ldp-fit run)")
    header, rows, _ = read_csv(args.infile)
    try:
        i_p = header.index("p_hat")
        i_ll = header.index("loglog") if "loglog" in header else None
        i_t = header.index("t")
        i_eps = header.index("eps")
    except ValueError as exc:
        raise ConfigError(f"{args.infile}: missing column ({exc})")
    pts = []
    eps_ref = None
    for row in rows:
        p = float(row[i_p])
        if p <= 0.0:
            continue
        big_l = (float(row[i_ll]) if i_ll is not None
                 else math.log(math.log(1.0 / float(row[i_t]))))
        pts.append((big_l, math.log(p)))
        eps_ref = float(row[i_eps])
    if not pts:
        raise ConfigError(f"{args.infile}: no usable (p_hat > 0) rows")
    if args.eps is not None:
        eps_ref = args.eps
    pts.sort()
    plot = Plot("crossing probability decay", "loglog(1/t)", "log p")
    plot.scatter([p[0] for p in pts], [p[1] for p in pts], label="estimates")
    x0, y0 = pts[0]
    xs = [p[0] for p in pts]
    plot.line(xs, [y0 - eps_ref * (x - x0) for x in xs],
              label=f"slope -{eps_ref:g}")
    Path(args.out).write_text(plot.render())
    print(f"plot: {len(pts)} points -> {args.out}")
    return 0


# ---------------------------------------------------------------------------
# argument plumbing
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> _Parser:
    parser = _Parser(prog="lil-xing",
                     description="Small-time boundary-crossing experiments")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", type=str, default=None)
        p.add_argument("--t", type=float, default=None)
        p.add_argument("--t-list", dest="t_list", type=_parse_float_list, default=None)
        p.add_argument("--eps", type=float, default=None)
        p.add_argument("--eps-list", dest="eps_list", type=_parse_float_list, default=None)
        p.add_argument("--sigma0", type=float, default=None)
        p.add_argument("--model", type=str, default=None)
        p.add_argument("--theta", type=float, default=None)
        p.add_argument("--beta", type=float, default=None)
        p.add_argument("--n", type=int, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--workers", type=int, default=None)
        p.add_argument("--grid-octaves", dest="grid_octaves", type=int, default=None)
        p.add_argument("--points-per-octave", dest="points_per_octave", type=int, default=None)
        p.add_argument("--no-bridge-correction", dest="no_bridge", action="store_true")
        p.add_argument("--out", type=str, default=None)

    for name in ("analytic", "mc", "hitting", "ldp-fit", "sde-check", "plot"):
        p = sub.add_parser(name)
        common(p)
        if name == "hitting":
            p.add_argument("--a", type=float, default=None)
            p.add_argument("--a-list", dest="a_list", type=_parse_float_list, default=None)
            p.add_argument("--bins", type=int, default=None)
        if name == "sde-check":
            p.add_argument("--c1", type=float, default=None)
            p.add_argument("--c", type=float, default=None)
        if name == "plot":
            p.add_argument("--in", dest="infile", type=str, default=None)
    return parser


_DEFAULTS = {
    "sigma0": 1.0,
    "model": "bm",
    "theta": 1.0,
    "beta": 0.1,
    "n": 10_000,
    "grid_octaves": 40,
    "points_per_octave": 32,
    "bins": 24,
    "workers": None,
    "t": None,
    "t_list": None,
    "eps": None,
    "eps_list": None,
    "seed": None,
    "a": None,
    "a_list": None,
    "c1": None,
    "c": None,
    "infile": None,
}


def _merge(args: argparse.Namespace) -> argparse.Namespace:
    """defaults < config file < explicit flags; validates command match."""
    cfg = parse_config(args.config) if args.config else {}
    if "command" in cfg and cfg["command"] != args.command:
        raise ConfigError(f"config is for command {cfg['command']!r}, "
                          f"invoked as {args.command!r}")
    cfg.pop("command", None)
    if "in" in cfg:
        cfg["infile"] = cfg.pop("in")
    bridge_cfg = cfg.pop("bridge_correction", None)

    merged = dict(_DEFAULTS)
    merged["out"] = f"lil-xing-{args.command.replace('_', '-')}" + (
        ".svg" if args.command == "plot" else ".csv")
    merged.update(cfg)
    for key, val in vars(args).items():
        if key in ("config", "command", "no_bridge"):
            continue
        if val is not None:
            merged[key] = val
    merged["command"] = args.command
    bridge = True if bridge_cfg is None else bridge_cfg
    if args.no_bridge:
        bridge = False
    merged["bridge_correction"] = bridge
    ns = argparse.Namespace(**merged)

    if args.command in STOCHASTIC_COMMANDS and ns.seed is None:
        raise ConfigError(f"{args.command} requires --seed (no silent entropy)")
    return ns


_COMMANDS = {
    "analytic": cmd_analytic,
    "mc": cmd_mc,
    "hitting": cmd_hitting,
    "ldp-fit": cmd_ldp_fit,
    "sde-check": cmd_sde_check,
    "plot": cmd_plot,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        merged = _merge(args)
        return _COMMANDS[args.command](merged)
    except ConfigError as exc:
        print(f"lil-xing: error: {exc}", file=sys.stderr)
        return 1
    except DomainError as exc:
        print(f"lil-xing: error: {exc}", file=sys.stderr)
        return 1
    except QuadratureError as exc:
        print(f"lil-xing: convergence failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
