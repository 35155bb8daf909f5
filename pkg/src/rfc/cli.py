"""``rfc`` command line: check, tf, rlocus, step and sweep.

Exit codes: 0 ok, 2 right-half-plane zero, 3 unstable/divergent,
64 usage or config error, 74 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import analysis
from .config import Config, load_config, with_value
from .errors import ConfigError, DivergenceError, RfcError
from .numkit import eigenvalues
from .sim import TRACE_COLUMNS, simulate, step_metrics
from .svg import Figure

EXIT_OK = 0
EXIT_RHP_ZERO = 2
EXIT_UNSTABLE = 3
EXIT_USAGE = 64
EXIT_IO = 74


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if x is None:
        return ""
    return f"{float(x):.9g}"


def _num(x):
    """JSON-safe number with 9 significant digits."""
    x = float(x)
    if not math.isfinite(x):
        return str(x)
    return float(f"{x:.9g}")


def _cplx(values) -> list:
    return [{"re": _num(v.real), "im": _num(v.imag)} for v in np.asarray(values, dtype=complex)]


class Report:
    def __init__(self, command: str, cfg: Config, config_path: str):
        self.data = {
            "command": command,
            "config_path": str(config_path),
            "config": cfg.model_dump(mode="json"),
            "warnings": [],
        }
        self.lines: list[str] = []

    def warn(self, code: str, message: str):
        self.data["warnings"].append({"code": code, "message": message})
        self.lines.append(f"warning [{code}]: {message}")

    def __setitem__(self, key, value):
        self.data[key] = value

    def __getitem__(self, key):
        return self.data[key]

    def say(self, line: str):
        self.lines.append(line)

    def write(self, out: Path, exit_code: int):
        self.data["exit_code"] = exit_code
        with open(out / "report.json", "w", encoding="utf-8") as fh:
            json.dump(self.data, fh, indent=2, sort_keys=False)
            fh.write("\n")
        text = "\n".join(self.lines) + "\n"
        with open(out / "report.txt", "w", encoding="utf-8") as fh:
            fh.write(text)
        sys.stdout.write(text)


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else fmt(v) for v in row])


def _mp_summary(mp: analysis.MinimumPhaseReport) -> str:
    phase = "non-minimum-phase (RHP zero)" if mp.rhp_zero else "minimum-phase"
    return f"{phase}, relative degree {mp.relative_degree}, {mp.compensator.value} compensator"


def _analysis_block(design, rep: Report):
    tfs = design.tfs
    mp = design.report
    rep["minimum_phase"] = {
        "minimum_phase": mp.minimum_phase,
        "relative_degree": mp.relative_degree,
        "has_integrator": mp.has_integrator,
        "rhp_zero": mp.rhp_zero,
        "compensator": mp.compensator.value,
        "summary": _mp_summary(mp),
    }
    rep["open_loop"] = {"poles": _cplx(mp.poles), "zeros": _cplx(mp.zeros),
                        "cancelled": _cplx(tfs.L.cancelled)}
    if tfs.L.cancelled:
        rep.warn("PZ_CANCELLATION", "L(s) pole/zero cancellation at " +
                 ", ".join(f"{c.real:.6g}{c.imag:+.6g}j" for c in np.asarray(tfs.L.cancelled)))
    if mp.rhp_zero:
        zs = mp.zeros[mp.zeros.real > analysis.RHP_TOL]
        rep.warn("RHP_ZERO", "open-loop zero(s) in the right half plane at " +
                 ", ".join(f"{z.real:.6g}{z.imag:+.6g}j" for z in zs))
    return tfs, mp


def cmd_check(cfg: Config, out: Path, rep: Report, seed=None) -> int:
    design = cfg.design()
    tfs, mp = _analysis_block(design, rep)
    C_f = design.C_f
    outer = design.outer()
    poles = eigenvalues(outer.A)
    stable = bool(np.all(poles.real < 0))
    mismatch = analysis.cross_check_poles(outer, tfs.L, C_f)
    rep["closed_loop"] = {"C_f": _num(C_f), "hurwitz": stable, "poles": _cplx(poles),
                          "pole_cross_check": _num(mismatch)}
    rep.say(_mp_summary(mp))
    rep.say(f"integrator in L(s): {'yes' if mp.has_integrator else 'no'}")
    rep.say(f"closed loop at C_f = {fmt(C_f)}: {'stable' if stable else 'unstable'}")
    if stable:
        gain = analysis.static_gain(outer)
        rep["closed_loop"]["static_gain"] = _num(gain)
        rep.say(f"static gain tau_ref -> tau_int_est: {fmt(gain)}")
    else:
        rep.warn("UNSTABLE", f"closed loop has poles with Re >= 0 at C_f = {fmt(C_f)}")
    if mp.rhp_zero:
        crit = analysis.critical_gain(tfs.L)
        rep["closed_loop"]["critical_gain"] = None if crit is None else _num(crit)
        if crit is not None:
            rep.say(f"critical force gain C_f* = {fmt(crit)}")
        return EXIT_RHP_ZERO
    return EXIT_OK if stable else EXIT_UNSTABLE


def cmd_tf(cfg: Config, out: Path, rep: Report, seed=None) -> int:
    design = cfg.design()
    tfs, mp = _analysis_block(design, rep)
    rows = []
    block = {}
    for name, tf in tfs.items():
        for part, poly in (("num", tf.num), ("den", tf.den)):
            for i, c in enumerate(poly.coeffs):
                rows.append([name, part, str(poly.degree - i), c])
        block[name] = {
            "num": [_num(c) for c in tf.num.coeffs],
            "den": [_num(c) for c in tf.den.coeffs],
            "poles": _cplx(tf.poles()),
            "zeros": _cplx(tf.zeros()),
            "cancelled": _cplx(tf.cancelled),
        }
        rep.say(f"{name}: num {[fmt(c) for c in tf.num.coeffs]} / den {[fmt(c) for c in tf.den.coeffs]}")
    _write_csv(out / "tf.csv", ["tf", "part", "power", "coeff"], rows)
    rep["transfer_functions"] = block
    rep.say(_mp_summary(mp))
    return EXIT_OK


def cmd_rlocus(cfg: Config, out: Path, rep: Report, seed=None) -> int:
    design = cfg.design()
    tfs, mp = _analysis_block(design, rep)
    grid = cfg.analysis.gain_grid or analysis.DEFAULT_GAIN_GRID
    loc = analysis.root_locus(tfs.L, grid)
    rows = []
    for g, poles in zip(loc.gains, loc.branches):
        for b, p in enumerate(poles):
            rows.append([g, str(b), p.real, p.imag])
    _write_csv(out / "rlocus.csv", ["gain", "branch_index", "re", "im"], rows)

    fig = Figure(title="Root locus of 1 + C_f L(s)", xlabel="Re", ylabel="Im")
    for b in range(loc.branches.shape[1]):
        fig.line(loc.branches[:, b].real, loc.branches[:, b].imag, label=f"branch {b}")
    fig.points(loc.poles.real, loc.poles.imag, "x", label="poles")
    if loc.zeros.size:
        fig.points(loc.zeros.real, loc.zeros.imag, "o", label="zeros", color="#d62728")
    fig.save(out / "rlocus.svg")

    unstable = np.any(loc.branches.real > 0, axis=1)
    rep["root_locus"] = {"n_gains": int(loc.gains.size), "n_branches": int(loc.branches.shape[1]),
                         "unstable_from_gain": _num(loc.gains[np.argmax(unstable)]) if unstable.any() else None}
    rep.say(f"root locus: {loc.gains.size} gains x {loc.branches.shape[1]} branches")
    if unstable.any():
        crit = analysis.critical_gain(tfs.L, lo=min(1e-3, float(loc.gains[0])))
        rep["root_locus"]["critical_gain"] = None if crit is None else _num(crit)
        rep.warn("UNSTABLE_BRANCH", f"branch crosses into Re > 0 near C_f = {fmt(crit)}")
    return EXIT_OK


def _step_figure(trace, tau_ref, path):
    fig = Figure(title="Force control step response", xlabel="t [s]", ylabel="torque [N m]")
    fig.line(trace.t, trace.tau_int_est, label="tau_int_est")
    fig.line(trace.t, trace.tau_int_true, label="tau_int_true")
    fig.line(trace.t, np.full_like(trace.t, tau_ref), label="tau_ref", color="#7f7f7f")
    fig.save(path)


def _write_trace(trace, path):
    cols = trace.columns()
    _write_csv(path, list(TRACE_COLUMNS), zip(*(cols[c] for c in TRACE_COLUMNS)))


def _metrics_dict(m):
    return {
        "overshoot": _num(m.overshoot),
        "settling_time_2pct": None if m.settling_time_2pct is None else _num(m.settling_time_2pct),
        "settled": m.settled,
        "steady_state_error": _num(m.steady_state_error),
        "oscillatory": m.oscillatory,
        "absolute_units": m.absolute,
    }


def cmd_step(cfg: Config, out: Path, rep: Report, seed=None) -> int:
    design = cfg.design()
    outer = design.outer()
    scenario = cfg.scenario(seed)
    stable = bool(np.all(eigenvalues(outer.A).real < 0))
    rep["seed"] = scenario.noise.seed
    try:
        trace = simulate(outer, scenario)
        diverged = False
    except DivergenceError as exc:
        trace = exc.partial
        diverged = True
        rep.warn("DIVERGENCE", str(exc))
    _write_trace(trace, out / "step.csv")
    _step_figure(trace, cfg.sim.tau_ref, out / "step.svg")
    for code in trace.warnings:
        if code == "RK4_STABILITY":
            rep.warn(code, "dt * max|Re eig(A_CL)| exceeds the RK4 stability bound")
    if len(trace):
        m = step_metrics(trace, cfg.sim.tau_ref)
        rep["metrics"] = _metrics_dict(m)
        rep["steady_state"] = {"tau_int_est": _num(trace.tau_int_est[-1]), "q": _num(trace.q[-1])}
        rep.say(f"overshoot {fmt(m.overshoot)}, settling (2%) "
                f"{fmt(m.settling_time_2pct) if m.settled else 'unsettled'}, "
                f"final tau_int_est {fmt(trace.tau_int_est[-1])}")
    if not stable:
        rep.warn("UNSTABLE", f"closed loop is unstable at C_f = {fmt(design.C_f)}")
    return EXIT_UNSTABLE if (diverged or not stable) else EXIT_OK


def parse_grid(spec: str) -> np.ndarray:
    try:
        if ":" in spec:
            a, b, n = spec.split(":")
            n = int(n)
            if n < 1:
                raise ValueError
            return np.linspace(float(a), float(b), n)
        vals = [float(v) for v in spec.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"bad grid {spec!r}; expected a:b:n or comma separated values") from None
    if not vals:
        raise ConfigError("grid is empty")
    return np.array(vals)


def cmd_sweep(cfg: Config, out: Path, rep: Report, seed=None, param=None, grid=None) -> int:
    if not param or not grid:
        raise UsageError("sweep needs --param and --grid")
    values = parse_grid(grid)
    rows = []
    points = []
    for v in values:
        c = with_value(cfg, param, float(v))
        design = c.design()
        outer = design.outer()
        poles = eigenvalues(outer.A)
        stable = bool(np.all(poles.real < 0))
        rhp = design.report.rhp_zero
        scenario = c.scenario(seed)
        try:
            trace = simulate(outer, scenario)
        except DivergenceError as exc:
            trace = exc.partial
        m = step_metrics(trace, c.sim.tau_ref) if len(trace) else None
        settle = m.settling_time_2pct if m and m.settled else float("nan")
        overshoot = m.overshoot if m else float("nan")
        rows.append([v, stable, rhp, float(np.max(poles.real)), overshoot, settle])
        points.append({"value": _num(v), "stable": stable, "rhp_zero": rhp})
    _write_csv(out / "sweep.csv",
               ["value", "stable", "rhp_zero", "dominant_re", "overshoot", "settling_time"], rows)
    rep["sweep"] = {"param": param, "points": points}
    rep.say(f"sweep of {param}: {len(values)} points")
    return EXIT_OK


COMMANDS = {"check": cmd_check, "tf": cmd_tf, "rlocus": cmd_rlocus, "step": cmd_step, "sweep": cmd_sweep}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="rfc", description="DOb/RTOb robust force controller analysis")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, help="JSON config path or bundled name (fig2a..fig2d, fig3)")
        s.add_argument("--out", default="rfc-out", help="output directory (default: rfc-out)")
        s.add_argument("--seed", type=int, default=None, help="noise seed; overrides RFC_SEED and the config")
        if name == "sweep":
            s.add_argument("--param", required=True, help="dotted config field, e.g. servo.J_mi")
            s.add_argument("--grid", required=True, help="a:b:n (linspace) or comma separated values")
    return p


def _resolve_seed(flag):
    if flag is not None:
        return flag
    env = os.environ.get("RFC_SEED")
    if env is not None and env.strip():
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"RFC_SEED must be an integer, got {env!r}") from None
    return None


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        seed = _resolve_seed(args.seed)
        cfg = load_config(args.config)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"rfc: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"rfc: cannot create {out}: {exc}", file=sys.stderr)
        return EXIT_IO
    rep = Report(args.command, cfg, args.config)
    extra = {"param": args.param, "grid": args.grid} if args.command == "sweep" else {}
    try:
        code = COMMANDS[args.command](cfg, out, rep, seed=seed, **extra)
        rep.write(out, code)
    except (ConfigError, UsageError) as exc:
        print(f"rfc: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"rfc: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except RfcError as exc:
        print(f"rfc: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_UNSTABLE
    return code


if __name__ == "__main__":
    sys.exit(main())
