"""Command-line front end.

Subcommands:

* ``afga-blind`` -- run the blind-targeting experiment on the sphere model
  and write ``afga_blind.txt`` (text log) and ``afga_blind.svg`` (trajectory
  plot of one trial).  Output bytes depend only on the configuration.
* ``symfit``     -- run a method pipeline from an instance file and report
  the inferred weight against the brute-force reference.
* ``oracle``     -- print the brute-force symmetrized overlap of a table.

Configuration is plain ``key = value`` text (# comments); command-line flags
override file values.  Exit codes: 0 success, 1 validation error, 2 a
numerical tolerance was exceeded.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .afga import AFGAConfig, TrialRecord, run_blind_targeting
from .methods import (MethodInstance, SymResult, parse_instance_file, parse_key_values,
                      run_instance)
from .permutations import oracle_symmetrized_amplitude, read_amplitude_table
from .svg import render_trajectory_svg

#: Contract name for per-trial records (see docs/log-format.md).
RunRecord = TrialRecord

EXACT_TOLERANCE = 1e-6

BLIND_DEFAULTS = {
    "g0_degs": 90.0, "g0est_degs": 80.0, "del_lam_degs": 30.0,
    "num_steps": 300, "tail_len": 40, "num_trials": 4, "plotted_trial": 0,
    "filter": "mmm", "seed": 0,
}

FIT_DEFAULTS = {
    "del_lam_degs": 30.0, "num_steps": 300, "tail_len": 40,
    "num_trials": 2, "plotted_trial": 0, "filter": "mmm", "seed": 0,
}

_KEY_TYPES = {
    "g0_degs": float, "g0est_degs": float, "del_lam_degs": float,
    "num_steps": int, "tail_len": int, "num_trials": int,
    "plotted_trial": int, "filter": str, "sampling": str,
    "shots": int, "seed": int,
}

#: Order of the seven experiment inputs in logs and plot legends.
PARAM_ORDER = ("g0_degs", "g0est_degs", "del_lam_degs", "num_steps",
               "tail_len", "num_trials", "plotted_trial")


class ToleranceFailure(Exception):
    """Result disagreed with the reference beyond the allowed tolerance."""


def _coerce(values: dict) -> dict:
    out = {}
    for key, raw in values.items():
        if key not in _KEY_TYPES:
            raise ValueError(f"unknown config key {key!r}")
        out[key] = _KEY_TYPES[key](raw) if isinstance(raw, str) else raw
    return out


def _config_from(path: Path | None, flag_values: dict, defaults: dict) -> dict:
    merged = dict(defaults)
    if path is not None:
        merged.update(_coerce(parse_key_values(Path(path).read_text())))
    merged.update({k: v for k, v in flag_values.items() if v is not None})
    return merged


# ---------------------------------------------------------------------------
# afga-blind
# ---------------------------------------------------------------------------


def format_blind_log(params: dict, records: list[TrialRecord]) -> str:
    """The frozen text-log layout (docs/log-format.md)."""
    lines = ["afga-blind log v1"]
    for key in PARAM_ORDER:
        val = params[key]
        lines.append(f"{key} = {val!r}" if isinstance(val, float) else f"{key} = {val}")
    for rec in records:
        lines.append("")
        lines.append(f"trial {rec.trial}")
        lines.append(f"estimate_in_degs = {rec.estimate_in_degs:.12f}")
        comps = " ".join(f"{v:.12f}" for v in np.asarray(rec.filtered, dtype=float))
        lines.append(f"filtered = {comps}")
        lines.append(f"estimate_out_degs = {rec.estimate_out_degs:.12f}")
    return "\n".join(lines) + "\n"


def cmd_afga_blind(args: argparse.Namespace) -> int:
    flag_values = {key: getattr(args, key) for key in (*PARAM_ORDER, "filter", "seed")}
    params = _config_from(args.config, flag_values, BLIND_DEFAULTS)
    cfg = AFGAConfig(**{k: params[k] for k in (*PARAM_ORDER, "filter", "seed")})
    records = run_blind_targeting(cfg)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    log_path = out_dir / "afga_blind.txt"
    svg_path = out_dir / "afga_blind.svg"
    log_path.write_text(format_blind_log(params, records))
    legend = {key: params[key] for key in PARAM_ORDER}
    trajectory = records[cfg.plotted_trial].trajectory
    svg_path.write_text(render_trajectory_svg(
        trajectory, legend, title=f"blind targeting, trial {cfg.plotted_trial}"))
    print(f"wrote {log_path}")
    print(f"wrote {svg_path}")
    return 0


# ---------------------------------------------------------------------------
# symfit
# ---------------------------------------------------------------------------


def _report(inst: MethodInstance, result: SymResult, oracle_q: float) -> float:
    print(f"instance: n={inst.n} d={inst.d} c={inst.c_display} method={inst.method}")
    if result.patched:
        print("note: <c|psi> = 0, applied the wire-swap patch (input wires 0,1)")
    for lev, q, ratio, sign in zip(result.levels, result.q_values,
                                   result.ratios, result.signs):
        print(f"level {lev}: ratio |z1/z0| = {ratio:.15g}  sign = {sign:+d}"
              f"  Q^({lev}) = {q:.15g}")
    print(f"Q^(1) = {result.q1:.15g}")
    print(f"Q = {result.q_final:.15g}")
    print(f"oracle Q = {oracle_q:.15g}")
    err = abs(result.q_final - oracle_q)
    print(f"abs error = {err:.3e}")
    return err


def cmd_symfit(args: argparse.Namespace) -> int:
    inst, overrides = parse_instance_file(args.instance)
    if args.mode == "exact":
        cfg = None
    else:
        params = dict(FIT_DEFAULTS)
        params.update(overrides)
        if args.shots is not None:
            params["sampling"] = "shots"
            params["shots"] = args.shots
        if args.seed is not None:
            params["seed"] = args.seed
        cfg = AFGAConfig(**params)
    print(f"mode: {args.mode}" + (f" (shots = {cfg.shots})"
                                  if cfg is not None and cfg.sampling == "shots" else ""))
    result = run_instance(inst, cfg)
    oracle_amp = oracle_symmetrized_amplitude(inst.psi, inst.c, inst.d)
    err = _report(inst, result, abs(oracle_amp) ** 2)
    if args.mode == "exact" and err > EXACT_TOLERANCE:
        raise ToleranceFailure(
            f"exact-mode error {err:.3e} exceeds {EXACT_TOLERANCE:g}")
    return 0


# ---------------------------------------------------------------------------
# oracle
# ---------------------------------------------------------------------------


def cmd_oracle(args: argparse.Namespace) -> int:
    c_display = [int(t) for t in args.c.split(",")]
    n = args.n if args.n is not None else len(c_display)
    if len(c_display) != n:
        raise ValueError("c must supply exactly n digits")
    amps = read_amplitude_table(Path(args.psi_file), n, args.d)
    norm = float(np.linalg.norm(amps))
    if norm <= 0.0:
        raise ValueError("table has zero norm")
    if abs(norm - 1.0) > 1e-9:
        print(f"warning: input table norm is {norm:.12g}, normalizing", file=sys.stderr)
        amps = amps / norm
    c = tuple(reversed(c_display))
    g = oracle_symmetrized_amplitude(amps, c, args.d)
    print(f"<c|sym|psi> = {g.real:.15g} {g.imag:+.15g}j")
    print(f"|<c|sym|psi>|^2 = {abs(g) ** 2:.15g}")
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="symamp",
        description="Symmetrized-overlap estimation: blind-targeting driver, "
                    "method pipelines, and the brute-force oracle.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("afga-blind",
                       help="run the sphere-model blind-targeting experiment")
    p.add_argument("--config", type=Path, help="key = value configuration file")
    p.add_argument("--g0-degs", dest="g0_degs", type=float, help="true start angle")
    p.add_argument("--g0est-degs", dest="g0est_degs", type=float,
                   help="initial estimate of the start angle")
    p.add_argument("--del-lam-degs", dest="del_lam_degs", type=float)
    p.add_argument("--num-steps", dest="num_steps", type=int)
    p.add_argument("--tail-len", dest="tail_len", type=int)
    p.add_argument("--num-trials", dest="num_trials", type=int)
    p.add_argument("--plotted-trial", dest="plotted_trial", type=int)
    p.add_argument("--filter", choices=("mmm", "mean"))
    p.add_argument("--seed", type=int)
    p.add_argument("--out-dir", type=Path, default=Path("."))
    p.set_defaults(func=cmd_afga_blind)

    p = sub.add_parser("symfit", help="run a method pipeline on an instance file")
    p.add_argument("instance", type=Path)
    p.add_argument("--mode", choices=("exact", "afga"), default="exact")
    p.add_argument("--shots", type=int,
                   help="sample readouts with this many shots (afga mode)")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_symfit)

    p = sub.add_parser("oracle", help="brute-force symmetrized overlap of a table")
    p.add_argument("psi_file")
    p.add_argument("-c", "--c", required=True,
                   help="target digits, comma separated, most significant wire first")
    p.add_argument("-n", type=int, default=None)
    p.add_argument("-d", type=int, default=2)
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ToleranceFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
