"""Command-line front end.

Exit codes: 0 success, 1 configuration or usage error, 2 simulation or
estimation failure.
"""

from __future__ import annotations

import argparse
import math
import sys

from . import experiments as ex
from .circuit import Coupling
from .config import ConfigError, build_config, load_file
from .errors import WPTError
from .estimation import PrimaryMeasurement, estimate_i2, m_from_zin_phase

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _common(sp):
    sp.add_argument("--config", metavar="PATH", help="key = value configuration file")
    sp.add_argument("--k", metavar="K[,K...]", help="coupling coefficients, each in (0, 0.99] (dimensionless)")
    sp.add_argument("--fmin", type=float, metavar="HZ", help="sweep grid lower bound [Hz]")
    sp.add_argument("--fmax", type=float, metavar="HZ", help="sweep grid upper bound [Hz]")
    sp.add_argument("--points", type=int, metavar="N", help="sweep grid size [points]")
    sp.add_argument("--duration", type=float, metavar="S", help="closed-loop run length [s]")
    sp.add_argument("--learn-rate", type=float, metavar="HZ_PER_A", help="tracker gain [Hz/A]")
    sp.add_argument("--start-freq", type=float, metavar="HZ", help="tracker starting frequency [Hz]")
    sp.add_argument("--h", type=float, metavar="S", help="RK4 step size [s]")
    sp.add_argument("--out-dir", metavar="DIR", help=f"output directory (default ${ex.OUT_DIR_ENV} or ./results)")


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wpt-adaptive", description="Adaptive maximum-power-transfer simulator for a two-coil WPT link.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    helps = {
        "sweep": "AC sweep of |I1|, |I2|, Z_IN per k",
        "surface": "|I2| over the (k, f) grid and its ridge",
        "adapt": "closed-loop tracking through the coupling ramp",
        "compare": "static versus adaptive matching table",
        "all": "run every experiment",
    }
    for name, text in helps.items():
        _common(sub.add_parser(name, help=text, description=text))
    est = sub.add_parser("estimate", help="estimate M and |I2| from primary-side quantities",
                         description="Estimate M and |I2| from primary-side quantities.")
    est.add_argument("--config", metavar="PATH", help="key = value configuration file (circuit values)")
    est.add_argument("--freq", type=float, required=True, metavar="HZ", help="operating frequency [Hz]")
    est.add_argument("--zin-mag", type=float, metavar="OHM", help="input impedance magnitude [ohm]")
    est.add_argument("--v-amp", type=float, metavar="V", help="drive amplitude [V] (with --i1-amp)")
    est.add_argument("--i1-amp", type=float, metavar="A", help="primary current amplitude [A] (with --v-amp)")
    est.add_argument("--zin-phase", type=float, metavar="RAD", help="input impedance angle [rad]; also runs the phase method")
    return parser


def _overrides(args) -> dict:
    values = load_file(args.config) if getattr(args, "config", None) else {}
    flags = {
        "k": getattr(args, "k", None),
        "fmin": getattr(args, "fmin", None),
        "fmax": getattr(args, "fmax", None),
        "points": getattr(args, "points", None),
        "duration": getattr(args, "duration", None),
        "learn_rate": getattr(args, "learn_rate", None),
        "start_freq": getattr(args, "start_freq", None),
        "h": getattr(args, "h", None),
        "out_dir": getattr(args, "out_dir", None),
    }
    values.update({k: v for k, v in flags.items() if v is not None})
    return values


def _print_sweep(s):
    print(f"{'k':>5} {'argmax|I1| [Hz]':>16} {'argmax|I2| [Hz]':>16} {'#max I1':>8} {'#max I2':>8}")
    for k, row in s["per_k"].items():
        print(f"{k:>5} {row['argmax_i1_hz']:16.1f} {row['argmax_i2_hz']:16.1f} {row['n_maxima_i1']:8d} {row['n_maxima_i2']:8d}")
    print(f"first split k: |I1| {s['first_split_k_i1']}, |I2| {s['first_split_k_i2']}")


def _print_surface(s):
    print(f"grid {s['shape'][0]} x {s['shape'][1]}")
    for k, n in s["ridge_counts"].items():
        print(f"k={k}: {n} maxima, ridge max {s['ridge_max_a'][k]:.4f} A")


def _print_adapt(s):
    for k, f in s["segment_mean_f_hz"].items():
        print(f"k={k}: mean f {f:.1f} Hz")
    err = s["max_post_settling_est_err"]
    print(f"max post-settling estimator error: {err * 100:.3f} %" if err is not None else "no settled ticks")
    print(f"final f {s['final_f_hz']:.1f} Hz, |I2|^2 / max = {s['final_power_ratio']:.4f}")


def _print_compare(s):
    print(f"static frequency {s['f_static_hz']:.1f} Hz")
    print(s["table"])


PRINTERS = {"sweep": _print_sweep, "surface": _print_surface, "adapt": _print_adapt, "compare": _print_compare}


def _estimate(args) -> int:
    cfg = build_config(load_file(args.config) if args.config else {})
    p = cfg.circuit
    if not args.freq > 0:
        raise ConfigError("freq", "must be positive")
    if args.zin_mag is not None:
        v_amp, i1_amp = p.v_amp, p.v_amp / args.zin_mag if args.zin_mag > 0 else 0.0
    elif args.v_amp is not None and args.i1_amp is not None:
        v_amp, i1_amp = args.v_amp, args.i1_amp
    else:
        raise ConfigError("zin-mag", "give --zin-mag or both --v-amp and --i1-amp")
    omega = 2 * math.pi * args.freq
    try:
        meas = PrimaryMeasurement(v_amp, i1_amp, omega, args.zin_phase)
    except ValueError as exc:
        raise ConfigError("measurement", str(exc)) from None
    res = estimate_i2(meas, p)
    k = res.m_est / math.sqrt(p.l1 * p.l2)
    print(f"|Z_IN| = {res.zin_mag:.6g} ohm at {args.freq:.6g} Hz")
    print(f"M = {res.m_est:.6e} H (k = {k:.6f})")
    print(f"|I2| = {res.i2_est:.6f} A")
    if args.zin_phase is not None:
        m2 = m_from_zin_phase(args.zin_phase, p, omega)
        print(f"M (phase method) = {m2:.6e} H")
    return EXIT_OK


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help()
            return EXIT_USAGE
        if args.command == "estimate":
            return _estimate(args)
        cfg = build_config(_overrides(args))
        if args.command == "all":
            summary = ex.run_all(cfg)
            for name, printer in PRINTERS.items():
                print(f"== {name}")
                printer(summary[name])
        else:
            printer = PRINTERS[args.command]
            printer(ex.EXPERIMENTS[args.command](cfg))
        print(f"results written to {cfg.out_dir}")
        return EXIT_OK
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except WPTError as exc:
        print(f"simulation error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"config error: out_dir: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
