"""Command-line front end.

Exit codes: 0 success, 1 parameter or usage error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings

from . import dynamics, stationary, weakmeas
from .errors import DwellError, NumericalError, ParameterError, StateError
from .model import BathParams, DriveField, SystemParams
from .sweep import COLUMNS, SweepConfig, fmt, run_sweep, rows_to_csv

EXIT_OK = 0
EXIT_PARAM = 1
EXIT_NUMERIC = 2

# option defaults per subcommand; None means required
DEFAULTS = {
    "stationary": {"omega": None, "g": None, "delta": 0.0, "lambda_re": 0.0,
                   "lambda_im": 0.0, "temperature": 0.0},
    "decay": {"omega": None, "g": None, "delta": None, "lambda_re": 0.0,
              "lambda_im": None, "temperature": 0.0},
    "dwell": {"omega": None, "g": None, "delta": None, "lambda_re": 0.0,
              "lambda_im": None, "temperature": 0.0, "gamma": None, "tau_m": None},
    "evolve": {"omega": None, "g": None, "delta": 0.0, "lambda_re": 0.0,
               "lambda_im": 0.0, "temperature": 0.0, "t_max": None, "steps": None,
               "dissipator": "standard", "representation": "density",
               "initial": "mixed", "output": None},
    "ladder": {"n_levels": None, "delta_e": None, "coupling": None, "t_max": None,
               "steps": None, "k": 0, "output": None},
    "consistency": {"omega": None, "g": None, "delta": 0.0, "lambda_re": 0.0,
                    "lambda_im": 0.0, "temperature": 0.0, "horizon": None},
    "sweep": {"omega": None, "g": None, "delta": None, "lambda_re": 0.0,
              "lambda_im": None, "z_min": 0.0, "z_max": 100.0, "points": 200,
              "spacing": "linear", "output": None},
}

OPTIONAL = {"gamma", "tau_m", "output", "horizon"}
# only needed by dwell when the decay constant is computed rather than given
DECAY_ONLY = {"g", "delta", "lambda_im"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARAM, f"{self.prog}: error: {message}\n")


def _physical_flags(p: argparse.ArgumentParser, with_temperature: bool = True) -> None:
    p.add_argument("--omega", type=float, help="level splitting")
    p.add_argument("--delta", type=float, help="transverse perturbation strength")
    p.add_argument("--g", type=float, help="system-field coupling")
    p.add_argument("--lambda-re", dest="lambda_re", type=float, help="Re of drive amplitude")
    p.add_argument("--lambda-im", dest="lambda_im", type=float, help="Im of drive amplitude")
    if with_temperature:
        p.add_argument("--temperature", type=float, help="bath temperature (energy units)")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--json", action="store_true", help="emit one JSON object")
    common.add_argument("--config", help="JSON file with option values; flags override it")

    parser = _Parser(prog="thermaldwell", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    parser.commands = sub.choices

    p = sub.add_parser("stationary", parents=[common], help="closed-form steady state")
    _physical_flags(p)

    p = sub.add_parser("decay", parents=[common], help="decay constant and time scales")
    _physical_flags(p)

    p = sub.add_parser("dwell", parents=[common], help="weak dwell time")
    _physical_flags(p)
    p.add_argument("--mode", required=True,
                   choices=("integral", "closed", "approx", "resonant", "thermal"))
    p.add_argument("--gamma", type=float, help="decay constant (default: from parameters)")
    p.add_argument("--tau-m", dest="tau_m", type=float, help="measurement time (default 1/omega)")

    p = sub.add_parser("evolve", parents=[common], help="integrate the master equation")
    _physical_flags(p)
    p.add_argument("--dissipator", choices=("standard", "verbatim"))
    p.add_argument("--representation", choices=("density", "bloch"))
    p.add_argument("--initial", choices=("ground", "excited", "mixed", "x"))
    p.add_argument("--t-max", dest="t_max", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--include-free", dest="include_free", action="store_true")
    p.add_argument("--allow-coarse", dest="allow_coarse", action="store_true")
    p.add_argument("--output", help="CSV path for the time series")

    p = sub.add_parser("ladder", parents=[common], help="discrete level coupled to a ladder")
    p.add_argument("--n-levels", dest="n_levels", type=int)
    p.add_argument("--delta-e", dest="delta_e", type=float)
    p.add_argument("--coupling", type=float)
    p.add_argument("--t-max", dest="t_max", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--k", type=int, help="ladder level to record")
    p.add_argument("--output", help="CSV path for |a0| and total probability")

    p = sub.add_parser("consistency", parents=[common],
                       help="Bloch fixed point against the closed form")
    _physical_flags(p)
    p.add_argument("--horizon", type=float)

    p = sub.add_parser("sweep", parents=[common], help="dwell time versus z = T/omega")
    _physical_flags(p, with_temperature=False)
    p.add_argument("--z-min", dest="z_min", type=float)
    p.add_argument("--z-max", dest="z_max", type=float)
    p.add_argument("--points", type=int)
    p.add_argument("--spacing", choices=("linear", "log"))
    p.add_argument("--output", help="CSV path (default: stdout)")
    return parser


def _merge(command: str, args: argparse.Namespace) -> dict:
    opts = dict(DEFAULTS[command])
    if args.config:
        try:
            with open(args.config) as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise UsageError("config file must hold a JSON object")
        unknown = set(loaded) - set(opts)
        if unknown:
            raise UsageError(f"unknown config keys for {command}: {', '.join(sorted(unknown))}")
        opts.update(loaded)
    for key in opts:
        value = getattr(args, key, None)
        if value is not None:
            opts[key] = value
    skip = set(OPTIONAL)
    if command == "dwell" and args.mode != "thermal" and opts["gamma"] is not None:
        skip |= DECAY_ONLY
    required = [k for k, v in opts.items() if v is None and k not in skip]
    if required:
        flags = ", ".join("--" + k.replace("_", "-") for k in required)
        raise UsageError(f"missing required option(s): {flags}")
    return opts


def _params(o: dict) -> tuple[SystemParams, BathParams, DriveField]:
    return (
        SystemParams(omega=o["omega"], delta=o["delta"], g=o["g"]),
        BathParams(temperature=o.get("temperature", 0.0)),
        DriveField(lambda_re=o["lambda_re"], lambda_im=o["lambda_im"]),
    )


def _inputs(o: dict) -> dict:
    return {k: v for k, v in o.items() if v is not None}


def _cmd_stationary(o: dict) -> dict:
    sys_, bath, drive = _params(o)
    s = stationary.stationary_state(sys_, bath, drive)
    return {"sp_re": s.sp.real, "sp_im": s.sp.imag, "sz": s.sz, "is_physical": s.is_physical}


def _cmd_decay(o: dict) -> dict:
    sys_, bath, drive = _params(o)
    b = stationary.decay_constant(sys_, bath, drive)
    return {
        "gamma": b.gamma,
        "alpha": b.alpha,
        "pi_th": b.pi_th,
        "pi_q": b.pi_q,
        "gamma_zero_temperature": stationary.zero_temperature_gamma(sys_, drive),
    }


def _cmd_dwell(o: dict, mode: str) -> dict:
    if o["gamma"] is not None and mode != "thermal":
        o = {**o, **{k: o[k] if o[k] is not None else d for k, d in
                     (("g", 1.0), ("delta", 0.0), ("lambda_im", 0.0))}}
    sys_, bath, drive = _params(o)
    if mode == "thermal":
        b = stationary.decay_constant(sys_, bath, drive)
        return {"tau_d": weakmeas.dwell_thermal(sys_, bath, drive), "gamma": b.gamma,
                "pi_th": b.pi_th, "pi_q": b.pi_q}
    gamma = o["gamma"]
    if gamma is None:
        gamma = stationary.decay_constant(sys_, bath, drive).gamma
    tau_m = o["tau_m"] if o["tau_m"] is not None else 1.0 / sys_.omega
    if mode == "integral":
        tau_d = weakmeas.dwell_integral(weakmeas.MeasurementWindow.of_length(tau_m), gamma)
    elif mode == "closed":
        tau_d = weakmeas.dwell_closed(gamma, tau_m)
    elif mode == "approx":
        tau_d = weakmeas.dwell_approx(gamma, tau_m)
    else:
        tau_d = weakmeas.dwell_resonant(sys_, gamma)
        tau_m = 1.0 / sys_.omega
    return {"tau_d": tau_d, "gamma": gamma, "tau_m": tau_m}


_INITIAL = {
    "ground": dynamics.DensityMatrix.ground,
    "excited": dynamics.DensityMatrix.excited,
    "mixed": dynamics.DensityMatrix.maximally_mixed,
    "x": dynamics.DensityMatrix.x_polarized,
}


def _cmd_evolve(o: dict, args: argparse.Namespace) -> dict:
    sys_, bath, drive = _params(o)
    cfg = dynamics.EvolutionConfig(
        t_max=o["t_max"],
        steps=o["steps"],
        dissipator_mode=o["dissipator"],
        include_free=bool(getattr(args, "include_free", False) or o.get("include_free", False)),
        allow_coarse=bool(getattr(args, "allow_coarse", False) or o.get("allow_coarse", False)),
    )
    initial = _INITIAL[o["initial"]]()
    if o["representation"] == "bloch":
        initial = dynamics.density_to_bloch(initial)
    traj = dynamics.evolve(initial, sys_, bath, drive, cfg)
    if o["output"]:
        traj.to_csv(o["output"])
    return {
        "t": float(traj.times[-1]),
        "re_sp": float(traj.sp[-1].real),
        "im_sp": float(traj.sp[-1].imag),
        "sz": float(traj.sz[-1]),
        "trace": float(traj.trace[-1].real),
        "min_eigenvalue": float(traj.min_eigenvalue[-1]),
    }


def _cmd_ladder(o: dict) -> dict:
    cfg = weakmeas.LadderConfig(
        n_levels=o["n_levels"], delta_e=o["delta_e"], coupling=o["coupling"],
        t_max=o["t_max"], steps=o["steps"],
    )
    window = weakmeas.MeasurementWindow(0.0, cfg.t_max, k=o["k"], delta_e=cfg.delta_e)
    res = weakmeas.ladder_decay(cfg, window)
    if o["output"]:
        res.to_csv(o["output"])
    return {
        "rate": res.rate,
        "amplitude_rate": res.amplitude_rate,
        "golden_rule_rate": cfg.golden_rule_rate,
        "r_squared": res.r_squared,
        "max_norm_error": res.max_norm_error,
        "abs_a0": float(abs(res.a0[-1])),
        "total_prob": float(res.total_prob[-1]),
    }


def _cmd_consistency(o: dict) -> dict:
    sys_, bath, drive = _params(o)
    return stationary.consistency_report(sys_, bath, drive, horizon=o["horizon"]).to_dict()


def _sweep_config(o: dict) -> SweepConfig:
    sys_, _, drive = _params(o)
    return SweepConfig(sys=sys_, drive=drive, z_min=o["z_min"], z_max=o["z_max"],
                       points=o["points"], spacing=o["spacing"])


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def _human(result: dict, prefix: str = "") -> list[str]:
    lines = []
    for key, value in result.items():
        if isinstance(value, dict):
            lines.extend(_human(value, prefix + key + "."))
        elif isinstance(value, bool) or value is None or isinstance(value, str):
            lines.append(f"{prefix}{key}: {value}")
        elif isinstance(value, (int, float)):
            lines.append(f"{prefix}{key}: {fmt(value) if isinstance(value, float) else value}")
        else:
            lines.append(f"{prefix}{key}: {value}")
    return lines


def _emit(result: dict, inputs: dict, as_json: bool, out) -> None:
    if as_json:
        out.write(json.dumps(_jsonable({**result, "inputs": inputs}), sort_keys=False) + "\n")
    else:
        out.write("\n".join(_human(result)) + "\n")


def run(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    command = args.command
    try:
        o = _merge(command, args)
    except UsageError as exc:
        parser.commands[command].print_usage(sys.stderr)
        print(f"thermaldwell {command}: error: {exc}", file=sys.stderr)
        return EXIT_PARAM
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            if command == "sweep":
                cfg = _sweep_config(o)
                rows = run_sweep(cfg, o["output"])
                if args.json:
                    data = {c: [getattr(r, c) for r in rows] for c in COLUMNS}
                    _emit(data, cfg.inputs(), True, out)
                elif not o["output"]:
                    out.write(rows_to_csv(rows))
                else:
                    out.write(f"wrote {len(rows)} rows to {o['output']}\n")
                return EXIT_OK
            if command == "stationary":
                result = _cmd_stationary(o)
            elif command == "decay":
                result = _cmd_decay(o)
            elif command == "dwell":
                result = _cmd_dwell(o, args.mode)
            elif command == "evolve":
                result = _cmd_evolve(o, args)
            elif command == "ladder":
                result = _cmd_ladder(o)
            else:
                result = _cmd_consistency(o)
    except ParameterError as exc:
        print(f"thermaldwell {command}: parameter error: {exc}", file=sys.stderr)
        return EXIT_PARAM
    except (NumericalError, StateError) as exc:
        print(f"thermaldwell {command}: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"thermaldwell {command}: I/O error: {exc}", file=sys.stderr)
        return EXIT_PARAM
    except DwellError as exc:  # pragma: no cover - all subclasses handled above
        print(f"thermaldwell {command}: error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    _emit(result, _inputs(o), args.json, out)
    return EXIT_OK


def main(argv=None) -> None:
    try:
        code = run(argv)
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else EXIT_PARAM
    sys.exit(code)


if __name__ == "__main__":
    main()
