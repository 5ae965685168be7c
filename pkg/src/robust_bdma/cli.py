"""Command line front-end: ``robust-bdma {solve,verify,sweep,repro}``.

Exit codes: 0 success, 1 invalid input or usage, 2 internal error or a
failed reproduction self-check.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import traceback

from . import __version__
from .beamformer import InfeasibleGeometryError, TargetSinrs, BeamformingSolution, solve
from .channel import ChannelError, ChannelSet, make_channel_set
from .config import METHODS, ConfigError, ScenarioConfig, SweepSpec, db_to_linear
from .sim.engine import SweepError, run_sweep
from .sim.presets import presets, run_preset
from .verify.lmi import check_lmi_feasibility

EXIT_OK, EXIT_INVALID, EXIT_INTERNAL = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


# flag -> ScenarioConfig field
SCENARIO_FLAGS = {
    "n": "n_antennas", "k": "n_users", "gamma_db": "gamma_db", "gamma_e_db": "gamma_e_db",
    "g": "g", "sigma2": "sigma2", "channel_mode": "channel_mode", "trials": "n_trials",
    "seed": "base_seed", "an_fraction": "an_fraction", "eve_aggregate": "eve_aggregate",
}


def _scenario_args(p):
    p.add_argument("--config", help="flat JSON scenario file; flags override its values")
    p.add_argument("--n", type=int, help="number of antennas N")
    p.add_argument("--k", type=int, help="number of users K")
    p.add_argument("--gamma-db", type=float, help="user SINR target (dB)")
    p.add_argument("--gamma-e-db", type=float, help="Eve SINR ceiling (dB)")
    p.add_argument("--g", type=float, help="error radius ratio eps/||h~||")
    p.add_argument("--sigma2", type=float, help="noise variance")
    p.add_argument("--channel-mode", choices=["synthetic", "physical"])
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--an-fraction", type=float)
    p.add_argument("--eve-aggregate", choices=["mean", "max"])
    p.add_argument("--methods", help=f"comma-separated subset of {','.join(METHODS)}")


def _load_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON ({exc})") from exc


def scenario_from_args(args) -> ScenarioConfig:
    base = _load_json(args.config) if args.config else {}
    if not isinstance(base, dict):
        raise UsageError("scenario file must hold a JSON object")
    for flag, name in SCENARIO_FLAGS.items():
        v = getattr(args, flag, None)
        if v is not None:
            base[name] = v
    if getattr(args, "methods", None):
        base["methods"] = [m.strip() for m in args.methods.split(",") if m.strip()]
    return ScenarioConfig.from_dict(base)


def _dump(doc, out):
    text = json.dumps(doc, indent=2, allow_nan=True) + "\n"
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_solve(args) -> int:
    cfg = scenario_from_args(args)
    chans = make_channel_set(cfg)
    targets = TargetSinrs.uniform(cfg.n_users, cfg.gamma, cfg.gamma_e)
    sol = solve(args.method, chans, targets, cfg.an_fraction)
    doc = {
        "version": __version__,
        "config": cfg.to_dict(),
        "targets": {"gamma": targets.gamma.tolist(), "gamma_e": targets.gamma_e.tolist()},
        "solution": sol.to_dict(),
    }
    if not args.no_channels:
        doc["channels"] = chans.to_dict()
    _dump(doc, args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    doc = _load_json(args.document)
    try:
        chans = ChannelSet.from_dict(doc["channels"])
        sol = BeamformingSolution.from_dict(doc["solution"])
    except KeyError as exc:
        raise UsageError(f"{args.document}: missing field {exc.args[0]!r}") from exc
    k = sol.n_users
    if args.gamma_db is not None or "targets" not in doc:
        g = db_to_linear(args.gamma_db if args.gamma_db is not None else 10.0)
        ge = db_to_linear(args.gamma_e_db if args.gamma_e_db is not None else 0.0)
        targets = TargetSinrs.uniform(k, g, ge)
    else:
        targets = TargetSinrs(doc["targets"]["gamma"], doc["targets"]["gamma_e"])
        if args.gamma_e_db is not None:
            targets = TargetSinrs(targets.gamma, db_to_linear(args.gamma_e_db))
    rep = check_lmi_feasibility(chans, sol, targets, grid_points=args.grid_points)
    _dump(rep.to_dict(), args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    raw = _load_json(args.spec)
    spec = SweepSpec.from_dict(raw)
    name = args.name or os.path.splitext(os.path.basename(args.spec))[0]
    res = run_sweep(spec, args.workers)
    csv_path, _ = res.write(args.out, name)
    print(csv_path)
    return EXIT_OK


def cmd_repro(args) -> int:
    names = sorted(presets(args.scale)) if args.figure == "all" else [args.figure]
    status = EXIT_OK
    for name in names:
        res, failures = run_preset(name, args.scale, args.trials, args.workers)
        csv_path, _ = res.write(args.out, name)
        print(csv_path)
        for f in failures:
            print(f"{name}: self-check failed: {f}", file=sys.stderr)
            status = EXIT_INTERNAL
    return status


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="robust-bdma", description="Robust secure beamforming for BDMA massive MIMO.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="solve one scenario and print the solution JSON")
    _scenario_args(s)
    s.add_argument("--method", choices=list(METHODS), default="robust")
    s.add_argument("--no-channels", action="store_true", help="omit the channel set from the output")
    s.add_argument("--out", help="write JSON here instead of stdout")
    s.set_defaults(func=cmd_solve)

    v = sub.add_parser("verify", help="check a solve document against the robust constraints")
    v.add_argument("document", help="JSON produced by 'solve'")
    v.add_argument("--gamma-db", type=float)
    v.add_argument("--gamma-e-db", type=float)
    v.add_argument("--grid-points", type=int, default=1000)
    v.add_argument("--out")
    v.set_defaults(func=cmd_verify)

    w = sub.add_parser("sweep", help="run a sweep spec file and write CSV/JSON")
    w.add_argument("spec", help="JSON with swept_parameter, values and fixed")
    w.add_argument("--out", default=".")
    w.add_argument("--name", help="output base name (default: spec file stem)")
    w.add_argument("--workers", type=int, help="process count, 0 = all CPUs")
    w.set_defaults(func=cmd_sweep)

    r = sub.add_parser("repro", help="run built-in figure presets with self-checks")
    r.add_argument("figure", choices=[f"fig{i}" for i in range(2, 9)] + ["all"])
    r.add_argument("--scale", choices=["desk", "full"], default="desk")
    r.add_argument("--trials", type=int, help="override trial count")
    r.add_argument("--out", default=".")
    r.add_argument("--workers", type=int)
    r.set_defaults(func=cmd_repro)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INVALID
    except SweepError as exc:
        print(f"error: {exc}", file=sys.stderr)
        invalid = isinstance(exc.cause, (ConfigError, ChannelError, InfeasibleGeometryError))
        return EXIT_INVALID if invalid else EXIT_INTERNAL
    except (ConfigError, ChannelError, InfeasibleGeometryError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception:
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
