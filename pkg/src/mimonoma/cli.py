"""Command line entry point: ``mimonoma sweep | verify | dist``."""

import argparse
import os
import sys

from .config import SystemConfig, parse_key_values
from .exceptions import ConfigurationError, MimoNomaError
from .link import allocate_power
from .report import DIST_COLUMNS, dist_rows, fmt, manifest_text, render_csv, write_sweep, write_text
from .simulator import run_sweep, sample_layer_gains
from .verify import FAULTS, GROUPS, Verifier, run_checks

EXIT_OK, EXIT_FAILED, EXIT_CONFIG = 0, 1, 2

# flag -> configuration key; values stay strings until the config parses them
CONFIG_FLAGS = (
    "m", "n", "rates_u1", "rates_u2", "policy", "target_multiplier", "target_fixed",
    "rho_db_start", "rho_db_stop", "rho_db_step", "trials", "seed", "scheme", "detector_u1",
)


def build_parser():
    parser = argparse.ArgumentParser(prog="mimonoma", description="MIMO-NOMA outage simulator.")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="key = value configuration file")
    for key in CONFIG_FLAGS:
        common.add_argument("--" + key.replace("_", "-"), dest=key, metavar="VALUE")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--workers", type=int, default=1, help="worker processes (results do not depend on it)")

    sub.add_parser("sweep", parents=[common], help="simulate outage over the SNR grid and write CSV")
    v = sub.add_parser("verify", parents=[common], help="run the acceptance checks")
    v.add_argument("--checks", default="all", help=f"comma list from: {', '.join(GROUPS)}")
    v.add_argument("--inject-fault", choices=sorted(FAULTS), help=argparse.SUPPRESS)
    d = sub.add_parser("dist", parents=[common], help="empirical moments of the layer gains")
    d.add_argument("--samples", metavar="COUNT", help="number of channel draws (defaults to --trials)")
    return parser


def resolve_config(args):
    overrides = {k: getattr(args, k) for k in CONFIG_FLAGS if getattr(args, k) is not None}
    # one target form at a time: a flag for one form replaces the other
    if "target_fixed" in overrides:
        overrides.setdefault("target_multiplier", None)
    elif "target_multiplier" in overrides:
        overrides.setdefault("target_fixed", None)
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                mapping = parse_key_values(fh.read())
        except OSError as exc:
            raise ConfigurationError(f"cannot read config: {exc}") from None
        if overrides.get("target_multiplier", "") is None:
            mapping.pop("target_multiplier", None)
        if overrides.get("target_fixed", "") is None:
            mapping.pop("target_fixed", None)
        if any(k.startswith("rho_db_") for k in overrides):
            mapping.pop("rho_db", None)
    else:
        mapping = {}
    mapping.update({k: v for k, v in overrides.items() if v is not None})
    if mapping.get("target_fixed") is not None and "target_multiplier" not in mapping:
        mapping["target_multiplier"] = None
    return SystemConfig.from_mapping(mapping)


def _summary(sweep):
    lines = []
    for user in (1, 2):
        if user == 1 and sweep.points[0].user1 is None:
            continue
        lines.append(f"user {user} outage ({sweep.config.scheme}, policy {sweep.config.policy})")
        for point in sweep.points:
            lines.append(f"  {point.rho_db:6.1f} dB  " + "  ".join(fmt(p) for p in point.p_hat(user)))
    return "\n".join(lines)


def cmd_sweep(args, config):
    sweep = run_sweep(config, workers=args.workers)
    out = args.out or "."
    paths = write_sweep(sweep, out)
    outputs = {f"user{u}": os.path.basename(p) for u, p in paths.items()}
    write_text(os.path.join(out, f"{config.scheme}_manifest.txt"), manifest_text(config, outputs))
    print(_summary(sweep))
    for path in paths.values():
        print(f"wrote {path}")
    return EXIT_OK


def cmd_verify(args, config):
    groups = None if args.checks in ("all", "") else [g.strip() for g in args.checks.split(",") if g.strip()]
    unknown = [g for g in groups or () if g not in GROUPS]
    if unknown:
        raise ConfigurationError(f"unknown check group(s) {unknown}; choose from {', '.join(GROUPS)}")
    allocator = FAULTS[args.inject_fault] if args.inject_fault else allocate_power
    verifier = Verifier(trials=config.trials, seed=config.seed, workers=args.workers, allocator=allocator)
    lines, failed, total = [], 0, 0
    for group, checks in run_checks(verifier, groups):
        for check in checks:
            total += 1
            failed += not check.passed
            line = f"{group}: {check.line()}"
            lines.append(line)
            print(line, flush=True)
    tail = f"{total - failed}/{total} checks passed"
    print(tail)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        write_text(os.path.join(args.out, "verify_report.txt"), "\n".join(lines + [tail]) + "\n")
    return EXIT_FAILED if failed else EXIT_OK


def cmd_dist(args, config):
    try:
        samples = int(args.samples) if args.samples is not None else config.trials
    except ValueError:
        raise ConfigurationError(f"samples must be an integer, got {args.samples!r}") from None
    if samples < 2:
        raise ConfigurationError("samples must be at least 2")
    x, z = sample_layer_gains(config.m, config.n, samples, config.seed)
    text = render_csv(DIST_COLUMNS, dist_rows(x, z, config.m))
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, f"dist_M{config.m}_N{config.n}.csv")
        write_text(path, text)
        print(f"wrote {path}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


COMMANDS = {"sweep": cmd_sweep, "verify": cmd_verify, "dist": cmd_dist}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        config = resolve_config(args)
        if args.workers < 1:
            raise ConfigurationError("workers must be at least 1")
        return COMMANDS[args.command](args, config)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MimoNomaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
