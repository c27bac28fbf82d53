"""Command-line entry point.

A thin single-threaded dispatcher: parses flags, loads the JSON config
(fail-closed: unknown keys are errors), hands off to the experiments module,
and writes outputs atomically (temp file + rename, so an interrupted run
never leaves a partial file under the final name).

Exit codes: 0 success, 1 validation failure, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
import tempfile

import numpy as np

from .distributions import OffspringPmf
from .experiments import (ConfigError, ExperimentConfig, PSchedule,
                          rows_to_csv, run_capacity_scan, run_gamma_scan,
                          run_magnetization_scan, run_tv_scan, run_validation)
from .fields import FieldMode, sample_field, survival, to_dot, prune
from .pruned_law import gamma_profile
from .tree import sample_gw

_CONFIG_KEYS = {
    "schema_version", "pmf", "beta", "p_schedule", "n_grid", "replicas",
    "epsilon", "epsilon_sweep", "mode", "field_mode", "method",
    "capacity_p", "q", "master_seed", "coupling_off", "workers",
}


def atomic_write_text(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-gwising-")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_config(path: str, seed_override: int | None = None,
                workers: int | None = None) -> ExperimentConfig:
    try:
        with open(path) as handle:
            data = json.load(handle)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON (line {exc.lineno}): {exc.msg}")
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(data) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    if data.get("schema_version") != 1:
        raise ConfigError("config must declare schema_version 1")
    missing = {"pmf", "beta", "p_schedule", "n_grid", "replicas", "mode"} - set(data)
    if missing:
        raise ConfigError(f"missing config keys {sorted(missing)}")
    try:
        cfg = ExperimentConfig(
            pmf=OffspringPmf.from_json_dict(data["pmf"]),
            beta=float(data["beta"]),
            schedule=PSchedule.from_json_dict(data["p_schedule"]),
            n_grid=tuple(int(n) for n in data["n_grid"]),
            replicas=int(data["replicas"]),
            mode=str(data["mode"]),
            master_seed=int(data.get("master_seed", 1)),
            epsilon=float(data.get("epsilon", 0.05)),
            epsilon_sweep=tuple(float(e) for e in data.get("epsilon_sweep", (0.01, 0.05, 0.2))),
            field_mode=FieldMode(data.get("field_mode", "leaves_only")),
            method=str(data.get("method", "direct")),
            capacity_p=float(data.get("capacity_p", 1.5)),
            q=float(data.get("q", 2.0)),
            coupling_off=bool(data.get("coupling_off", False)),
            workers=int(workers if workers is not None else data.get("workers", 1)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad config field: {exc}")
    if seed_override is not None:
        cfg = ExperimentConfig(**{**cfg.__dict__, "master_seed": seed_override})
    return cfg


def parse_pmf_spec(spec: str) -> OffspringPmf:
    """dirac<k> or comma-separated degree:mass pairs, e.g. '1:0.5,2:0.5'."""
    match = re.fullmatch(r"dirac(\d+)", spec)
    if match:
        return OffspringPmf.dirac(int(match.group(1)))
    try:
        masses = {}
        for item in spec.split(","):
            degree, mass = item.split(":")
            masses[int(degree)] = float(mass)
        return OffspringPmf.from_dict(masses)
    except Exception:
        raise ConfigError(f"cannot parse pmf spec {spec!r}")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gwising")
    parser.add_argument("--quiet", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True)
        p.add_argument("--out", default=".")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--workers", type=int,
                       default=int(os.environ.get("GWISING_WORKERS", 0)) or None)

    for name in ("gamma-profile", "magnetization-scan", "capacity-scan", "tv-scan"):
        common(sub.add_parser(name))
    validate = sub.add_parser("validate")
    validate.add_argument("--config", default=None)
    validate.add_argument("--out", default=".")
    validate.add_argument("--seed", type=int, default=None)
    validate.add_argument("--instances", type=int, default=500)
    validate.add_argument("--oracle-instances", type=int, default=50)

    demo = sub.add_parser("prune-demo")
    demo.add_argument("--pmf", required=True)
    demo.add_argument("--n", type=int, required=True)
    demo.add_argument("--p", type=float, required=True)
    demo.add_argument("--out", default=".")
    demo.add_argument("--seed", type=int, default=1)
    return parser


def _default_validation_config(seed: int) -> ExperimentConfig:
    return ExperimentConfig(
        pmf=OffspringPmf.dirac(2), beta=0.8,
        schedule=PSchedule("constant", 0.5), n_grid=(2,), replicas=1,
        mode="validate", master_seed=seed,
    )


def parse_and_dispatch(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    quiet = getattr(args, "quiet", False)

    def say(message: str) -> None:
        if not quiet:
            print(message)

    try:
        if args.command == "prune-demo":
            return _run_prune_demo(args, say)
        if args.command == "validate":
            if args.config is not None:
                cfg = load_config(args.config, args.seed)
            else:
                cfg = _default_validation_config(args.seed if args.seed is not None else 1)
            report = run_validation(cfg, args.instances, args.oracle_instances)
            path = os.path.join(args.out, "validation.json")
            atomic_write_text(path, json.dumps(report, indent=2, sort_keys=True) + "\n")
            say(f"wrote {path}")
            for suite in report["suites"]:
                say(f"{suite['suite']}: max_error={suite['max_error']:.3e} "
                    f"pass={suite['pass']}")
            return 0 if report["pass"] else 1

        cfg = load_config(args.config, args.seed, args.workers)
        if args.command == "magnetization-scan":
            rows = run_magnetization_scan(cfg)
            outputs = {"magnetization.csv": rows_to_csv(rows)}
        elif args.command == "gamma-profile":
            result = run_gamma_scan(cfg)
            outputs = {"gamma_profile.csv": rows_to_csv(result["rows"]),
                       "gamma_bounds.csv": rows_to_csv(result["bounds"])}
        elif args.command == "capacity-scan":
            result = run_capacity_scan(cfg)
            outputs = {"capacity.csv": rows_to_csv(result["rows"]),
                       "capacity_summary.csv": rows_to_csv(result["summary"])}
        else:
            result = run_tv_scan(cfg)
            outputs = {"tv.csv": rows_to_csv(result["rows"]),
                       "tv_summary.csv": rows_to_csv(result["summary"])}
        for name, text in outputs.items():
            path = os.path.join(args.out, name)
            atomic_write_text(path, text)
            say(f"wrote {path}")
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


def _run_prune_demo(args, say) -> int:
    pmf = parse_pmf_spec(args.pmf)
    rng = np.random.default_rng(np.random.SeedSequence(args.seed))
    tree = sample_gw(pmf, args.n, rng)
    fld = sample_field(tree, FieldMode.LEAVES_ONLY, args.p, rng)
    surv = survival(tree, fld)
    outcome = prune(tree, fld)
    tree_json = json.dumps(tree.to_json_dict(), sort_keys=True,
                           separators=(",", ":")) + "\n"
    if outcome is None:
        pruned_json = json.dumps(None) + "\n"
    else:
        pruned_json = json.dumps(outcome[0].to_json_dict(), sort_keys=True,
                                 separators=(",", ":")) + "\n"
    gamma0 = float(gamma_profile(pmf, args.p, args.n).gamma[0])
    for name, text in (("tree.json", tree_json), ("pruned.json", pruned_json),
                       ("overlay.dot", to_dot(tree, fld, surv))):
        path = os.path.join(args.out, name)
        atomic_write_text(path, text)
        say(f"wrote {path}")
    say(f"root pruning probability gamma_0 = {gamma0:.6f}")
    return 0


def main() -> None:
    sys.exit(parse_and_dispatch())
