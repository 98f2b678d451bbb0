"""Batch command line driver.

    isqwave <command> [--config PATH|NAME] [--out DIR] [--seed N] [--suite ID] [--jobs N]

Commands: bessel-verify, harmonics-verify, hankel-verify, solve,
estimate-scan, semilinear-run. Configurations are JSON files (or the name of
a builtin campaign, see ``isqwave list``). Each run writes ``manifest.json``
plus one CSV per suite into ``--out``.

Exit codes: 0 success, 1 a frozen constant or growth criterion was violated,
2 invalid configuration, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import copy
import datetime
import hashlib
import json
import os
import platform
import sys
import traceback

import numpy as np

from . import __version__
from . import norms_estimates as ne
from . import suites as S

EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG, EXIT_COMPUTE = 0, 1, 2, 3

# command -> (config section, runner, allowed option keys)
VERIFY_COMMANDS = {
    "bessel-verify": ("bessel", S.bessel_suite, set(S.BESSEL_DEFAULTS)),
    "harmonics-verify": ("harmonics", S.harmonics_suite, set(S.HARMONICS_DEFAULTS)),
    "hankel-verify": ("hankel", S.hankel_suite, set(S.HANKEL_DEFAULTS)),
    "solve": ("solve", S.solver_suite, set(S.SOLVER_DEFAULTS)),
    "semilinear-run": ("semilinear", S.semilinear_suite, set(S.SEMILINEAR_DEFAULTS)),
}
COMMANDS = list(VERIFY_COMMANDS) + ["estimate-scan"]
TOP_KEYS = {"version", "command", "seed", "out", "description"} | {v[0] for v in VERIFY_COMMANDS.values()} | {"estimate"}


class ConfigError(ValueError):
    pass


def load_config(ref: str | None, command: str) -> dict:
    """Read a JSON config file or a builtin campaign; None gives the defaults."""
    if ref is None:
        if command == "estimate-scan":
            return copy.deepcopy(S.BUILTIN_CAMPAIGNS["thm11-n3"])
        return {"version": 1, "command": command}
    if ref in S.BUILTIN_CAMPAIGNS and not os.path.exists(ref):
        return copy.deepcopy(S.BUILTIN_CAMPAIGNS[ref])
    try:
        with open(ref, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {ref}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {ref} is not valid JSON: {exc}") from exc


def validate_config(cfg: dict, command: str) -> dict:
    """Reject unknown keys and mismatched commands; returns the config unchanged."""
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(cfg) - TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    if cfg.get("version", 1) != 1:
        raise ConfigError(f"unsupported config version {cfg.get('version')}")
    if cfg.get("command", command) != command:
        raise ConfigError(f"config is for '{cfg['command']}', not '{command}'")
    if "seed" in cfg and not isinstance(cfg["seed"], int):
        raise ConfigError("seed must be an integer")
    if command in VERIFY_COMMANDS:
        section, _, allowed = VERIFY_COMMANDS[command]
        opts = cfg.get(section, {})
        if not isinstance(opts, dict):
            raise ConfigError(f"'{section}' must be an object")
        bad = set(opts) - allowed
        if bad:
            raise ConfigError(f"unknown keys in '{section}': {sorted(bad)}")
        return cfg
    est = cfg.get("estimate")
    if not isinstance(est, dict):
        raise ConfigError("estimate-scan needs an 'estimate' object")
    bad = set(est) - S.ESTIMATE_KEYS
    if bad:
        raise ConfigError(f"unknown keys in 'estimate': {sorted(bad)}")
    suites = est.get("suites", [])
    if not isinstance(suites, list):
        raise ConfigError("'estimate.suites' must be a list")
    seen = set()
    for s in suites:
        if not isinstance(s, dict):
            raise ConfigError("each suite must be an object")
        bad = set(s) - S.SUITE_KEYS
        if bad:
            raise ConfigError(f"unknown keys in suite {s.get('id')}: {sorted(bad)}")
        for key in ("id", "spec", "grid"):
            if key not in s:
                raise ConfigError(f"suite is missing '{key}'")
        if s["id"] in seen:
            raise ConfigError(f"duplicate suite id {s['id']}")
        seen.add(s["id"])
        if s["spec"] not in ne.REGISTRY:
            raise ConfigError(f"unknown estimate id {s['spec']}")
        if s.get("expect", "bounded") not in ("bounded", "growth"):
            raise ConfigError(f"suite {s['id']}: expect must be 'bounded' or 'growth'")
        if not isinstance(s["grid"], dict):
            raise ConfigError(f"suite {s['id']}: grid must be an object")
        bad = set(s["grid"]) - set(S.GRID_KEYS)
        if bad:
            raise ConfigError(f"unknown grid keys in suite {s['id']}: {sorted(bad)}")
        if s.get("axis") is not None and s["axis"] not in s["grid"]:
            raise ConfigError(f"suite {s['id']}: axis '{s['axis']}' is not a grid coordinate")
    return cfg


def _run_estimate_suite(payload):
    est, seed, sid = payload
    return S.estimate_campaign(est, seed, only=sid)


def run(command: str, cfg: dict, seed: int, only: str | None = None, jobs: int = 1) -> list:
    """Run a validated configuration; returns the list of SuiteResult."""
    if command in VERIFY_COMMANDS:
        section, runner, _ = VERIFY_COMMANDS[command]
        return [runner(cfg.get(section, {}), seed)]
    est = cfg["estimate"]
    ids = [s["id"] for s in est.get("suites", [])]
    if not ids:
        # nothing to scan: a single header-only CSV keeps the output contract
        return [S.SuiteResult("estimate", command, ne.CSV_COLUMNS, [], True, "estimate: PASS (no suites, header-only CSV)")]
    if only is not None:
        if only not in ids:
            raise ConfigError(f"no suite '{only}' in config (have {ids})")
        ids = [only]
    if jobs > 1 and len(ids) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_run_estimate_suite, [(est, seed, i) for i in ids]))
        return [r for part in parts for r in part]
    if only is not None:
        return S.estimate_campaign(est, seed, only=only)
    return S.estimate_campaign(est, seed)


def write_outputs(out: str, command: str, cfg: dict, seed: int, results: list) -> dict:
    os.makedirs(out, exist_ok=True)
    entries = []
    for res in results:
        name = f"{res.id}.csv"
        with open(os.path.join(out, name), "w", newline="", encoding="utf-8") as fh:
            fh.write(res.csv_text())
        extra = {}
        if "trace_csv" in res.details:
            extra["trace_csv"] = f"{res.id}_trace.csv"
            with open(os.path.join(out, extra["trace_csv"]), "w", newline="", encoding="utf-8") as fh:
                fh.write(res.details["trace_csv"])
        if "manifest" in res.details:
            extra["run"] = res.details["manifest"]
        if "slopes" in res.details:
            extra["slopes"] = res.details["slopes"]
            extra["max_ratio"] = res.details["max_ratio"]
        entries.append(
            {
                "id": res.id,
                "csv": name,
                "rows": len(res.rows),
                "passed": res.passed,
                "summary": res.summary,
                "grid_fingerprints": res.fingerprints,
                "csv_sha256": hashlib.sha256(res.csv_text().encode("utf-8")).hexdigest(),
                **extra,
            }
        )
    manifest = {
        "tool": "isqwave",
        "code_version": __version__,
        "command": command,
        "seed": seed,
        "config": cfg,
        "config_fingerprint": S.fingerprint(cfg),
        "suites": entries,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds"),
    }
    with open(os.path.join(out, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=str)
    return manifest


def exit_code(results: list) -> int:
    if any(r.compute_failure for r in results):
        return EXIT_COMPUTE
    if any(r.violation or not r.passed for r in results):
        return EXIT_VIOLATION
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="isqwave", description="Verification and estimate campaigns for the wave equation with inverse-square potential.")
    ap.add_argument("command", choices=COMMANDS + ["list"])
    ap.add_argument("--config", help="JSON config file or builtin campaign name")
    ap.add_argument("--out", help="output directory (default: config 'out' or ./isqwave-<command>)")
    ap.add_argument("--seed", type=int, help="master seed (overrides the config)")
    ap.add_argument("--suite", help="run a single suite of an estimate campaign")
    ap.add_argument("--jobs", type=int, default=1, help="worker processes for estimate campaigns")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list":
        for name, cfg in sorted(S.BUILTIN_CAMPAIGNS.items()):
            suites = cfg.get("estimate", {}).get("suites")
            detail = f"{len(suites)} suites" if suites is not None else ""
            print(f"{name:12s} {cfg['command']:18s} {detail}")
        return EXIT_OK
    try:
        cfg = validate_config(load_config(args.config, args.command), args.command)
        cfg.setdefault("version", 1)
        cfg.setdefault("command", args.command)
        seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
        cfg["seed"] = seed
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = args.out or cfg.get("out") or f"isqwave-{args.command}"
    try:
        results = run(args.command, cfg, seed, args.suite, args.jobs)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception:  # noqa: BLE001 - reported as a numerical failure
        traceback.print_exc()
        return EXIT_COMPUTE
    write_outputs(out, args.command, cfg, seed, results)
    for res in results:
        print(f"{res.summary} [{res.seconds:.1f} s]")
    code = exit_code(results)
    print(f"{len(results)} suite(s), exit {code}; outputs in {out}")
    return code


if __name__ == "__main__":
    sys.exit(main())
