"""Command line entry point: ``enlargement-lab analyze | verify | simulate``.

Exit codes: 0 success, 1 when an identity fails, 2 on malformed input.
Errors are reported on stderr as a single JSON object.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path as FsPath
from typing import Sequence

from . import __version__
from .enlargement import immersion_test
from .errors import EnlargementLabError, InvalidParams, SchemaError, SpaceError
from .generators import instance_rng
from .honest import is_honest
from .random_times import (
    RandomTime,
    associated_processes,
    bundle_failures,
    classify,
    pseudo_stopping_test,
    read_bundle_csv,
    thin_thick_decompose,
    triple_decompose,
)
from .simulators import run_scenario
from .space import build_space
from .suites import SUITES, Instance, run_instance, run_suite

SCHEMA = "enlargement-lab/1"
SUITE_NAMES = (*SUITES, "all")
U64 = 2**64


class UsageError(Exception):
    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key


@dataclass
class RunManifest:
    command: list[str]
    inputs: dict[str, str] = field(default_factory=dict)
    seed: int | None = None
    version: str = __version__
    outputs: list[str] = field(default_factory=list)

    def add_input(self, path: str) -> bytes:
        data = FsPath(path).read_bytes()
        self.inputs[path] = hashlib.sha256(data).hexdigest()
        return data

    def to_json(self) -> dict:
        # A pinned SOURCE_DATE_EPOCH gives a timestamp; otherwise none, so that
        # repeated runs stay byte-identical.
        stamp = os.environ.get("SOURCE_DATE_EPOCH")
        return {
            "command": self.command,
            "inputs": [{"path": p, "sha256": h} for p, h in self.inputs.items()],
            "seed": self.seed,
            "version": self.version,
            "timestamp": int(stamp) if stamp and stamp.isdigit() else None,
            "outputs": self.outputs,
        }


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _load_json(manifest: RunManifest, path: str, what: str):
    try:
        raw = manifest.add_input(path)
    except OSError as exc:
        raise UsageError(f"cannot read {what} file {path!r}: {exc.strerror}", key=what) from exc
    try:
        return json.loads(raw)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{what} file is not valid JSON: {exc}", key=what) from exc


def _target(out: FsPath, name: str, manifest: RunManifest) -> FsPath:
    """Reserve an output file and list it in the manifest."""
    out.mkdir(parents=True, exist_ok=True)
    target = out / name
    manifest.outputs.append(str(target))
    return target


def _load_model(manifest: RunManifest, space_path: str, tau_path: str | None):
    space = build_space(_load_json(manifest, space_path, "space"))
    tau = None
    if tau_path is not None:
        tau = RandomTime.from_json(_load_json(manifest, tau_path, "tau"), space)
    return space, tau


# -- analyze -----------------------------------------------------------------


def cmd_analyze(args, argv) -> int:
    manifest = RunManifest(command=["analyze", *argv])
    space, tau = _load_model(manifest, args.space, args.tau)
    b = associated_processes(tau, space)
    if args.decompose == "triple":
        acc, inacc, thick = triple_decompose(tau, space)
        decomposition = {"kind": "triple", "accessible": acc.to_json(), "inaccessible": inacc.to_json(), "thick": thick.to_json()}
    else:
        tau1, tau2 = thin_thick_decompose(tau, space)
        decomposition = {"kind": "two", "thin": tau1.to_json(), "thick": tau2.to_json()}
    imm = immersion_test(tau, space)
    out = FsPath(args.out)
    csv_path = _target(out, "bundle.csv", manifest)
    report_path = _target(out, "report.json", manifest)
    report = {
        "schema": SCHEMA,
        "manifest": manifest.to_json(),
        "classification": classify(tau, space).to_json(),
        "decomposition": decomposition,
        "honest": is_honest(tau, space).to_json(),
        "immersion": imm,
        "pseudo_stopping": pseudo_stopping_test(tau, space),
        "bundle_failures": b.failures(),
    }
    csv_path.write_text(b.to_csv())
    report_path.write_text(_dump(report))
    return 0


# -- verify ------------------------------------------------------------------


def cmd_verify(args, argv) -> int:
    if args.suite not in SUITE_NAMES:
        raise UsageError(f"unknown suite {args.suite!r}; choose from {', '.join(SUITE_NAMES)}", key="suite")
    manifest = RunManifest(command=["verify", *argv], seed=args.seed)
    failures: list[dict] = []
    instances = 0
    if args.bundle is not None:
        if args.space is None:
            raise UsageError("--bundle needs the space file", key="space")
        space, _ = _load_model(manifest, args.space, None)
        manifest.add_input(args.bundle)
        paths = read_bundle_csv(FsPath(args.bundle).read_text(), space)
        tags = bundle_failures(space, *paths.values())
        instances = 1
        if tags:
            failures.append({"instance": args.bundle, "tags": tags})
    elif args.space is not None:
        if args.tau is None:
            raise UsageError("a model needs both the space and the tau file", key="tau")
        space, tau = _load_model(manifest, args.space, args.tau)
        inst = Instance(space, tau, instance_rng(args.seed, 0), args.tau)
        instances = 1
        tags = run_instance(inst, args.suite)
        if tags:
            failures.append({"instance": args.tau, "tags": tags})
    else:
        if args.random is None or args.random < 1:
            raise UsageError("give a model, a --bundle file or --random COUNT >= 1", key="random")
        instances = args.random
        for label, tags in run_suite(args.suite, args.random, args.seed):
            failures.append({"instance": label, "tags": tags})
    summary = {
        "schema": SCHEMA,
        "manifest": manifest.to_json(),
        "suite": args.suite,
        "instances": instances,
        "ok": not failures,
        "failures": failures,
    }
    text = _dump(summary)
    if args.out:
        target = _target(FsPath(args.out), "verify.json", manifest)
        summary["manifest"] = manifest.to_json()
        text = _dump(summary)
        target.write_text(text)
    sys.stdout.write(text)
    return 0 if not failures else 1


# -- simulate ----------------------------------------------------------------


def cmd_simulate(args, argv) -> int:
    if args.n < 1:
        raise UsageError("--n must be at least 1", key="n")
    manifest = RunManifest(command=["simulate", *argv], seed=args.seed)
    scenario = _load_json(manifest, args.scenario, "scenario")
    report = run_scenario(scenario, args.n, args.seed)
    out = FsPath(args.out)
    report_path = _target(out, "report.json", manifest)
    csv_path = _target(out, "curves.csv", manifest)
    payload = {"schema": SCHEMA, "manifest": manifest.to_json(), "kind": scenario["kind"], "report": report.to_json()}
    report_path.write_text(_dump(payload))
    csv_path.write_text(report.curves_csv())
    return 0


# -- entry point ---------------------------------------------------------------


def _u64(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if not 0 <= value < U64:
        raise argparse.ArgumentTypeError("seed must fit in 64 bits")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="enlargement-lab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="associated processes, decomposition and verdicts for one model")
    p.add_argument("space")
    p.add_argument("tau")
    p.add_argument("--out", required=True)
    p.add_argument("--decompose", choices=("two", "triple"), default="two")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("verify", help="run exact identity suites")
    p.add_argument("space", nargs="?")
    p.add_argument("tau", nargs="?")
    p.add_argument("--bundle", help="bundle CSV to check against the space")
    p.add_argument("--random", type=int, metavar="COUNT")
    p.add_argument("--seed", type=_u64, default=0)
    p.add_argument("--suite", default="all")
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("simulate", help="Monte Carlo scenario")
    p.add_argument("scenario")
    p.add_argument("--seed", type=_u64, default=0)
    p.add_argument("--n", type=int, default=100_000)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)
    return parser


def _fail(kind: str, message: str, key=None) -> int:
    diag = {"error": kind, "message": message}
    if key is not None:
        diag["key"] = key
    sys.stderr.write(json.dumps(diag, sort_keys=True) + "\n")
    return 2


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    rest = argv[1:]
    try:
        return args.func(args, rest)
    except SchemaError as exc:
        return _fail("SchemaError", str(exc), exc.key)
    except SpaceError as exc:
        return _fail(type(exc).__name__, str(exc), exc.index)
    except UsageError as exc:
        return _fail("UsageError", str(exc), exc.key)
    except InvalidParams as exc:
        return _fail("InvalidParams", str(exc))
    except EnlargementLabError as exc:
        return _fail(type(exc).__name__, str(exc))


if __name__ == "__main__":
    sys.exit(main())
