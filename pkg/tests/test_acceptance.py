"""Acceptance criteria, one PASS/FAIL line each."""

import json
import os
import subprocess
import sys
import time
from pathlib import Path as FsPath

import pytest

from enlargement_lab import generators as gen
from enlargement_lab.errors import ThickHonestOnJumpingFiltration
from enlargement_lab.honest import is_honest, jumping_exhaust
from enlargement_lab.simulators import (
    BrownianParams,
    CoxModel,
    CppParams,
    simulate_brownian_last_zero,
    simulate_cox_accessible,
    simulate_cpp_last_passage,
)
from enlargement_lab.suites import random_instance, run_suite

ROOT = FsPath(__file__).resolve().parent.parent
SEED = 7
COUNT = 200


@pytest.fixture
def verdict(capsys):
    def emit(number: int, name: str, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\nACCEPTANCE {number} [{'PASS' if ok else 'FAIL'}] {name}: {detail}")

    return emit


def _suite(name):
    start = time.perf_counter()
    bad = run_suite(name, COUNT, SEED)
    return bad, time.perf_counter() - start


def test_exact_identity_suite(verdict):
    bad, secs = _suite("bundle")
    ok = not bad and secs < 60
    verdict(1, "exact identity suite", ok, f"{COUNT} instances, {len(bad)} failing, {secs:.1f} s (limit 60 s)")
    assert not bad, bad[:3]
    assert secs < 60


def test_decomposition_suite(verdict):
    bad, secs = _suite("decomposition")
    verdict(2, "decomposition suite", not bad, f"{COUNT} instances, {len(bad)} failing, {secs:.1f} s")
    assert not bad, bad[:3]


def test_drift_suite(verdict):
    bad, secs = _suite("drift")
    verdict(3, "drift suite", not bad, f"{COUNT} instances, {len(bad)} failing, {secs:.1f} s")
    assert not bad, bad[:3]


def test_honest_suite(verdict):
    bad, secs = _suite("honest")
    thick = 0
    corpus = 0
    for i in range(COUNT):
        inst = random_instance(SEED, i)
        tau = gen.random_honest_time(inst.rng, inst.space)
        corpus += 1
        try:
            jumping_exhaust(tau, inst.space)
        except ThickHonestOnJumpingFiltration:
            thick += 1
    sp, walk = gen.walk_max_time(3)
    walk_ok = is_honest(walk, sp).honest and jumping_exhaust(walk, sp) is not None
    ok = not bad and thick == 0 and walk_ok
    verdict(
        4,
        "honest suite",
        ok,
        f"{COUNT} instances, {len(bad)} failing, {thick} thick-honest errors over {corpus} extra honest times, "
        f"walk maximum {'certified' if walk_ok else 'rejected'}",
    )
    assert ok, bad[:3]


def test_immersion_suite(verdict):
    bad, secs = _suite("immersion")
    verdict(5, "immersion suite", not bad, f"{COUNT} instances, {len(bad)} failing, {secs:.1f} s")
    assert not bad, bad[:3]


def test_monte_carlo(verdict):
    start = time.perf_counter()
    brown = simulate_brownian_last_zero(BrownianParams(horizon=1.0, step=2.0**-10), 100_000, SEED)
    brown_secs = time.perf_counter() - start
    cpp = simulate_cpp_last_passage(CppParams(rate=1.0, drift=1.0, barrier=0.0, horizon=10.0), 100_000, SEED)
    model = CoxModel.from_json(json.loads((ROOT / "scenarios" / "cox.json").read_text()))
    cox = simulate_cox_accessible(model, 100_000, SEED)
    ok_b = brown.within(3) and brown_secs < 300
    ok_c = cpp.within(3)
    ok_x = cox.extras["z_within_3se"]
    verdict(
        6,
        "Monte Carlo",
        ok_b and ok_c and ok_x,
        f"(i) P(tau>1/2) = {brown.estimate:.5f} +- {brown.stderr:.5f} vs 0.5, z = {brown.z_score():+.2f}, "
        f"{brown_secs:.1f} s; (ii) thin mass = {cpp.estimate:.5f} +- {cpp.stderr:.5f} vs 1; "
        f"(iii) Cox Z max |z| = {cox.extras['z_max_abs_score']:.2f} over all report times",
    )
    assert ok_b and ok_c and ok_x


def _cli(args, cwd):
    env = dict(os.environ)
    env.pop("SOURCE_DATE_EPOCH", None)
    return subprocess.run([sys.executable, "-m", "enlargement_lab.cli", *args], cwd=cwd, env=env, capture_output=True)


def test_reproducibility(verdict, tmp_path):
    (tmp_path / "space.json").write_text(
        json.dumps(
            {
                "grid": ["0", "1"],
                "atoms": [{"id": "a", "p": "1/2"}, {"id": "b", "p": "1/2"}],
                "partitions": [[["a", "b"]], [["a"], ["b"]]],
            }
        )
    )
    (tmp_path / "tau.json").write_text(
        json.dumps({"per_leaf": [{"leaf": ["a", "b"], "atoms": [["1", "1/2"]], "density": [["0", "2", "1/4"]]}]})
    )
    scen = str(ROOT / "scenarios")
    commands = [
        ["analyze", "space.json", "tau.json", "--out", "analyze"],
        ["verify", "--random", "5", "--seed", "3", "--out", "verify"],
        ["simulate", f"{scen}/cpp.json", "--n", "100000", "--seed", "1", "--out", "cpp"],
        ["simulate", f"{scen}/cox.json", "--n", "20000", "--seed", "1", "--out", "cox"],
        ["simulate", f"{scen}/levy.json", "--n", "2000", "--seed", "1", "--out", "levy"],
        ["simulate", f"{scen}/brownian.json", "--n", "5000", "--seed", "1", "--out", "brownian"],
    ]
    identical = 0
    for argv in commands:
        outputs = []
        for _ in range(2):
            res = _cli(argv, tmp_path)
            assert res.returncode == 0, res.stderr.decode()
            d = tmp_path / argv[argv.index("--out") + 1]
            outputs.append({p.name: p.read_bytes() for p in sorted(d.iterdir())})
        identical += outputs[0] == outputs[1]
    ok = identical == len(commands)
    verdict(7, "reproducibility", ok, f"{identical}/{len(commands)} commands byte-identical on rerun")
    assert ok
