"""Randomized exact-identity suites shared by the CLI and the test-suite.

Each check takes an instance (a space plus a random time, and a random
generator for auxiliary objects) and returns the tags of the identities that
failed.  An empty list means every identity held with exact equality.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

from . import generators as gen
from .enlargement import (
    drift_honest,
    drift_jacod,
    drift_thin,
    enlarge_progressive,
    immersion_test,
    initial_on_progressive,
    key_lemma_evaluate,
    progressive_equals_iterated,
    refinement_chain_ok,
    restriction_consistency,
)
from .errors import ThickHonestOnJumpingFiltration
from .honest import honest_thick_criterion, is_honest, jumping_exhaust, thin_honest_identities
from .projections import dual_project, duality_residual
from .random_times import (
    RandomTime,
    associated_processes,
    classify,
    cross_conditional_check,
    exhausting_system,
    indicator_process,
    reconstruction_failures,
    thin_thick_decompose,
    triple_decompose,
)
from .space import FilteredSpace

__all__ = ["Instance", "SUITES", "random_instance", "run_suite", "run_instance"]


@dataclass
class Instance:
    space: FilteredSpace
    tau: RandomTime
    rng: random.Random = field(repr=False)
    label: str = ""


def random_instance(seed: int, index: int) -> Instance:
    rng = gen.instance_rng(seed, index)
    space = gen.random_space(rng)
    tau = gen.random_time(rng, space, density=rng.random() < 0.7)
    return Instance(space, tau, rng, f"seed={seed} instance={index}")


def _sorted(tags) -> list[str]:
    return sorted(set(tags))


def check_bundle(inst: Instance) -> list[str]:
    space, tau = inst.space, inst.tau
    b = associated_processes(tau, space)
    fails = list(b.failures())
    A = indicator_process(tau)
    if duality_residual(A, b.Ao, "optional", space):
        fails.append("duality:optional")
    if duality_residual(A, b.Ap, "predictable", space):
        fails.append("duality:predictable")
    if not dual_project(b.Ao, "predictable", space).same(b.Ap):
        fails.append("dual:(Ao)p=Ap")
    tau1, tau2 = thin_thick_decompose(tau, space)
    b1, b2 = associated_processes(tau1, space), associated_processes(tau2, space)
    one = b.Z.constant(space.atoms, 1)
    if not b.Z.same(b1.Z + b2.Z - one):
        fails.append("additivity:Z")
    if not b.Ztilde.same(b1.Ztilde + b2.Ztilde - one):
        fails.append("additivity:Zt")
    if not b.Ao.same(b1.Ao + b2.Ao):
        fails.append("additivity:Ao")
    if not b.Ap.same(b1.Ap + b2.Ap):
        fails.append("additivity:Ap")
    system = exhausting_system(tau1, space)
    fails += reconstruction_failures(system, b1)
    times = sorted(set(space.grid) | set(tau.finite_support) | set(tau.density_breakpoints))
    for t in times:
        if cross_conditional_check(tau, space, t)["residual"]:
            fails.append("cross-conditional")
            break
    X = gen.random_variable(inst.rng, space)
    enl = enlarge_progressive(space, tau1)
    for t in enl.space.grid:
        rep = key_lemma_evaluate(X, tau1, space, t)
        if rep["residual"] or rep["corollary_residual"]:
            fails.append("key-lemma")
            break
    return _sorted(fails)


def check_decomposition(inst: Instance) -> list[str]:
    space, tau = inst.space, inst.tau
    fails = []
    tau1, tau2 = thin_thick_decompose(tau, space)
    if not tau1.minimum(tau2).same(tau):
        fails.append("decompose:min")
    if not tau1.maximum(tau2).is_infinite():
        fails.append("decompose:max")
    if classify(tau1, space).kind not in ("thin", "infinite"):
        fails.append("decompose:tau1-thin")
    if classify(tau2, space).kind not in ("thick", "infinite"):
        fails.append("decompose:tau2-thick")
    acc, inacc, t2 = triple_decompose(tau, space)
    if not acc.minimum(inacc).same(tau1) or not acc.maximum(inacc).is_infinite() or not t2.same(tau2):
        fails.append("triple:refines")
    cl = classify(tau, space)
    b = associated_processes(tau, space)
    has_slope = any(any(tr.slope) for tr in b.Ao.trajs.values())
    has_jump = any(b.Ao.jump_at(a, t) for a in space.atoms for t in b.Ao[a].times)
    if (cl.kind in ("thin", "infinite")) == has_slope:
        fails.append("classify:thin-iff-pure-jump")
    if (cl.kind in ("thick", "infinite")) == has_jump:
        fails.append("classify:thick-iff-continuous")
    for a, ps in tau1.pieces.items():
        for p in ps:
            if p.is_finite_atom and not 1 - b.Z.at(a, p.start) > 0:
                fails.append("thin:1-Z>0")
    if not tau.has_density():
        if not progressive_equals_iterated(tau, space):
            fails.append("enlarge:tau=tau1,tau2")
    other = gen.random_atomic_time(inst.rng, space)
    if classify(tau1.minimum(other), space).kind not in ("thin", "infinite"):
        fails.append("stability:min")
    if classify(tau1.maximum(other), space).kind not in ("thin", "infinite"):
        fails.append("stability:max")
    return _sorted(fails)


def _atomic(inst: Instance) -> RandomTime:
    tau1, _ = thin_thick_decompose(inst.tau, inst.space)
    return tau1


def check_drift(inst: Instance) -> list[str]:
    space, rng = inst.space, inst.rng
    tau = _atomic(inst)
    fails = []
    Y = gen.random_martingale(rng, space)
    enl = enlarge_progressive(space, tau)
    G = gen.random_integrand(rng, enl.space, space.grid)
    if not drift_thin(Y, tau, space, G).is_martingale:
        fails.append("drift:thin")
    if not drift_thin(Y, tau, space).is_martingale:
        fails.append("drift:thin-G1")
    system = exhausting_system(tau, space)
    if not drift_jacod(Y, system, space).is_martingale:
        fails.append("drift:jacod")
    if not restriction_consistency(Y, tau, space).ok:
        fails.append("drift:restriction")
    if not refinement_chain_ok(enl, initial_on_progressive(enl)):
        fails.append("enlarge:chain")
    h = gen.random_honest_time(rng, space)
    rep = drift_honest(Y, h, space)
    if not rep.is_martingale:
        fails.append("drift:honest")
    if not rep.extras["coincides_with_thin"]:
        fails.append("drift:honest=thin")
    return _sorted(fails)


def _honest_checks(tau: RandomTime, space: FilteredSpace) -> list[str]:
    fails = []
    cert = is_honest(tau, space)
    if not cert.honest:
        return ["honest:detect"]
    if classify(tau, space).kind not in ("thin", "infinite"):
        fails.append("honest:thin")
    crit = honest_thick_criterion(tau, space)
    if not (crit["thin_part_below_one"] and crit["thick_part_at_one"]):
        fails.append("honest:Z-criterion")
    if not all(crit["parts_honest"].values()):
        fails.append("honest:parts")
    fails += thin_honest_identities(tau, space)["failures"]
    try:
        jumping_exhaust(tau, space)
    except ThickHonestOnJumpingFiltration:
        fails.append("honest:thick-on-jumping")
    return fails


def check_honest(inst: Instance) -> list[str]:
    space = inst.space
    fails = _honest_checks(gen.random_honest_time(inst.rng, space), space)
    if is_honest(inst.tau, space).honest:
        fails += _honest_checks(inst.tau, space)
    return _sorted(fails)


def check_immersion(inst: Instance) -> list[str]:
    space, rng = inst.space, inst.rng
    fails = []
    rep = immersion_test(inst.tau, space)
    if not rep["decomposition_consistent"]:
        fails.append("immersion:parts")
    for tau in (_atomic(inst), gen.random_independent_time(rng, space)):
        rep = immersion_test(tau, space)
        if not rep["conditions_consistent"]:
            fails.append("immersion:prop")
        if rep["direct"] != rep["criterion"]:
            fails.append("immersion:direct")
        if not rep["decomposition_consistent"]:
            fails.append("immersion:parts")
    return _sorted(fails)


SUITES: dict[str, Callable[[Instance], list[str]]] = {
    "bundle": check_bundle,
    "decomposition": check_decomposition,
    "drift": check_drift,
    "honest": check_honest,
    "immersion": check_immersion,
}


def run_instance(inst: Instance, suite: str) -> list[str]:
    names = list(SUITES) if suite == "all" else [suite]
    fails = []
    for name in names:
        fails += SUITES[name](inst)
    return _sorted(fails)


def run_suite(suite: str, count: int, seed: int) -> list[tuple[str, list[str]]]:
    """Run ``suite`` on ``count`` seeded instances; return the failing ones."""
    if suite != "all" and suite not in SUITES:
        raise KeyError(suite)
    bad = []
    for i in range(count):
        inst = random_instance(seed, i)
        fails = run_instance(inst, suite)
        if fails:
            bad.append((inst.label, fails))
    return bad
