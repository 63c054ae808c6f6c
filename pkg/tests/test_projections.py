from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from enlargement_lab.paths import Path, Trajectory
from enlargement_lab.projections import RawProcess, dual_project, duality_residual, project
from enlargement_lab.random_times import RandomTime, associated_processes, indicator_process, martingale_of
from enlargement_lab.rational import INF
from enlargement_lab.suites import random_instance

import oracles

seeds = st.integers(0, 2**32 - 1)


@pytest.fixture
def uniform():
    return RandomTime.from_law({"w": ([], [(F(0), F(1), F(1))])})


@pytest.fixture
def revealed(coin):
    return RandomTime.from_values({"a": F(1), "b": INF})


def test_adapted_path_unchanged(coin):
    X = martingale_of({"a": F(2), "b": F(-1)}, coin)
    assert project(X, "optional", coin).same(X)


def test_uniform_cdf(trivial, uniform):
    A = project(indicator_process(uniform), "optional", trivial)
    for t in (F(0), F(1, 3), F(1), F(3, 2), F(5)):
        assert A.at("w", t) == min(t, F(1))


def test_predictable_projection_at_reveal(coin):
    X = Path({"a": Trajectory.steps(0, {F(1): F(1)}), "b": Trajectory.constant(0)})
    P = project(X, "predictable", coin)
    assert P.at("a", F(1)) == P.at("b", F(1)) == F(1, 2)
    assert project(X, "optional", coin).at("a", F(1)) == 1


def test_adapted_increasing_dual_unchanged(coin, revealed):
    Ao = associated_processes(revealed, coin).Ao
    assert dual_project(Ao, "optional", coin).same(Ao)


def test_uniform_dual_is_continuous(trivial, uniform):
    Ao = dual_project(indicator_process(uniform), "optional", trivial)
    for t in (F(0), F(1, 2), F(1), F(2)):
        assert Ao.at("w", t) == min(t, F(1))
        assert Ao.jump_at("w", t) == 0


def test_revealed_coin_duals(coin, revealed):
    A = indicator_process(revealed)
    Ao = dual_project(A, "optional", coin)
    Ap = dual_project(A, "predictable", coin)
    assert (Ao.jump_at("a", F(1)), Ao.jump_at("b", F(1))) == (1, 0)
    assert Ap.jump_at("a", F(1)) == Ap.jump_at("b", F(1)) == F(1, 2)
    assert duality_residual(A, Ao, "optional", coin) == 0
    assert duality_residual(A, Ap, "optional", coin) > 0


def test_unknown_kind(coin, revealed):
    with pytest.raises(ValueError):
        project(indicator_process(revealed), "martingale", coin)


def test_dual_requires_zero_start(coin):
    V = RawProcess.from_path(Path.constant(coin.atoms, 1))
    with pytest.raises(ValueError):
        dual_project(V, "optional", coin)


@given(seed=seeds)
def test_bundle_matches_enumeration_oracle(seed):
    inst = random_instance(seed, 0)
    sp, tau = inst.space, inst.tau
    b = associated_processes(tau, sp)
    for t in oracles.checkpoints(tau, sp):
        for a in sp.atoms:
            assert b.Z.at(a, t) == oracles.Z(tau, sp, a, t)
            assert b.Ztilde.at(a, t) == oracles.Ztilde(tau, sp, a, t)
            assert b.Ao.at(a, t) == oracles.dual(tau, sp, a, t, "optional")
            assert b.Ap.at(a, t) == oracles.dual(tau, sp, a, t, "predictable")


@given(seed=seeds)
def test_predictable_of_optional_dual(seed):
    inst = random_instance(seed, 1)
    b = associated_processes(inst.tau, inst.space)
    assert dual_project(b.Ao, "predictable", inst.space).same(b.Ap)


@given(seed=seeds)
def test_optional_dual_preserves_total_mass(seed):
    inst = random_instance(seed, 2)
    sp, tau = inst.space, inst.tau
    Ao = associated_processes(tau, sp).Ao
    finite = {a: 1 - tau.law(a)[0].get(INF, F(0)) for a in sp.atoms}
    assert sp.expectation(Ao.section(INF)) == sp.expectation(finite)


@given(seed=seeds)
def test_duality_on_generating_family(seed):
    inst = random_instance(seed, 3)
    sp, tau = inst.space, inst.tau
    b = associated_processes(tau, sp)
    A = indicator_process(tau)
    assert duality_residual(A, b.Ao, "optional", sp) == 0
    assert duality_residual(A, b.Ap, "predictable", sp) == 0
