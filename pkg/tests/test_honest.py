from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from enlargement_lab import generators as gen
from enlargement_lab.errors import NotHonest, NotThin, ThickHonestOnJumpingFiltration
from enlargement_lab.honest import (
    alpha_process,
    honest_thick_criterion,
    is_honest,
    jumping_exhaust,
    thin_honest_identities,
    violation_mass,
)
from enlargement_lab.random_times import (
    RandomTime,
    associated_processes,
    classify,
    exhausting_system,
    reconstruction_failures,
)
from enlargement_lab.rational import INF

seeds = st.integers(0, 2**32 - 1)
HALF = F(1, 2)


@pytest.fixture
def walk_max():
    return gen.walk_max_time(3)


def test_walk_max_law(walk_max):
    sp, tau = walk_max
    counts = {}
    for a in sp.atoms:
        v = tau.tree_values()[a]
        counts[v] = counts.get(v, 0) + sp.weight[a]
    assert counts == {F(0): F(1, 4), F(1): F(1, 8), F(2): F(1, 4), F(3): F(3, 8)}


def test_stopping_time_is_honest(coin):
    tau = RandomTime.from_values({"a": F(1), "b": INF})
    cert = is_honest(tau, coin)
    assert cert.honest and cert.violation_mass == 0
    assert cert.alpha.at("a", F(1)) == 1 and cert.alpha.at("b", F(5)) == 0


def test_walk_max_is_honest(walk_max):
    sp, tau = walk_max
    cert = is_honest(tau, sp)
    assert cert.honest
    b = associated_processes(tau, sp)
    for a, v in tau.tree_values().items():
        assert b.Ztilde.at(a, v) == 1
        assert cert.alpha.at(a, v) == v


def test_hidden_coin_is_not_honest(coin, coin_hidden):
    cert = is_honest(coin_hidden, coin)
    assert not cert.honest and cert.violation_mass == HALF
    assert cert.to_json()["alpha"] is None


def test_violation_mass_with_density(trivial):
    u = RandomTime.from_law({"w": ([], [(F(0), F(2), HALF)])})
    assert violation_mass(u, trivial) == 1


def test_alpha_refuses_density(trivial, mixture):
    with pytest.raises(NotThin):
        alpha_process(mixture, trivial)


def test_thick_criterion_examples(walk_max, coin):
    sp, tau = walk_max
    rep = honest_thick_criterion(tau, sp)
    assert rep["thin_part_below_one"] and rep["thick_part_at_one"]
    rep = honest_thick_criterion(RandomTime.constant(coin, INF), coin)
    assert rep["thin_part_below_one"] and rep["thick_part_at_one"]


def test_mixed_honest_time_does_not_exist_here(walk_max):
    # walk maximum combined with an independent uniform last passage: the
    # density part sees Z~ < 1, so the combination is never honest
    sp, tau = walk_max
    u = RandomTime.from_law({a: ([], [(F(0), F(3), F(1, 3))]) for a in sp.atoms})
    both = tau.minimum(u)
    assert violation_mass(both, sp) > 0
    with pytest.raises(NotHonest):
        honest_thick_criterion(both, sp)


def test_identities_deterministic(coin):
    rep = thin_honest_identities(RandomTime.constant(coin, F(1)), coin)
    assert rep["ok"] and rep["residual"] == 0


def test_identities_walk_max(walk_max):
    sp, tau = walk_max
    rep = thin_honest_identities(tau, sp)
    assert rep["ok"] and rep["residual"] == 0


def test_flat_dual_shortcut_fails_on_walk_max(walk_max):
    # On {T_n = alpha_t} the tempting A°_t = z^n_{T_n} needs A° flat before T_n.
    # Path uuu at t = 1: A°_1 = 1/4 + 1/4 while z^n_1 = P(tau = 1 | F_1) = 1/4.
    sp, tau = walk_max
    b = associated_processes(tau, sp)
    system = exhausting_system(tau, sp)
    n = next(i for i, T in enumerate(system.T) if T["uuu"] == 1)
    assert b.Ao.at("uuu", F(1)) == HALF
    assert system.z[n].at("uuu", F(1)) == F(1, 4)
    assert "honest:Ao=zT" in thin_honest_identities(tau, sp)["shortcut_failures"]


def test_identities_need_honesty(coin, coin_hidden):
    with pytest.raises(NotHonest):
        thin_honest_identities(coin_hidden, coin)


def test_jumping_exhaust_walk_max(walk_max):
    sp, tau = walk_max
    system = jumping_exhaust(tau, sp)
    assert reconstruction_failures(system, associated_processes(tau, sp)) == []
    assert classify(tau, sp).kind == "thin"


def test_jumping_exhaust_recovers_stopping_time(coin):
    tau = RandomTime.from_values({"a": F(1), "b": INF})
    system = jumping_exhaust(tau, coin)
    assert any(T["a"] == 1 for T in system.T[1:])


def test_jumping_exhaust_rejects(coin, coin_hidden, trivial, mixture):
    with pytest.raises(NotHonest):
        jumping_exhaust(coin_hidden, coin)
    with pytest.raises(NotHonest):
        jumping_exhaust(mixture, trivial)


@given(seed=seeds)
def test_honest_corpus(seed):
    rng = gen.instance_rng(seed, 0)
    sp = gen.random_space(rng)
    tau = gen.random_honest_time(rng, sp)
    cert = is_honest(tau, sp)
    assert cert.honest
    assert classify(tau, sp).kind in ("thin", "infinite")
    assert thin_honest_identities(tau, sp)["ok"]
    try:
        system = jumping_exhaust(tau, sp)
    except ThickHonestOnJumpingFiltration:  # pragma: no cover - the property under test
        pytest.fail("thick honest time on a jumping filtration")
    b = associated_processes(tau, sp)
    assert reconstruction_failures(system, b) == []
    # martingales of a jumping filtration have finite variation
    for p in (*system.z, b.m):
        for tr in p.trajs.values():
            assert tr.total_variation() < INF


@given(seed=seeds)
def test_non_honest_perturbation_detected(seed):
    rng = gen.instance_rng(seed, 1)
    sp = gen.random_space(rng)
    tau = gen.random_atomic_time(rng, sp)
    cert = is_honest(tau, sp)
    assert cert.honest == (cert.violation_mass == 0)
