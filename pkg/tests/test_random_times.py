from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from enlargement_lab import generators as gen
from enlargement_lab.errors import (
    GraphsNotDisjoint,
    InvalidRandomTime,
    MismatchedTime,
    NotCovering,
    NotThin,
    SchemaError,
)
from enlargement_lab.random_times import (
    RandomTime,
    associated_processes,
    classify,
    cross_conditional_check,
    dual_equality_test,
    exhausting_system,
    merge_exhausting,
    pseudo_stopping_test,
    read_bundle_csv,
    reconstruction_failures,
    thin_thick_decompose,
    triple_decompose,
)
from enlargement_lab.rational import INF
from enlargement_lab.space import StoppingTime
from enlargement_lab.suites import random_instance

seeds = st.integers(0, 2**32 - 1)
HALF = F(1, 2)


def uniform_on(space, lo, hi):
    law = ([], [(F(lo), F(hi), 1 / F(hi - lo))])
    return RandomTime.from_law({a: law for a in space.atoms})


# -- construction ------------------------------------------------------------


def test_law_must_have_unit_mass():
    with pytest.raises(InvalidRandomTime):
        RandomTime.from_law({"w": ([(F(1), HALF)], [])})


def test_overlapping_density_rejected():
    with pytest.raises(InvalidRandomTime):
        RandomTime.from_law({"w": ([], [(F(0), F(1), HALF), (HALF, F(3, 2), HALF)])})


def test_json_round_trip(coin, mixture):
    tau = RandomTime.from_law({"a": mixture.law("w"), "b": ([(F(2), F(1))], [])})
    back = RandomTime.from_json(tau.to_json(), coin)
    assert back.same(tau)


def test_json_missing_leaf(coin):
    with pytest.raises(SchemaError) as exc:
        RandomTime.from_json({"per_leaf": [{"leaf": ["a"], "atoms": [["1", "1"]]}]}, coin)
    assert exc.value.key == "per_leaf"


# -- associated processes ------------------------------------------------------


def test_never_occurring_time(coin):
    b = associated_processes(RandomTime.constant(coin, INF), coin)
    for t in (F(0), F(1), F(9)):
        for a in coin.atoms:
            assert (b.Z.at(a, t), b.Ao.at(a, t), b.m.at(a, t)) == (1, 0, 1)


def test_deterministic_time(coin):
    b = associated_processes(RandomTime.constant(coin, F(3, 2)), coin)
    assert b.Z.at("a", F(1)) == 1 and b.Z.at("a", F(3, 2)) == 0
    assert b.Ao.jump_at("b", F(3, 2)) == 1
    assert b.m.same(b.m.constant(coin.atoms, 1))


def test_uniform_time(trivial):
    tau = uniform_on(trivial, 0, 1)
    b = associated_processes(tau, trivial)
    for t in (F(0), F(1, 4), F(1), F(2)):
        assert b.Z.at("w", t) == 1 - min(t, F(1))
        assert b.Ao.at("w", t) == min(t, F(1))
    assert pseudo_stopping_test(tau, trivial)


def test_mixture_processes(trivial, mixture):
    b = associated_processes(mixture, trivial)
    for t in (F(0), HALF, F(1), F(3, 2), F(2), F(3)):
        s = min(t, F(2))
        assert b.Z.at("w", t) == 1 - (HALF if t >= 1 else 0) - s / 4
        assert b.Ao.at("w", t) == (HALF if t >= 1 else 0) + s / 4
    assert b.Ao.jump_at("w", F(1)) == HALF
    assert b.Ztilde.at("w", F(1)) == F(3, 4)
    assert pseudo_stopping_test(mixture, trivial)
    assert b.failures() == []


def test_bundle_csv_round_trip(coin, mixture):
    tau = RandomTime.from_law({"a": mixture.law("w"), "b": ([(F(1), HALF), (INF, HALF)], [])})
    b = associated_processes(tau, coin)
    paths = read_bundle_csv(b.to_csv(), coin)
    for name, p in b.paths().items():
        assert paths[name].same(p)


def test_bundle_csv_missing_process(coin):
    b = associated_processes(RandomTime.constant(coin, F(1)), coin)
    text = "\n".join(l for l in b.to_csv().splitlines() if not l.startswith("Ap,"))
    with pytest.raises(SchemaError) as exc:
        read_bundle_csv(text, coin)
    assert exc.value.key == "Ap"


# -- classification and decomposition ----------------------------------------


def test_classify_examples(coin, trivial, mixture):
    assert classify(RandomTime.constant(coin, INF), coin).kind == "infinite"
    thin = classify(RandomTime.from_values({"a": F(1), "b": F(0)}), coin)
    assert thin.kind == "thin" and thin.thick_mass == 0
    mixed = classify(mixture, trivial)
    assert (mixed.thin_mass, mixed.thick_mass, mixed.kind) == (HALF, HALF, "mixed")


def test_decompose_pure_cases(coin, trivial):
    thin = RandomTime.from_values({"a": F(1), "b": INF})
    t1, t2 = thin_thick_decompose(thin, coin)
    assert t1.same(thin) and t2.is_infinite()
    thick = uniform_on(trivial, 0, 1)
    t1, t2 = thin_thick_decompose(thick, trivial)
    assert t1.is_infinite() and t2.same(thick)


def test_decompose_mixture(trivial, mixture):
    t1, t2 = thin_thick_decompose(mixture, trivial)
    assert t1.law("w") == ({F(1): HALF, INF: HALF}, [])
    assert t2.law("w") == ({INF: HALF}, [(F(0), F(2), F(1, 4))])


def test_triple_examples(coin, trivial):
    det = RandomTime.constant(coin, F(1))
    acc, inacc, thick = triple_decompose(det, coin)
    assert acc.same(det) and inacc.is_infinite() and thick.is_infinite()
    revealed = RandomTime.from_values({"a": F(1), "b": INF})
    acc, _, _ = triple_decompose(revealed, coin)
    assert acc.same(revealed)
    assert associated_processes(revealed, coin).Ap.jump_at("a", F(1)) == HALF
    u = uniform_on(trivial, 0, 1)
    acc, inacc, thick = triple_decompose(u, trivial)
    assert acc.is_infinite() and inacc.is_infinite() and thick.same(u)


# -- exhausting systems --------------------------------------------------------


def test_system_of_infinite_time(coin):
    sys0 = exhausting_system(RandomTime.constant(coin, INF), coin)
    assert len(sys0.T) == 1 and sys0.z[0].same(sys0.z[0].constant(coin.atoms, 1))


def test_system_of_deterministic_time(coin):
    sys1 = exhausting_system(RandomTime.constant(coin, F(1)), coin)
    assert len(sys1.T) == 2 and sys1.T[1].values() == {F(1)}
    assert sys1.z[1].same(sys1.z[1].constant(coin.atoms, 1))


def test_coin_indexed_system(coin):
    tau = RandomTime.from_values({"a": F(1), "b": F(2)})
    sys = exhausting_system(tau, coin)
    assert [T.values() for T in sys.T[1:]] == [{F(1)}, {F(2)}]
    assert sys.mass(1) == sys.mass(2) == HALF
    assert reconstruction_failures(sys, associated_processes(tau, coin)) == []


def test_system_rejects_thick_time(trivial, mixture):
    with pytest.raises(NotThin):
        exhausting_system(mixture, trivial)


def test_user_system_validation(coin):
    tau = RandomTime.from_values({"a": F(1), "b": F(2)})
    user = [StoppingTime({"a": F(1), "b": INF}), StoppingTime({"a": INF, "b": F(2)})]
    sys = exhausting_system(tau, coin, user)
    assert reconstruction_failures(sys, associated_processes(tau, coin)) == []
    with pytest.raises(GraphsNotDisjoint):
        exhausting_system(tau, coin, [StoppingTime({"a": F(1), "b": F(2)}), StoppingTime({"a": F(1), "b": INF})])
    with pytest.raises(NotCovering):
        exhausting_system(tau, coin, user[:1])


def test_merge_examples(coin):
    tau = RandomTime.from_values({"a": F(1), "b": F(2)})
    canon = exhausting_system(tau, coin)
    same = merge_exhausting(canon, canon, coin)
    for (n, m), i in zip(same.labels, range(len(same.C))):
        assert (same.mass(i) > 0) == (n == m and canon.mass(n) > 0)
    user = exhausting_system(tau, coin, [StoppingTime({"a": F(1), "b": INF}), StoppingTime({"a": INF, "b": F(2)})])
    merged = merge_exhausting(canon, user, coin)
    assert sum(merged.mass(i) for i in range(len(merged.C))) == 1
    assert reconstruction_failures(merged, associated_processes(tau, coin)) == []
    other = exhausting_system(RandomTime.constant(coin, F(1)), coin)
    with pytest.raises(MismatchedTime):
        merge_exhausting(canon, other, coin)


# -- tests derived from the bundle -------------------------------------------


def test_dual_equality_examples(coin, trivial):
    assert dual_equality_test(uniform_on(trivial, 0, 1), trivial)["equal"]
    indep = RandomTime.from_law({a: ([(F(1), HALF), (F(2), HALF)], []) for a in coin.atoms})
    assert dual_equality_test(indep, coin)["equal"]
    rep = dual_equality_test(RandomTime.from_values({"a": F(1), "b": INF}), coin)
    assert not rep["equal"]
    assert {w["time"] for w in rep["witnesses"]} == {"1/1"}
    assert {(tuple(w["cell"]), w["optional_jump"], w["predictable_jump"]) for w in rep["witnesses"]} == {
        (("a",), "1/1", "1/2"),
        (("b",), "0/1", "1/2"),
    }


def test_pseudo_stopping_examples(coin):
    assert pseudo_stopping_test(RandomTime.from_values({"a": F(1), "b": F(2)}), coin)
    early = RandomTime.from_values({"a": HALF, "b": F(2)})
    assert not pseudo_stopping_test(early, coin)
    m = associated_processes(early, coin).m
    assert (m.at("a", F(1)), m.at("b", F(1))) == (HALF, F(3, 2))


def test_cross_conditional_mixture_on_coin(coin, mixture):
    tau = RandomTime.from_law({a: mixture.law("w") for a in coin.atoms})
    for t in (F(0), HALF, F(1), F(3, 2), F(2), F(3)):
        assert cross_conditional_check(tau, coin, t)["residual"] == 0


def test_thin_class_given_thick_part_needs_finite_tau2_branch(trivial, mixture):
    # P(C_0 | tau2 > 1/2) = P(tau2 in (1/2, 2]) / P(tau2 > 1/2) = 3/7 on the mixture,
    # while z^0 / Z2 gives 4/7; the form (z^0 - 1 + Z2) / Z2 is the one that holds.
    t = HALF
    tau1, tau2 = thin_thick_decompose(mixture, trivial)
    z0 = exhausting_system(tau1, trivial).z[0].at("w", t)
    Z2 = associated_processes(tau2, trivial).Z.at("w", t)
    assert z0 / Z2 == F(4, 7)
    assert (z0 - 1 + Z2) / Z2 == F(3, 7)
    assert cross_conditional_check(mixture, trivial, t)["residual"] == 0


# -- properties ------------------------------------------------------------------


@given(seed=seeds)
def test_bundle_identities(seed):
    inst = random_instance(seed, 0)
    assert associated_processes(inst.tau, inst.space).failures() == []


@given(seed=seeds)
def test_additivity(seed):
    inst = random_instance(seed, 1)
    sp, tau = inst.space, inst.tau
    b = associated_processes(tau, sp)
    t1, t2 = thin_thick_decompose(tau, sp)
    b1, b2 = associated_processes(t1, sp), associated_processes(t2, sp)
    one = b.Z.constant(sp.atoms, 1)
    assert b.Z.same(b1.Z + b2.Z - one)
    assert b.Ztilde.same(b1.Ztilde + b2.Ztilde - one)
    assert b.Ao.same(b1.Ao + b2.Ao)
    assert b.Ap.same(b1.Ap + b2.Ap)


@given(seed=seeds)
def test_classification_matches_dual_shape(seed):
    inst = random_instance(seed, 2)
    sp, tau = inst.space, inst.tau
    kind = classify(tau, sp).kind
    Ao = associated_processes(tau, sp).Ao
    has_slope = any(any(tr.slope) for tr in Ao.trajs.values())
    has_jump = any(Ao.jump_at(a, t) for a in sp.atoms for t in Ao[a].times)
    assert (kind in ("thin", "infinite")) == (not has_slope)
    assert (kind in ("thick", "infinite")) == (not has_jump)


@given(seed=seeds)
def test_thin_times_stable_under_min_and_max(seed):
    rng = gen.instance_rng(seed, 3)
    sp = gen.random_space(rng)
    a, b = gen.random_atomic_time(rng, sp), gen.random_atomic_time(rng, sp)
    for c in (a.minimum(b), a.maximum(b)):
        assert classify(c, sp).kind in ("thin", "infinite")


@given(seed=seeds)
def test_thin_part_has_one_minus_Z_positive(seed):
    inst = random_instance(seed, 4)
    sp = inst.space
    t1, _ = thin_thick_decompose(inst.tau, sp)
    Z = associated_processes(inst.tau, sp).Z
    for a, ps in t1.pieces.items():
        for p in ps:
            if p.is_finite_atom:
                assert Z.at(a, p.start) < 1


@given(seed=seeds)
def test_perturbed_decompositions_break_the_axioms(seed):
    inst = random_instance(seed, 5)
    sp, tau = inst.space, inst.tau
    t1, t2 = thin_thick_decompose(tau, sp)
    cl = classify(tau, sp)
    if cl.thin_mass:
        # hand one thin atom piece over to the thick side
        a, p = next((a, p) for a, ps in t1.pieces.items() for p in ps if p.is_finite_atom)
        moved = tau.restrict(lambda b, q: (not q.is_atom) or (b == a and q.lo == p.lo))
        assert classify(moved, sp).thin_mass > 0
    if cl.thick_mass:
        moved = tau.restrict(lambda b, q: q.is_atom or q is next(x for x in tau.pieces[b] if not x.is_atom))
        assert classify(moved, sp).thick_mass > 0


@given(seed=seeds)
def test_inaccessible_part_is_empty(seed):
    inst = random_instance(seed, 6)
    _, inacc, _ = triple_decompose(inst.tau, inst.space)
    assert inacc.is_infinite()


@given(seed=seeds)
def test_canonical_system_invariants(seed):
    inst = random_instance(seed, 7)
    sp = inst.space
    t1, _ = thin_thick_decompose(inst.tau, sp)
    system = exhausting_system(t1, sp)
    assert sum(system.mass(n) for n in range(len(system.C))) == 1
    assert reconstruction_failures(system, associated_processes(t1, sp)) == []
