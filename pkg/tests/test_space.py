from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from enlargement_lab import generators as gen
from enlargement_lab.errors import NonRefiningPartition, SchemaError, UnsortedGrid, WeightsNotNormalized
from enlargement_lab.rational import INF
from enlargement_lab.space import (
    RandomVariable,
    StoppingTime,
    build_space,
    condition,
    is_stopping_time,
    sigma_at_stopping_time,
)

from conftest import COIN

seeds = st.integers(0, 2**32 - 1)


def test_trivial_space_builds():
    sp = build_space({"grid": ["0"], "atoms": [{"id": "a", "p": "1"}], "partitions": [[["a"]]]})
    assert sp.atoms == ("a",) and sp.last == 0


def test_coin_space_builds(coin):
    assert coin.cells(0) == (frozenset("ab"),)
    assert coin.cell_of(1, "a") == frozenset("a")


def test_coarsening_rejected():
    spec = dict(COIN, partitions=[[["a"], ["b"]], [["a", "b"]]])
    with pytest.raises(NonRefiningPartition) as exc:
        build_space(spec)
    assert exc.value.index == 1


def test_bad_weights_and_grid():
    with pytest.raises(WeightsNotNormalized):
        build_space(dict(COIN, atoms=[{"id": "a", "p": "1/2"}, {"id": "b", "p": "1/3"}]))
    with pytest.raises(UnsortedGrid):
        build_space(dict(COIN, grid=["1", "0"]))


def test_missing_key_is_named():
    spec = {k: v for k, v in COIN.items() if k != "partitions"}
    with pytest.raises(SchemaError) as exc:
        build_space(spec)
    assert exc.value.key == "partitions"


def test_json_round_trip(coin):
    assert build_space(coin.to_json()) == coin


def test_left_limit_convention(coin):
    assert coin.index_at(F(1)) == 1
    assert coin.index_before(F(1)) == 0
    assert coin.index_before(F(1, 2)) == 0
    assert coin.index_before(F(0)) == 0
    assert coin.index_at(INF) == coin.last


def test_condition_constant(coin):
    X = RandomVariable.constant({"a": F(3), "b": F(3)})
    for k in (0, 1):
        assert condition(X, coin, k).values() == {"a": 3, "b": 3}


def test_condition_indicator(coin):
    X = RandomVariable.constant({"a": F(1), "b": F(0)})
    assert condition(X, coin, 0).values() == {"a": F(1, 2), "b": F(1, 2)}


def test_condition_polynomial_in_uniform(coin):
    X = RandomVariable({"a": ((F(0), F(1), (F(0), F(0), F(1))),), "b": ((F(0), F(1), (F(0),)),)})
    assert condition(X, coin, 1).values()["a"] == F(1, 3)


def test_condition_bad_index(coin):
    with pytest.raises(IndexError):
        condition(RandomVariable.constant({"a": 1, "b": 1}), coin, 2)


def test_constant_stopping_time(coin):
    for t in (F(0), F(1, 2), F(1), F(7), INF):
        assert is_stopping_time(StoppingTime.constant(coin, t), coin) == (True, True)


def test_revealed_coin_time(coin):
    chk = is_stopping_time({"a": F(1), "b": INF}, coin)
    assert chk.stopping and not chk.predictable


def test_premature_coin_time(coin):
    assert not is_stopping_time({"a": F(0), "b": INF}, coin).stopping


def test_sigma_at_stopping_time(coin):
    cells = sigma_at_stopping_time(StoppingTime({"a": F(1), "b": INF}), coin)
    assert sorted(map(sorted, cells)) == [["a"], ["b"]]


@given(seed=seeds)
def test_tower_property(seed):
    rng = gen.instance_rng(seed, 0)
    sp = gen.random_space(rng)
    X = gen.random_variable(rng, sp)
    for k in range(sp.last + 1):
        inner = condition(X, sp, k)
        for j in range(k + 1):
            assert condition(inner, sp, j).values() == condition(X, sp, j).values()


@given(seed=seeds)
def test_last_index_fixes_terminal_variables(seed):
    rng = gen.instance_rng(seed, 1)
    sp = gen.random_space(rng)
    vals = {}
    for cell in sp.cells(sp.last):
        v = F(rng.randint(-5, 5), rng.randint(1, 4))
        vals.update({a: v for a in cell})
    assert condition(RandomVariable.constant(vals), sp, sp.last).values() == vals


@given(seed=seeds)
def test_stopping_times_have_few_values(seed):
    rng = gen.instance_rng(seed, 2)
    sp = gen.random_space(rng)
    T = gen.random_atomic_time(rng, sp)
    for t in sp.grid:
        assert is_stopping_time(StoppingTime.constant(sp, t), sp).predictable
    vals = T.tree_values()
    if vals is not None and is_stopping_time(vals, sp).stopping:
        assert len(set(vals.values())) <= len(sp.atoms)


@given(seed=seeds)
def test_conditioning_preserves_expectation(seed):
    rng = gen.instance_rng(seed, 3)
    sp = gen.random_space(rng)
    X = gen.random_variable(rng, sp)
    mean = sp.expectation(X.mean_given_atom())
    for k in range(sp.last + 1):
        assert sp.expectation(condition(X, sp, k).values()) == mean
