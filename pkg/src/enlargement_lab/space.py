"""Finite filtered probability spaces with exact conditional expectations.

A :class:`FilteredSpace` is a finite set of weighted atoms, a time grid
``0 = t_0 < t_1 < ... < t_K`` and a refining chain of partitions.  The
filtration is piecewise constant and right-continuous: ``F_t`` is the
partition at index ``k`` for ``t`` in ``[t_k, t_{k+1})`` and the last
partition is ``F_inf``.  Left limits follow the same grid: at ``t_k`` with
``k >= 1`` the partition strictly before is ``k - 1``; at time 0 it is the
time-0 partition itself (no information arrives "before" 0).

Every atom also carries an independent uniform coordinate ``u`` in
``[0, 1]`` that the filtration never sees.  Random times and random
variables may depend on it.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, NamedTuple, Sequence

from .errors import (
    NonRefiningPartition,
    SchemaError,
    SpaceError,
    UnsortedGrid,
    WeightsNotNormalized,
)
from .rational import INF, Time, fmt, fmt_time, to_fraction, to_time

__all__ = [
    "FilteredSpace",
    "RandomVariable",
    "StoppingTime",
    "StoppingCheck",
    "build_space",
    "condition",
    "is_stopping_time",
]


@dataclass(frozen=True)
class FilteredSpace:
    atoms: tuple[str, ...]
    weights: tuple[Fraction, ...]
    grid: tuple[Fraction, ...]
    partitions: tuple[tuple[frozenset, ...], ...]

    def __post_init__(self):
        if len(self.atoms) != len(self.weights):
            raise SpaceError("atoms and weights differ in length")
        if len(set(self.atoms)) != len(self.atoms):
            raise SpaceError("duplicate atom ids")
        if not self.grid or self.grid[0] != 0:
            raise UnsortedGrid("grid must start at 0", index=0)
        for k in range(1, len(self.grid)):
            if self.grid[k] <= self.grid[k - 1]:
                raise UnsortedGrid(f"grid not strictly increasing at index {k}", index=k)
        for a, w in zip(self.atoms, self.weights):
            if w <= 0:
                raise WeightsNotNormalized(f"atom {a!r} has non-positive weight {w}")
        if sum(self.weights) != 1:
            raise WeightsNotNormalized(f"weights sum to {sum(self.weights)}, not 1")
        if len(self.partitions) != len(self.grid):
            raise SpaceError(
                f"{len(self.partitions)} partitions for {len(self.grid)} grid points",
                index=min(len(self.partitions), len(self.grid)),
            )
        universe = set(self.atoms)
        for k, part in enumerate(self.partitions):
            seen: set = set()
            for cell in part:
                if not cell:
                    raise SpaceError(f"empty cell in partition {k}", index=k)
                if seen & cell:
                    raise SpaceError(f"partition {k} repeats an atom", index=k)
                seen |= cell
            if seen != universe:
                raise SpaceError(f"partition {k} does not cover the atoms exactly", index=k)
        for k in range(1, len(self.partitions)):
            coarse = self.partitions[k - 1]
            for cell in self.partitions[k]:
                if not any(cell <= c for c in coarse):
                    raise NonRefiningPartition(
                        f"partition {k} does not refine partition {k - 1}", index=k
                    )

    # -- lookups ---------------------------------------------------------

    @cached_property
    def weight(self) -> dict[str, Fraction]:
        return dict(zip(self.atoms, self.weights))

    @cached_property
    def _cell_index(self) -> tuple[dict[str, int], ...]:
        out = []
        for part in self.partitions:
            out.append({a: i for i, cell in enumerate(part) for a in cell})
        return tuple(out)

    @cached_property
    def _cell_weight(self) -> tuple[tuple[Fraction, ...], ...]:
        w = self.weight
        return tuple(tuple(sum(w[a] for a in cell) for cell in part) for part in self.partitions)

    @property
    def last(self) -> int:
        return len(self.grid) - 1

    def index_at(self, t: Time) -> int:
        """Index of the partition in force at time ``t``."""
        if t == INF:
            return self.last
        if t < 0:
            raise ValueError(f"negative time {t}")
        return bisect.bisect_right(self.grid, t) - 1

    def index_before(self, t: Time) -> int:
        """Index of the partition generating ``F_{t-}``."""
        if t == INF:
            return self.last
        k = self.index_at(t)
        if k >= 1 and self.grid[k] == t:
            return k - 1
        return k

    def is_grid_point(self, t: Time) -> bool:
        if t == INF:
            return False
        k = self.index_at(t)
        return self.grid[k] == t

    def cells(self, k: int) -> tuple[frozenset, ...]:
        return self.partitions[k]

    def cell_id(self, k: int, atom: str) -> int:
        return self._cell_index[k][atom]

    def cell_of(self, k: int, atom: str) -> frozenset:
        return self.partitions[k][self._cell_index[k][atom]]

    def prob(self, atoms: Iterable[str]) -> Fraction:
        w = self.weight
        return sum((w[a] for a in set(atoms)), Fraction(0))

    def average(self, k: int, values: Mapping[str, Fraction]) -> dict[str, Fraction]:
        """Cell-wise weighted mean of ``values`` over partition ``k``."""
        w = self.weight
        out: dict[str, Fraction] = {}
        for cell, cw in zip(self.partitions[k], self._cell_weight[k]):
            mean = sum((w[a] * values[a] for a in cell), Fraction(0)) / cw
            for a in cell:
                out[a] = mean
        return out

    def is_measurable(self, k: int, values: Mapping[str, object]) -> bool:
        for cell in self.partitions[k]:
            first = None
            for i, a in enumerate(cell):
                if i == 0:
                    first = values[a]
                elif values[a] != first:
                    return False
        return True

    def expectation(self, values: Mapping[str, Fraction]) -> Fraction:
        w = self.weight
        return sum((w[a] * values[a] for a in self.atoms), Fraction(0))

    # -- serialization ---------------------------------------------------

    def to_json(self) -> dict:
        return {
            "grid": [fmt(t) for t in self.grid],
            "atoms": [{"id": a, "p": fmt(w)} for a, w in zip(self.atoms, self.weights)],
            "partitions": [[sorted(cell) for cell in _sorted_cells(part)] for part in self.partitions],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "FilteredSpace":
        return build_space(data)

    def with_grid(self, grid: Sequence[Fraction]) -> "FilteredSpace":
        """Same filtration re-expressed on a finer grid."""
        grid = tuple(sorted(set(grid) | set(self.grid)))
        parts = tuple(self.partitions[self.index_at(t)] for t in grid)
        return FilteredSpace(self.atoms, self.weights, grid, parts)


def _sorted_cells(part):
    return sorted(part, key=lambda c: sorted(c))


def build_space(spec: Mapping) -> FilteredSpace:
    """Validate a declarative space description and build the space.

    ``spec`` follows the JSON layout ``{"grid": [...], "atoms": [{"id", "p"}],
    "partitions": [[[ids...], ...], ...]}`` with rationals as strings.
    """
    if not isinstance(spec, Mapping):
        raise SchemaError("space description must be an object")
    for key in ("grid", "atoms", "partitions"):
        if key not in spec:
            raise SchemaError(f"missing key {key!r}", key=key)
    try:
        grid = tuple(to_fraction(t) for t in spec["grid"])
        atoms = tuple(str(a["id"]) for a in spec["atoms"])
        weights = tuple(to_fraction(a["p"]) for a in spec["atoms"])
        parts = tuple(
            tuple(frozenset(str(x) for x in cell) for cell in part) for part in spec["partitions"]
        )
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        raise SchemaError(f"malformed space description: {exc}") from exc
    return FilteredSpace(atoms, weights, grid, parts)


# ---------------------------------------------------------------------------
# Random variables on atoms x [0, 1]


def _poly_antiderivative(coeffs: Sequence[Fraction], x: Fraction) -> Fraction:
    acc = Fraction(0)
    power = x
    for i, c in enumerate(coeffs):
        acc += c * power / (i + 1)
        power *= x
    return acc


@dataclass(frozen=True)
class RandomVariable:
    """Per-atom piecewise polynomial function of the auxiliary uniform.

    ``pieces[atom]`` is a tuple of ``(lo, hi, coeffs)`` with the intervals
    partitioning ``[0, 1]``; ``coeffs[i]`` multiplies ``u**i``.
    """

    pieces: Mapping[str, tuple[tuple[Fraction, Fraction, tuple[Fraction, ...]], ...]] = field(
        hash=False
    )

    def __post_init__(self):
        for atom, ps in self.pieces.items():
            pos = Fraction(0)
            for lo, hi, _ in ps:
                if lo != pos or hi <= lo:
                    raise ValueError(f"pieces of {atom!r} do not partition [0, 1]")
                pos = hi
            if pos != 1:
                raise ValueError(f"pieces of {atom!r} do not reach 1")

    @classmethod
    def constant(cls, values: Mapping[str, Fraction]) -> "RandomVariable":
        return cls({a: ((Fraction(0), Fraction(1), (to_fraction(v),)),) for a, v in values.items()})

    def integral(self, atom: str, lo: Fraction = Fraction(0), hi: Fraction = Fraction(1)) -> Fraction:
        """Integral of ``X(atom, u)`` over ``u`` in ``[lo, hi]``."""
        total = Fraction(0)
        for plo, phi, coeffs in self.pieces[atom]:
            a, b = max(lo, plo), min(hi, phi)
            if a < b:
                total += _poly_antiderivative(coeffs, b) - _poly_antiderivative(coeffs, a)
        return total

    def mean_given_atom(self) -> dict[str, Fraction]:
        return {a: self.integral(a) for a in self.pieces}

    def values(self) -> dict[str, Fraction]:
        """Per-atom value; only defined when X does not depend on ``u``."""
        out = {}
        for a, ps in self.pieces.items():
            consts = set()
            for _, _, c in ps:
                if any(c[1:]):
                    raise ValueError(f"variable depends on the auxiliary coordinate at {a!r}")
                consts.add(c[0] if c else Fraction(0))
            if len(consts) != 1:
                raise ValueError(f"variable depends on the auxiliary coordinate at {a!r}")
            out[a] = consts.pop()
        return out


def condition(X: RandomVariable, space: FilteredSpace, k: int) -> RandomVariable:
    """Exact conditional expectation of ``X`` given the partition at index ``k``."""
    if not 0 <= k <= space.last:
        raise IndexError(f"grid index {k} outside 0..{space.last}")
    return RandomVariable.constant(space.average(k, X.mean_given_atom()))


# ---------------------------------------------------------------------------
# Stopping times


@dataclass(frozen=True)
class StoppingTime:
    """Tree-only random time, a map from atoms to ``[0, inf]``."""

    value: Mapping[str, Time] = field(hash=False)

    def __getitem__(self, atom: str) -> Time:
        return self.value[atom]

    @classmethod
    def constant(cls, space: FilteredSpace, t) -> "StoppingTime":
        t = to_time(t)
        return cls({a: t for a in space.atoms})

    def values(self) -> set:
        return set(self.value.values())

    def to_json(self) -> dict:
        return {a: fmt_time(t) for a, t in sorted(self.value.items())}


class StoppingCheck(NamedTuple):
    stopping: bool
    predictable: bool


def _level_sets(T: Mapping[str, Time]) -> dict[Time, set]:
    out: dict[Time, set] = {}
    for a, t in T.items():
        out.setdefault(t, set()).add(a)
    return out


def _union_of_cells(space: FilteredSpace, k: int, atoms: set) -> bool:
    return all(space.cell_of(k, a) <= atoms for a in atoms)


def is_stopping_time(T, space: FilteredSpace) -> StoppingCheck:
    """Classify a tree map as (predictable) stopping time.

    On a finite space ``{T <= t}`` is ``F_t``-measurable for all ``t`` iff each
    level set ``{T = t}`` is.  Predictability asks the same of ``F_{t-}``.
    """
    T = T.value if isinstance(T, StoppingTime) else T
    stopping = predictable = True
    for t, level in _level_sets(T).items():
        if t == INF:
            continue
        if not _union_of_cells(space, space.index_at(t), level):
            stopping = predictable = False
            break
        if not _union_of_cells(space, space.index_before(t), level):
            predictable = False
    return StoppingCheck(stopping, predictable)


def sigma_at_stopping_time(T: StoppingTime, space: FilteredSpace) -> list[frozenset]:
    """Atoms of ``F_T``: level sets of ``T`` intersected with cells at ``T``."""
    out = []
    for t, level in _level_sets(T.value).items():
        k = space.index_at(t)
        seen: set = set()
        for a in sorted(level):
            if a in seen:
                continue
            cell = frozenset(space.cell_of(k, a) & level)
            seen |= cell
            out.append(cell)
    return out
