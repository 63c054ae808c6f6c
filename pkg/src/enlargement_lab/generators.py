"""Seeded random instances for the verification suites and property tests."""

from __future__ import annotations

import itertools
import random
from fractions import Fraction

from .paths import Path
from .random_times import Piece, RandomTime, martingale_of
from .rational import INF
from .space import FilteredSpace, RandomVariable

__all__ = [
    "instance_rng",
    "random_space",
    "random_time",
    "random_atomic_time",
    "random_independent_time",
    "random_honest_time",
    "random_martingale",
    "random_variable",
    "random_integrand",
    "walk_space",
    "walk_max_time",
]

_ZERO, _ONE = Fraction(0), Fraction(1)


def instance_rng(seed: int, index: int) -> random.Random:
    return random.Random(f"enlargement-lab:{seed}:{index}")


def _split_weights(rng: random.Random, n: int) -> list[Fraction]:
    raw = [rng.randint(1, 6) for _ in range(n)]
    total = sum(raw)
    return [Fraction(r, total) for r in raw]


def random_space(rng: random.Random, max_atoms: int = 16, max_grid: int = 5) -> FilteredSpace:
    n = rng.randint(1, max_atoms)
    atoms = [f"w{i}" for i in range(n)]
    weights = _split_weights(rng, n)
    K = rng.randint(1, max_grid)
    grid, t = [_ZERO], _ZERO
    for _ in range(K - 1):
        t += Fraction(rng.choice([1, 2, 3]), rng.choice([1, 2]))
        grid.append(t)
    cells = [list(atoms)] if rng.random() < 0.7 else _random_split(rng, list(atoms))
    partitions = [tuple(frozenset(c) for c in cells)]
    for _ in range(1, K):
        nxt = []
        for c in cells:
            nxt += _random_split(rng, c) if rng.random() < 0.6 else [c]
        cells = nxt
        partitions.append(tuple(frozenset(c) for c in cells))
    return FilteredSpace(tuple(atoms), tuple(weights), tuple(grid), tuple(partitions))


def _random_split(rng: random.Random, cell: list) -> list[list]:
    if len(cell) == 1:
        return [cell]
    shuffled = cell[:]
    rng.shuffle(shuffled)
    k = rng.randint(1, min(3, len(cell)))
    cuts = sorted(rng.sample(range(1, len(cell)), k - 1)) if k > 1 else []
    bounds = [0] + cuts + [len(cell)]
    return [sorted(shuffled[a:b]) for a, b in zip(bounds, bounds[1:])]


def _time_pool(space: FilteredSpace) -> list[Fraction]:
    g = list(space.grid)
    pool = g + [(a + b) / 2 for a, b in zip(g, g[1:])] + [g[-1] + 1]
    return sorted(set(pool))


def _law(rng: random.Random, space: FilteredSpace, density: bool, pool: list) -> tuple[list, list]:
    atoms = [(t, None) for t in rng.sample(pool, rng.randint(0, min(3, len(pool))))]
    if rng.random() < 0.3:
        atoms.append((INF, None))
    segs = []
    if density and rng.random() < 0.6:
        edges = sorted(rng.sample(pool, min(len(pool), rng.choice([2, 3]))))
        for a, b in zip(edges, edges[1:]):
            if rng.random() < 0.8:
                segs.append((a, b))
    if not atoms and not segs:
        atoms.append((rng.choice(pool + [INF]), None))
    masses = _split_weights(rng, len(atoms) + len(segs))
    law_atoms = [(t, m) for (t, _), m in zip(atoms, masses)]
    law_dens = [(a, b, m / (b - a)) for (a, b), m in zip(segs, masses[len(atoms):])]
    return law_atoms, law_dens


def random_time(rng: random.Random, space: FilteredSpace, density: bool = True) -> RandomTime:
    """Per-atom random laws mixing atoms (on and off the grid), infinity and densities."""
    pool = _time_pool(space)
    laws = {}
    shared = None
    for a in space.atoms:
        # Reuse a law across atoms now and then so the time can look independent.
        if shared is not None and rng.random() < 0.3:
            laws[a] = shared
            continue
        laws[a] = _law(rng, space, density, pool)
        shared = laws[a]
    return RandomTime.from_law(laws)


def random_atomic_time(rng: random.Random, space: FilteredSpace) -> RandomTime:
    return random_time(rng, space, density=False)


def random_independent_time(rng: random.Random, space: FilteredSpace, density: bool = False) -> RandomTime:
    """Same law on every atom: independent of the whole tree."""
    law = _law(rng, space, density, _time_pool(space))
    return RandomTime.from_law({a: law for a in space.atoms})


def random_honest_time(rng: random.Random, space: FilteredSpace) -> RandomTime:
    """End of a random optional set, killed to infinity independently.

    The optional set marks, at a few candidate times, a random selection of
    the cells in force; the time is the last marked instant along each atom.
    A per-atom probability of being sent to infinity keeps the time outside
    the tree sigma-field while preserving honesty.
    """
    pool = _time_pool(space)
    times = sorted(rng.sample(pool, rng.randint(1, len(pool))))
    last: dict[str, Fraction] = {}
    for t in times:
        k = space.index_at(t)
        for cell in space.cells(k):
            if rng.random() < 0.5:
                for a in cell:
                    last[a] = t
    pieces = {}
    for a in space.atoms:
        if a not in last:
            pieces[a] = (Piece(_ZERO, _ONE, INF, INF),)
            continue
        v = last[a]
        keep = Fraction(rng.randint(1, 4), 4)
        if keep == 1:
            pieces[a] = (Piece(_ZERO, _ONE, v, v),)
        else:
            pieces[a] = (Piece(_ZERO, keep, v, v), Piece(keep, _ONE, INF, INF))
    return RandomTime(pieces)


def random_martingale(rng: random.Random, space: FilteredSpace) -> Path:
    return martingale_of({a: Fraction(rng.randint(-4, 4)) for a in space.atoms}, space)


def random_variable(rng: random.Random, space: FilteredSpace) -> RandomVariable:
    """Per-atom piecewise polynomials of degree at most two in the uniform."""
    pieces = {}
    for a in space.atoms:
        cuts = sorted({Fraction(rng.randint(1, 7), 8) for _ in range(rng.randint(0, 2))})
        bounds = [_ZERO] + cuts + [_ONE]
        pieces[a] = tuple(
            (lo, hi, tuple(Fraction(rng.randint(-3, 3)) for _ in range(rng.randint(1, 3))))
            for lo, hi in zip(bounds, bounds[1:])
        )
    return RandomVariable(pieces)


def random_integrand(rng: random.Random, enlarged: FilteredSpace, base_grid) -> dict:
    """Bounded integrand known just before each base grid time."""
    G = {}
    for s in base_grid[1:]:
        k = enlarged.index_before(s)
        vals = {}
        for cell in enlarged.cells(k):
            v = Fraction(rng.randint(-2, 3))
            for e in cell:
                vals[e] = v
        G[s] = vals
    return G


def walk_space(steps: int = 3) -> FilteredSpace:
    """The natural filtration of a symmetric +-1 walk, one atom per path."""
    paths = ["".join(p) for p in itertools.product("ud", repeat=steps)]
    w = Fraction(1, len(paths))
    grid = tuple(Fraction(k) for k in range(steps + 1))
    partitions = []
    for k in range(steps + 1):
        groups: dict = {}
        for p in paths:
            groups.setdefault(p[:k], set()).add(p)
        partitions.append(tuple(frozenset(g) for _, g in sorted(groups.items())))
    return FilteredSpace(tuple(paths), (w,) * len(paths), grid, tuple(partitions))


def walk_level(path: str, k: int) -> int:
    return sum(1 if c == "u" else -1 for c in path[:k])


def walk_max_time(steps: int = 3) -> tuple[FilteredSpace, RandomTime]:
    """Last time the walk sits at its running maximum over the horizon."""
    space = walk_space(steps)
    values = {}
    for p in space.atoms:
        levels = [walk_level(p, k) for k in range(steps + 1)]
        top = max(levels)
        values[p] = Fraction(max(k for k, x in enumerate(levels) if x == top))
    return space, RandomTime.from_values(values)
