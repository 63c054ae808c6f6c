"""Brute-force reference computations used as independent oracles.

They work from the per-atom law of a random time (atoms and step densities)
and plain weighted sums over cells, never touching the projection code.
"""

from fractions import Fraction as F

from enlargement_lab.rational import INF

ZERO = F(0)


def atom_mass(tau, a, t):
    atoms, _ = tau.law(a)
    return atoms.get(t, ZERO)


def density_at(tau, a, t):
    """Density level just after ``t``."""
    _, dens = tau.law(a)
    return sum((lvl for lo, hi, lvl in dens if lo <= t < hi), ZERO)


def cdf(tau, a, t, strict=False):
    atoms, dens = tau.law(a)
    total = sum((p for s, p in atoms.items() if s != INF and (s < t if strict else s <= t)), ZERO)
    for lo, hi, lvl in dens:
        if t > lo:
            total += lvl * (min(t, hi) - lo)
    return total


def cell_avg(space, k, a, f):
    cell = space.cell_of(k, a)
    w = space.weight
    return sum((w[b] * f(b) for b in cell), ZERO) / sum((w[b] for b in cell), ZERO)


def Z(tau, space, a, t):
    return cell_avg(space, space.index_at(t), a, lambda b: 1 - cdf(tau, b, t))


def Ztilde(tau, space, a, t):
    return cell_avg(space, space.index_at(t), a, lambda b: 1 - cdf(tau, b, t, strict=True))


def _cuts(tau, space, t):
    pts = {ZERO, t} | {s for s in space.grid if s < t}
    for b in space.atoms:
        atoms, dens = tau.law(b)
        pts |= {s for s in atoms if s != INF and s < t}
        for lo, hi, _ in dens:
            pts |= {x for x in (lo, hi) if x < t}
    return sorted(pts)


def dual(tau, space, a, t, kind="optional"):
    """``A°_t`` or ``A^p_t`` summed over jumps and integrated over densities."""
    pts = _cuts(tau, space, t)
    total = ZERO
    for s in pts:
        if s <= t:
            k = space.index_at(s) if kind == "optional" else space.index_before(s)
            total += cell_avg(space, k, a, lambda b: atom_mass(tau, b, s))
    for lo, hi in zip(pts, pts[1:]):
        k = space.index_at(lo)
        total += (hi - lo) * cell_avg(space, k, a, lambda b: density_at(tau, b, lo))
    return total


def checkpoints(tau, space):
    pts = set(space.grid)
    for b in space.atoms:
        atoms, dens = tau.law(b)
        pts |= {s for s in atoms if s != INF}
        for lo, hi, _ in dens:
            pts |= {lo, hi}
    pts = sorted(pts)
    mids = [(x + y) / 2 for x, y in zip(pts, pts[1:])]
    return sorted(set(pts) | set(mids) | {pts[-1] + 1})
