"""Honest times on finite filtrations.

Detection uses ``Z~_tau = 1`` on ``{tau < inf}``.  For an honest time every
cell of ``F_t`` sees at most one value of ``tau`` below ``t``; the running
maximum of these values is the adapted increasing process ``alpha`` with
``alpha_t = tau`` on ``{tau <= t}``, which serves as the selection ``tau_t``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import NotHonest, NotThin, ThickHonestOnJumpingFiltration
from .paths import Path, Trajectory
from .random_times import (
    ExhaustingSystem,
    RandomTime,
    associated_processes,
    exhausting_system,
    merge_exhausting,
    thin_thick_decompose,
)
from .rational import INF, fmt
from .space import FilteredSpace, StoppingTime

__all__ = [
    "HonestCertificate",
    "is_honest",
    "alpha_process",
    "honest_thick_criterion",
    "thin_honest_identities",
    "jumping_exhaust",
]

_ZERO, _ONE = Fraction(0), Fraction(1)


@dataclass(frozen=True, eq=False)
class HonestCertificate:
    honest: bool
    violation_mass: Fraction
    alpha: Path | None

    def to_json(self) -> dict:
        return {
            "honest": self.honest,
            "violation_mass": fmt(self.violation_mass),
            "alpha": None if self.alpha is None else self.alpha.to_json(),
        }


def _measure_below_one(tr: Trajectory, a: Fraction, b: Fraction) -> Fraction:
    """Lebesgue measure of ``{s in (a, b) : tr(s) < 1}``."""
    cuts = sorted({a, b} | {t for t in tr.times if a < t < b})
    total = _ZERO
    for lo, hi in zip(cuts, cuts[1:]):
        x, d = tr.right_at(lo), tr.slope_after(lo)
        y = x + d * (hi - lo)
        if x < 1 and y < 1:
            total += hi - lo
        elif x < 1 or y < 1:
            # one endpoint below 1: the crossing is at x + d (s - lo) = 1
            cross = lo + (1 - x) / d
            total += (cross - lo) if x < 1 else (hi - cross)
    return total


def violation_mass(tau: RandomTime, space: FilteredSpace) -> Fraction:
    """``P(Z~_tau < 1, tau < inf)`` by exact integration."""
    b = associated_processes(tau, space)
    w = space.weight
    total = _ZERO
    for a, ps in tau.pieces.items():
        for p in ps:
            if p.start == INF:
                continue
            if p.is_atom:
                if b.Ztilde.at(a, p.start) < 1:
                    total += w[a] * p.mass
            else:
                frac = _measure_below_one(b.Ztilde[a], p.start, p.end) / (p.end - p.start)
                total += w[a] * p.mass * frac
    return total


def _cell_value(tau: RandomTime, space: FilteredSpace, k: int, cell, t) -> Fraction | None:
    vals = {p.start for a in cell for p in tau.pieces[a] if p.is_finite_atom and p.start <= t}
    if len(vals) > 1:
        raise NotHonest(f"cell {sorted(cell)} sees several values of tau by time {t}")
    return vals.pop() if vals else None


def alpha_process(tau: RandomTime, space: FilteredSpace) -> Path:
    """Running maximum of the value of ``tau`` already visible in each cell."""
    if tau.has_density():
        raise NotThin("alpha is built for purely atomic times")
    times = sorted(set(space.grid) | set(tau.finite_support))
    levels = {a: _ZERO for a in space.atoms}
    jumps: dict[str, dict] = {a: {} for a in space.atoms}
    for t in times:
        k = space.index_at(t)
        for cell in space.cells(k):
            v = _cell_value(tau, space, k, cell, t)
            if v is None:
                continue
            for a in cell:
                if v > levels[a]:
                    levels[a] = v
                    jumps[a][t] = v
    trajs = {a: Trajectory.steps(0, jumps[a]) for a in space.atoms}
    return Path(trajs, adapted=True, increasing=True)


def is_honest(tau: RandomTime, space: FilteredSpace) -> HonestCertificate:
    v = violation_mass(tau, space)
    alpha = None
    if v == 0 and not tau.has_density():
        alpha = alpha_process(tau, space)
        _check_alpha(alpha, tau, space)
    return HonestCertificate(v == 0, v, alpha)


def _check_alpha(alpha: Path, tau: RandomTime, space: FilteredSpace) -> None:
    for a, ps in tau.pieces.items():
        tr = alpha[a]
        for t in tr.checkpoints():
            assert tr.at(t) <= t, "alpha exceeds the clock"
        for p in ps:
            if p.is_finite_atom:
                v = p.start
                assert tr.at(v) == v and tr.terminal() == v, "alpha misses tau"
    for t in alpha.checkpoints():
        assert space.is_measurable(space.index_at(t), alpha.section(t)), "alpha not adapted"


def honest_thick_criterion(tau: RandomTime, space: FilteredSpace) -> dict:
    """``Z_tau < 1`` on the thin part, ``Z_tau = 1`` on the thick part."""
    cert = is_honest(tau, space)
    if not cert.honest:
        raise NotHonest(f"violation mass {cert.violation_mass}")
    b = associated_processes(tau, space)
    tau1, tau2 = thin_thick_decompose(tau, space)
    w = space.weight
    thin_bad = thick_bad = _ZERO
    for a in space.atoms:
        for p1, p2 in zip(tau1.pieces[a], tau2.pieces[a]):
            if p1.start != INF and b.Z.at(a, p1.start) >= 1:
                thin_bad += w[a] * p1.mass
            if p2.start != INF and not p2.is_atom:
                frac = _measure_below_one(b.Z[a], p2.start, p2.end) / (p2.end - p2.start)
                thick_bad += w[a] * p2.mass * frac
    return {
        "thin_part_below_one": thin_bad == 0,
        "thick_part_at_one": thick_bad == 0,
        "thin_violation": fmt(thin_bad),
        "thick_violation": fmt(thick_bad),
        "parts_honest": {
            "tau1": is_honest(tau1, space).honest,
            "tau2": is_honest(tau2, space).honest,
        },
    }


def thin_honest_identities(tau: RandomTime, space: FilteredSpace) -> dict:
    """Exact identities tying ``z^n`` to ``Z``, ``Z~``, ``A°`` and ``m`` via ``alpha``.

    On ``{T_n = alpha_t}``: ``z^n_t = 1 - Z_t``, ``A°_t = A°_{T_n}`` and
    ``1 - m_t = z^n_t - A°_{T_n}``.  On ``{T_n < t}``:
    ``z^n_t = 1_{alpha_t = T_n} (1 - Z~_t)`` and
    ``z^n_{t-} = 1_{alpha_{t-} = T_n} (1 - Z_{t-})``.

    The shortcut ``A°_t = z^n_{T_n}`` needs ``A°`` to be flat before ``T_n``;
    where it breaks is listed under ``shortcut_failures`` (informational).
    """
    if tau.has_density():
        raise NotThin("time has a density part")
    cert = is_honest(tau, space)
    if not cert.honest:
        raise NotHonest(f"violation mass {cert.violation_mass}")
    alpha = cert.alpha
    b = associated_processes(tau, space)
    system = exhausting_system(tau, space)
    fails: set[str] = set()
    literal: set[str] = set()
    worst = _ZERO

    def check(tag: str, lhs: Fraction, rhs: Fraction) -> None:
        nonlocal worst
        d = abs(lhs - rhs)
        if d:
            fails.add(tag)
            worst = max(worst, d)

    pts = b.checkpoints()
    for a in space.atoms:
        for t in pts:
            al, al_minus = alpha.at(a, t), alpha.left_at(a, t)
            one_zt = 1 - b.Ztilde.at(a, t)
            covered = False
            for n in range(1, len(system.T)):
                Tn, zn = system.T[n][a], system.z[n]
                zT = zn.at(a, Tn)
                if Tn == al and Tn <= t:
                    aT = b.Ao.at(a, Tn)
                    check("honest:z=1-Z", zn.at(a, t), 1 - b.Z.at(a, t))
                    check("honest:Ao=Ao(Tn)", b.Ao.at(a, t), aT)
                    check("honest:1-m=z-Ao(Tn)", 1 - b.m.at(a, t), zn.at(a, t) - aT)
                    # Shortcut forms valid only when A° has not moved before T_n.
                    if b.Ao.at(a, t) != zT:
                        literal.add("honest:Ao=zT")
                    if 1 - b.m.at(a, t) != zn.at(a, t) - zT:
                        literal.add("honest:1-m=z-zT")
                if Tn < t:
                    check("honest:z=1-Zt", zn.at(a, t), one_zt if al == Tn else _ZERO)
                    check(
                        "honest:z-=1-Z-",
                        zn.left_at(a, t),
                        (1 - b.Z.left_at(a, t)) if al_minus == Tn else _ZERO,
                    )
                    if al == Tn:
                        covered = True
            if one_zt and not covered:
                fails.add("honest:sum")
                worst = max(worst, one_zt)
    # alpha_{t-} must be known just before each grid time
    for k in range(1, len(space.grid)):
        s = space.grid[k]
        if not space.is_measurable(k - 1, {a: alpha.left_at(a, s) for a in space.atoms}):
            fails.add("honest:alpha-predictable")
    return {
        "ok": not fails,
        "failures": sorted(fails),
        "residual": worst,
        "shortcut_failures": sorted(literal),
    }


def jumping_exhaust(tau: RandomTime, space: FilteredSpace) -> ExhaustingSystem:
    """Exhausting sequence built from ``alpha`` and the grid as jumping sequence.

    With ``theta`` the grid followed by infinity, ``T_n`` is ``alpha`` just
    before ``theta_n`` when that value is at least ``theta_{n-1}``, and
    infinity otherwise.
    """
    if tau.has_density():
        if violation_mass(tau, space) == 0:
            raise ThickHonestOnJumpingFiltration("honest time with a density part on a jumping filtration")
        raise NotHonest("random time is not honest")
    cert = is_honest(tau, space)
    if not cert.honest:
        raise NotHonest(f"violation mass {cert.violation_mass}")
    alpha = cert.alpha
    theta = list(space.grid) + [INF]
    T = []
    for n in range(1, len(theta)):
        lo, hi = theta[n - 1], theta[n]
        vals = {}
        for a in space.atoms:
            v = alpha[a].terminal() if hi == INF else alpha.left_at(a, hi)
            vals[a] = v if v >= lo else INF
        T.append(StoppingTime(vals))
    system = exhausting_system(tau, space, user_T=T)
    merge_exhausting(system, exhausting_system(tau, space), space)
    return system
