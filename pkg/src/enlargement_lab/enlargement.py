"""Progressive and initial enlargements of a finite filtration.

For a random time with finitely many values per atom, the enlarged
sigma-fields live on a finer atom set: each base atom ``a`` splits into the
events ``{tau = v}`` (progressive) or ``C_n`` (initial) that it carries.  The
enlarged space is an ordinary :class:`FilteredSpace`, so every exact tool of
the base engine (conditioning, projections, martingale checks) applies to it
unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from fractions import Fraction
from typing import Callable, Mapping, NamedTuple, Sequence

from .errors import HasContinuousPart, NotHonest, NotMartingale
from .honest import is_honest
from .paths import Path, Trajectory
from .projections import project
from .random_times import (
    ExhaustingSystem,
    Piece,
    RandomTime,
    associated_processes,
    event_mass,
    exhausting_system,
    martingale_of,
    thin_thick_decompose,
)
from .rational import INF, Time, fmt, fmt_time, to_fraction
from .space import (
    FilteredSpace,
    RandomVariable,
    StoppingTime,
    is_stopping_time,
    sigma_at_stopping_time,
)

__all__ = [
    "EnlargedSpace",
    "DriftReport",
    "MartingaleCheck",
    "enlarge_progressive",
    "enlarge_initial",
    "initial_on_progressive",
    "is_martingale",
    "bracket_jumps",
    "key_lemma_evaluate",
    "drift_thin",
    "drift_jacod",
    "drift_honest",
    "restriction_consistency",
    "immersion_test",
    "project_lemma_check",
    "progressive_equals_iterated",
    "refinement_chain_ok",
]

_ZERO, _ONE = Fraction(0), Fraction(1)
Slices = tuple[tuple[Fraction, Fraction], ...]


@dataclass(frozen=True, eq=False)
class EnlargedSpace:
    """An enlarged filtration on a refined atom set.

    ``back[e]`` is the base atom under ``e``, ``label[e]`` the value of
    ``tau`` (progressive) or the event index (initial) that ``e`` carries, and
    ``slices[e]`` the auxiliary-uniform intervals of ``back[e]`` making up ``e``.
    """

    space: FilteredSpace
    base: FilteredSpace
    back: Mapping[str, str] = field(hash=False)
    label: Mapping[str, object] = field(hash=False)
    slices: Mapping[str, Slices] = field(hash=False)
    kind: str = "progressive"

    def lift(self, path: Path) -> Path:
        return path.lift(self.back)

    def lift_values(self, values: Mapping[str, Fraction]) -> dict[str, Fraction]:
        return {e: values[a] for e, a in self.back.items()}

    def lift_variable(self, X: RandomVariable) -> dict[str, Fraction]:
        """Conditional mean of ``X`` on each enlarged atom."""
        out = {}
        for e, a in self.back.items():
            sl = self.slices[e]
            mass = sum((hi - lo for lo, hi in sl), _ZERO)
            out[e] = sum((X.integral(a, lo, hi) for lo, hi in sl), _ZERO) / mass
        return out

    def lift_time(self, tau: RandomTime) -> RandomTime:
        """Re-express ``tau`` on the enlarged atoms, rescaling each slice to [0, 1]."""
        out = {}
        for e, a in self.back.items():
            sl = self.slices[e]
            mass = sum((hi - lo for lo, hi in sl), _ZERO)
            pieces, pos = [], _ZERO
            for lo, hi in sl:
                for p in tau.pieces[a]:
                    x, y = max(lo, p.lo), min(hi, p.hi)
                    if x >= y:
                        continue
                    n_lo, n_hi = pos / mass, (pos + y - x) / mass
                    pieces.append(Piece(n_lo, n_hi, p.time_at(x), p.time_at(y)))
                    pos += y - x
            out[e] = tuple(pieces)
        return RandomTime(out)

    def atoms_over(self, a: str) -> list[str]:
        return [e for e, b in self.back.items() if b == a]

    def to_json(self) -> dict:
        doc = self.space.to_json()
        doc["back_map"] = {e: self.back[e] for e in sorted(self.back)}
        doc["labels"] = {
            e: (fmt_time(v) if not isinstance(v, int) else v) for e, v in sorted(self.label.items())
        }
        return doc


def _merge_slices(sl) -> Slices:
    out: list = []
    for lo, hi in sorted(sl):
        if out and out[-1][1] == lo:
            out[-1] = (out[-1][0], hi)
        else:
            out.append((lo, hi))
    return tuple(out)


def _name(a: str, label, n_labels: int, sep: str) -> str:
    if n_labels == 1:
        return a
    text = fmt_time(label) if sep == "@" else str(label)
    return f"{a}{sep}{text}"


def _assemble(
    base: FilteredSpace,
    split: Mapping[str, list[tuple[object, Slices]]],
    grid: Sequence[Fraction],
    key: Callable[[str, object, Fraction], object],
    sep: str,
    kind: str,
) -> EnlargedSpace:
    atoms, weights, back, label, slices = [], [], {}, {}, {}
    for a in base.atoms:
        parts = split[a]
        for lab, sl in parts:
            e = _name(a, lab, len(parts), sep)
            atoms.append(e)
            weights.append(base.weight[a] * sum((hi - lo for lo, hi in sl), _ZERO))
            back[e], label[e], slices[e] = a, lab, sl
    partitions = []
    for s in grid:
        cells: dict = {}
        for e in atoms:
            cells.setdefault(key(back[e], label[e], s), set()).add(e)
        ordered = sorted((frozenset(c) for c in cells.values()), key=lambda c: min(c))
        partitions.append(tuple(ordered))
    space = FilteredSpace(tuple(atoms), tuple(weights), tuple(grid), tuple(partitions))
    return EnlargedSpace(space, base, back, label, slices, kind)


def _value_split(tau: RandomTime) -> dict[str, list[tuple[Time, Slices]]]:
    out = {}
    for a, ps in tau.pieces.items():
        groups: dict = {}
        for p in ps:
            groups.setdefault(p.start, []).append((p.lo, p.hi))
        out[a] = [(v, _merge_slices(groups[v])) for v in sorted(groups)]
    return out


def _require_atomic(tau: RandomTime) -> None:
    if tau.has_density():
        raise HasContinuousPart("random time has a density part; exact enlargement needs atoms only")


@lru_cache(maxsize=256)
def enlarge_progressive(space: FilteredSpace, tau: RandomTime) -> EnlargedSpace:
    """``F_t`` joined with ``sigma(tau ^ t)`` on the refined atom set."""
    _require_atomic(tau)
    grid = sorted(set(space.grid) | set(tau.finite_support))

    def key(a, v, s):
        return space.cell_id(space.index_at(s), a), (v if v <= s else None)

    return _assemble(space, _value_split(tau), grid, key, "@", "progressive")


def enlarge_initial(space: FilteredSpace, C, grid: Sequence[Fraction] | None = None) -> EnlargedSpace:
    """``F_t`` joined with ``sigma(C_n, n >= 0)`` from time 0 on.

    ``C`` is an :class:`ExhaustingSystem` or a sequence of events, each a map
    from atoms to auxiliary-uniform intervals.
    """
    events = C.C if isinstance(C, ExhaustingSystem) else list(C)
    split = {}
    for a in space.atoms:
        split[a] = [(n, _merge_slices(ev.get(a, ()))) for n, ev in enumerate(events) if event_mass(ev, a) > 0]
        total = sum((event_mass(events[n], a) for n, _ in split[a]), _ZERO)
        if total != 1:
            raise ValueError(f"events do not partition atom {a!r} (mass {total})")
    grid = sorted(set(space.grid) | set(grid or ()))

    def key(a, n, s):
        return space.cell_id(space.index_at(s), a), n

    return _assemble(space, split, grid, key, "#", "initial")


def initial_on_progressive(prog: EnlargedSpace) -> EnlargedSpace:
    """The initial enlargement by ``{tau = v}`` events, on the progressive atoms.

    With the canonical exhausting system these events are exactly the
    ``C_n``, so this is ``F^C`` expressed on the same atoms and grid as
    ``F^tau`` (which makes processes on both directly comparable).
    """
    base = prog.base
    partitions = []
    for s in prog.space.grid:
        cells: dict = {}
        for e in prog.space.atoms:
            k = (base.cell_id(base.index_at(s), prog.back[e]), prog.label[e])
            cells.setdefault(k, set()).add(e)
        partitions.append(tuple(sorted((frozenset(c) for c in cells.values()), key=lambda c: min(c))))
    space = FilteredSpace(prog.space.atoms, prog.space.weights, prog.space.grid, tuple(partitions))
    return EnlargedSpace(space, base, prog.back, prog.label, prog.slices, "initial")


def refinement_chain_ok(prog: EnlargedSpace, init: EnlargedSpace) -> bool:
    """Lifted ``F`` is coarser than ``F^tau``, which is coarser than ``F^C``."""
    sp, si = prog.space, init.space
    if sp.atoms != si.atoms:
        raise ValueError("enlargements live on different atoms")
    for s in sp.grid:
        kp, ki = sp.index_at(s), si.index_at(s)
        kb = prog.base.index_at(s)
        for e in sp.atoms:
            fine_c = si.cell_of(ki, e)
            mid = sp.cell_of(kp, e)
            coarse = {x for x in sp.atoms if prog.base.cell_id(kb, prog.back[x]) == prog.base.cell_id(kb, prog.back[e])}
            if not (fine_c <= mid <= coarse):
                return False
    return True


# ---------------------------------------------------------------------------
# Martingales and brackets


class MartingaleCheck(NamedTuple):
    ok: bool
    max_residual: Fraction
    reason: str = ""


def is_martingale(X: Path, space: FilteredSpace) -> MartingaleCheck:
    """Exact martingale test for a path on ``space``.

    The path must be adapted, constant between grid points (the filtration
    does not move there) and satisfy ``E[X_{t_{k+1}} | F_{t_k}] = X_{t_k}``.
    """
    worst = _ZERO
    reason = ""
    grid = set(space.grid)
    for a in space.atoms:
        tr = X[a].simplify()
        for i, t in enumerate(tr.times):
            d = abs(tr.slope[i])
            if d > worst:
                worst, reason = d, "drifts between grid points"
            if tr.start[i] != tr.value[i] and abs(tr.start[i] - tr.value[i]) > worst:
                worst, reason = abs(tr.start[i] - tr.value[i]), "not right-continuous"
            if i and t not in grid and abs(tr.value[i] - tr.left[i]) > worst:
                worst, reason = abs(tr.value[i] - tr.left[i]), "jumps off the grid"
    for k, t in enumerate(space.grid):
        sec = X.section(t)
        for cell in space.cells(k):
            vals = [sec[a] for a in cell]
            spread = max(vals) - min(vals)
            if spread > worst:
                worst, reason = spread, "not adapted"
        if k + 1 < len(space.grid):
            nxt = space.average(k, X.section(space.grid[k + 1]))
            for a in space.atoms:
                r = abs(nxt[a] - sec[a])
                if r > worst:
                    worst, reason = r, "conditional mean moves"
    return MartingaleCheck(worst == 0, worst, "" if worst == 0 else reason)


def bracket_jumps(U: Path, V: Path, space: FilteredSpace) -> dict[Fraction, dict[str, Fraction]]:
    """Predictable bracket jumps ``E[dU dV | F_{s-}]`` at grid times ``s > 0``."""
    out = {}
    for k in range(1, len(space.grid)):
        s = space.grid[k]
        prod = {a: U.jump_at(a, s) * V.jump_at(a, s) for a in space.atoms}
        out[s] = space.average(k - 1, prod)
    return out


def _step_path(space: FilteredSpace, start: Mapping[str, Fraction], incs: Mapping[str, Mapping[Fraction, Fraction]], **flags) -> Path:
    trajs = {}
    for e in space.atoms:
        jumps, level = {}, start[e]
        for s in sorted(incs.get(e, {})):
            d = incs[e][s]
            if d:
                level += d
                jumps[s] = level
        trajs[e] = Trajectory.steps(start[e], jumps)
    return Path(trajs, **flags)


@dataclass(frozen=True, eq=False)
class DriftReport:
    drift: Path
    compensated: Path
    is_martingale: bool
    max_residual: Fraction
    enlarged: EnlargedSpace
    extras: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        doc = {
            "drift": self.drift.to_json(),
            "residual": fmt(self.max_residual),
            "verdict": "martingale" if self.is_martingale else "not a martingale",
        }
        doc.update(self.extras)
        return doc


def _require_martingale(Y: Path, space: FilteredSpace, name: str) -> None:
    chk = is_martingale(Y, space)
    if not chk.ok:
        raise NotMartingale(f"{name} is not an F-martingale ({chk.reason}, residual {chk.max_residual})")


def _guarded(num: Fraction, den: Fraction) -> Fraction:
    return num / den if den > 0 else _ZERO


def _report(drift_incs, Y: Path, G, enl: EnlargedSpace) -> DriftReport:
    sp = enl.space
    zero = {e: _ZERO for e in sp.atoms}
    drift = _step_path(sp, zero, drift_incs, predictable=True)
    y0 = {e: Y.at(a, _ZERO) for e, a in enl.back.items()}
    gy_incs = {}
    for e, a in enl.back.items():
        gy_incs[e] = {s: G(e, s) * Y.jump_at(a, s) for s in enl.base.grid[1:]}
    gy = _step_path(sp, y0, gy_incs)
    compensated = gy - drift
    chk = is_martingale(compensated, sp)
    return DriftReport(drift, compensated, chk.ok, chk.max_residual, enl)


def _integrand(G: Mapping | None, enl: EnlargedSpace) -> Callable[[str, Fraction], Fraction]:
    if G is None:
        return lambda e, s: _ONE
    sp = enl.space
    for s, vals in G.items():
        if not sp.is_measurable(sp.index_before(s), {e: vals.get(e, _ONE) for e in sp.atoms}):
            raise ValueError(f"integrand is not predictable at time {s}")
    return lambda e, s: to_fraction(G.get(s, {}).get(e, _ONE))


def _canonical_index(system: ExhaustingSystem) -> dict[Time, int]:
    return {T.value[next(iter(T.value))]: n for n, T in enumerate(system.T)}


def drift_thin(Y: Path, tau: RandomTime, space: FilteredSpace, G: Mapping | None = None) -> DriftReport:
    """Decomposition of ``G . Y`` in the progressive enlargement by a thin time.

    Before ``tau`` the drift increments are ``G d<Y, m> / Z_-``; after ``T_n``
    on ``C_n`` they are ``G d<Y, z^n> / z^n_-``.  ``G`` maps grid times to
    per-enlarged-atom values (missing entries are 1) and must be predictable.
    """
    _require_atomic(tau)
    _require_martingale(Y, space, "Y")
    enl = enlarge_progressive(space, tau)
    b = associated_processes(tau, space)
    system = exhausting_system(tau, space)
    idx = _canonical_index(system)
    Bm = bracket_jumps(Y, b.m, space)
    Bz = [bracket_jumps(Y, zn, space) for zn in system.z]
    g = _integrand(G, enl)
    incs = {}
    for e, a in enl.back.items():
        v = enl.label[e]
        row = {}
        for s in space.grid[1:]:
            d = _ZERO
            if s <= v:
                d += _guarded(Bm[s][a], b.Z.left_at(a, s))
            elif v != INF:
                n = idx[v]
                d += _guarded(Bz[n][s][a], system.z[n].left_at(a, s))
            row[s] = g(e, s) * d
        incs[e] = row
    return _report(incs, Y, g, enl)


def _jacod_incs(X: Path, enl: EnlargedSpace, z_of: Callable[[str], Path]) -> dict:
    base = enl.base
    cache: dict = {}
    incs = {}
    for e, a in enl.back.items():
        zn = z_of(e)
        if id(zn) not in cache:
            cache[id(zn)] = bracket_jumps(X, zn, base)
        B = cache[id(zn)]
        incs[e] = {s: _guarded(B[s][a], zn.left_at(a, s)) for s in base.grid[1:]}
    return incs


def drift_jacod(X: Path, C, space: FilteredSpace) -> DriftReport:
    """Decomposition of ``X`` in the initial enlargement by a partition ``C``."""
    _require_martingale(X, space, "X")
    events = C.C if isinstance(C, ExhaustingSystem) else list(C)
    if isinstance(C, ExhaustingSystem):
        zs = list(C.z)
    else:
        zs = [martingale_of({a: event_mass(ev, a) for a in space.atoms}, space) for ev in events]
    enl = enlarge_initial(space, events)
    incs = _jacod_incs(X, enl, lambda e: zs[enl.label[e]])
    return _report(incs, X, lambda e, s: _ONE, enl)


def drift_honest(M: Path, tau: RandomTime, space: FilteredSpace) -> DriftReport:
    """Decomposition of ``M`` in ``F^tau`` for an honest time.

    Before ``tau`` the increments are ``d<M, m> / Z_-``, after it
    ``-d<M, m> / (1 - Z_-)``.  The report also records whether the result
    coincides pathwise with :func:`drift_thin` for ``G = 1``.
    """
    if not is_honest(tau, space).honest:
        raise NotHonest("random time is not honest")
    _require_atomic(tau)
    _require_martingale(M, space, "M")
    enl = enlarge_progressive(space, tau)
    b = associated_processes(tau, space)
    Bm = bracket_jumps(M, b.m, space)
    incs = {}
    for e, a in enl.back.items():
        v = enl.label[e]
        row = {}
        for s in space.grid[1:]:
            zl = b.Z.left_at(a, s)
            row[s] = _guarded(Bm[s][a], zl) if s <= v else -_guarded(Bm[s][a], 1 - zl)
        incs[e] = row
    rep = _report(incs, M, lambda e, s: _ONE, enl)
    thin = drift_thin(M, tau, space)
    rep.extras["coincides_with_thin"] = rep.drift.same(thin.drift)
    return rep


def restriction_consistency(Y: Path, tau: RandomTime, space: FilteredSpace) -> MartingaleCheck:
    """Project the ``F^C``-compensated ``Y`` onto ``F^tau`` and compare.

    The difference with the ``F^tau``-compensated ``Y`` must be an
    ``F^tau``-martingale.
    """
    thin = drift_thin(Y, tau, space)
    prog = thin.enlarged
    init = initial_on_progressive(prog)
    system = exhausting_system(tau, space)
    idx = _canonical_index(system)
    incs = _jacod_incs(Y, init, lambda e: system.z[idx[init.label[e]]])
    jac = _report(incs, Y, lambda e, s: _ONE, init)
    if not jac.is_martingale:
        return MartingaleCheck(False, jac.max_residual, "F^C compensation failed")
    restricted = project(jac.compensated, "optional", prog.space)
    return is_martingale(restricted - thin.compensated, prog.space)


# ---------------------------------------------------------------------------
# Key lemma


def key_lemma_evaluate(X: RandomVariable, tau: RandomTime, space: FilteredSpace, t) -> dict:
    """Compare ``E[X | F^tau_t]`` with ``E[X 1_{C_n} | F_t] / z^n_t`` after ``T_n``."""
    t = to_fraction(t)
    _require_atomic(tau)
    enl = enlarge_progressive(space, tau)
    sp = enl.space
    xbar = enl.lift_variable(X)
    system = exhausting_system(tau, space)
    idx = _canonical_index(system)
    # E[X 1_{C_n} | atom] and z^n per atom
    num = {}
    for n, ev in enumerate(system.C):
        num[n] = {a: sum((X.integral(a, lo, hi) for lo, hi in ev.get(a, ())), _ZERO) for a in space.atoms}

    def rhs(n, a, s):
        kb = space.index_at(s)
        top = space.average(kb, num[n])[a]
        return top / system.z[n].at(a, s)

    def residual_at(s, horizon):
        lhs = sp.average(sp.index_at(s), xbar)
        worst = _ZERO
        for e, a in enl.back.items():
            v = enl.label[e]
            if v == INF or v > horizon:
                continue
            worst = max(worst, abs(lhs[e] - rhs(idx[v], a, s)))
        return worst

    main = residual_at(t, t)
    corollary = _ZERO
    for s in sp.grid:
        if s <= t:
            corollary = max(corollary, residual_at(t, s))
    return {"time": fmt(t), "residual": main, "corollary_residual": corollary}


# ---------------------------------------------------------------------------
# Immersion


def _survival_given_terminal(tau: RandomTime, space: FilteredSpace, t: Fraction) -> dict[str, Fraction]:
    surv = {}
    for a, ps in tau.pieces.items():
        s = _ZERO
        for p in ps:
            if p.is_atom:
                if p.start > t:
                    s += p.mass
            else:
                s += p.mass_in(t, p.end, closed_right=True) if t < p.end else _ZERO
        surv[a] = s
    return space.average(space.last, surv)


def z_criterion(tau: RandomTime, space: FilteredSpace) -> bool:
    """``Z_t = P(tau > t | F_inf)`` at every checkpoint."""
    b = associated_processes(tau, space)
    for t in b.checkpoints():
        target = _survival_given_terminal(tau, space, t)
        if any(b.Z.at(a, t) != target[a] for a in space.atoms):
            return False
    return True


def immersion_test(tau: RandomTime, space: FilteredSpace) -> dict:
    report: dict = {"criterion": z_criterion(tau, space)}
    tau1, tau2 = thin_thick_decompose(tau, space)
    p1, p2 = z_criterion(tau1, space), z_criterion(tau2, space)
    report["parts"] = {"tau1": p1, "tau2": p2}
    report["decomposition_consistent"] = report["criterion"] == (p1 and p2)
    if tau.has_density():
        return report
    system = exhausting_system(tau, space)
    cond_a = cond_b = cond_c = True
    checks = associated_processes(tau, space).checkpoints()
    w = space.weight
    for n in range(1, len(system.T)):
        Tn, zn = system.T[n], system.z[n]
        for a in space.atoms:
            ta = Tn[a]
            if zn.at(a, INF) != zn.at(a, ta):
                cond_a = False
            if any(zn.at(a, t) != zn.at(a, min(t, ta)) for t in checks):
                cond_b = False
        mass_c = {a: event_mass(system.C[n], a) for a in space.atoms}
        for H in sigma_at_stopping_time(Tn, space):
            pH = sum((w[a] for a in H), _ZERO)
            pCH = sum((w[a] * mass_c[a] for a in H), _ZERO)
            for E in space.cells(space.last):
                EH = E & H
                pEH = sum((w[a] for a in EH), _ZERO)
                pCEH = sum((w[a] * mass_c[a] for a in EH), _ZERO)
                if pCEH * pH != pCH * pEH:
                    cond_c = False
    report["conditions"] = {"a": cond_a, "b": cond_b, "c": cond_c}
    report["conditions_consistent"] = cond_a == cond_b == cond_c == report["criterion"]
    # Direct check: martingales of terminal events stay martingales in F^tau.
    enl = enlarge_progressive(space, tau)
    direct = True
    for E in space.cells(space.last):
        mart = enl.lift(martingale_of({a: _ONE if a in E else _ZERO for a in space.atoms}, space))
        if not is_martingale(mart, enl.space).ok:
            direct = False
            break
    report["direct"] = direct
    return report


# ---------------------------------------------------------------------------
# F^C and F^tau after tau


def project_lemma_check(Y: Path, tau: RandomTime, space: FilteredSpace) -> dict:
    """``Y`` vanishing on ``[0, tau]``: martingale in ``F^C`` iff in ``F^tau``."""
    _require_atomic(tau)
    prog = enlarge_progressive(space, tau)
    init = initial_on_progressive(prog)
    for e in prog.space.atoms:
        v = prog.label[e]
        for t in Y[e].checkpoints():
            if t <= v and Y.at(e, t) != 0:
                raise ValueError(f"Y does not vanish on [0, tau] at {e!r}, t={t}")
    in_c = is_martingale(Y, init.space).ok
    in_tau = is_martingale(Y, prog.space).ok
    tau_e = {e: prog.label[e] for e in prog.space.atoms}
    checked, ok = 0, True
    for k, s in enumerate(init.space.grid):
        for cell in init.space.cells(k):
            theta = {e: (s if e in cell else INF) for e in init.space.atoms}
            joined = {e: max(theta[e], tau_e[e]) for e in init.space.atoms}
            checked += 1
            if not is_stopping_time(StoppingTime(joined), prog.space).stopping:
                ok = False
    return {
        "martingale_in_FC": in_c,
        "martingale_in_Ftau": in_tau,
        "agree": in_c == in_tau,
        "stopping_checked": checked,
        "max_with_tau_is_stopping": ok,
    }


def _u_partition(enl: EnlargedSpace, k: int) -> set:
    out = set()
    for cell in enl.space.cells(k):
        pieces = []
        for e in cell:
            pieces += [(enl.back[e], lo, hi) for lo, hi in enl.slices[e]]
        by_atom: dict = {}
        for a, lo, hi in pieces:
            by_atom.setdefault(a, []).append((lo, hi))
        out.add(frozenset((a, _merge_slices(v)) for a, v in by_atom.items()))
    return out


def progressive_equals_iterated(tau: RandomTime, space: FilteredSpace) -> bool:
    """``F^tau`` against the enlargement by ``tau1`` followed by ``tau2``."""
    _require_atomic(tau)
    tau1, tau2 = thin_thick_decompose(tau, space)
    direct = enlarge_progressive(space, tau)
    first = enlarge_progressive(space, tau1)
    second = enlarge_progressive(first.space, first.lift_time(tau2))
    # Compose the two back-maps so slices refer to base atoms.
    back, slices = {}, {}
    for e2, e1 in second.back.items():
        a = first.back[e1]
        back[e2] = a
        acc = []
        for lo, hi in second.slices[e2]:
            # rescaled positions inside e1 map back through e1's slices
            acc += _unscale(first.slices[e1], lo, hi)
        slices[e2] = _merge_slices(acc)
    iterated = EnlargedSpace(second.space, space, back, second.label, slices, "progressive")
    grid = sorted(set(direct.space.grid) | set(iterated.space.grid))
    for s in grid:
        if _u_partition(direct, direct.space.index_at(s)) != _u_partition(iterated, iterated.space.index_at(s)):
            return False
    return True


def _unscale(sl: Slices, lo: Fraction, hi: Fraction) -> list:
    mass = sum((b - a for a, b in sl), _ZERO)
    lo, hi = lo * mass, hi * mass
    out, pos = [], _ZERO
    for a, b in sl:
        x, y = max(lo, pos), min(hi, pos + b - a)
        if x < y:
            out.append((a + x - pos, a + y - pos))
        pos += b - a
    return out
