"""Random times, their associated processes and the thin/thick machinery.

A random time is stored per atom as a list of :class:`Piece` objects that
partition the auxiliary uniform ``u``.  On an atom piece the time is
constant (possibly infinite); on a density piece it increases affinely in
``u``, so the conditional law there is uniform on ``[start, end]``.  Keeping
the ``u`` coordinate (rather than only the law) makes pointwise statements
such as ``tau = min(tau1, tau2)`` meaningful.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Callable, Iterable, Mapping, Sequence

from .errors import (
    DegenerateDenominator,
    GraphsNotDisjoint,
    InvalidRandomTime,
    MismatchedTime,
    NotCovering,
    NotStoppingTime,
    NotThin,
    SchemaError,
)
from .paths import Path, Trajectory
from .projections import RawProcess, dual_project, project
from .rational import INF, Time, fmt, fmt_time, to_fraction, to_time
from .space import FilteredSpace, StoppingTime, is_stopping_time

__all__ = [
    "Piece",
    "RandomTime",
    "Bundle",
    "Classification",
    "ExhaustingSystem",
    "associated_processes",
    "classify",
    "thin_thick_decompose",
    "triple_decompose",
    "exhausting_system",
    "merge_exhausting",
    "reconstruction_failures",
    "dual_equality_test",
    "pseudo_stopping_test",
    "cross_conditional_check",
    "martingale_of",
    "read_bundle_csv",
    "bundle_failures",
]

_ZERO, _ONE = Fraction(0), Fraction(1)


@dataclass(frozen=True)
class Piece:
    lo: Fraction
    hi: Fraction
    start: Time
    end: Time

    @property
    def mass(self) -> Fraction:
        return self.hi - self.lo

    @property
    def is_atom(self) -> bool:
        return self.start == self.end

    @property
    def is_finite_atom(self) -> bool:
        return self.start == self.end != INF

    def time_at(self, u: Fraction) -> Time:
        if self.is_atom:
            return self.start
        return self.start + (u - self.lo) * (self.end - self.start) / (self.hi - self.lo)

    def split(self, u: Fraction) -> tuple["Piece", "Piece"]:
        mid = self.time_at(u)
        return Piece(self.lo, u, self.start, mid), Piece(u, self.hi, mid, self.end)

    def mass_in(self, a: Time, b: Time, closed_right: bool = False) -> Fraction:
        """Mass of ``{tau in [a, b)}`` (or ``[a, b]``) carried by this piece."""
        if self.is_atom:
            t = self.start
            inside = a <= t < b or (closed_right and t == b)
            return self.mass if inside else _ZERO
        lo, hi = max(a, self.start), min(b, self.end)
        if hi <= lo:
            return _ZERO
        return self.mass * (hi - lo) / (self.end - self.start)


def _check_pieces(atom: str, pieces: Sequence[Piece]) -> None:
    pos = _ZERO
    for p in pieces:
        if p.lo != pos or p.hi <= p.lo:
            raise InvalidRandomTime(f"pieces at {atom!r} do not partition [0, 1]")
        if not p.is_atom:
            if p.end == INF or p.start > p.end or p.start < 0:
                raise InvalidRandomTime(f"bad density piece at {atom!r}: {p}")
        elif p.start != INF and p.start < 0:
            raise InvalidRandomTime(f"negative time at {atom!r}")
        pos = p.hi
    if pos != 1:
        raise InvalidRandomTime(f"pieces at {atom!r} carry mass {pos}, not 1")


@dataclass(frozen=True, eq=False)
class RandomTime:
    pieces: Mapping[str, tuple[Piece, ...]] = field(hash=False)

    def __post_init__(self):
        for atom, ps in self.pieces.items():
            _check_pieces(atom, ps)

    # -- constructors ----------------------------------------------------

    @classmethod
    def from_values(cls, values: Mapping[str, Time]) -> "RandomTime":
        return cls({a: (Piece(_ZERO, _ONE, to_time(t), to_time(t)),) for a, t in values.items()})

    @classmethod
    def constant(cls, space: FilteredSpace, t) -> "RandomTime":
        t = to_time(t)
        return cls.from_values({a: t for a in space.atoms})

    @classmethod
    def from_stopping_time(cls, T: StoppingTime) -> "RandomTime":
        return cls.from_values(T.value)

    @classmethod
    def from_law(
        cls,
        laws: Mapping[str, tuple[Sequence[tuple[Time, Fraction]], Sequence[tuple[Fraction, Fraction, Fraction]]]],
    ) -> "RandomTime":
        """Build from per-atom ``(atoms, density)`` laws.

        ``atoms`` is a list (or mapping) of ``(time, prob)`` (time may be infinite) and
        ``density`` a list of ``(a, b, level)`` step-density segments.  The
        uniform is laid out as finite atoms in increasing order, then the
        density segments, then the mass at infinity.
        """
        out = {}
        for atom, (atoms, density) in laws.items():
            merged: dict = {}
            for t, p in atoms.items() if isinstance(atoms, Mapping) else atoms:
                t, p = to_time(t), to_fraction(p)
                if p < 0:
                    raise InvalidRandomTime(f"negative atom mass at {atom!r}")
                merged[t] = merged.get(t, _ZERO) + p
            segs = sorted((to_fraction(a), to_fraction(b), to_fraction(l)) for a, b, l in density)
            for (a1, b1, _), (a2, _, _) in zip(segs, segs[1:]):
                if a2 < b1:
                    raise InvalidRandomTime(f"overlapping density segments at {atom!r}")
            pieces, pos = [], _ZERO
            for t in sorted(x for x in merged if x != INF):
                if merged[t]:
                    pieces.append(Piece(pos, pos + merged[t], t, t))
                    pos += merged[t]
            for a, b, level in segs:
                if level < 0 or b <= a:
                    raise InvalidRandomTime(f"bad density segment ({a}, {b}, {level}) at {atom!r}")
                if level:
                    mass = level * (b - a)
                    pieces.append(Piece(pos, pos + mass, a, b))
                    pos += mass
            if merged.get(INF):
                pieces.append(Piece(pos, pos + merged[INF], INF, INF))
                pos += merged[INF]
            if pos != 1:
                raise InvalidRandomTime(f"law at {atom!r} has total mass {pos}, not 1")
            out[atom] = tuple(pieces)
        return cls(out)

    @classmethod
    def from_json(cls, data: Mapping, space: FilteredSpace) -> "RandomTime":
        if not isinstance(data, Mapping) or "per_leaf" not in data:
            raise SchemaError("missing key 'per_leaf'", key="per_leaf")
        laws: dict = {}
        try:
            for entry in data["per_leaf"]:
                leaf = entry["leaf"]
                ids = [leaf] if isinstance(leaf, str) else list(leaf)
                law = (
                    [(t, p) for t, p in entry.get("atoms", [])],
                    [(a, b, l) for a, b, l in entry.get("density", [])],
                )
                for a in ids:
                    if a in laws:
                        raise SchemaError(f"atom {a!r} listed twice", key="leaf")
                    laws[str(a)] = law
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, SchemaError):
                raise
            key = exc.args[0] if isinstance(exc, KeyError) else None
            raise SchemaError(f"malformed random time: {exc!r}", key=key) from exc
        missing = set(space.atoms) - set(laws)
        if missing:
            raise SchemaError(f"no law for atoms {sorted(missing)}", key="per_leaf")
        extra = set(laws) - set(space.atoms)
        if extra:
            raise SchemaError(f"unknown atoms {sorted(extra)}", key="leaf")
        return cls.from_law({a: laws[a] for a in space.atoms})

    # -- laws ------------------------------------------------------------

    def law(self, atom: str) -> tuple[dict, list]:
        atoms: dict = {}
        density = []
        for p in self.pieces[atom]:
            if p.is_atom:
                atoms[p.start] = atoms.get(p.start, _ZERO) + p.mass
            else:
                density.append((p.start, p.end, p.mass / (p.end - p.start)))
        return atoms, sorted(density)

    def to_json(self) -> dict:
        rows = []
        for a in sorted(self.pieces):
            atoms, density = self.law(a)
            rows.append(
                {
                    "leaf": [a],
                    "atoms": [[fmt_time(t), fmt(p)] for t, p in sorted(atoms.items(), key=lambda kv: kv[0])],
                    "density": [[fmt(x), fmt(y), fmt(l)] for x, y, l in density],
                }
            )
        return {"per_leaf": rows}

    @cached_property
    def finite_support(self) -> tuple[Fraction, ...]:
        """Finite atom times, sorted."""
        return tuple(sorted({p.start for ps in self.pieces.values() for p in ps if p.is_finite_atom}))

    @cached_property
    def density_breakpoints(self) -> tuple[Fraction, ...]:
        pts = set()
        for ps in self.pieces.values():
            for p in ps:
                if not p.is_atom:
                    pts.update((p.start, p.end))
        return tuple(sorted(pts))

    def has_density(self) -> bool:
        return any(not p.is_atom for ps in self.pieces.values() for p in ps)

    def is_infinite(self) -> bool:
        return all(p.start == INF and p.is_atom for ps in self.pieces.values() for p in ps)

    def tree_values(self) -> dict[str, Time] | None:
        """Per-atom value if the time ignores the auxiliary uniform."""
        out = {}
        for a, ps in self.pieces.items():
            vals = {p.start for p in ps}
            if len(vals) != 1 or not all(p.is_atom for p in ps):
                return None
            out[a] = vals.pop()
        return out

    def to_stopping_time(self) -> StoppingTime:
        vals = self.tree_values()
        if vals is None:
            raise NotStoppingTime("time depends on the auxiliary coordinate")
        return StoppingTime(vals)

    def masses(self, space: FilteredSpace) -> tuple[Fraction, Fraction, Fraction]:
        """Total (finite atom, density, infinity) masses."""
        w = space.weight
        fa = de = inf = _ZERO
        for a, ps in self.pieces.items():
            for p in ps:
                if p.is_finite_atom:
                    fa += w[a] * p.mass
                elif p.is_atom:
                    inf += w[a] * p.mass
                else:
                    de += w[a] * p.mass
        return fa, de, inf

    # -- pointwise operations -------------------------------------------

    def restrict(self, keep: Callable[[str, Piece], bool]) -> "RandomTime":
        """Same time on pieces where ``keep`` holds, infinity elsewhere."""
        return RandomTime(
            {
                a: tuple(p if keep(a, p) else Piece(p.lo, p.hi, INF, INF) for p in ps)
                for a, ps in self.pieces.items()
            }
        )

    def refined(self, cuts: Iterable[Fraction]) -> dict[str, list[Piece]]:
        """Pieces with densities split wherever the time crosses a cut."""
        cuts = sorted(set(cuts))
        out = {}
        for a, ps in self.pieces.items():
            res = []
            for p in ps:
                if p.is_atom:
                    res.append(p)
                    continue
                cur = p
                for c in cuts:
                    if cur.start < c < cur.end:
                        u = cur.lo + (c - cur.start) * (cur.hi - cur.lo) / (cur.end - cur.start)
                        left, cur = cur.split(u)
                        res.append(left)
                res.append(cur)
            out[a] = res
        return out

    def _common(self, other: "RandomTime"):
        for a, ps in self.pieces.items():
            qs = other.pieces[a]
            us = sorted({p.lo for p in ps} | {p.hi for p in ps} | {q.lo for q in qs} | {q.hi for q in qs})
            for lo, hi in zip(us, us[1:]):
                p = next(x for x in ps if x.lo <= lo and hi <= x.hi)
                q = next(x for x in qs if x.lo <= lo and hi <= x.hi)
                yield a, lo, hi, (p.time_at(lo), p.time_at(hi)), (q.time_at(lo), q.time_at(hi))

    def _combine(self, other: "RandomTime", pick_min: bool) -> "RandomTime":
        if set(self.pieces) != set(other.pieces):
            raise ValueError("random times live on different atom sets")
        out: dict[str, list[Piece]] = {a: [] for a in self.pieces}
        for a, lo, hi, (s1, e1), (s2, e2) in self._common(other):
            parts = [(lo, hi, s1, e1, s2, e2)]
            if INF not in (s1, s2) and (s1 - s2) * (e1 - e2) < 0:
                u = lo + (hi - lo) * (s1 - s2) / ((s1 - s2) - (e1 - e2))
                x = s1 + (u - lo) * (e1 - s1) / (hi - lo)
                parts = [(lo, u, s1, x, s2, x), (u, hi, x, e1, x, e2)]
            for plo, phi, a1, b1, a2, b2 in parts:
                m1, m2 = _mid(a1, b1), _mid(a2, b2)
                first = (m1 <= m2) if pick_min else (m1 >= m2)
                s, e = (a1, b1) if first else (a2, b2)
                out[a].append(Piece(plo, phi, s, e))
        return RandomTime({a: tuple(ps) for a, ps in out.items()})

    def minimum(self, other: "RandomTime") -> "RandomTime":
        return self._combine(other, pick_min=True)

    def maximum(self, other: "RandomTime") -> "RandomTime":
        return self._combine(other, pick_min=False)

    def same(self, other: "RandomTime") -> bool:
        """Pointwise equality on atoms x [0, 1]."""
        if set(self.pieces) != set(other.pieces):
            return False
        return all(x == y for _, _, _, x, y in self._common(other))

    def is_everywhere_infinite(self) -> bool:
        return self.is_infinite()


def _mid(a: Time, b: Time) -> Time:
    return INF if a == INF else (a + b) / 2


# ---------------------------------------------------------------------------
# Associated processes


def _indicator(p: Piece, left_continuous: bool = False) -> Trajectory:
    """``1_{[tau, inf)}`` (or ``1_{(tau, inf)}``) on one piece."""
    z, o = _ZERO, _ONE
    if p.is_atom:
        t = p.start
        if t == INF:
            return Trajectory.constant(0)
        jump_now = z if left_continuous else o
        if t == 0:
            return Trajectory((z,), (z,), (jump_now,), (o,), (z,))
        return Trajectory((z, t), (z, z), (z, jump_now), (z, o), (z, z))
    s, e = p.start, p.end
    r = 1 / (e - s)
    if s == 0:
        return Trajectory((z, e), (z, o), (z, o), (z, o), (r, z))
    return Trajectory((z, s, e), (z, z, o), (z, z, o), (z, z, o), (z, r, z))


def indicator_process(tau: RandomTime, left_continuous: bool = False) -> RawProcess:
    return RawProcess(
        {a: tuple((p.mass, _indicator(p, left_continuous)) for p in ps) for a, ps in tau.pieces.items()},
        increasing=True,
    )


def _complement(raw: RawProcess) -> RawProcess:
    one = Trajectory.constant(1)
    return RawProcess(
        {a: tuple((w, one - tr) for w, tr in ps) for a, ps in raw.pieces.items()}
    )


def martingale_of(values: Mapping[str, Fraction], space: FilteredSpace) -> Path:
    """The martingale ``E[X | F_t]`` of a tree variable ``X``."""
    return project(Path({a: Trajectory.constant(values[a]) for a in space.atoms}), "optional", space)


@dataclass(frozen=True, eq=False)
class Bundle:
    tau: RandomTime
    space: FilteredSpace
    Z: Path
    Ztilde: Path
    Ao: Path
    Ap: Path
    m: Path

    def paths(self) -> dict[str, Path]:
        return {"Z": self.Z, "Ztilde": self.Ztilde, "Ao": self.Ao, "Ap": self.Ap, "m": self.m}

    @cached_property
    def _checkpoints(self) -> tuple[Fraction, ...]:
        pts = set(self.space.grid)
        for p in self.paths().values():
            pts.update(p.breakpoints())
        pts = sorted(pts)
        mids = [(a + b) / 2 for a, b in zip(pts, pts[1:])]
        return tuple(sorted(set(pts) | set(mids) | {pts[-1] + 1}))

    def checkpoints(self) -> list[Fraction]:
        return list(self._checkpoints)

    def failures(self) -> list[str]:
        """Tags of the structural identities that do not hold exactly."""
        return bundle_failures(self.space, self.Z, self.Ztilde, self.Ao, self.Ap, self.m)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["process", "atom", "time", "left", "value", "intercept", "slope"])
        for name, p in self.paths().items():
            w.writerows(p.csv_rows(name))
        return buf.getvalue()


BUNDLE_PROCESSES = ("Z", "Ztilde", "Ao", "Ap", "m")


def read_bundle_csv(text: str, space: FilteredSpace) -> dict[str, Path]:
    """Parse the CSV written by :meth:`Bundle.to_csv` back into paths."""
    rows: dict[str, dict[str, list]] = {}
    reader = csv.DictReader(io.StringIO(text))
    need = ("process", "atom", "time", "left", "value", "intercept", "slope")
    for key in need:
        if key not in (reader.fieldnames or ()):
            raise SchemaError(f"missing column {key!r}", key=key)
    for row in reader:
        rows.setdefault(row["process"], {}).setdefault(row["atom"], []).append(row)
    out = {}
    for name in BUNDLE_PROCESSES:
        if name not in rows:
            raise SchemaError(f"missing process {name!r}", key=name)
        trajs = {}
        for a in space.atoms:
            if a not in rows[name]:
                raise SchemaError(f"process {name!r} lacks atom {a!r}", key=a)
            rs = sorted(rows[name][a], key=lambda r: to_fraction(r["time"]))
            try:
                trajs[a] = Trajectory.from_segments(
                    *([to_fraction(r[k]) for r in rs] for k in ("time", "left", "value", "intercept", "slope"))
                )
            except (ValueError, ZeroDivisionError) as exc:
                raise SchemaError(f"process {name!r}, atom {a!r}: {exc}", key=name) from exc
        out[name] = Path(trajs)
    return out


def bundle_failures(space, Z: Path, Zt: Path, Ao: Path, Ap: Path, m: Path) -> list[str]:
    fails: set[str] = set()
    pts = set(space.grid)
    for p in (Z, Zt, Ao, Ap, m):
        pts.update(p.breakpoints())
    pts = sorted(pts)
    checks = sorted(set(pts) | {(a + b) / 2 for a, b in zip(pts, pts[1:])} | {pts[-1] + 1})
    for a in space.atoms:
        for t in checks:
            z, zt, ao, mm = Z.at(a, t), Zt.at(a, t), Ao.at(a, t), m.at(a, t)
            if not (0 <= z <= 1 and 0 <= zt <= 1):
                fails.add("bundle:range")
            if ao != mm - z:
                fails.add("bundle:Ao=m-Z")
            if Ao.jump_at(a, t) != zt - z:
                fails.add("bundle:dAo=Zt-Z")
            if zt != Z.left_at(a, t) + m.jump_at(a, t):
                fails.add("bundle:Zt=Z-+dm")
        if Ao[a].left[0] != 0 or Ap[a].left[0] != 0:
            fails.add("bundle:A0-=0")
        if not (Ao[a].is_increasing() and Ap[a].is_increasing()):
            fails.add("bundle:increasing")
        mt = m[a]
        if any(mt.slope) or not mt.is_right_continuous() or not set(mt.simplify().times) <= set(space.grid):
            fails.add("bundle:m-flat")
    for p in (Z, Zt, Ao, Ap, m):
        for t in checks:
            k = space.index_at(t)
            if not space.is_measurable(k, p.section(t)):
                fails.add("bundle:adapted")
    return sorted(fails)


@lru_cache(maxsize=512)
def associated_processes(tau: RandomTime, space: FilteredSpace) -> Bundle:
    A = indicator_process(tau)
    A_minus = indicator_process(tau, left_continuous=True)
    Z = project(_complement(A), "optional", space)
    Zt = project(_complement(A_minus), "optional", space)
    Ao = dual_project(A, "optional", space)
    Ap = dual_project(A, "predictable", space)
    m = Z + Ao
    return Bundle(tau, space, Z, Zt, Ao, Ap, m)


# ---------------------------------------------------------------------------
# Classification and decomposition


@dataclass(frozen=True)
class Classification:
    thin_mass: Fraction
    thick_mass: Fraction
    kind: str

    def to_json(self) -> dict:
        return {"thin_mass": fmt(self.thin_mass), "thick_mass": fmt(self.thick_mass), "kind": self.kind}


def _thin_piece(bundle: Bundle, atom: str, p: Piece) -> bool:
    return p.is_finite_atom and bundle.Ao.jump_at(atom, p.start) > 0


def classify(tau: RandomTime, space: FilteredSpace) -> Classification:
    b = associated_processes(tau, space)
    w = space.weight
    thin = thick = _ZERO
    for a, ps in tau.pieces.items():
        for p in ps:
            if p.start == INF:
                continue
            if p.is_atom:
                if b.Ao.jump_at(a, p.start) > 0:
                    thin += w[a] * p.mass
                else:
                    thick += w[a] * p.mass
            else:
                # A° jumps at finitely many times, a null set for a density.
                thick += w[a] * p.mass
    atom_mass, dens_mass, _ = tau.masses(space)
    assert thin == atom_mass and thick == dens_mass, "jump criterion disagrees with the atom/density split"
    if thin == 0 and thick == 0:
        kind = "infinite"
    elif thick == 0:
        kind = "thin"
    elif thin == 0:
        kind = "thick"
    else:
        kind = "mixed"
    return Classification(thin, thick, kind)


@lru_cache(maxsize=512)
def thin_thick_decompose(tau: RandomTime, space: FilteredSpace) -> tuple[RandomTime, RandomTime]:
    b = associated_processes(tau, space)
    tau1 = tau.restrict(lambda a, p: _thin_piece(b, a, p))
    tau2 = tau.restrict(lambda a, p: not p.is_atom and not _thin_piece(b, a, p))
    return tau1, tau2


def triple_decompose(tau: RandomTime, space: FilteredSpace) -> tuple[RandomTime, RandomTime, RandomTime]:
    b = associated_processes(tau, space)

    def accessible(a, p):
        return _thin_piece(b, a, p) and b.Ap.jump_at(a, p.start) > 0

    def inaccessible(a, p):
        return _thin_piece(b, a, p) and b.Ap.jump_at(a, p.start) == 0

    _, tau2 = thin_thick_decompose(tau, space)
    return tau.restrict(accessible), tau.restrict(inaccessible), tau2


# ---------------------------------------------------------------------------
# Exhausting systems


Event = Mapping[str, tuple[tuple[Fraction, Fraction], ...]]


def event_mass(event: Event, atom: str) -> Fraction:
    return sum((hi - lo for lo, hi in event.get(atom, ())), _ZERO)


def _intersect(e1: Event, e2: Event) -> dict:
    out = {}
    for a in set(e1) | set(e2):
        res = []
        for lo1, hi1 in e1.get(a, ()):
            for lo2, hi2 in e2.get(a, ()):
                lo, hi = max(lo1, lo2), min(hi1, hi2)
                if lo < hi:
                    res.append((lo, hi))
        out[a] = tuple(sorted(res))
    return out


@dataclass(frozen=True, eq=False)
class ExhaustingSystem:
    """Stopping times ``T[n]``, events ``C[n]`` and martingales ``z[n]``.

    Index 0 is reserved for ``T_0 = inf`` and ``C_0 = {tau = inf}``.
    ``labels`` records where each entry came from (``n`` or ``(n, m)``).
    """

    tau: RandomTime
    space: FilteredSpace
    T: tuple[StoppingTime, ...]
    C: tuple[Event, ...]
    z: tuple[Path, ...]
    labels: tuple = ()

    def mass(self, n: int) -> Fraction:
        w = self.space.weight
        return sum((w[a] * event_mass(self.C[n], a) for a in self.space.atoms), _ZERO)

    def to_json(self) -> dict:
        return {
            "T": [T.to_json() for T in self.T],
            "C_mass": [fmt(self.mass(n)) for n in range(len(self.C))],
            "labels": [list(l) if isinstance(l, tuple) else l for l in self.labels],
        }


def _events_for(tau: RandomTime, T: Sequence[StoppingTime]) -> list[dict]:
    """``C_0 = {tau = inf}`` and ``C_n = {tau = T_n < inf}`` as u-intervals."""
    events = []
    for n, Tn in enumerate(T):
        ev = {}
        for a, ps in tau.pieces.items():
            if n == 0:
                ev[a] = tuple((p.lo, p.hi) for p in ps if p.is_atom and p.start == INF)
            else:
                t = Tn[a]
                ev[a] = tuple((p.lo, p.hi) for p in ps if p.is_finite_atom and p.start == t)
        events.append(ev)
    return events


def _validate_system(tau: RandomTime, space: FilteredSpace, T: Sequence[StoppingTime], C: Sequence[Event]) -> None:
    for n, Tn in enumerate(T[1:], start=1):
        if not is_stopping_time(Tn, space).stopping:
            raise NotStoppingTime(f"T_{n} is not a stopping time")
    for n in range(1, len(T)):
        for m in range(n + 1, len(T)):
            for a in space.atoms:
                if T[n][a] != INF and T[n][a] == T[m][a]:
                    raise GraphsNotDisjoint(f"graphs of T_{n} and T_{m} meet at atom {a!r}", pair=(n, m))
    w = space.weight
    covered = sum((w[a] * event_mass(ev, a) for ev in C for a in space.atoms), _ZERO)
    if covered != 1:
        raise NotCovering(f"events cover mass {covered}, not 1", mass=covered)


def _build(tau, space, T, C, labels) -> ExhaustingSystem:
    z = tuple(martingale_of({a: event_mass(ev, a) for a in space.atoms}, space) for ev in C)
    return ExhaustingSystem(tau, space, tuple(T), tuple(C), z, tuple(labels))


def exhausting_system(
    tau1: RandomTime, space: FilteredSpace, user_T: Sequence[StoppingTime] | None = None
) -> ExhaustingSystem:
    if tau1.has_density():
        cl = classify(tau1, space)
        raise NotThin(f"time has thick mass {cl.thick_mass}")
    if user_T is None:
        return _canonical_system(tau1, space)
    T = [StoppingTime.constant(space, INF)] + list(user_T)
    C = _events_for(tau1, T)
    _validate_system(tau1, space, T, C)
    return _build(tau1, space, T, C, range(len(T)))


@lru_cache(maxsize=512)
def _canonical_system(tau1: RandomTime, space: FilteredSpace) -> ExhaustingSystem:
    T = [StoppingTime.constant(space, t) for t in (INF, *tau1.finite_support)]
    C = _events_for(tau1, T)
    _validate_system(tau1, space, T, C)
    return _build(tau1, space, T, C, range(len(T)))


def merge_exhausting(sysA: ExhaustingSystem, sysB: ExhaustingSystem, space: FilteredSpace) -> ExhaustingSystem:
    if not sysA.tau.same(sysB.tau):
        raise MismatchedTime("the systems exhaust different random times")
    T = [sysA.T[0]]
    C = [_intersect(sysA.C[0], sysB.C[0])]
    labels: list = [(0, 0)]
    for n in range(1, len(sysA.T)):
        for m in range(1, len(sysB.T)):
            Tn, Sm = sysA.T[n], sysB.T[m]
            T.append(StoppingTime({a: Tn[a] if Tn[a] == Sm[a] else INF for a in space.atoms}))
            C.append(_intersect(sysA.C[n], sysB.C[m]))
            labels.append((n, m))
    _validate_system(sysA.tau, space, T, C)
    return _build(sysA.tau, space, T, C, labels)


def reconstruction_failures(system: ExhaustingSystem, bundle: Bundle) -> list[str]:
    """Check the representations of Z~, Z, A° and m through ``(T_n, z^n)``."""
    space = system.space
    fails = set()
    for a in space.atoms:
        for t in bundle.checkpoints():
            zt = z = ao = m = _ZERO
            for n, (Tn, zn) in enumerate(zip(system.T, system.z)):
                Tna = Tn[a]
                if t <= Tna:
                    zt += zn.at(a, t)
                if t < Tna:
                    z += zn.at(a, t)
                if n and Tna <= t:
                    ao += zn.at(a, Tna)
                m += zn.at(a, min(t, Tna))
            if zt != bundle.Ztilde.at(a, t):
                fails.add("reconstruct:Zt")
            if z != bundle.Z.at(a, t):
                fails.add("reconstruct:Z")
            if ao != bundle.Ao.at(a, t):
                fails.add("reconstruct:Ao")
            if m != bundle.m.at(a, t):
                fails.add("reconstruct:m")
        for n, zn in enumerate(system.z):
            for lo, hi in system.C[n].get(a, ()):
                Tna = system.T[n][a]
                for t in bundle.checkpoints():
                    if t > Tna:
                        break
                    if zn.at(a, t) <= 0 or zn.left_at(a, t) <= 0:
                        fails.add("exhaust:z>0")
    for t in bundle.checkpoints():
        for a in space.atoms:
            if sum((zn.at(a, t) for zn in system.z), _ZERO) != 1:
                fails.add("exhaust:sum-z")
    return sorted(fails)


# ---------------------------------------------------------------------------
# Tests derived from the bundle


def dual_equality_test(tau: RandomTime, space: FilteredSpace) -> dict:
    b = associated_processes(tau, space)
    witnesses = []
    pts = sorted(set(b.Ao.breakpoints()) | set(b.Ap.breakpoints()))
    for t in pts:
        k = space.index_at(t)
        for cell in sorted(space.cells(k), key=sorted):
            a = min(cell)
            ja, jp = b.Ao.jump_at(a, t), b.Ap.jump_at(a, t)
            diff = any(b.Ao.jump_at(x, t) != b.Ap.jump_at(x, t) for x in cell)
            if diff:
                witnesses.append(
                    {"time": fmt(t), "cell": sorted(cell), "optional_jump": fmt(ja), "predictable_jump": fmt(jp)}
                )
    equal = b.Ao.same(b.Ap)
    return {
        "equal": equal,
        "witnesses": witnesses,
        "totally_inaccessible_condition": "vacuous: every stopping time of a finite filtration is accessible",
    }


def pseudo_stopping_test(tau: RandomTime, space: FilteredSpace) -> bool:
    b = associated_processes(tau, space)
    return b.m.same(Path.constant(space.atoms, 1))


def cross_conditional_check(tau: RandomTime, space: FilteredSpace, t: Fraction) -> dict:
    """Conditional laws of one decomposition part given the other's filtration.

    Checks, by integrating against a generating family of the enlarged
    sigma-fields at time ``t``::

        P(C_n | F^{tau2}_t)   = 1_{t<tau2} z^n_t / Z2_t            (n >= 1)
        P(C_0 | F^{tau2}_t)   = 1_{tau2<=t} + 1_{t<tau2} (z^0_t - 1 + Z2_t) / Z2_t
        P(tau1 > t | F^{tau2}_t) = 1 - 1_{t<tau2} (1 - Z1_t) / Z2_t
        P(tau2 > t | F^{tau1}_t) = 1 - 1_{t<tau1} (1 - Z2_t) / Z1_t

    The ``C_0`` line is the form that survives when ``tau2`` can be finite:
    on ``{tau2 <= t}`` the thin part is infinite, so ``C_0`` is certain.
    """
    t = to_fraction(t)
    b = associated_processes(tau, space)
    tau1, tau2 = thin_thick_decompose(tau, space)
    Z1 = associated_processes(tau1, space).Z
    Z2 = associated_processes(tau2, space).Z
    system = exhausting_system(tau1, space)
    w = space.weight
    k = space.index_at(t)
    cuts = set(tau.density_breakpoints) | set(tau.finite_support) | {t}
    refined = tau.refined(cuts)

    # Each refined piece: (atom, mass, time class, thin?) with tau1/tau2 read off.
    def classes():
        for a, ps in refined.items():
            for p in ps:
                thin = _thin_piece(b, a, p)
                t1 = p.start if thin else INF
                t2 = INF if thin or p.start == INF else p.start
                yield a, p, t1, t2

    def beyond(val: Time, p: Piece) -> bool:
        # A refined density piece never straddles t, so its start decides.
        return val == INF or val > t or (not p.is_atom and p.start >= t)

    def key_of(val: Time, p: Piece) -> object:
        """Generator class of ``val`` observed up to time t."""
        if beyond(val, p):
            return "after"
        return ("at", val) if p.is_atom else ("in", p.start, p.end)

    residual = _ZERO
    n_tests = 0
    for cell in space.cells(k):
        ratio = {}
        for a in cell:
            z2, z1 = Z2.at(a, t), Z1.at(a, t)
            ratio[a] = (z1, z2)
        # Tests g(tau2 ^ t) on this cell.
        groups2: dict = {}
        groups1: dict = {}
        for a, p, t1, t2 in classes():
            if a not in cell:
                continue
            groups2.setdefault(key_of(t2, p) if t2 != INF else "after", []).append((a, p, t1, t2))
            groups1.setdefault(key_of(t1, p) if t1 != INF else "after", []).append((a, p, t1, t2))
        for key, members in groups2.items():
            after = key == "after"
            for n in range(len(system.C)):
                lhs = rhs = _ZERO
                for a, p, t1, t2 in members:
                    in_c = (t1 == INF) if n == 0 else (t1 != INF and t1 == system.T[n][a])
                    if in_c:
                        lhs += w[a] * p.mass
                    if after:
                        z1, z2 = ratio[a]
                        if z2 == 0:
                            raise DegenerateDenominator(f"Z2 vanishes at {a!r}, t={t}")
                        zn = system.z[n].at(a, t)
                        num = zn if n else zn - 1 + z2
                        rhs += w[a] * p.mass * num / z2
                    elif n == 0:
                        rhs += w[a] * p.mass
                residual = max(residual, abs(lhs - rhs))
                n_tests += 1
            lhs = rhs = _ZERO
            for a, p, t1, t2 in members:
                if beyond(t1, p):
                    lhs += w[a] * p.mass
                if after:
                    z1, z2 = ratio[a]
                    rhs += w[a] * p.mass * (1 - (1 - z1) / z2)
                else:
                    rhs += w[a] * p.mass
            residual = max(residual, abs(lhs - rhs))
            n_tests += 1
        for key, members in groups1.items():
            after = key == "after"
            lhs = rhs = _ZERO
            for a, p, t1, t2 in members:
                if beyond(t2, p):
                    lhs += w[a] * p.mass
                if after:
                    z1, z2 = ratio[a]
                    if z1 == 0:
                        raise DegenerateDenominator(f"Z1 vanishes at {a!r}, t={t}")
                    rhs += w[a] * p.mass * (1 - (1 - z2) / z1)
                else:
                    rhs += w[a] * p.mass
            residual = max(residual, abs(lhs - rhs))
            n_tests += 1
    return {"time": fmt(t), "residual": residual, "tests": n_tests}
