"""Piecewise affine paths with exact rational breakpoints.

A :class:`Trajectory` is one sample path on ``[0, inf)``.  At every
breakpoint it records the left limit, the value taken at that instant and
the intercept of the affine segment that follows (the right limit); the last
segment runs to infinity.  Optional processes such as ``Z`` are right
continuous (value equals intercept), while ``P(tau >= t | F_t)`` and
predictable projections need all three numbers.

A :class:`Path` is one trajectory per atom plus measurability flags.
"""

from __future__ import annotations

import bisect
import csv
import io
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .rational import INF, Time, fmt, to_fraction

__all__ = ["Trajectory", "Path"]

_ZERO = Fraction(0)


@dataclass(frozen=True)
class Trajectory:
    times: tuple[Fraction, ...]
    left: tuple[Fraction, ...]
    value: tuple[Fraction, ...]
    start: tuple[Fraction, ...]
    slope: tuple[Fraction, ...]

    def __post_init__(self):
        n = len(self.times)
        if not n or self.times[0] != 0:
            raise ValueError("trajectory must have a breakpoint at 0")
        if not (len(self.left) == len(self.value) == len(self.start) == len(self.slope) == n):
            raise ValueError("trajectory arrays differ in length")
        for i in range(1, n):
            dt = self.times[i] - self.times[i - 1]
            if dt <= 0:
                raise ValueError("breakpoints must increase strictly")
            if self.start[i - 1] + self.slope[i - 1] * dt != self.left[i]:
                raise ValueError(f"left limit at {self.times[i]} inconsistent with segment")

    # -- constructors ----------------------------------------------------

    @classmethod
    def constant(cls, c, left0=None) -> "Trajectory":
        c = to_fraction(c)
        l0 = c if left0 is None else to_fraction(left0)
        return cls((_ZERO,), (l0,), (c,), (c,), (_ZERO,))

    @classmethod
    def steps(cls, initial, jumps: Mapping[Fraction, Fraction], left0=None) -> "Trajectory":
        """Right-continuous step path: ``initial`` then ``jumps[t]`` from ``t`` on."""
        initial = to_fraction(initial)
        times = [_ZERO] + sorted(t for t in jumps if t != 0 and t != INF)
        v0 = to_fraction(jumps.get(_ZERO, initial))
        left, value = [initial if left0 is None else to_fraction(left0)], [v0]
        for t in times[1:]:
            left.append(value[-1])
            value.append(to_fraction(jumps[t]))
        return cls(tuple(times), tuple(left), tuple(value), tuple(value), (_ZERO,) * len(times))

    @classmethod
    def from_segments(cls, times, left, value, start, slope) -> "Trajectory":
        return cls(tuple(times), tuple(left), tuple(value), tuple(start), tuple(slope))

    # -- evaluation ------------------------------------------------------

    def _find(self, t) -> tuple[int, bool]:
        i = bisect.bisect_right(self.times, t) - 1
        return i, self.times[i] == t

    def _interior(self, i: int, t) -> Fraction:
        return self.start[i] + self.slope[i] * (t - self.times[i])

    def terminal(self) -> Fraction:
        if self.slope[-1] != 0:
            raise ValueError("path has no limit at infinity")
        return self.start[-1]

    def at(self, t: Time) -> Fraction:
        if t == INF:
            return self.terminal()
        i, exact = self._find(t)
        return self.value[i] if exact else self._interior(i, t)

    def left_at(self, t: Time) -> Fraction:
        if t == INF:
            return self.terminal()
        i, exact = self._find(t)
        return self.left[i] if exact else self._interior(i, t)

    def right_at(self, t: Time) -> Fraction:
        if t == INF:
            return self.terminal()
        i, exact = self._find(t)
        return self.start[i] if exact else self._interior(i, t)

    def slope_after(self, t: Time) -> Fraction:
        if t == INF:
            return _ZERO
        return self.slope[self._find(t)[0]]

    def jump_at(self, t: Time) -> Fraction:
        return self.at(t) - self.left_at(t)

    # -- algebra ---------------------------------------------------------

    def refine(self, times: Iterable[Fraction]) -> "Trajectory":
        grid = sorted(set(self.times) | {t for t in times if t != INF})
        if len(grid) == len(self.times):
            return self
        L, V, S, D = [], [], [], []
        for t in grid:
            i, exact = self._find(t)
            if exact:
                L.append(self.left[i]); V.append(self.value[i]); S.append(self.start[i])
            else:
                x = self._interior(i, t)
                L.append(x); V.append(x); S.append(x)
            D.append(self.slope[i])
        return Trajectory(tuple(grid), tuple(L), tuple(V), tuple(S), tuple(D))

    @staticmethod
    def combine(terms: Sequence[tuple[Fraction, "Trajectory"]]) -> "Trajectory":
        """Linear combination ``sum(c * traj)``."""
        if not terms:
            return Trajectory.constant(0)
        grid = sorted(set().union(*(tr.times for _, tr in terms)))
        refined = [(c, tr.refine(grid)) for c, tr in terms]
        n = len(grid)

        def lin(attr):
            return tuple(sum((c * getattr(tr, attr)[i] for c, tr in refined), _ZERO) for i in range(n))

        return Trajectory(tuple(grid), lin("left"), lin("value"), lin("start"), lin("slope"))

    def __add__(self, other: "Trajectory") -> "Trajectory":
        return Trajectory.combine([(Fraction(1), self), (Fraction(1), other)])

    def __sub__(self, other: "Trajectory") -> "Trajectory":
        return Trajectory.combine([(Fraction(1), self), (Fraction(-1), other)])

    def __neg__(self) -> "Trajectory":
        return self.scale(-1)

    def scale(self, c) -> "Trajectory":
        c = to_fraction(c)
        return Trajectory(
            self.times,
            tuple(c * x for x in self.left),
            tuple(c * x for x in self.value),
            tuple(c * x for x in self.start),
            tuple(c * x for x in self.slope),
        )

    def simplify(self) -> "Trajectory":
        keep = [0]
        for i in range(1, len(self.times)):
            j = keep[-1]
            if (
                self.left[i] == self.value[i] == self.start[i]
                and self.slope[i] == self.slope[j]
            ):
                continue
            keep.append(i)
        if len(keep) == len(self.times):
            return self
        T = [self.times[i] for i in keep]
        S = [self.start[i] for i in keep]
        D = [self.slope[i] for i in keep]
        L = [self.left[0]] + [S[j - 1] + D[j - 1] * (T[j] - T[j - 1]) for j in range(1, len(T))]
        V = [self.value[i] for i in keep]
        return Trajectory(tuple(T), tuple(L), tuple(V), tuple(S), tuple(D))

    def same(self, other: "Trajectory") -> bool:
        return self.simplify() == other.simplify()

    # -- inspection ------------------------------------------------------

    def checkpoints(self) -> list[Fraction]:
        """Breakpoints, segment midpoints and one point past the last breakpoint."""
        pts = list(self.times)
        pts += [(a + b) / 2 for a, b in zip(self.times, self.times[1:])]
        pts.append(self.times[-1] + 1)
        return sorted(pts)

    def is_right_continuous(self) -> bool:
        return self.value == self.start

    def is_increasing(self) -> bool:
        if any(d < 0 for d in self.slope):
            return False
        return all(l <= v <= s for l, v, s in zip(self.left, self.value, self.start))

    def total_variation(self) -> Fraction:
        tv = _ZERO
        for i, t in enumerate(self.times):
            tv += abs(self.value[i] - self.left[i]) + abs(self.start[i] - self.value[i])
            if i + 1 < len(self.times):
                tv += abs(self.slope[i]) * (self.times[i + 1] - t)
            elif self.slope[i] != 0:
                raise ValueError("unbounded variation on the last segment")
        return tv

    def rows(self) -> list[tuple[Fraction, Fraction, Fraction, Fraction, Fraction]]:
        return list(zip(self.times, self.left, self.value, self.start, self.slope))


@dataclass(frozen=True, eq=False)
class Path:
    """One :class:`Trajectory` per atom, plus measurability flags."""

    trajs: Mapping[str, Trajectory] = field(hash=False)
    adapted: bool = True
    predictable: bool = False
    increasing: bool = False

    def __getitem__(self, atom: str) -> Trajectory:
        return self.trajs[atom]

    def __iter__(self):
        return iter(self.trajs)

    @property
    def atoms(self) -> tuple[str, ...]:
        return tuple(self.trajs)

    @classmethod
    def constant(cls, atoms: Iterable[str], c, **flags) -> "Path":
        tr = Trajectory.constant(c)
        flags.setdefault("increasing", True)
        return cls({a: tr for a in atoms}, **flags)

    @classmethod
    def from_function(cls, atoms: Iterable[str], fn, **flags) -> "Path":
        return cls({a: fn(a) for a in atoms}, **flags)

    def at(self, atom: str, t: Time) -> Fraction:
        return self.trajs[atom].at(t)

    def left_at(self, atom: str, t: Time) -> Fraction:
        return self.trajs[atom].left_at(t)

    def jump_at(self, atom: str, t: Time) -> Fraction:
        return self.trajs[atom].jump_at(t)

    def section(self, t: Time) -> dict[str, Fraction]:
        return {a: tr.at(t) for a, tr in self.trajs.items()}

    def breakpoints(self) -> list[Fraction]:
        return sorted(set().union(*(tr.times for tr in self.trajs.values())))

    def checkpoints(self) -> list[Fraction]:
        pts = self.breakpoints()
        mids = [(a + b) / 2 for a, b in zip(pts, pts[1:])]
        return sorted(set(pts) | set(mids) | {pts[-1] + 1})

    def _zip(self, other: "Path", c: Fraction) -> dict[str, Trajectory]:
        if set(self.trajs) != set(other.trajs):
            raise ValueError("paths live on different atom sets")
        return {
            a: Trajectory.combine([(Fraction(1), tr), (c, other.trajs[a])])
            for a, tr in self.trajs.items()
        }

    def __add__(self, other: "Path") -> "Path":
        return Path(
            self._zip(other, Fraction(1)),
            adapted=self.adapted and other.adapted,
            predictable=self.predictable and other.predictable,
            increasing=self.increasing and other.increasing,
        )

    def __sub__(self, other: "Path") -> "Path":
        return Path(
            self._zip(other, Fraction(-1)),
            adapted=self.adapted and other.adapted,
            predictable=self.predictable and other.predictable,
        )

    def scale(self, c) -> "Path":
        c = to_fraction(c)
        return Path(
            {a: tr.scale(c) for a, tr in self.trajs.items()},
            adapted=self.adapted,
            predictable=self.predictable,
            increasing=self.increasing and c >= 0,
        )

    def same(self, other: "Path") -> bool:
        if set(self.trajs) != set(other.trajs):
            return False
        return all(tr.same(other.trajs[a]) for a, tr in self.trajs.items())

    def max_abs_difference(self, other: "Path") -> Fraction:
        """Largest discrepancy over left limits, values, intercepts and slopes."""
        worst = _ZERO
        for a, tr in self.trajs.items():
            d = Trajectory.combine([(Fraction(1), tr), (Fraction(-1), other.trajs[a])])
            for arr in (d.left, d.value, d.start, d.slope):
                for x in arr:
                    if abs(x) > worst:
                        worst = abs(x)
        return worst

    def lift(self, back: Mapping[str, str]) -> "Path":
        """Re-index onto a finer atom set via ``back[new_atom] = old_atom``."""
        return Path(
            {e: self.trajs[a] for e, a in back.items()},
            adapted=self.adapted,
            predictable=self.predictable,
            increasing=self.increasing,
        )

    def is_increasing(self) -> bool:
        return all(tr.is_increasing() for tr in self.trajs.values())

    # -- export ----------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "adapted": self.adapted,
            "predictable": self.predictable,
            "increasing": self.increasing,
            "atoms": {
                a: [
                    {"t": fmt(t), "left": fmt(l), "value": fmt(v), "intercept": fmt(s), "slope": fmt(d)}
                    for t, l, v, s, d in tr.rows()
                ]
                for a, tr in sorted(self.trajs.items())
            },
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "Path":
        trajs = {}
        for a, rows in data["atoms"].items():
            trajs[a] = Trajectory.from_segments(
                [to_fraction(r["t"]) for r in rows],
                [to_fraction(r["left"]) for r in rows],
                [to_fraction(r["value"]) for r in rows],
                [to_fraction(r["intercept"]) for r in rows],
                [to_fraction(r["slope"]) for r in rows],
            )
        return cls(
            trajs,
            adapted=bool(data.get("adapted", True)),
            predictable=bool(data.get("predictable", False)),
            increasing=bool(data.get("increasing", False)),
        )

    def csv_rows(self, name: str | None = None) -> list[list[str]]:
        rows = []
        for a, tr in sorted(self.trajs.items()):
            for t, l, v, s, d in tr.rows():
                row = [a, fmt(t), fmt(l), fmt(v), fmt(s), fmt(d)]
                rows.append(([name] if name else []) + row)
        return rows

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["atom", "time", "left", "value", "intercept", "slope"])
        w.writerows(self.csv_rows())
        return buf.getvalue()
