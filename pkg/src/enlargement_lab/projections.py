"""Optional and predictable projections, and their dual versions.

Raw (non-adapted) processes are described per atom as a finite mixture over
the auxiliary uniform: ``pieces[atom]`` lists ``(prob, trajectory)`` pairs
whose probabilities sum to one.  Because every projection is linear and the
filtration never sees the uniform, only the per-atom mean trajectory matters;
it is averaged over the cell in force at each breakpoint.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Literal, Mapping

from .paths import Path, Trajectory
from .space import FilteredSpace

__all__ = ["RawProcess", "project", "dual_project", "duality_residual"]

Kind = Literal["optional", "predictable"]
_ZERO = Fraction(0)


@dataclass(frozen=True, eq=False)
class RawProcess:
    pieces: Mapping[str, tuple[tuple[Fraction, Trajectory], ...]] = field(hash=False)
    increasing: bool = False

    def __post_init__(self):
        for atom, ps in self.pieces.items():
            if sum(p for p, _ in ps) != 1:
                raise ValueError(f"mixture weights at {atom!r} do not sum to 1")

    @classmethod
    def from_path(cls, path: Path) -> "RawProcess":
        one = Fraction(1)
        return cls({a: ((one, tr),) for a, tr in path.trajs.items()}, increasing=path.increasing)

    def mean(self) -> dict[str, Trajectory]:
        return {a: Trajectory.combine(list(ps)).simplify() for a, ps in self.pieces.items()}


def _as_means(X) -> dict[str, Trajectory]:
    if isinstance(X, Path):
        return dict(X.trajs)
    if isinstance(X, RawProcess):
        return X.mean()
    raise TypeError(f"cannot project {type(X).__name__}")


def _breakpoints(means: Mapping[str, Trajectory], space: FilteredSpace) -> list[Fraction]:
    pts = set(space.grid)
    for tr in means.values():
        pts.update(tr.times)
    return sorted(pts)


def _check_kind(kind: str) -> None:
    if kind not in ("optional", "predictable"):
        raise ValueError(f"unknown projection kind {kind!r}")


def project(X, kind: Kind, space: FilteredSpace) -> Path:
    """Optional (``E[X_t | F_t]``) or predictable (``E[X_t | F_t-]``) projection."""
    _check_kind(kind)
    means = _as_means(X)
    times = _breakpoints(means, space)
    cols: dict[str, tuple[list, list, list, list]] = {a: ([], [], [], []) for a in space.atoms}
    for t in times:
        k_at, k_before = space.index_at(t), space.index_before(t)
        k_val = k_at if kind == "optional" else k_before
        left = space.average(k_before, {a: tr.left_at(t) for a, tr in means.items()})
        val = space.average(k_val, {a: tr.at(t) for a, tr in means.items()})
        start = space.average(k_at, {a: tr.right_at(t) for a, tr in means.items()})
        slope = space.average(k_at, {a: tr.slope_after(t) for a, tr in means.items()})
        for a in space.atoms:
            L, V, S, D = cols[a]
            L.append(left[a]); V.append(val[a]); S.append(start[a]); D.append(slope[a])
    trajs = {
        a: Trajectory(tuple(times), tuple(L), tuple(V), tuple(S), tuple(D)).simplify()
        for a, (L, V, S, D) in cols.items()
    }
    return Path(trajs, adapted=True, predictable=kind == "predictable")


def dual_project(V, kind: Kind, space: FilteredSpace) -> Path:
    """Dual optional or dual predictable projection of a raw increasing process.

    ``V`` must be right-continuous with ``V_{0-} = 0``.  Jumps are conditioned
    on the cell in force at (optional) or strictly before (predictable) the
    jump time; densities on the cell in force.
    """
    _check_kind(kind)
    means = _as_means(V)
    for a, tr in means.items():
        if tr.left[0] != 0:
            raise ValueError(f"raw process at {a!r} does not start from 0 before time 0")
        if not tr.is_right_continuous():
            raise ValueError(f"raw process at {a!r} is not right-continuous")
    times = _breakpoints(means, space)
    jumps, slopes = [], []
    for t in times:
        k_jump = space.index_at(t) if kind == "optional" else space.index_before(t)
        jumps.append(space.average(k_jump, {a: tr.jump_at(t) for a, tr in means.items()}))
        slopes.append(space.average(space.index_at(t), {a: tr.slope_after(t) for a, tr in means.items()}))
    trajs = {}
    for a in space.atoms:
        L, Vs, D = [], [], []
        level = _ZERO
        for i, t in enumerate(times):
            if i:
                level += D[-1] * (t - times[i - 1])
            L.append(level)
            level += jumps[i][a]
            Vs.append(level)
            D.append(slopes[i][a])
        trajs[a] = Trajectory(tuple(times), tuple(L), tuple(Vs), tuple(Vs), tuple(D)).simplify()
    return Path(trajs, adapted=True, predictable=kind == "predictable", increasing=True)


def duality_residual(V, A: Path, kind: Kind, space: FilteredSpace) -> Fraction:
    """Largest ``|E[int H dV] - E[int H dA]|`` over a generating family of ``H``.

    The family is ``1_D 1_{s}`` for each breakpoint ``s`` and cell ``D`` of the
    partition in force at ``s`` (optional) or before it (predictable), plus
    ``1_D 1_{(s, s')}`` for consecutive breakpoints and cells in force there.
    """
    _check_kind(kind)
    mv = _as_means(V)
    times = sorted(set(_breakpoints(mv, space)) | set(A.breakpoints()))
    w = space.weight
    worst = _ZERO
    for i, t in enumerate(times):
        k_at = space.index_at(t)
        k_jump = k_at if kind == "optional" else space.index_before(t)
        for cell in space.cells(k_jump):
            d = sum((w[a] * (mv[a].jump_at(t) - A[a].jump_at(t)) for a in cell), _ZERO)
            worst = max(worst, abs(d))
        nxt = times[i + 1] if i + 1 < len(times) else t + 1
        for cell in space.cells(k_at):
            d = sum(
                (w[a] * (mv[a].left_at(nxt) - mv[a].right_at(t) - A[a].left_at(nxt) + A[a].right_at(t)) for a in cell),
                _ZERO,
            )
            worst = max(worst, abs(d))
    return worst
