"""Cox time stopped at an accessible time, with an exact finite twin.

On a finite filtered space, an adapted step intensity ``lambda`` defines
``Lambda_t = int_0^t lambda``.  With ``Theta`` uniform on ``[0, L]`` and
independent of the tree, ``xi = inf{t : Lambda_t >= Theta}`` has the
per-atom density ``lambda / L`` while ``Lambda < L``.  The time is
``tau = theta ^ xi`` for a stopping time ``theta``; its thin part is
``theta`` on ``{theta < xi}`` and its thick part ``xi`` on ``{xi <= theta}``.

The exact twin runs through the rational engine; the Monte Carlo side
samples atoms and thresholds and compares ``Z_t = P(tau > t | F_t)`` cell by
cell against the twin.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

import numpy as np

from ..enlargement import immersion_test
from ..errors import InvalidParams, NotStoppingTime, SchemaError
from ..random_times import RandomTime, associated_processes, classify, thin_thick_decompose
from ..rational import INF, Time, fmt, fmt_time, to_fraction, to_time
from ..space import FilteredSpace, build_space, is_stopping_time
from ._rng import merge_sums, run_chunks
from .report import Curve, SimReport, mean_se

_ZERO = Fraction(0)


@dataclass(frozen=True)
class CoxModel:
    space: FilteredSpace
    intensity: Mapping[str, tuple[Fraction, ...]]  # one rate per grid interval, last one open-ended
    theta: Mapping[str, Time]
    threshold: Fraction
    report_times: tuple[Fraction, ...]

    def validate(self) -> None:
        sp = self.space
        if self.threshold <= 0:
            raise InvalidParams("threshold must be positive")
        for a in sp.atoms:
            rates = self.intensity.get(a)
            if rates is None or len(rates) != len(sp.grid):
                raise InvalidParams(f"intensity of {a!r} needs one rate per grid point")
            if any(r < 0 for r in rates):
                raise InvalidParams("intensities are non-negative")
        for k in range(len(sp.grid)):
            if not sp.is_measurable(k, {a: self.intensity[a][k] for a in sp.atoms}):
                raise InvalidParams(f"intensity on interval {k} is not adapted")
        if set(self.theta) != set(sp.atoms):
            raise InvalidParams("theta must be given on every atom")
        if not is_stopping_time(dict(self.theta), sp).stopping:
            raise NotStoppingTime("theta is not a stopping time")
        if not self.report_times:
            raise InvalidParams("need at least one report time")

    @classmethod
    def from_json(cls, data: Mapping) -> "CoxModel":
        for key in ("space", "intensity", "theta", "threshold"):
            if key not in data:
                raise SchemaError(f"missing key {key!r}", key=key)
        space = build_space(data["space"])
        try:
            intensity = {str(a): tuple(to_fraction(r) for r in rs) for a, rs in data["intensity"].items()}
            theta = {str(a): to_time(t) for a, t in data["theta"].items()}
            threshold = to_fraction(data["threshold"])
            report = tuple(to_fraction(t) for t in data.get("report_times", space.grid[1:] or space.grid))
        except (TypeError, ValueError, AttributeError, ZeroDivisionError) as exc:
            raise SchemaError(f"malformed cox scenario: {exc}") from exc
        model = cls(space, intensity, theta, threshold, report)
        model.validate()
        return model

    def to_json(self) -> dict:
        return {
            "space": self.space.to_json(),
            "intensity": {a: [fmt(r) for r in rs] for a, rs in sorted(self.intensity.items())},
            "theta": {a: fmt_time(t) for a, t in sorted(self.theta.items())},
            "threshold": fmt(self.threshold),
            "report_times": [fmt(t) for t in self.report_times],
        }

    def segments(self, a: str) -> list[tuple[Fraction, Time, Fraction, Fraction]]:
        """``(start, end, rate, Lambda(start))`` for each grid interval of atom ``a``."""
        grid = list(self.space.grid)
        ends: list[Time] = grid[1:] + [INF]
        out, acc = [], _ZERO
        for s, e, r in zip(grid, ends, self.intensity[a]):
            out.append((s, e, r, acc))
            if e != INF:
                acc += r * (e - s)
        return out

    def exact_time(self) -> RandomTime:
        L = self.threshold
        laws = {}
        for a in self.space.atoms:
            th = self.theta[a]
            density = []
            hit = False  # Lambda reaches L before theta, so xi <= theta surely
            for s, e, r, acc in self.segments(a):
                if s >= th:
                    break
                stop = e if th == INF else min(e, th)
                if r > 0:
                    cut = s + (L - acc) / r
                    if stop == INF or cut <= stop:
                        density.append((s, cut, r / L))
                        hit = True
                        break
                    density.append((s, stop, r / L))
            rest = _ZERO if hit else 1 - self._big_lambda(a, th) / L
            laws[a] = ([(th, rest)] if rest > 0 else [], density)
        return RandomTime.from_law(laws)

    def _big_lambda(self, a: str, t: Time) -> Fraction:
        """``Lambda_t``; at infinity only called when the last rate is 0."""
        for s, e, r, acc in self.segments(a):
            if e == INF or t <= e:
                return acc if t == INF else acc + r * (t - s)
        raise AssertionError("unreachable")


def exact_twin(model: CoxModel) -> dict:
    sp = model.space
    tau = model.exact_time()
    b = associated_processes(tau, sp)
    tau1, tau2 = thin_thick_decompose(tau, sp)
    imm = immersion_test(tau, sp)
    thin = tau1.masses(sp)[0]
    return {
        "tau": tau,
        "bundle": b,
        "classification": classify(tau, sp),
        "tau1": tau1,
        "tau2": tau2,
        "thin_mass": thin,
        "immersion": imm["criterion"],
        "immersion_parts": imm["parts"],
    }


def _sample_xi(model: CoxModel, a: str, theta_draw: np.ndarray) -> np.ndarray:
    xi = np.full(theta_draw.shape, np.inf)
    todo = np.ones(theta_draw.shape, dtype=bool)
    for s, e, r, acc in model.segments(a):
        r_f, acc_f, s_f = float(r), float(acc), float(s)
        top = np.inf if e == INF else acc_f + r_f * float(e - s)
        here = todo & (theta_draw <= top) if r > 0 else np.zeros_like(todo)
        xi[here] = s_f + (theta_draw[here] - acc_f) / r_f
        todo &= ~here
    return xi


def _chunk(model: CoxModel, cells: list[list[tuple[int, list[str]]]], report: np.ndarray):
    atoms = list(model.space.atoms)
    probs = np.array([float(w) for w in model.space.weights])
    probs /= probs.sum()
    theta = np.array([float(model.theta[a]) if model.theta[a] != INF else np.inf for a in atoms])
    L = float(model.threshold)
    index = {a: i for i, a in enumerate(atoms)}

    def run(rng: np.random.Generator, n: int) -> dict:
        which = rng.choice(len(atoms), size=n, p=probs)
        draw = rng.uniform(0.0, L, n)
        xi = np.empty(n)
        for i, a in enumerate(atoms):
            sel = which == i
            xi[sel] = _sample_xi(model, a, draw[sel])
        th = theta[which]
        tau = np.minimum(th, xi)
        thin = (th < xi) & np.isfinite(th)
        out = {"thin": np.array([thin.sum()], dtype=float)}
        counts, alive = [], []
        for j, t in enumerate(report):
            for _, members in cells[j]:
                mask = np.isin(which, [index[a] for a in members])
                counts.append(mask.sum())
                alive.append((mask & (tau > t)).sum())
        out["counts"] = np.array(counts, dtype=float)
        out["alive"] = np.array(alive, dtype=float)
        out["survival"] = np.array([(tau > t).sum() for t in report], dtype=float)
        return out

    return run


def simulate_cox_accessible(model: CoxModel, n: int, seed: int) -> SimReport:
    model.validate()
    if n < 1:
        raise InvalidParams("sample count must be at least 1")
    sp = model.space
    twin = exact_twin(model)
    Z = twin["bundle"].Z
    report = np.array([float(t) for t in model.report_times])
    cells = []
    for t in model.report_times:
        k = sp.index_at(t)
        cells.append([(k, sorted(c)) for c in sorted(sp.cells(k), key=sorted)])
    sums = merge_sums(run_chunks(_chunk(model, cells, report), n, seed))
    thin, thin_se = mean_se(sums["thin"][0], sums["thin"][0], n)
    surv, surv_se = mean_se(sums["survival"], sums["survival"], n)
    exact_surv = [float(sp.expectation(Z.section(t))) for t in model.report_times]

    # per-cell Z: binomial proportions within each cell
    z_curves: dict[str, dict] = {}
    worst = 0.0
    within = True
    pos = 0
    for j, t in enumerate(model.report_times):
        for _, members in cells[j]:
            cnt, live = sums["counts"][pos], sums["alive"][pos]
            pos += 1
            exact = float(Z.at(members[0], t))
            entry = z_curves.setdefault("+".join(members), {"t": [], "estimate": [], "stderr": [], "benchmark": []})
            if cnt >= 2:
                est, se = mean_se(live, live, int(cnt))
                est, se = float(est), float(se)
            else:
                est, se = (float(live / cnt) if cnt else float("nan")), None
            entry["t"].append(float(t))
            entry["estimate"].append(est)
            entry["stderr"].append(se)
            entry["benchmark"].append(exact)
            if se is None:
                continue
            dev = abs(est - exact)
            if dev > 3 * se:
                within = False
            if se > 0:
                worst = max(worst, dev / se)
            elif dev > 0:
                worst = float("inf")
    curves = {
        "survival": Curve(report.tolist(), surv.tolist(), None if surv_se is None else surv_se.tolist(), exact_surv),
    }
    for name, c in z_curves.items():
        curves[f"Z[{name}]"] = Curve(c["t"], c["estimate"], c["stderr"], c["benchmark"])
    return SimReport(
        estimator="thin mass P(theta < xi)",
        estimate=float(thin),
        stderr=None if thin_se is None else float(thin_se),
        n=n,
        seed=seed,
        benchmark=float(twin["thin_mass"]),
        curves=curves,
        extras={
            "model": model.to_json(),
            "exact": {
                "classification": twin["classification"].to_json(),
                "thin_mass": fmt(twin["thin_mass"]),
                "tau1": twin["tau1"].to_json(),
                "tau2": twin["tau2"].to_json(),
                "immersion": twin["immersion"],
                "immersion_parts": twin["immersion_parts"],
            },
            "z_within_3se": within,
            "z_max_abs_score": worst if np.isfinite(worst) else None,
        },
    )
