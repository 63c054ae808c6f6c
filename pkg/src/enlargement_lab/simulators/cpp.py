"""Last passage of a compound Poisson process with drift below a barrier.

``X_t = x0 + drift t + sum of jumps``; ``tau = sup{t <= H : X_t <= a or X_{t-} <= a}``
with ``sup of the empty set = 0``.  Between jumps the path is affine, so
``tau`` is read off segment by segment.  Its value always belongs to the
family of stopping times ``{0, H, jump times, drift crossings of a}``; the
thin-mass estimator counts samples where this holds by exact float equality.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidParams
from ._rng import merge_sums, run_chunks
from .report import Curve, SimReport, mean_se

JUMP_KINDS = ("constant", "exponential", "normal", "discrete")


@dataclass(frozen=True)
class CppParams:
    rate: float
    drift: float
    barrier: float
    horizon: float
    jumps: dict = field(default_factory=lambda: {"kind": "constant", "size": -1.0})
    x0: float = 0.0
    report_points: int = 11

    def validate(self) -> None:
        if not (self.rate >= 0 and np.isfinite(self.rate)):
            raise InvalidParams("rate must be finite and non-negative")
        if not (self.horizon >= 0 and np.isfinite(self.horizon)):
            raise InvalidParams("horizon must be finite and non-negative")
        for name in ("drift", "barrier", "x0"):
            if not np.isfinite(getattr(self, name)):
                raise InvalidParams(f"{name} must be finite")
        kind = self.jumps.get("kind")
        if kind not in JUMP_KINDS:
            raise InvalidParams(f"unknown jump law {kind!r}")
        if kind == "exponential" and not self.jumps.get("mean", 1.0) > 0:
            raise InvalidParams("exponential jump mean must be positive")
        if kind == "normal" and not self.jumps.get("std", 1.0) >= 0:
            raise InvalidParams("normal jump std must be non-negative")
        if kind == "discrete":
            probs = np.asarray(self.jumps.get("probs", []), dtype=float)
            vals = self.jumps.get("values", [])
            if len(probs) == 0 or len(probs) != len(vals) or np.any(probs < 0) or not np.isclose(probs.sum(), 1):
                raise InvalidParams("discrete jump law needs matching values and probabilities")


def draw_jumps(rng: np.random.Generator, spec: dict, size: int) -> np.ndarray:
    kind = spec["kind"]
    if kind == "constant":
        return np.full(size, float(spec.get("size", -1.0)))
    if kind == "exponential":
        return float(spec.get("sign", -1.0)) * rng.exponential(float(spec.get("mean", 1.0)), size)
    if kind == "normal":
        return rng.normal(float(spec.get("mean", 0.0)), float(spec.get("std", 1.0)), size)
    return rng.choice(np.asarray(spec["values"], dtype=float), size=size, p=np.asarray(spec["probs"], dtype=float))


def _crossing(start, value, drift, barrier):
    # time at which the affine piece from (start, value) reaches the barrier
    with np.errstate(divide="ignore", invalid="ignore"):
        return start + (barrier - value) / drift


def _segments(rng: np.random.Generator, prm: CppParams, n: int):
    K = rng.poisson(prm.rate * prm.horizon, n) if prm.rate > 0 else np.zeros(n, dtype=np.int64)
    total = int(K.sum())
    owner = np.repeat(np.arange(n), K)
    times = rng.uniform(0.0, prm.horizon, total)
    order = np.lexsort((times, owner))
    times = times[order]
    sizes = draw_jumps(rng, prm.jumps, total)
    counts = K + 1
    first = np.cumsum(counts) - counts
    is_jump = np.ones(n + total, dtype=bool)
    is_jump[first] = False
    start = np.zeros(n + total)
    start[is_jump] = times
    jump = np.zeros(n + total)
    jump[is_jump] = sizes
    cum = np.cumsum(jump)
    cum -= np.repeat(cum[first] - jump[first], counts)
    value = prm.x0 + prm.drift * start + cum
    end = np.empty_like(start)
    end[:-1] = start[1:]
    end[first + counts - 1] = prm.horizon
    return K, counts, first, start, end, value, is_jump


def _last_passage(prm: CppParams, start, end, value) -> np.ndarray:
    """Supremum of the closed sub-level set within each segment (-inf if empty)."""
    a, d = prm.barrier, prm.drift
    sup = np.full(start.shape, -np.inf)
    if d > 0:
        cross = _crossing(start, value, d, a)
        hit = value <= a
        sup[hit] = np.minimum(end[hit], cross[hit])
    elif d < 0:
        left = value + d * (end - start)
        hit = left <= a
        sup[hit] = end[hit]
    else:
        hit = value <= a
        sup[hit] = end[hit]
    return sup


def _chunk(prm: CppParams, report_t: np.ndarray):
    def run(rng: np.random.Generator, n: int) -> dict:
        K, counts, first, start, end, value, is_jump = _segments(rng, prm, n)
        sup = _last_passage(prm, start, end, value)
        tau = np.maximum.reduceat(sup, first)
        tau[~np.isfinite(tau)] = 0.0

        # candidate stopping times, computed independently of the supremum
        owner_all = np.repeat(np.arange(n), counts)
        tau_seg = tau[owner_all]
        on_jump = np.bincount(owner_all, weights=(is_jump & (start == tau_seg)), minlength=n) > 0
        if prm.drift != 0:
            cross = _crossing(start, value, prm.drift, prm.barrier)
            on_cross = np.bincount(owner_all, weights=(cross == tau_seg), minlength=n) > 0
        else:
            on_cross = np.zeros(n, dtype=bool)
        at_zero = tau == 0.0
        at_h = tau == prm.horizon
        thin = at_zero | at_h | on_jump | on_cross
        below = (tau[:, None] <= report_t[None, :]).astype(float)
        return {
            "thin": np.array([thin.sum(), thin.sum()], dtype=float),
            "cdf": below.sum(axis=0),
            "classes": np.array([at_zero.sum(), at_h.sum(), on_jump.sum(), on_cross.sum()], dtype=float),
            "tau": np.array([tau.sum(), (tau**2).sum()]),
        }

    return run


def simulate_cpp_last_passage(prm: CppParams, n: int, seed: int) -> SimReport:
    prm.validate()
    if n < 1:
        raise InvalidParams("sample count must be at least 1")
    report_t = np.linspace(0.0, prm.horizon, prm.report_points)
    sums = merge_sums(run_chunks(_chunk(prm, report_t), n, seed))
    # indicators: the sum of squares equals the sum
    est, se = mean_se(sums["thin"][0], sums["thin"][1], n)
    cdf, cdf_se = mean_se(sums["cdf"], sums["cdf"], n)
    tau_mean, tau_se = mean_se(sums["tau"][0], sums["tau"][1], n)
    names = ("zero", "horizon", "jump", "crossing")
    return SimReport(
        estimator="thin_mass",
        estimate=float(est),
        stderr=None if se is None else float(se),
        n=n,
        seed=seed,
        benchmark=1.0,
        curves={"tau_cdf": Curve(report_t.tolist(), cdf.tolist(), None if cdf_se is None else cdf_se.tolist())},
        extras={
            "params": _params_json(prm),
            "class_fractions": {k: float(v) / n for k, v in zip(names, sums["classes"])},
            "tau_mean": float(tau_mean),
            "tau_mean_stderr": None if tau_se is None else float(tau_se),
        },
    )


def _params_json(prm: CppParams) -> dict:
    return {
        "rate": prm.rate,
        "drift": prm.drift,
        "barrier": prm.barrier,
        "horizon": prm.horizon,
        "x0": prm.x0,
        "jumps": dict(sorted(prm.jumps.items())),
    }
