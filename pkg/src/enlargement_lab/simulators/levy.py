"""Time of the supremum of a spectrally negative stable process.

Increments over a step ``dt`` are ``drift dt + scale dt^(1/alpha) Y`` with
``Y`` standard stable, skewness ``-1`` (only negative jumps), drawn by the
Chambers-Mallows-Stuck transform.  ``rho`` is the last argmax of the
discretised path on ``[0, horizon]``.  Thickness shows up as vanishing atom
masses: at fixed times, and just before each of the first few large jumps
(steps whose stable part falls below ``-jump_threshold``).

``alpha = 2`` is a Gaussian surrogate (``Y ~ N(0, 2)``), i.e. Brownian motion
with variance ``2 scale^2`` per unit time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import InvalidParams
from ._rng import merge_sums, run_chunks
from .report import Curve, SimReport, mean_se

CHUNK = 2048


def stable_cms(rng: np.random.Generator, alpha: float, beta: float, size) -> np.ndarray:
    """Standard stable variates (S1 parameterisation, ``alpha != 1``)."""
    V = rng.uniform(-math.pi / 2, math.pi / 2, size)
    W = rng.exponential(1.0, size)
    t = beta * math.tan(math.pi * alpha / 2)
    B = math.atan(t) / alpha
    S = (1 + t * t) ** (1 / (2 * alpha))
    return (
        S
        * np.sin(alpha * (V + B))
        / np.cos(V) ** (1 / alpha)
        * (np.cos(V - alpha * (V + B)) / W) ** ((1 - alpha) / alpha)
    )


@dataclass(frozen=True)
class LevyParams:
    alpha: float = 1.5
    drift: float = -1.0
    scale: float = 1.0
    horizon: float = 1.0
    step: float = 2.0**-10
    atom_times: tuple[float, ...] = (0.25, 0.5)
    jump_threshold: float = 0.5
    jumps_tracked: int = 5

    def validate(self) -> None:
        if not 1 < self.alpha <= 2:
            raise InvalidParams("alpha must lie in (1, 2]")
        if self.alpha < 2 and not self.drift < 0:
            raise InvalidParams("drift must be negative")
        if self.alpha == 2 and not self.drift <= 0:
            raise InvalidParams("drift must be non-positive")
        if not (self.scale > 0 and self.step > 0 and self.jump_threshold > 0):
            raise InvalidParams("scale, step and jump threshold must be positive")
        if not (self.horizon >= 0 and math.isfinite(self.horizon)):
            raise InvalidParams("horizon must be finite and non-negative")
        if self.jumps_tracked < 1:
            raise InvalidParams("track at least one jump")

    @property
    def steps(self) -> int:
        return int(math.floor(self.horizon / self.step + 1e-9))


def _chunk(prm: LevyParams, atom_idx: np.ndarray, cdf_idx: np.ndarray):
    n_steps = prm.steps
    J = prm.jumps_tracked

    def run(rng: np.random.Generator, n: int) -> dict:
        jump_hits = np.zeros(J)
        jump_count = np.zeros(J)
        if n_steps == 0:
            rho = np.zeros(n, dtype=np.int64)
        else:
            if prm.alpha == 2:
                noise = rng.normal(0.0, math.sqrt(2.0), (n, n_steps))
            else:
                noise = stable_cms(rng, prm.alpha, -1.0, (n, n_steps))
            stable = prm.scale * prm.step ** (1 / prm.alpha) * noise
            path = np.zeros((n, n_steps + 1))
            np.cumsum(stable + prm.drift * prm.step, axis=1, out=path[:, 1:])
            # last argmax: first argmax of the reversed path
            rho = n_steps - np.argmax(path[:, ::-1], axis=1)
            big = stable < -prm.jump_threshold
            order = np.cumsum(big, axis=1)
            for j in range(J):
                # step index (1-based end point) of the (j+1)-th big jump
                has = order[:, -1] > j
                first = np.argmax(order > j, axis=1) + 1
                jump_count[j] = has.sum()
                jump_hits[j] = (has & (rho == first - 1)).sum()
        fixed = (rho[:, None] == atom_idx[None, :]).astype(float)
        cdf = (rho[:, None] <= cdf_idx[None, :]).astype(float)
        return {"fixed": fixed.sum(axis=0), "jump_hits": jump_hits, "jump_count": jump_count, "cdf": cdf.sum(axis=0)}

    return run


def simulate_levy_supremum(prm: LevyParams, n: int, seed: int, report_points: int = 9) -> SimReport:
    prm.validate()
    if n < 1:
        raise InvalidParams("sample count must be at least 1")
    atom_idx = np.array([int(round(t / prm.step)) for t in prm.atom_times], dtype=np.int64)
    cdf_t = np.linspace(0.0, prm.horizon, report_points + 2)[1:-1]
    cdf_idx = np.array([int(round(t / prm.step)) for t in cdf_t], dtype=np.int64)
    sums = merge_sums(run_chunks(_chunk(prm, atom_idx, cdf_idx), n, seed, CHUNK))
    fixed, fixed_se = mean_se(sums["fixed"], sums["fixed"], n)
    jump, jump_se = mean_se(sums["jump_hits"], sums["jump_hits"], n)
    cdf, cdf_se = mean_se(sums["cdf"], sums["cdf"], n)
    worst = int(np.argmax(jump))
    bench = None
    if prm.alpha == 2 and prm.drift == 0 and prm.horizon > 0:
        # argmax of driftless Brownian motion is arcsine distributed
        bench = (2 / math.pi * np.arcsin(np.sqrt(cdf_t / prm.horizon))).tolist()

    def se_at(arr, i):
        return None if arr is None else float(arr[i])

    return SimReport(
        estimator="max per-jump atom mass",
        estimate=float(jump[worst]),
        stderr=se_at(jump_se, worst),
        n=n,
        seed=seed,
        benchmark=0.0,
        curves={
            "rho_cdf": Curve(cdf_t.tolist(), cdf.tolist(), None if cdf_se is None else cdf_se.tolist(), bench),
        },
        extras={
            "params": {
                "alpha": prm.alpha,
                "drift": prm.drift,
                "scale": prm.scale,
                "horizon": prm.horizon,
                "step": prm.step,
                "jump_threshold": prm.jump_threshold,
            },
            "fixed_time_atoms": [
                {"t": float(t), "estimate": float(fixed[i]), "stderr": se_at(fixed_se, i)}
                for i, t in enumerate(prm.atom_times)
            ],
            "per_jump_atoms": [
                {
                    "jump": j + 1,
                    "paths_with_jump": int(sums["jump_count"][j]),
                    "estimate": float(jump[j]),
                    "stderr": se_at(jump_se, j),
                }
                for j in range(prm.jumps_tracked)
            ],
        },
    )
