"""Last zero of Brownian motion before a horizon, via scaled simple random walks.

A walk of ``horizon / step`` steps of size ``+-sqrt(step)`` approximates
``B``; ``tau`` is the last step index where the walk sits at 0.  The report
gives ``P(tau > horizon/2)`` against the arcsine value, the survival curve
``E[Z_t] = P(tau > t)``, fixed-time atom masses and the Azema martingale
``mu_t = sgn(B_t) sqrt(t - g_t)`` (mean 0 and ``E[mu_t^2] = t/2`` since
``E[g_t] = t/2``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import InvalidParams
from ._rng import merge_sums, run_chunks
from .report import Curve, SimReport, mean_se

CHUNK = 2048


def arcsine_survival(t, horizon: float = 1.0):
    """``P(g_horizon > t) = 1 - (2/pi) arcsin(sqrt(t / horizon))``."""
    t = np.clip(np.asarray(t, dtype=float) / horizon, 0.0, 1.0)
    return 1.0 - 2.0 / math.pi * np.arcsin(np.sqrt(t))


@dataclass(frozen=True)
class BrownianParams:
    horizon: float = 1.0
    step: float = 2.0**-10
    atom_times: tuple[float, ...] = (0.25,)
    report_points: int = 15

    def validate(self) -> None:
        if not (self.step > 0 and math.isfinite(self.step)):
            raise InvalidParams("step must be positive")
        if not (self.horizon >= 0 and math.isfinite(self.horizon)):
            raise InvalidParams("horizon must be finite and non-negative")
        if self.report_points < 1:
            raise InvalidParams("need at least one report time")

    @property
    def steps(self) -> int:
        return int(math.floor(self.horizon / self.step + 1e-9))


def _index(t: float, step: float) -> int:
    return int(round(t / step))


def _chunk(prm: BrownianParams, report_idx: np.ndarray, atom_idx: np.ndarray, half_idx: float):
    n_steps = prm.steps

    def run(rng: np.random.Generator, n: int) -> dict:
        if n_steps == 0:
            last = np.zeros(n, dtype=np.int64)
            levels = np.zeros((n, 1), dtype=np.int32)
            last_zero = np.zeros((n, 1), dtype=np.int64)
        else:
            incr = rng.integers(0, 2, size=(n, n_steps), dtype=np.int8) * 2 - 1
            levels = np.zeros((n, n_steps + 1), dtype=np.int32)
            np.cumsum(incr, axis=1, out=levels[:, 1:])
            idx = np.arange(n_steps + 1)
            last_zero = np.maximum.accumulate(np.where(levels == 0, idx, 0), axis=1)
            last = last_zero[:, -1]
        above = (last[:, None] > report_idx[None, :]).astype(float)
        half = (last > half_idx).astype(float)
        atoms = (last[:, None] == atom_idx[None, :]).astype(float)
        # Azema martingale at report times, in Brownian units
        ridx = np.minimum(report_idx, levels.shape[1] - 1)
        sgn = np.sign(levels[:, ridx]).astype(float)
        mu = sgn * np.sqrt((ridx[None, :] - last_zero[:, ridx]) * prm.step)
        return {
            "half": np.array([half.sum()]),
            "survival": above.sum(axis=0),
            "atoms": atoms.sum(axis=0),
            "mu": mu.sum(axis=0),
            "mu2": (mu**2).sum(axis=0),
            "mu4": (mu**4).sum(axis=0),
        }

    return run


def simulate_brownian_last_zero(prm: BrownianParams, n: int, seed: int) -> SimReport:
    prm.validate()
    if n < 1:
        raise InvalidParams("sample count must be at least 1")
    # interior times only: at 0 the walk's return probability is biased by O(sqrt(step))
    report_t = np.linspace(0.0, prm.horizon, prm.report_points + 2)[1:-1]
    report_idx = np.array([_index(t, prm.step) for t in report_t], dtype=np.int64)
    atom_idx = np.array([_index(t, prm.step) for t in prm.atom_times], dtype=np.int64)
    # tau > horizon/2 on the walk's own clock
    half_idx = prm.horizon / 2 / prm.step
    sums = merge_sums(run_chunks(_chunk(prm, report_idx, atom_idx, half_idx), n, seed, CHUNK))
    est, se = mean_se(sums["half"][0], sums["half"][0], n)
    surv, surv_se = mean_se(sums["survival"], sums["survival"], n)
    atoms, atoms_se = mean_se(sums["atoms"], sums["atoms"], n)
    mu, mu_se = mean_se(sums["mu"], sums["mu2"], n)
    mu2, mu2_se = mean_se(sums["mu2"], sums["mu4"], n)
    t_walk = (report_idx * prm.step).tolist()

    def lst(x):
        return None if x is None else np.asarray(x).tolist()

    return SimReport(
        estimator="P(tau > horizon/2)",
        estimate=float(est),
        stderr=None if se is None else float(se),
        n=n,
        seed=seed,
        benchmark=0.5 if prm.horizon > 0 else 0.0,
        curves={
            "survival": Curve(report_t.tolist(), lst(surv), lst(surv_se), arcsine_survival(report_t, prm.horizon).tolist() if prm.horizon > 0 else None),
            "azema_mean": Curve(t_walk, lst(mu), lst(mu_se), [0.0] * len(t_walk)),
            "azema_square": Curve(t_walk, lst(mu2), lst(mu2_se), [t / 2 for t in t_walk]),
        },
        extras={
            "params": {"horizon": prm.horizon, "step": prm.step, "steps": prm.steps},
            "atom_masses": [
                {"t": float(t), "estimate": float(a), "stderr": None if atoms_se is None else float(s)}
                for t, a, s in zip(prm.atom_times, atoms, atoms if atoms_se is None else atoms_se)
            ],
        },
    )
