"""Monte Carlo reports: point estimates, standard errors and curves."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np


def mean_se(total, total_sq, n: int) -> tuple:
    """Sample mean and ``std / sqrt(n)`` from running sums (``None`` if n < 2)."""
    total = np.asarray(total, dtype=float)
    mean = total / n
    if n < 2:
        return mean, None
    var = np.maximum(np.asarray(total_sq, dtype=float) - n * mean**2, 0.0) / (n - 1)
    return mean, np.sqrt(var / n)


def _num(x):
    if x is None:
        return None
    x = float(x)
    if math.isnan(x):
        return None
    return x


@dataclass
class Curve:
    """Estimates on a fixed grid of report times, with optional benchmark."""

    times: list[float]
    estimate: list[float]
    stderr: list[float] | None = None
    benchmark: list[float] | None = None

    def to_json(self) -> dict:
        out = {"t": [_num(t) for t in self.times], "estimate": [_num(x) for x in self.estimate]}
        out["stderr"] = None if self.stderr is None else [_num(x) for x in self.stderr]
        if self.benchmark is not None:
            out["benchmark"] = [_num(x) for x in self.benchmark]
        return out

    def within(self, k: float = 3.0) -> bool:
        """Every point within ``k`` standard errors of the benchmark."""
        if self.benchmark is None or self.stderr is None:
            raise ValueError("curve has no benchmark or no standard errors")
        return all(abs(e - b) <= k * s for e, b, s in zip(self.estimate, self.benchmark, self.stderr))


@dataclass
class SimReport:
    estimator: str
    estimate: float
    stderr: float | None
    n: int
    seed: int
    curves: dict[str, Curve] = field(default_factory=dict)
    extras: dict = field(default_factory=dict)
    benchmark: float | None = None

    @property
    def stderr_defined(self) -> bool:
        return self.stderr is not None

    def z_score(self) -> float | None:
        if self.benchmark is None or not self.stderr:
            return None
        return (self.estimate - self.benchmark) / self.stderr

    def within(self, k: float = 3.0) -> bool:
        if self.benchmark is None:
            raise ValueError("report has no benchmark")
        if self.stderr is None:
            return False
        return abs(self.estimate - self.benchmark) <= k * self.stderr

    def to_json(self) -> dict:
        return {
            "estimator": self.estimator,
            "estimate": _num(self.estimate),
            "stderr": _num(self.stderr),
            "stderr_defined": self.stderr_defined,
            "benchmark": _num(self.benchmark),
            "n": self.n,
            "seed": self.seed,
            "curves": {k: c.to_json() for k, c in sorted(self.curves.items())},
            "extras": self.extras,
        }

    def curves_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["curve", "t", "estimate", "stderr", "benchmark"])
        for name, c in sorted(self.curves.items()):
            for i, t in enumerate(c.times):
                se = "" if c.stderr is None else repr(float(c.stderr[i]))
                bm = "" if c.benchmark is None else repr(float(c.benchmark[i]))
                w.writerow([name, repr(float(t)), repr(float(c.estimate[i])), se, bm])
        return buf.getvalue()
