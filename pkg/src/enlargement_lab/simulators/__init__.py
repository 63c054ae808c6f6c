"""Monte Carlo companions of the exact engine (floating point lives only here)."""

from __future__ import annotations

import dataclasses
from fractions import Fraction
from typing import Mapping

from ..errors import SchemaError
from .brownian import BrownianParams, simulate_brownian_last_zero
from .cox import CoxModel, exact_twin, simulate_cox_accessible
from .cpp import CppParams, simulate_cpp_last_passage
from .levy import LevyParams, simulate_levy_supremum
from .report import Curve, SimReport

__all__ = [
    "BrownianParams",
    "CoxModel",
    "CppParams",
    "Curve",
    "LevyParams",
    "SimReport",
    "KINDS",
    "exact_twin",
    "run_scenario",
    "simulate_brownian_last_zero",
    "simulate_cox_accessible",
    "simulate_cpp_last_passage",
    "simulate_levy_supremum",
]

KINDS = ("cpp", "brownian", "levy", "cox")

_PARAMS = {"cpp": CppParams, "brownian": BrownianParams, "levy": LevyParams}
_RUN = {"cpp": simulate_cpp_last_passage, "brownian": simulate_brownian_last_zero, "levy": simulate_levy_supremum}


def _number(key: str, value):
    if isinstance(value, bool):
        raise SchemaError(f"{key!r} must be a number", key=key)
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return float(Fraction(value))
        except (ValueError, ZeroDivisionError):
            pass
    raise SchemaError(f"{key!r} must be a number", key=key)


def params_from_json(kind: str, data: Mapping):
    cls = _PARAMS[kind]
    fields = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        if key == "kind":
            continue
        if key not in fields:
            raise SchemaError(f"unknown key {key!r} for {kind} scenario", key=key)
        if key == "jumps":
            if not isinstance(value, Mapping) or "kind" not in value:
                raise SchemaError("jump law needs a 'kind'", key="jumps")
            kwargs[key] = dict(value)
        elif key == "atom_times":
            if not isinstance(value, list):
                raise SchemaError(f"{key!r} must be a list", key=key)
            kwargs[key] = tuple(_number(key, v) for v in value)
        elif key in ("report_points", "jumps_tracked"):
            if not isinstance(value, int) or isinstance(value, bool):
                raise SchemaError(f"{key!r} must be an integer", key=key)
            kwargs[key] = value
        else:
            kwargs[key] = _number(key, value)
    missing = [n for n, f in fields.items() if f.default is dataclasses.MISSING and f.default_factory is dataclasses.MISSING and n not in kwargs]
    if missing:
        raise SchemaError(f"missing key {missing[0]!r}", key=missing[0])
    return cls(**kwargs)


def run_scenario(data: Mapping, n: int, seed: int) -> SimReport:
    """Dispatch a scenario description to its simulator."""
    if not isinstance(data, Mapping):
        raise SchemaError("scenario must be an object")
    kind = data.get("kind")
    if kind is None:
        raise SchemaError("missing key 'kind'", key="kind")
    if kind not in KINDS:
        raise SchemaError(f"unknown scenario kind {kind!r}", key="kind")
    if kind == "cox":
        return simulate_cox_accessible(CoxModel.from_json(data), n, seed)
    return _RUN[kind](params_from_json(kind, data), n, seed)
