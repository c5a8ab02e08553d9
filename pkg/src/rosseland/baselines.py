"""Pinned quantitative baselines.

The underlying theory publishes no numbers, so every derived quantity was
measured once through the independent oracles (dense 1D finite differences,
brute-force damped iteration, dense linear algebra) and frozen into
``data/pinned_baselines.csv``.  Tests regression-check against these values;
rows with an infinite tolerance are recorded for the report trail only.

Regenerate with ``python scripts/regenerate_baselines.py`` after a deliberate
change of the reference configuration.
"""

from __future__ import annotations

import csv
from importlib import resources

_CACHE = None


def load_baselines() -> dict:
    """Map (experiment, key) -> (value, tolerance)."""
    global _CACHE
    if _CACHE is None:
        out = {}
        path = resources.files("rosseland").joinpath("data/pinned_baselines.csv")
        with path.open() as fh:
            for row in csv.DictReader(fh):
                out[(row["experiment"], row["key"])] = (
                    float(row["value"]), float(row["tolerance"]))
        _CACHE = out
    return _CACHE


def pinned(experiment: str, key: str) -> tuple:
    """(value, tolerance) for one pinned entry."""
    return load_baselines()[(experiment, key)]


def check(experiment: str, key: str, measured: float) -> bool:
    """True when the measured value sits within the pinned tolerance."""
    value, tol = pinned(experiment, key)
    return abs(measured - value) <= tol
