import numpy as np
import pytest

from rosseland.presets import UNIT_SQUARE, robin_sides
from rosseland.problem import (ProblemSpec, as_point_fn, constant,
                               make_source)


def build_spec(extent=UNIT_SQUARE, k=None, b=None, m=3.0, epsilon=1.0,
               s=0.0, sigma=0.0, alpha=0.0, u_b=1.0, u_gas=1.0,
               robin="none", lam=0.0, T_min=0.5, T_max=1.5, T_star=2.0,
               f=None, f_bounds=None):
    """Compact ProblemSpec factory for tests."""
    if k is None:
        k = constant(1.0)
    if b is None:
        b = constant(0.0)
    if f is None:
        f, f_bounds = make_source(s, sigma, (T_min, T_star))
    predicate = robin_sides(*robin.split()) if isinstance(robin, str) else robin
    return ProblemSpec(
        extent=extent, k=k, b=b, m=m, epsilon=epsilon,
        f=f, f_bounds=f_bounds, alpha=alpha,
        u_gas=as_point_fn(u_gas), u_b=as_point_fn(u_b),
        robin_where=lambda p, _pred=predicate, _e=extent: _pred(p, _e),
        lam=lam, T_min=T_min, T_max=T_max, T_star=T_star)


@pytest.fixture
def rng():
    return np.random.default_rng(0)
