"""Canonical problem configurations used by tests, baselines and docs."""

from __future__ import annotations

import numpy as np

from .problem import (ProblemSpec, as_point_fn, checkerboard, constant,
                      diagonal_sine, make_source, replace)

UNIT_SQUARE = ((0.0, 1.0), (0.0, 1.0))
UNIT_INTERVAL = ((0.0, 1.0),)


def robin_sides(*sides):
    """Predicate selecting named rectangle sides (left/right/bottom/top in
    2D, left/right in 1D) by facet midpoint, up to a 1e-9 wall tolerance."""
    chosen = set(sides)
    known = {"left", "right", "bottom", "top", "all", "none"}
    unknown = chosen - known
    if unknown:
        raise ValueError(f"unknown side(s) {sorted(unknown)}; pick from {sorted(known)}")

    def predicate(p, extent):
        if "none" in chosen:
            return False
        if "all" in chosen:
            return True
        tol = 1e-9
        if "left" in chosen and abs(p[0] - extent[0][0]) < tol:
            return True
        if "right" in chosen and abs(p[0] - extent[0][1]) < tol:
            return True
        if len(extent) > 1:
            if "bottom" in chosen and abs(p[1] - extent[1][0]) < tol:
                return True
            if "top" in chosen and abs(p[1] - extent[1][1]) < tol:
                return True
        return False

    return predicate


def _bind(predicate, extent):
    return lambda p: predicate(p, extent)


def _spec(extent, k, b, m, epsilon, s, sigma, alpha, u_b, u_gas, robin,
          lam, T_min, T_max, T_star) -> ProblemSpec:
    interval = (T_min, T_star)
    f, f_bounds = make_source(s, sigma, interval)
    return ProblemSpec(
        extent=extent, k=k, b=b, m=m, epsilon=epsilon,
        f=f, f_bounds=f_bounds, alpha=alpha,
        u_gas=as_point_fn(u_gas), u_b=as_point_fn(u_b),
        robin_where=_bind(robin, extent),
        lam=lam, T_min=T_min, T_max=T_max, T_star=T_star)


def reference_problem() -> ProblemSpec:
    """The pinned checkerboard configuration every baseline refers to:
    unit square, k in {0.5, 2}, b in {0.1, 0.4}, m = 3, eps = 1/8,
    unit-gas Robin on three sides, Dirichlet bottom at 1, source 0.5."""
    return _spec(
        UNIT_SQUARE,
        k=checkerboard(0.5, 2.0), b=checkerboard(0.1, 0.4),
        m=3.0, epsilon=0.125,
        s=0.5, sigma=0.0,
        alpha=1.0, u_b=1.0, u_gas=1.0,
        robin=robin_sides("left", "right", "top"),
        lam=0.0, T_min=0.5, T_max=1.5, T_star=2.0)


def reference_variant(seed: int) -> ProblemSpec:
    """Randomized variant of the reference configuration with coefficient
    parameters drawn inside the declared physical ranges."""
    rng = np.random.default_rng(seed)
    k0 = rng.uniform(0.4, 0.8)
    k1 = rng.uniform(1.5, 2.5)
    b0 = rng.uniform(0.05, 0.15)
    b1 = rng.uniform(0.3, 0.5)
    alpha = rng.uniform(0.5, 2.0)
    s = rng.uniform(0.2, 0.8)
    eps = rng.choice([0.25, 0.125])
    base = reference_problem()
    f, f_bounds = make_source(s, 0.0, base.interval())
    return replace(base, k=checkerboard(k0, k1), b=checkerboard(b0, b1),
                   alpha=alpha, epsilon=float(eps), f=f, f_bounds=f_bounds)


def blowup_problem(source: float = 20.0) -> ProblemSpec:
    """Reference configuration with a deliberately undersized truncation
    ceiling (T_star = T_max) and a large source: the clamp saturates and the
    driver must report it instead of converging."""
    base = reference_problem()
    f, f_bounds = make_source(source, 0.0, (base.T_min, base.T_max))
    return replace(base, f=f, f_bounds=f_bounds, T_star=base.T_max)


def pure_robin_ladder_problem() -> ProblemSpec:
    """All-Robin problem with a weak heat-transfer coefficient and a strong
    source; its solution sits well above T_max, so the ceiling ladder has to
    climb before validating."""
    return _spec(
        UNIT_SQUARE,
        k=checkerboard(0.5, 2.0), b=checkerboard(0.1, 0.4),
        m=3.0, epsilon=0.25,
        s=5.0, sigma=0.0,
        alpha=0.1, u_b=1.0, u_gas=1.0,
        robin=robin_sides("all"),
        lam=0.0, T_min=0.5, T_max=1.0, T_star=1.0)


def rosseland_1d_problem() -> ProblemSpec:
    """1D cross-check configuration: k = b = 1, m = 3, Dirichlet 1 at the
    left end, Robin exchange with gas at 1.5 on the right."""
    return _spec(
        UNIT_INTERVAL,
        k=constant(1.0), b=constant(1.0),
        m=3.0, epsilon=1.0,
        s=0.0, sigma=0.0,
        alpha=1.0, u_b=1.0, u_gas=1.5,
        robin=robin_sides("right"),
        lam=0.0, T_min=1.0, T_max=2.0, T_star=2.0)


def oscillatory_1d_problem(epsilon: float = 0.125) -> ProblemSpec:
    """1D variant with a smoothly oscillating conductivity."""
    base = rosseland_1d_problem()
    return replace(base, k=diagonal_sine(1.0, 1.0), epsilon=epsilon)


def poisson_1d_problem() -> ProblemSpec:
    """Linear 1D problem -u'' = 1 shifted into the physical interval:
    u_b = T_min at both ends, so u - T_min = x(1-x)/2 exactly."""
    return _spec(
        UNIT_INTERVAL,
        k=constant(1.0), b=constant(0.0),
        m=3.0, epsilon=1.0,
        s=1.0, sigma=0.0,
        alpha=0.0, u_b=1.0, u_gas=1.0,
        robin=robin_sides("none"),
        lam=0.0, T_min=1.0, T_max=2.0, T_star=2.0)


def mms_template(linear: bool, with_robin: bool = None) -> ProblemSpec:
    """Template for manufactured problems on the unit square.

    The linear variant (b = 0) keeps a Robin edge on the right with a large
    heat-transfer coefficient, so the manufactured gas temperature stays
    physical; the full Rosseland variant uses pure Dirichlet data.
    """
    if with_robin is None:
        with_robin = linear
    if linear:
        b = constant(0.0)
    else:
        b = diagonal_sine(0.5, 0.5)
    return _spec(
        UNIT_SQUARE,
        k=diagonal_sine(1.0, 0.5), b=b,
        m=3.0, epsilon=0.5,
        s=0.0, sigma=0.0,
        alpha=10.0 if with_robin else 0.0,
        u_b=1.5, u_gas=1.5,
        robin=robin_sides("right") if with_robin else robin_sides("none"),
        lam=0.0, T_min=1.0, T_max=1.9, T_star=2.0)


def sinusoid(offset: float = 1.5, amplitude: float = 0.25):
    """Smooth manufactured field offset + amplitude * prod sin(pi x_i)."""

    def exact(x):
        x = np.atleast_2d(x)
        out = np.full(x.shape[0], 1.0)
        for axis in range(x.shape[1]):
            out = out * np.sin(np.pi * x[:, axis])
        return offset + amplitude * out

    return exact


def gradient_template() -> ProblemSpec:
    """u-independent diffusion with the nonlinear source f(u) = 1 - u, the
    simplified problem of the interior gradient estimate.  Boundary data sits
    above the source equilibrium, so the gradient field is nontrivial."""
    return _spec(
        UNIT_SQUARE,
        k=checkerboard(0.5, 2.0), b=constant(0.0),
        m=3.0, epsilon=0.25,
        s=1.0, sigma=1.0,
        alpha=1.0, u_b=1.2, u_gas=1.2,
        robin=robin_sides("left", "right", "top"),
        lam=0.0, T_min=0.5, T_max=1.5, T_star=2.0)
