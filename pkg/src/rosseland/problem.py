"""Coefficient model and problem data for the conduction-radiation equation.

The diffusion tensor is A(u, x, y) = k(x, y) + 4 u^m b(x, y) with y = x/eps
wrapped into the unit cell.  Both k and b are symmetric positive definite
tensor fields with declared uniform spectral bounds, so the ellipticity of A
on a temperature interval is plain arithmetic (`ellipticity_interval`).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Callable

import numpy as np


class IntervalViolation(ValueError):
    """A temperature left the interval where the coefficient is elliptic."""


@dataclass(frozen=True)
class TensorField:
    """Symmetric n x n tensor field on (x, y) with uniform spectral bounds.

    ``evaluator(x, y)`` takes batched points (N, n) and returns (N, n, n);
    it must be 1-periodic in y by construction (it is only ever called with
    y wrapped into [0, 1)^n).  ``lower``/``upper`` are guaranteed bounds:
    lower |xi|^2 <= xi^T M xi <= upper |xi|^2 for every (x, y).  Bounds are
    declared by the constructor, not discovered.
    """

    evaluator: Callable
    lower: float
    upper: float
    name: str = "custom"

    def __post_init__(self):
        if self.lower < 0 or self.upper < self.lower:
            raise ValueError(f"invalid tensor bounds ({self.lower}, {self.upper})")

    def __call__(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return self.evaluator(x, y)

    @property
    def is_zero(self) -> bool:
        return self.upper == 0.0


def _eye_like(x, scale):
    n = x.shape[1]
    out = np.zeros((x.shape[0], n, n))
    idx = np.arange(n)
    s = np.asarray(scale, dtype=float)
    out[:, idx, idx] = s if s.ndim == 0 else s[:, None]
    return out


def constant(value: float) -> TensorField:
    """value * I everywhere; bounds (value, value)."""
    value = float(value)
    if value < 0:
        raise ValueError("constant coefficient must be >= 0")
    return TensorField(lambda x, y: _eye_like(x, value), value, value,
                       name=f"constant({value})")


def diagonal_sine(c0: float, c1: float) -> TensorField:
    """Smooth periodic diagonal tensor: entries c0 + c1 sin^2(pi y_1) sin^2(pi y_2)
    (in 1D just c0 + c1 sin^2(pi y_1)).  Bounds (c0, c0 + c1)."""
    c0, c1 = float(c0), float(c1)
    if c0 <= 0 or c1 < 0:
        raise ValueError("diagonal_sine needs c0 > 0 and c1 >= 0")

    def ev(x, y):
        s = np.sin(np.pi * y[:, 0]) ** 2
        for axis in range(1, y.shape[1]):
            s = s * np.sin(np.pi * y[:, axis]) ** 2
        return _eye_like(x, c0 + c1 * s)

    return TensorField(ev, c0, c0 + c1, name=f"diagonal_sine({c0}, {c1})")


def checkerboard(v0: float, v1: float) -> TensorField:
    """Two-phase composite: v0 * I on one phase of a 2x2 checkerboard of the
    unit cell, v1 * I on the other (alternating halves in 1D)."""
    v0, v1 = float(v0), float(v1)
    if min(v0, v1) <= 0:
        raise ValueError("checkerboard phases must be positive")

    def ev(x, y):
        phase = np.floor(2.0 * y[:, 0]).astype(int)
        for axis in range(1, y.shape[1]):
            phase = phase + np.floor(2.0 * y[:, axis]).astype(int)
        vals = np.where(phase % 2 == 0, v0, v1)
        return _eye_like(x, vals)

    return TensorField(ev, min(v0, v1), max(v0, v1), name=f"checkerboard({v0}, {v1})")


#: Registry used by the config parser; names map to TensorField factories.
COEFFICIENTS = {
    "constant": constant,
    "diagonal_sine": diagonal_sine,
    "checkerboard": checkerboard,
}


def periodic_wrap(x, epsilon: float) -> np.ndarray:
    """Componentwise frac(x / epsilon) into the unit cell [0, 1)^n.
    Negative coordinates wrap too."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    return np.mod(np.asarray(x, dtype=float) / epsilon, 1.0)


def as_point_fn(value) -> Callable:
    """Lift a constant to a vectorized point function; pass callables through."""
    if callable(value):
        return value
    c = float(value)
    return lambda x: np.full(np.atleast_2d(x).shape[0], c)


@dataclass(frozen=True)
class ProblemSpec:
    """Full boundary-value problem on an axis-aligned rectangle.

    Fields follow the weak form
        int A(u, x, x/eps) grad(u) . grad(phi) + lam int u phi
        + alpha int_Gamma (u - u_gas) phi = int f(u, x, x/eps) phi,
    with u = u_b on the Dirichlet part and Gamma the Robin part selected by
    ``robin_where`` on facet midpoints.  The physical interval is
    0 < T_min <= T_max <= T_star; T_star is the truncation ceiling.
    """

    extent: tuple
    k: TensorField
    b: TensorField
    m: float
    epsilon: float
    f: Callable                      # f(u, x, y) -> per-point values
    f_bounds: tuple
    alpha: float
    u_gas: Callable                  # x on Gamma -> temperature
    u_b: Callable                    # x on Dirichlet part -> temperature
    robin_where: Callable            # facet midpoint -> bool
    lam: float
    T_min: float
    T_max: float
    T_star: float

    def __post_init__(self):
        object.__setattr__(self, "extent",
                           tuple((float(lo), float(hi)) for lo, hi in self.extent))
        if not 0 < self.T_min <= self.T_max <= self.T_star:
            raise ValueError(
                f"need 0 < T_min <= T_max <= T_star, got "
                f"({self.T_min}, {self.T_max}, {self.T_star})")
        if self.m <= 0:
            raise ValueError("radiation exponent m must be positive")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.alpha < 0 or self.lam < 0:
            raise ValueError("alpha and lambda must be nonnegative")

    @property
    def dim(self) -> int:
        return len(self.extent)

    def interval(self) -> tuple:
        return (self.T_min, self.T_star)


def eval_A_many(spec: ProblemSpec, u: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Vectorized A(u_i, x_i) for clamped temperatures u (N,) at points x (N, n)."""
    u = np.asarray(u, dtype=float)
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if np.any(u < spec.T_min) or np.any(u > spec.T_star):
        bad = u[(u < spec.T_min) | (u > spec.T_star)][0]
        raise IntervalViolation(
            f"temperature {bad} outside [{spec.T_min}, {spec.T_star}]; "
            "clamp before evaluating the coefficient")
    y = periodic_wrap(x, spec.epsilon)
    A = spec.k(x, y).copy()
    if not spec.b.is_zero:
        A = A + (4.0 * u ** spec.m)[:, None, None] * spec.b(x, y)
    return A


def eval_A(spec: ProblemSpec, u: float, x) -> np.ndarray:
    """A(u, x, x/eps) = k(x, y) + 4 u^m b(x, y) at a single point.

    Raises IntervalViolation when u is outside [T_min, T_star]: outside the
    interval the ellipticity guarantee is void, so the coefficient is never
    silently evaluated there.
    """
    x = np.asarray(x, dtype=float).reshape(1, -1)
    return eval_A_many(spec, np.array([float(u)]), x)[0]


def ellipticity_interval(spec: ProblemSpec, u_low: float, u_high: float) -> tuple:
    """Spectral bounds (C3, C4) of A valid while u stays in [u_low, u_high].

    C3 = k.lower + 4 u_low^m b.lower and C4 = k.upper + 4 u_high^m b.upper;
    monotonicity of u^m for u > 0 makes these sharp at the interval ends.
    """
    if u_low <= 0:
        raise ValueError("u_low must be positive")
    if u_high < u_low:
        raise ValueError("need u_low <= u_high")
    c3 = spec.k.lower + 4.0 * u_low ** spec.m * spec.b.lower
    c4 = spec.k.upper + 4.0 * u_high ** spec.m * spec.b.upper
    return c3, c4


def make_source(s, sigma: float, interval: tuple, s_bounds=None):
    """Source f(u, x, y) = s(x) - sigma * u with its bounds on the interval.

    sigma >= 0 keeps the u-dependence dissipative, the safe default for the
    maximum-principle checks.  A callable s needs declared ``s_bounds``.
    """
    sigma = float(sigma)
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    s_fn = as_point_fn(s)

    def f(u, x, y):
        return s_fn(np.atleast_2d(x)) - sigma * u

    if callable(s):
        if s_bounds is None:
            raise ValueError("a callable source needs explicit s_bounds")
        s_lo, s_hi = (float(s_bounds[0]), float(s_bounds[1]))
    else:
        s_lo = s_hi = float(s)
    lo, hi = interval
    bounds = (s_lo - sigma * hi, s_hi - sigma * lo)
    return f, bounds


def _boundary_samples(extent, per_side: int = 33) -> np.ndarray:
    """Points spread along the rectangle boundary, corners excluded."""
    if len(extent) == 1:
        (lo, hi), = extent
        return np.array([[lo], [hi]])
    (lx, hx), (ly, hy) = extent
    t = np.linspace(0.0, 1.0, per_side + 2)[1:-1]
    xs = lx + t * (hx - lx)
    ys = ly + t * (hy - ly)
    sides = [
        np.column_stack([xs, np.full_like(xs, ly)]),
        np.column_stack([xs, np.full_like(xs, hy)]),
        np.column_stack([np.full_like(ys, lx), ys]),
        np.column_stack([np.full_like(ys, hx), ys]),
    ]
    return np.vstack(sides)


def sampled_lipschitz(spec: ProblemSpec, n: int = 200, seed: int = 0) -> float:
    """Sampled Lipschitz constant of u -> f(u, x, y) on the clamped interval."""
    rng = np.random.default_rng(seed)
    pts = np.column_stack([rng.uniform(lo, hi, n) for lo, hi in spec.extent])
    y = periodic_wrap(pts, spec.epsilon)
    u1 = rng.uniform(spec.T_min, spec.T_star, n)
    u2 = rng.uniform(spec.T_min, spec.T_star, n)
    keep = np.abs(u1 - u2) > 1e-9
    if not np.any(keep):
        return 0.0
    df = np.abs(np.asarray(spec.f(u1, pts, y)) - np.asarray(spec.f(u2, pts, y)))
    return float(np.max(df[keep] / np.abs(u1 - u2)[keep]))


def validate_problem(spec: ProblemSpec, seed: int = 0) -> None:
    """Check the sampled problem invariants; raises ValueError on violation.

    Verifies that boundary data stays inside [T_min, T_max] on its own part
    of the boundary and that the source has a finite sampled Lipschitz
    constant in u (the standing assumption on the nonlinearity).
    """
    pts = _boundary_samples(spec.extent)
    on_robin = np.array([bool(spec.robin_where(p)) for p in pts])
    if np.any(~on_robin):
        vals = np.asarray(spec.u_b(pts[~on_robin]), dtype=float)
        if np.any(vals < spec.T_min - 1e-12) or np.any(vals > spec.T_max + 1e-12):
            raise ValueError(
                f"u_b leaves [{spec.T_min}, {spec.T_max}] on the Dirichlet part "
                f"(sampled range [{vals.min()}, {vals.max()}])")
    if np.any(on_robin):
        vals = np.asarray(spec.u_gas(pts[on_robin]), dtype=float)
        if np.any(vals < spec.T_min - 1e-12) or np.any(vals > spec.T_max + 1e-12):
            raise ValueError(
                f"u_gas leaves [{spec.T_min}, {spec.T_max}] on Gamma "
                f"(sampled range [{vals.min()}, {vals.max()}])")
    lip = sampled_lipschitz(spec, seed=seed)
    if not np.isfinite(lip):
        raise ValueError("source term has no finite sampled Lipschitz constant in u")


def replace(spec: ProblemSpec, **changes) -> ProblemSpec:
    """dataclasses.replace with revalidation."""
    return dataclasses.replace(spec, **changes)
