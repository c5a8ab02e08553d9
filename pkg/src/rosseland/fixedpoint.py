"""Damped Picard iteration on the truncated temperature interval.

One step freezes the coefficients at the clamped iterate, solves the linear
problem, relaxes, and clamps back into [T_min, T_star].  The clamp is the
discrete truncation operator: the coefficient is elliptic only on the
interval, so the frozen field is always projected onto it first.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .assemble import DiscreteField, constant_field, system_and_residual
from .geometry import Mesh
from .linsolve import SolveStats, cg_solve
from .problem import ProblemSpec, replace


class IterationStatus(enum.Enum):
    CONVERGED = "Converged"
    MAX_STEPS = "MaxStepsExceeded"
    DIVERGED = "Diverged"
    CLAMP_SATURATED = "ClampSaturated"


class UnboundedGrowthError(RuntimeError):
    """The truncation-ceiling ladder was exhausted; echoes blow-up behaviour.
    Carries the sequence of observed field maxima per ladder rung."""

    def __init__(self, message, maxima):
        super().__init__(message)
        self.maxima = list(maxima)


@dataclass(frozen=True)
class PicardStep:
    picard_index: int
    update_norm: float
    nonlinear_residual: float
    clamp_fraction: float
    solve_stats: SolveStats


@dataclass(frozen=True)
class IterationReport:
    steps: tuple
    status: IterationStatus
    final_field: DiscreteField

    @property
    def converged(self) -> bool:
        return self.status is IterationStatus.CONVERGED

    @property
    def final_clamp_fraction(self) -> float:
        return self.steps[-1].clamp_fraction if self.steps else 0.0

    @property
    def final_residual(self) -> float:
        return self.steps[-1].nonlinear_residual if self.steps else float("nan")


def clamp(v: DiscreteField, low: float, high: float) -> DiscreteField:
    """Componentwise projection onto [low, high]."""
    if low > high:
        raise ValueError(f"empty clamp interval [{low}, {high}]")
    return DiscreteField(v.mesh, np.clip(v.values, low, high))


def picard_step(mesh: Mesh, spec: ProblemSpec, v: DiscreteField,
                cg_tol: float = 1e-10, cg_max_iterations=None):
    """One application of the linearized map: clamp v, freeze the
    coefficients and the source at it, solve.  Returns (u, SolveStats)."""
    vc = clamp(v, spec.T_min, spec.T_star)
    system, _ = system_and_residual(mesh, spec, vc)
    return cg_solve(system, tol=cg_tol, max_iterations=cg_max_iterations,
                    x0=vc.values)


def solve_nonlinear(mesh: Mesh, spec: ProblemSpec, v0: DiscreteField,
                    damping: float = 1.0, update_tol: float = 1e-8,
                    residual_tol: float = 1e-8, max_steps: int = 50,
                    cg_tol: float = 1e-10, cg_max_iterations=None) -> IterationReport:
    """Iterate v_{k+1} = clamp((1 - damping) v_k + damping * map(v_k)).

    Stops Converged when the last update norm (sup norm, matching the C0
    framing of the estimates) is <= update_tol AND the nonlinear defect of
    the new iterate is <= residual_tol.  Diverged when the raw update norm
    exceeds 1e6 (T_star - T_min); ClampSaturated when at least half the
    vertices are clamped for 5 consecutive steps (the ceiling is too small).
    Damping halves (down to 1/16) after two consecutive update-norm
    increases, so non-contractive regimes are survivable.
    """
    if not 0.0 < damping <= 1.0:
        raise ValueError("damping must be in (0, 1]")
    if update_tol <= 0 or residual_tol <= 0:
        raise ValueError("tolerances must be positive")

    lo, hi = spec.T_min, spec.T_star
    v = clamp(v0, lo, hi)
    steps = []
    pending = None           # update info waiting for its residual
    norms = []
    saturated_run = 0
    status = IterationStatus.MAX_STEPS
    diverge_limit = 1e6 * max(hi - lo, np.finfo(float).tiny)

    k = 0
    while True:
        system, res = system_and_residual(mesh, spec, v)
        if pending is not None:
            idx, update, frac, stats = pending
            steps.append(PicardStep(idx, update, res, frac, stats))
            if update <= update_tol and res <= residual_tol:
                status = IterationStatus.CONVERGED
                break
            if update > diverge_limit:
                status = IterationStatus.DIVERGED
                break
            saturated_run = saturated_run + 1 if frac >= 0.5 else 0
            if saturated_run >= 5:
                status = IterationStatus.CLAMP_SATURATED
                break
        if k >= max_steps:
            status = IterationStatus.MAX_STEPS
            break

        u, stats = cg_solve(system, tol=cg_tol,
                            max_iterations=cg_max_iterations, x0=v.values)
        raw = (1.0 - damping) * v.values + damping * u.values
        clamped = np.clip(raw, lo, hi)
        frac = float(np.mean(clamped != raw))
        update = float(np.max(np.abs(raw - v.values)))

        norms.append(update)
        if (len(norms) >= 3 and norms[-1] > norms[-2] > norms[-3]
                and damping > 1.0 / 16.0):
            damping = max(damping / 2.0, 1.0 / 16.0)
            norms = norms[-1:]
        v = DiscreteField(mesh, clamped)
        pending = (k + 1, update, frac, stats)
        k += 1

    return IterationReport(tuple(steps), status, v)


def discover_T_star(mesh: Mesh, spec: ProblemSpec, safety: float = 2.0,
                    **solver_kwargs) -> float:
    """Find a truncation ceiling by a geometric ladder with a-posteriori
    validation.

    Tries T = T_max * 2^j for j = 0..7: solve with T_star = safety * T and
    accept the first T that converges with the solution maximum <= T (the
    ceiling is then provably inactive).  Raises UnboundedGrowthError with
    the observed maxima when the ladder is exhausted.
    """
    if safety < 1.0:
        raise ValueError("safety must be >= 1")
    maxima = []
    for j in range(8):
        T = spec.T_max * 2.0 ** j
        trial = replace(spec, T_star=safety * T)
        v0 = constant_field(mesh, trial.T_min)
        report = solve_nonlinear(mesh, trial, v0, **solver_kwargs)
        peak = float(np.max(report.final_field.values))
        maxima.append(peak)
        if report.converged and peak <= T:
            return T
    raise UnboundedGrowthError(
        f"ceiling ladder exhausted after 8 rungs; observed maxima {maxima}",
        maxima)


def write_iteration_csv(report: IterationReport, path, metadata=()):
    """Per-step CSV: step,update_norm,residual,clamp_fraction,cg_iters."""
    lines = [f"# {m}" for m in metadata]
    lines.append("step,update_norm,residual,clamp_fraction,cg_iters")
    for s in report.steps:
        lines.append(f"{s.picard_index},{s.update_norm!r},{s.nonlinear_residual!r},"
                     f"{s.clamp_fraction!r},{s.solve_stats.iterations}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
