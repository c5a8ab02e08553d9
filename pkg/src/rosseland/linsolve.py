"""Jacobi-preconditioned conjugate gradients for the assembled systems.

Desk-scale meshes converge quickly under plain diagonal preconditioning, and
the iteration count is itself a useful conditioning diagnostic, so nothing
heavier is used.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assemble import DiscreteField, LinearSystem


class DefinitenessError(RuntimeError):
    """The operator is not positive definite (broken assembly or a clamp
    violation upstream)."""


class NonConvergenceError(RuntimeError):
    """CG hit the iteration cap; carries the SolveStats reached."""

    def __init__(self, message, stats):
        super().__init__(message)
        self.stats = stats


@dataclass(frozen=True)
class SolveStats:
    iterations: int
    final_relative_residual: float
    breakdown_flag: bool = False


def cg_solve(system: LinearSystem, tol: float = 1e-10, max_iterations=None,
             x0: np.ndarray = None, callback=None):
    """Solve the constrained system to a relative residual on free rows.

    Returns (DiscreteField, SolveStats) with
    ||matrix u - rhs||_2 <= tol ||rhs||_2 over unconstrained rows and exact
    boundary values on constrained rows.  The start vector ``x0`` (typically
    the previous Picard iterate) is used where given, zero otherwise.
    Deterministic: no randomized initialization.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    A, b = system.matrix, system.rhs
    free = system.free
    n_free = int(np.count_nonzero(free))
    if max_iterations is None:
        max_iterations = 10 * max(n_free, 1)

    x = np.zeros(system.size) if x0 is None else np.array(x0, dtype=float)
    x[system.dirichlet_mask] = b[system.dirichlet_mask]
    if n_free == 0:
        return DiscreteField(system.mesh, x), SolveStats(0, 0.0)

    diag = A.diagonal()
    if np.any(diag[free] <= 0):
        raise DefinitenessError("non-positive diagonal entry in the free block")

    b_norm = float(np.linalg.norm(b[free]))
    if b_norm == 0.0:
        x[free] = 0.0
        return DiscreteField(system.mesh, x), SolveStats(0, 0.0)
    target = tol * b_norm

    r = b - A @ x
    r[~free] = 0.0
    r_norm = float(np.linalg.norm(r))
    if callback is not None:
        callback(x.copy())
    if r_norm <= target:
        return DiscreteField(system.mesh, x), SolveStats(0, r_norm / b_norm)

    z = r / diag
    p = z.copy()
    rz = float(r @ z)
    it = 0
    while it < max_iterations:
        Ap = A @ p
        pAp = float(p @ Ap)
        if pAp <= 0.0:
            raise DefinitenessError(
                f"p^T A p = {pAp} <= 0 at iteration {it}: operator not SPD")
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        r[~free] = 0.0
        it += 1
        r_norm = float(np.linalg.norm(r))
        if callback is not None:
            callback(x.copy())
        if r_norm <= target:
            return DiscreteField(system.mesh, x), SolveStats(it, r_norm / b_norm)
        z = r / diag
        rz_new = float(r @ z)
        beta = rz_new / rz
        rz = rz_new
        p = z + beta * p

    stats = SolveStats(it, r_norm / b_norm)
    raise NonConvergenceError(
        f"CG did not reach {tol:g} in {max_iterations} iterations "
        f"(relative residual {stats.final_relative_residual:.3e})", stats)
