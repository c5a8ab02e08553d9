"""P1 finite element assembly of the frozen-coefficient linear problem.

Given a fixed nodal field v, `assemble_system` discretizes

    int A(v(x), x, x/eps) grad(u) . grad(phi) + lam int u phi
    + alpha int_Gamma u phi = int f(v, x, x/eps) phi + alpha int_Gamma u_gas phi

with u = u_b imposed on Dirichlet vertices by row replacement plus column
lifting, which keeps the matrix symmetric for conjugate gradients.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from .geometry import Mesh, locate_points
from .problem import IntervalViolation, ProblemSpec, eval_A_many, periodic_wrap


class SingularSystemError(RuntimeError):
    """No Dirichlet part, no Robin mass, no zero-order term: constants are in
    the kernel and the system cannot be solved."""


class QuadratureResolutionWarning(UserWarning):
    """Cells are coarser than the coefficient period."""


@dataclass(frozen=True)
class DiscreteField:
    """Nodal scalar field on a mesh (a temperature iterate or solution)."""

    mesh: Mesh
    values: np.ndarray

    def __post_init__(self):
        vals = np.ascontiguousarray(np.asarray(self.values, dtype=float))
        if vals.shape != (self.mesh.num_vertices,):
            raise ValueError(
                f"field has {vals.shape} values for {self.mesh.num_vertices} vertices")
        if not np.all(np.isfinite(vals)):
            raise ValueError("field contains non-finite values")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    def max_norm(self) -> float:
        return float(np.max(np.abs(self.values)))


def constant_field(mesh: Mesh, value: float) -> DiscreteField:
    return DiscreteField(mesh, np.full(mesh.num_vertices, float(value)))


@dataclass(frozen=True)
class LinearSystem:
    """Constrained sparse SPD operator with its load.

    Rows/columns of Dirichlet vertices are reduced to identity rows whose
    right-hand side carries the boundary value; the free block stays
    symmetric positive definite whenever the Dirichlet part is nonempty, or
    alpha > 0 with a nonempty Robin part, or lam > 0.
    """

    mesh: Mesh
    matrix: sp.csr_matrix
    rhs: np.ndarray
    dirichlet_mask: np.ndarray

    @property
    def size(self) -> int:
        return self.rhs.shape[0]

    @property
    def free(self) -> np.ndarray:
        return ~self.dirichlet_mask


class Components(NamedTuple):
    """Raw (unconstrained) ingredients of the bilinear form."""

    stiffness: sp.csr_matrix     # int A grad u . grad phi
    mass: sp.csr_matrix          # int u phi            (unscaled by lam)
    robin: sp.csr_matrix         # int_Gamma u phi      (unscaled by alpha)
    load: np.ndarray             # int f(v) phi
    robin_load: np.ndarray       # int_Gamma u_gas phi  (unscaled by alpha)
    dirichlet_mask: np.ndarray
    dirichlet_values: np.ndarray


# --- quadrature -----------------------------------------------------------

_GAUSS2 = (0.5 - 0.5 / math.sqrt(3.0), 0.5 + 0.5 / math.sqrt(3.0))


def _interval_rule(subdiv: int):
    """Reference points (Q,1) and weights summing to 1 on [0, 1]."""
    if subdiv <= 1:
        pts = np.array([[_GAUSS2[0]], [_GAUSS2[1]]])
        w = np.array([0.5, 0.5])
    else:
        pts = ((np.arange(subdiv) + 0.5) / subdiv)[:, None]
        w = np.full(subdiv, 1.0 / subdiv)
    return pts, w


def _triangle_rule(subdiv: int):
    """Reference points (Q,2) and weights summing to 1/2 on the unit triangle."""
    if subdiv <= 1:
        pts = np.array([[0.5, 0.0], [0.5, 0.5], [0.0, 0.5]])
        w = np.full(3, 1.0 / 6.0)
        return pts, w
    s = subdiv
    pts = []
    for i in range(s):
        for j in range(s - i):
            pts.append(((3 * i + 1) / (3 * s), (3 * j + 1) / (3 * s)))
    for i in range(s - 1):
        for j in range(s - 1 - i):
            pts.append(((3 * i + 2) / (3 * s), (3 * j + 2) / (3 * s)))
    pts = np.array(pts)
    w = np.full(len(pts), 0.5 / s ** 2)
    return pts, w


def _subdivision_count(diameter: float, epsilon) -> int:
    if epsilon is None or diameter <= epsilon / 2.0:
        return 1
    return int(math.ceil(2.0 * diameter / epsilon))


def apply_quadrature(cell, integrand, epsilon=None) -> float:
    """Integrate over one cell: 2-point Gauss on intervals, 3-point midedge
    on triangles (exact for quadratics).  When the cell diameter exceeds
    eps/2 the cell is split into s^n subcells, s = ceil(2 h / eps), with the
    midpoint rule on each, so oscillatory coefficients are resolved.

    ``cell`` is the (k, n) vertex coordinate array; ``integrand`` maps
    points (Q, n) to values (Q,).
    """
    verts = np.atleast_2d(np.asarray(cell, dtype=float))
    if verts.shape[0] == 2:
        length = abs(verts[1, 0] - verts[0, 0])
        s = _subdivision_count(length, epsilon)
        ref, w = _interval_rule(s)
        pts = verts[0] + ref * (verts[1] - verts[0])
        scale = length
    elif verts.shape[0] == 3:
        e1, e2 = verts[1] - verts[0], verts[2] - verts[0]
        diam = max(np.linalg.norm(e1), np.linalg.norm(e2), np.linalg.norm(e2 - e1))
        s = _subdivision_count(diam, epsilon)
        ref, w = _triangle_rule(s)
        pts = verts[0] + ref @ np.vstack([e1, e2])
        scale = abs(e1[0] * e2[1] - e1[1] * e2[0])
    else:
        raise ValueError("cell must have 2 (interval) or 3 (triangle) vertices")
    vals = np.asarray(integrand(pts), dtype=float)
    return float(np.sum(w * vals) * scale)


def _mesh_rule(mesh: Mesh, epsilon):
    """One reference rule for the whole (uniform, structured) mesh."""
    h = mesh.cell_diameter()
    s = _subdivision_count(h, epsilon)
    if mesh.dim == 1:
        return _interval_rule(s)
    return _triangle_rule(s)


# --- assembly -------------------------------------------------------------

def _cell_geometry(mesh: Mesh):
    """Per-cell Jacobians, measures and constant P1 gradients."""
    coords = mesh.vertices[mesh.cells]          # (M, k, n)
    if mesh.dim == 1:
        L = coords[:, 1, 0] - coords[:, 0, 0]   # (M,)
        det = L
        grads = np.empty((len(L), 2, 1))
        grads[:, 0, 0] = -1.0 / L
        grads[:, 1, 0] = 1.0 / L
        return coords, det, grads
    e1 = coords[:, 1] - coords[:, 0]
    e2 = coords[:, 2] - coords[:, 0]
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]     # 2 * signed area
    inv_t = np.empty((len(det), 2, 2))                  # B^{-T}
    inv_t[:, 0, 0] = e2[:, 1] / det
    inv_t[:, 0, 1] = -e1[:, 1] / det
    inv_t[:, 1, 0] = -e2[:, 0] / det
    inv_t[:, 1, 1] = e1[:, 0] / det
    ref_g = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
    grads = np.einsum("mij,kj->mki", inv_t, ref_g)      # (M, 3, n)
    return coords, det, grads


def _basis_at(ref_pts: np.ndarray, dim: int) -> np.ndarray:
    if dim == 1:
        t = ref_pts[:, 0]
        return np.column_stack([1.0 - t, t])
    xi, eta = ref_pts[:, 0], ref_pts[:, 1]
    return np.column_stack([1.0 - xi - eta, xi, eta])


def assemble_components(mesh: Mesh, spec: ProblemSpec, v: DiscreteField) -> Components:
    """Assemble the raw matrices and loads for the iterate v.

    The frozen field v must already be clamped into [T_min, T_star]; the
    coefficient is evaluated at quadrature points with v interpolated
    linearly within each cell.
    """
    if v.mesh is not mesh and v.values.shape[0] != mesh.num_vertices:
        raise ValueError("field length does not match the mesh")
    vals = v.values
    if np.any(vals < spec.T_min) or np.any(vals > spec.T_star):
        raise IntervalViolation(
            "frozen field leaves the clamp interval "
            f"[{spec.T_min}, {spec.T_star}]; clamp it first")

    h = mesh.cell_diameter()
    if h > spec.epsilon:
        warnings.warn(
            f"cell diameter {h:.3g} exceeds the period eps={spec.epsilon:.3g}; "
            "quadrature is subdivided but the discretization is unresolved",
            QuadratureResolutionWarning, stacklevel=2)

    coords, det, grads = _cell_geometry(mesh)
    ref, w_ref = _mesh_rule(mesh, spec.epsilon)
    phi = _basis_at(ref, mesh.dim)              # (Q, k)
    M, k = mesh.cells.shape
    Q = ref.shape[0]

    # physical quadrature points and interpolated iterate
    xq = np.einsum("qk,mkn->mqn", phi, coords)            # (M, Q, n)
    vq = vals[mesh.cells] @ phi.T                          # (M, Q)
    W = np.abs(det)[:, None] * w_ref[None, :]              # (M, Q)

    flat_x = xq.reshape(M * Q, mesh.dim)
    A = eval_A_many(spec, vq.ravel(), flat_x).reshape(M, Q, mesh.dim, mesh.dim)
    yq = periodic_wrap(flat_x, spec.epsilon)
    fq = np.asarray(spec.f(vq.ravel(), flat_x, yq), dtype=float).reshape(M, Q)

    k_loc = np.einsum("mid,mqde,mje,mq->mij", grads, A, grads, W, optimize=True)
    m_loc = np.einsum("qi,qj,mq->mij", phi, phi, W, optimize=True)
    f_loc = np.einsum("qi,mq,mq->mi", phi, fq, W, optimize=True)

    rows = np.repeat(mesh.cells, k, axis=1).ravel()
    cols = np.tile(mesh.cells, (1, k)).ravel()
    n = mesh.num_vertices
    stiff = sp.coo_matrix((k_loc.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    mass = sp.coo_matrix((m_loc.ravel(), (rows, cols)), shape=(n, n)).tocsr()

    robin, robin_load = _robin_terms(mesh, spec)

    load = np.zeros(n)
    np.add.at(load, mesh.cells.ravel(), f_loc.ravel())

    dvs = mesh.dirichlet_vertices()
    mask = np.zeros(n, dtype=bool)
    mask[dvs] = True
    if dvs.size:
        dvals = np.asarray(spec.u_b(mesh.vertices[dvs]), dtype=float)
    else:
        dvals = np.zeros(0)

    return Components(stiff, mass, robin, load, robin_load, mask, dvals)


def _robin_terms(mesh: Mesh, spec: ProblemSpec):
    n = mesh.num_vertices
    facets = mesh.robin_facets()
    robin_load = np.zeros(n)
    if facets.size == 0:
        return sp.csr_matrix((n, n)), robin_load
    if mesh.dim == 1:
        idx = facets[:, 0]
        gas = np.asarray(spec.u_gas(mesh.vertices[idx]), dtype=float)
        robin = sp.coo_matrix((np.ones(len(idx)), (idx, idx)), shape=(n, n)).tocsr()
        np.add.at(robin_load, idx, gas)
        return robin, robin_load
    a = mesh.vertices[facets[:, 0]]
    b = mesh.vertices[facets[:, 1]]
    L = np.linalg.norm(b - a, axis=1)
    # P1 edge mass L/6 [[2,1],[1,2]]; u_gas load by 2-point Gauss (exact for
    # the mass, accurate for smooth gas temperatures)
    loc = np.einsum("e,ij->eij", L / 6.0, np.array([[2.0, 1.0], [1.0, 2.0]]))
    rows = np.repeat(facets, 2, axis=1).ravel()
    cols = np.tile(facets, (1, 2)).ravel()
    robin = sp.coo_matrix((loc.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    t = np.array(_GAUSS2)
    for tq in t:
        xq = a + tq * (b - a)
        gas = np.asarray(spec.u_gas(xq), dtype=float)
        np.add.at(robin_load, facets[:, 0], 0.5 * L * gas * (1.0 - tq))
        np.add.at(robin_load, facets[:, 1], 0.5 * L * gas * tq)
    return robin, robin_load


def _check_solvable(mesh: Mesh, spec: ProblemSpec, comp: Components):
    has_dirichlet = bool(np.any(comp.dirichlet_mask))
    has_robin = mesh.robin_facets().size > 0
    if not (has_dirichlet or (spec.alpha > 0 and has_robin) or spec.lam > 0):
        raise SingularSystemError(
            "all-Robin boundary with alpha = 0 and lambda = 0: constants are "
            "in the kernel")


def _compose(spec: ProblemSpec, comp: Components):
    A = comp.stiffness
    if spec.lam > 0:
        A = A + spec.lam * comp.mass
    if spec.alpha > 0:
        A = A + spec.alpha * comp.robin
    b = comp.load + spec.alpha * comp.robin_load
    return A.tocsr(), b


def _constrain(mesh: Mesh, A: sp.csr_matrix, b: np.ndarray, comp: Components) -> LinearSystem:
    n = A.shape[0]
    mask = comp.dirichlet_mask
    if not np.any(mask):
        return LinearSystem(mesh, A, b, mask)
    ud = np.zeros(n)
    ud[mask] = comp.dirichlet_values
    b = b - A @ ud
    b[mask] = comp.dirichlet_values
    keep = sp.diags((~mask).astype(float))
    pin = sp.diags(mask.astype(float))
    Ac = (keep @ A @ keep + pin).tocsr()
    Ac.eliminate_zeros()
    return LinearSystem(mesh, Ac, b, mask)


def assemble_system(mesh: Mesh, spec: ProblemSpec, v: DiscreteField) -> LinearSystem:
    """Constrained linear system of the map v -> u (coefficients frozen at v)."""
    comp = assemble_components(mesh, spec, v)
    _check_solvable(mesh, spec, comp)
    A, b = _compose(spec, comp)
    return _constrain(mesh, A, b, comp)


def system_and_residual(mesh: Mesh, spec: ProblemSpec, v: DiscreteField):
    """One assembly giving both the constrained system for v and the
    nonlinear defect of v itself (sup over unconstrained vertices)."""
    comp = assemble_components(mesh, spec, v)
    _check_solvable(mesh, spec, comp)
    A, b = _compose(spec, comp)
    r = A @ v.values - b
    free = ~comp.dirichlet_mask
    res = float(np.max(np.abs(r[free]))) if np.any(free) else 0.0
    return _constrain(mesh, A, b, comp), res


def residual(mesh: Mesh, spec: ProblemSpec, u: DiscreteField) -> float:
    """Nonlinear defect || K(u) u - F(u) ||_inf over unconstrained vertices."""
    _, res = system_and_residual(mesh, spec, u)
    return res


def eval_field(field: DiscreteField, points: np.ndarray) -> np.ndarray:
    """P1 interpolation of a nodal field at arbitrary points (structured mesh)."""
    cells, lam = locate_points(field.mesh, points)
    return np.einsum("pk,pk->p", field.values[field.mesh.cells[cells]], lam)


def cell_gradients(field: DiscreteField) -> np.ndarray:
    """Piecewise-constant P1 gradient per cell, shape (M, n)."""
    mesh = field.mesh
    _, _, grads = _cell_geometry(mesh)
    return np.einsum("mk,mkn->mn", field.values[mesh.cells], grads)


def write_system(system: LinearSystem, matrix_path, rhs_path):
    """Dump as coordinate text (1-based ``i j value`` lines) plus a plain
    rhs file, for cross-checks in external tools."""
    coo = system.matrix.tocoo()
    with open(matrix_path, "w") as fh:
        for i, j, val in zip(coo.row, coo.col, coo.data):
            fh.write(f"{i + 1} {j + 1} {float(val)!r}\n")
    with open(rhs_path, "w") as fh:
        for val in system.rhs:
            fh.write(f"{float(val)!r}\n")
