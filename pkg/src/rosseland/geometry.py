"""Structured simplicial meshes of axis-aligned rectangles.

Meshes are 1D interval chains or 2D right-triangle grids with the boundary
partitioned into a Dirichlet part and a natural (Robin) part.  All meshes are
immutable after construction and safe to share between threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DIRICHLET = "D"
ROBIN = "R"


def _frozen(a):
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Mesh:
    """Conforming simplicial mesh with tagged boundary facets.

    Attributes
    ----------
    vertices : (N, n) float array, n in {1, 2}
    cells : (M, n+1) int array
        Interval endpoints or counterclockwise triangle corners.
    facets : (K, n) int array
        Boundary facets: single vertices in 1D, edges in 2D.
    facet_tags : (K,) array of "D" / "R"
    extent : per-axis (low, high) pairs of the generating rectangle
    divisions : per-axis cell counts of the generating grid
    """

    vertices: np.ndarray
    cells: np.ndarray
    facets: np.ndarray
    facet_tags: np.ndarray
    extent: tuple = field(default=None)
    divisions: tuple = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "vertices", _frozen(np.asarray(self.vertices, dtype=float)))
        object.__setattr__(self, "cells", _frozen(np.asarray(self.cells, dtype=np.int64)))
        object.__setattr__(self, "facets", _frozen(np.asarray(self.facets, dtype=np.int64)))
        object.__setattr__(self, "facet_tags", _frozen(np.asarray(self.facet_tags)))

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def num_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def num_cells(self) -> int:
        return self.cells.shape[0]

    @property
    def boundary_facets(self):
        """Facets as (vertex-index tuple, tag) pairs."""
        return [(tuple(int(v) for v in f), str(t)) for f, t in zip(self.facets, self.facet_tags)]

    def facet_midpoints(self) -> np.ndarray:
        return self.vertices[self.facets].mean(axis=1)

    def dirichlet_vertices(self) -> np.ndarray:
        """Vertices constrained by Dirichlet data.

        A vertex shared by a Dirichlet and a Robin facet counts as Dirichlet
        (the constraint wins).
        """
        sel = self.facets[self.facet_tags == DIRICHLET]
        return np.unique(sel)

    def robin_facets(self) -> np.ndarray:
        return self.facets[self.facet_tags == ROBIN]

    def cell_measures(self) -> np.ndarray:
        """Signed length (1D) or signed area (2D) per cell."""
        coords = self.vertices[self.cells]
        if self.dim == 1:
            return coords[:, 1, 0] - coords[:, 0, 0]
        e1 = coords[:, 1] - coords[:, 0]
        e2 = coords[:, 2] - coords[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    def cell_diameter(self) -> float:
        """Largest cell diameter (interval length / longest triangle edge)."""
        coords = self.vertices[self.cells]
        if self.dim == 1:
            return float(np.max(np.abs(coords[:, 1, 0] - coords[:, 0, 0])))
        k = coords.shape[1]
        d = 0.0
        for i in range(k):
            for j in range(i + 1, k):
                d = max(d, float(np.max(np.linalg.norm(coords[:, i] - coords[:, j], axis=1))))
        return d

    def barycenters(self) -> np.ndarray:
        return self.vertices[self.cells].mean(axis=1)


def build_rect_mesh(extent, divisions) -> Mesh:
    """Mesh an axis-aligned rectangle with a structured grid.

    1D gives `divisions` equal intervals; 2D splits every grid square into
    two right triangles along the same diagonal (which makes the assembled
    isotropic stiffness an M-matrix).  All boundary facets start Dirichlet.

    Parameters
    ----------
    extent : ((low, high), ...) one pair per axis
    divisions : (int, ...) cells per axis, each >= 1
    """
    extent = tuple((float(lo), float(hi)) for lo, hi in np.atleast_2d(np.asarray(extent, dtype=float)))
    divisions = tuple(int(d) for d in np.atleast_1d(divisions))
    if len(extent) != len(divisions):
        raise ValueError(f"extent has {len(extent)} axes but divisions has {len(divisions)}")
    if len(extent) not in (1, 2):
        raise ValueError("only 1D and 2D meshes are supported")
    for lo, hi in extent:
        if not hi > lo:
            raise ValueError(f"degenerate extent ({lo}, {hi})")
    for d in divisions:
        if d < 1:
            raise ValueError(f"divisions must be >= 1, got {d}")

    if len(extent) == 1:
        (lo, hi), nx = extent[0], divisions[0]
        xs = np.linspace(lo, hi, nx + 1)
        vertices = xs[:, None]
        cells = np.column_stack([np.arange(nx), np.arange(1, nx + 1)])
        facets = np.array([[0], [nx]])
    else:
        (lx, hx), (ly, hy) = extent
        nx, ny = divisions
        xs = np.linspace(lx, hx, nx + 1)
        ys = np.linspace(ly, hy, ny + 1)
        X, Y = np.meshgrid(xs, ys, indexing="xy")
        vertices = np.column_stack([X.ravel(), Y.ravel()])

        def vid(ix, iy):
            return iy * (nx + 1) + ix

        cells = []
        for iy in range(ny):
            for ix in range(nx):
                v00, v10 = vid(ix, iy), vid(ix + 1, iy)
                v01, v11 = vid(ix, iy + 1), vid(ix + 1, iy + 1)
                cells.append((v00, v10, v11))
                cells.append((v00, v11, v01))
        cells = np.array(cells)

        facets = []
        for ix in range(nx):
            facets.append((vid(ix, 0), vid(ix + 1, 0)))
            facets.append((vid(ix, ny), vid(ix + 1, ny)))
        for iy in range(ny):
            facets.append((vid(0, iy), vid(0, iy + 1)))
            facets.append((vid(nx, iy), vid(nx, iy + 1)))
        facets = np.array(facets)

    tags = np.full(len(facets), DIRICHLET)
    return Mesh(vertices, cells, facets, tags, extent=extent, divisions=divisions)


def tag_boundary(mesh: Mesh, robin_predicate) -> Mesh:
    """Retag boundary facets: Robin where the predicate holds at the facet
    midpoint, Dirichlet everywhere else.  Idempotent for a fixed predicate."""
    mids = mesh.facet_midpoints()
    tags = np.array([ROBIN if robin_predicate(m) else DIRICHLET for m in mids])
    return Mesh(mesh.vertices, mesh.cells, mesh.facets, tags,
                extent=mesh.extent, divisions=mesh.divisions)


def boundary_flags(mesh: Mesh) -> list:
    """Advisory flags about the boundary partition.

    ``all_robin``: no Dirichlet facet anywhere, so well-posedness rests on
    alpha > 0 or lambda > 0.  ``alternating_interface``: the Dirichlet/Robin
    tags switch more than 8 times along the boundary, a partition the
    regularity assumptions were not written for.
    """
    flags = []
    if not np.any(mesh.facet_tags == DIRICHLET):
        flags.append("all_robin")
    transitions = _tag_transitions(mesh)
    if transitions > 8:
        flags.append("alternating_interface")
    return flags


def _tag_transitions(mesh: Mesh) -> int:
    if mesh.dim == 1:
        return int(mesh.facet_tags[0] != mesh.facet_tags[1])
    # walk boundary edges vertex-to-vertex; count tag changes between
    # adjacent facet pairs
    tag_by_pair = {}
    adjacency = {}
    for idx, (a, b) in enumerate(mesh.facets):
        tag_by_pair[idx] = mesh.facet_tags[idx]
        for v in (int(a), int(b)):
            adjacency.setdefault(v, []).append(idx)
    count = 0
    for v, fids in adjacency.items():
        if len(fids) == 2 and tag_by_pair[fids[0]] != tag_by_pair[fids[1]]:
            count += 1
    return count


def interior_subdomain(mesh: Mesh, margin: float) -> np.ndarray:
    """Indices of cells whose barycenter sits at distance >= margin from
    the domain boundary.  Raises if the margin leaves nothing."""
    if mesh.extent is None:
        raise ValueError("interior_subdomain needs a structured mesh with extent metadata")
    widths = [hi - lo for lo, hi in mesh.extent]
    if not 0 < margin < 0.5 * min(widths):
        raise ValueError(f"margin must lie in (0, {0.5 * min(widths)}), got {margin}")
    bary = mesh.barycenters()
    dist = np.full(len(bary), np.inf)
    for axis, (lo, hi) in enumerate(mesh.extent):
        dist = np.minimum(dist, bary[:, axis] - lo)
        dist = np.minimum(dist, hi - bary[:, axis])
    idx = np.nonzero(dist >= margin)[0]
    if idx.size == 0:
        raise ValueError(f"margin {margin} leaves no interior cells")
    return idx


def locate_points(mesh: Mesh, points: np.ndarray):
    """Locate points in a structured mesh.

    Returns (cell_indices, barycentric) where barycentric has one weight per
    cell vertex.  Points must lie inside the extent (boundary included).
    """
    if mesh.extent is None:
        raise ValueError("locate_points needs a structured mesh with extent metadata")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if mesh.dim == 1:
        (lo, hi), nx = mesh.extent[0], mesh.divisions[0]
        dx = (hi - lo) / nx
        ix = np.clip(((pts[:, 0] - lo) / dx).astype(int), 0, nx - 1)
        t = (pts[:, 0] - (lo + ix * dx)) / dx
        lam = np.column_stack([1.0 - t, t])
        return ix, lam
    (lx, hx), (ly, hy) = mesh.extent
    nx, ny = mesh.divisions
    dx, dy = (hx - lx) / nx, (hy - ly) / ny
    ix = np.clip(((pts[:, 0] - lx) / dx).astype(int), 0, nx - 1)
    iy = np.clip(((pts[:, 1] - ly) / dy).astype(int), 0, ny - 1)
    xi = (pts[:, 0] - (lx + ix * dx)) / dx
    eta = (pts[:, 1] - (ly + iy * dy)) / dy
    lower = xi >= eta
    cell = 2 * (iy * nx + ix) + np.where(lower, 0, 1)
    lam = np.empty((len(pts), 3))
    # lower triangle (v00, v10, v11); upper triangle (v00, v11, v01)
    lam[lower, 0] = 1.0 - xi[lower]
    lam[lower, 1] = xi[lower] - eta[lower]
    lam[lower, 2] = eta[lower]
    up = ~lower
    lam[up, 0] = 1.0 - eta[up]
    lam[up, 1] = xi[up]
    lam[up, 2] = eta[up] - xi[up]
    return cell, lam


def validate_mesh(mesh: Mesh, tol: float = 1e-12):
    """Assert structural invariants; meant for tests and small meshes.

    Checks positive cell measures, conformity (cells meet in a shared facet,
    a shared vertex, or not at all), and that tagged facets cover exactly the
    topological boundary.
    """
    measures = mesh.cell_measures()
    if np.any(measures <= 0):
        raise AssertionError("cell with non-positive measure")

    cells = [frozenset(int(v) for v in c) for c in mesh.cells]
    for i in range(len(cells)):
        for j in range(i + 1, len(cells)):
            shared = cells[i] & cells[j]
            if len(shared) >= mesh.dim + 1:
                raise AssertionError(f"cells {i} and {j} overlap")
            if mesh.dim == 2 and len(shared) == 2:
                # shared pair must be an edge of both triangles (always true
                # for vertex subsets of a triangle) and geometrically a facet
                continue

    if mesh.dim == 1:
        counts = np.bincount(mesh.cells.ravel(), minlength=mesh.num_vertices)
        topo = set(np.nonzero(counts == 1)[0].tolist())
        tagged = {int(f[0]) for f in mesh.facets}
    else:
        edge_count = {}
        for c in mesh.cells:
            for a, b in ((c[0], c[1]), (c[1], c[2]), (c[2], c[0])):
                key = (min(int(a), int(b)), max(int(a), int(b)))
                edge_count[key] = edge_count.get(key, 0) + 1
        topo = {e for e, cnt in edge_count.items() if cnt == 1}
        tagged = {(min(int(a), int(b)), max(int(a), int(b))) for a, b in mesh.facets}
    if topo != tagged:
        raise AssertionError("tagged facets do not match the topological boundary")
    if len(mesh.facets) != len({tuple(sorted(int(v) for v in f)) for f in mesh.facets}):
        raise AssertionError("duplicate boundary facet")


def write_mesh(mesh: Mesh, path):
    """Export as line-oriented text with [vertices], [cells], [boundary]
    sections; boundary tags are literal D/R."""
    lines = ["[vertices]"]
    for v in mesh.vertices:
        lines.append(" ".join(repr(float(c)) for c in v))
    lines.append("[cells]")
    for c in mesh.cells:
        lines.append(" ".join(str(int(i)) for i in c))
    lines.append("[boundary]")
    for f, t in zip(mesh.facets, mesh.facet_tags):
        lines.append(" ".join(str(int(i)) for i in f) + f" {t}")
    text = "\n".join(lines) + "\n"
    with open(path, "w") as fh:
        fh.write(text)
