"""Conforming polygonal mesh: topology, geometry, and validation."""

from __future__ import annotations

import numpy as np

# Flow boundary tags. Every face is interior, prescribed-pressure, or
# prescribed-flux; the three subsets are disjoint and cover all faces.
FACE_INTERIOR = 0
FACE_PRESSURE = 1
FACE_FLUX = 2

TAG_NAMES = {FACE_INTERIOR: "int", FACE_PRESSURE: "p", FACE_FLUX: "q"}
TAG_CODES = {name: code for code, name in TAG_NAMES.items()}


class MeshError(ValueError):
    """Raised for non-conforming topology or degenerate geometry."""


def polygon_area_centroid(verts: np.ndarray) -> tuple[float, np.ndarray]:
    """Signed shoelace area and area centroid of a simple polygon."""
    x, y = verts[:, 0], verts[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = 0.5 * float(np.sum(cross))
    if area == 0.0:
        raise MeshError("degenerate polygon with zero area")
    cx = float(np.sum((x + xn) * cross)) / (6.0 * area)
    cy = float(np.sum((y + yn) * cross)) / (6.0 * area)
    return area, np.array([cx, cy])


def polygon_diameter(verts: np.ndarray) -> float:
    """Maximum pairwise vertex distance h_K."""
    diff = verts[:, None, :] - verts[None, :, :]
    return float(np.sqrt((diff ** 2).sum(axis=2)).max())


def polygon_edge_geometry(verts: np.ndarray):
    """Edge lengths, midpoints and outward unit normals of a CCW polygon."""
    nxt = np.roll(verts, -1, axis=0)
    tang = nxt - verts
    lengths = np.hypot(tang[:, 0], tang[:, 1])
    if np.any(lengths <= 0.0):
        raise MeshError("zero-length polygon edge")
    # outward normal of a counterclockwise polygon: rotate tangent by -90 deg
    normals = np.column_stack([tang[:, 1], -tang[:, 0]]) / lengths[:, None]
    midpoints = 0.5 * (verts + nxt)
    return lengths, midpoints, normals


def polygon_quadrature(verts: np.ndarray, centroid: np.ndarray | None = None):
    """Quadrature on a polygon: fan triangulation from the centroid with the
    three-edge-midpoint rule per triangle (exact for quadratics).

    Returns (points, weights) with sum(weights) = |K|.
    """
    if centroid is None:
        _, centroid = polygon_area_centroid(verts)
    nxt = np.roll(verts, -1, axis=0)
    pts, wts = [], []
    for a, b in zip(verts, nxt):
        tri = np.array([centroid, a, b])
        da, db = a - centroid, b - centroid
        area = 0.5 * abs(da[0] * db[1] - da[1] * db[0])
        mids = 0.5 * (tri + np.roll(tri, -1, axis=0))
        pts.append(mids)
        wts.append(np.full(3, area / 3.0))
    return np.vstack(pts), np.concatenate(wts)


class PolyMesh:
    """Polygonal mesh {T, F, V} of a planar domain.

    Cells are simple polygons given as counterclockwise vertex index lists.
    Faces are derived from the cell boundaries; each face belongs to one or
    two cells (conformity) and is owned by the lower-indexed adjacent cell.

    Attributes
    ----------
    vertices : (nv, 2) float array
    cells : list of int arrays, counterclockwise
    faces : (nf, 2) int array, endpoints in the owner cell's traversal order
    face_cells : (nf, 2) int array, adjacent cells (second entry -1 on the
        boundary)
    cell_faces : list of int arrays, faces of each cell aligned with its edges
    face_tags : (nf,) int array of FACE_* codes
    """

    def __init__(self, vertices, cells, face_tags=None):
        self.vertices = np.asarray(vertices, dtype=float)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 2:
            raise MeshError("vertices must be an (nv, 2) array")
        self.cells = [np.asarray(c, dtype=int) for c in cells]
        for k, cell in enumerate(self.cells):
            if len(cell) < 3:
                raise MeshError(f"cell {k} has fewer than 3 vertices")
            if len(np.unique(cell)) != len(cell):
                raise MeshError(f"cell {k} repeats a vertex")
        self._build_faces()
        self._compute_geometry()
        if face_tags is None:
            self.face_tags = np.where(self.boundary_mask, FACE_FLUX,
                                      FACE_INTERIOR)
        else:
            self.face_tags = np.asarray(face_tags, dtype=int).copy()
            self._check_tags()

    # -- topology ---------------------------------------------------------

    def _build_faces(self):
        face_of = {}
        faces = []
        face_cells = []
        cell_faces = []
        for k, cell in enumerate(self.cells):
            loc = []
            for a, b in zip(cell, np.roll(cell, -1)):
                key = (min(a, b), max(a, b))
                fi = face_of.get(key)
                if fi is None:
                    fi = len(faces)
                    face_of[key] = fi
                    faces.append((a, b))
                    face_cells.append([k, -1])
                else:
                    if face_cells[fi][1] != -1:
                        raise MeshError(
                            f"face {key} shared by more than two cells")
                    if faces[fi] != (b, a):
                        raise MeshError(
                            f"face {key} traversed twice in the same "
                            "direction; cells are not conforming CCW")
                    face_cells[fi][1] = k
                loc.append(fi)
            cell_faces.append(np.array(loc, dtype=int))
        self.faces = np.array(faces, dtype=int)
        self.face_cells = np.array(face_cells, dtype=int)
        self.cell_faces = cell_faces

    # -- geometry ---------------------------------------------------------

    def _compute_geometry(self):
        nt = len(self.cells)
        self.cell_area = np.empty(nt)
        self.cell_centroid = np.empty((nt, 2))
        self.cell_diam = np.empty(nt)
        self.cell_normals = []        # outward unit normals, per cell edge
        self.cell_face_lengths = []
        for k, cell in enumerate(self.cells):
            verts = self.vertices[cell]
            area, centroid = polygon_area_centroid(verts)
            if area <= 0.0:
                raise MeshError(f"cell {k} is not counterclockwise")
            self.cell_area[k] = area
            self.cell_centroid[k] = centroid
            self.cell_diam[k] = polygon_diameter(verts)
            lengths, _, normals = polygon_edge_geometry(verts)
            self.cell_normals.append(normals)
            self.cell_face_lengths.append(lengths)
        a = self.vertices[self.faces[:, 0]]
        b = self.vertices[self.faces[:, 1]]
        self.face_length = np.hypot(*(b - a).T)
        self.face_midpoint = 0.5 * (a + b)

    # -- derived properties -----------------------------------------------

    @property
    def num_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def num_cells(self) -> int:
        return len(self.cells)

    @property
    def num_faces(self) -> int:
        return self.faces.shape[0]

    @property
    def num_unknowns(self) -> int:
        """Total dof count 2|V| + |T| + |F| of the coupled scheme."""
        return 2 * self.num_vertices + self.num_cells + self.num_faces

    @property
    def boundary_mask(self) -> np.ndarray:
        return self.face_cells[:, 1] < 0

    @property
    def boundary_vertex_mask(self) -> np.ndarray:
        mask = np.zeros(self.num_vertices, dtype=bool)
        mask[self.faces[self.boundary_mask].ravel()] = True
        return mask

    def cells_of_vertex(self) -> list[np.ndarray]:
        """Cells adjacent to each vertex, ascending cell index."""
        adj = [[] for _ in range(self.num_vertices)]
        for k, cell in enumerate(self.cells):
            for v in cell:
                adj[v].append(k)
        return [np.array(a, dtype=int) for a in adj]

    def face_neighbors(self) -> list[np.ndarray]:
        """Face-adjacent neighbor cells of each cell."""
        nbr = [[] for _ in range(self.num_cells)]
        for kk, ll in self.face_cells:
            if ll >= 0:
                nbr[kk].append(ll)
                nbr[ll].append(kk)
        return [np.array(sorted(n), dtype=int) for n in nbr]

    # -- boundary tagging ---------------------------------------------------

    def tag_boundary(self, pressure=None):
        """Tag boundary faces by a predicate on face midpoints.

        Faces where ``pressure(midpoint)`` is true become prescribed-pressure
        faces; the remaining boundary faces become prescribed-flux faces.
        """
        on_boundary = self.boundary_mask
        tags = np.where(on_boundary, FACE_FLUX, FACE_INTERIOR)
        if pressure is not None:
            for f in np.flatnonzero(on_boundary):
                if pressure(self.face_midpoint[f]):
                    tags[f] = FACE_PRESSURE
        self.face_tags = tags

    def _check_tags(self):
        on_boundary = self.boundary_mask
        bad = np.flatnonzero(on_boundary & (self.face_tags == FACE_INTERIOR))
        if bad.size:
            raise MeshError(f"boundary face {bad[0]} tagged interior")
        bad = np.flatnonzero(~on_boundary & (self.face_tags != FACE_INTERIOR))
        if bad.size:
            raise MeshError(f"interior face {bad[0]} carries a boundary tag")
        if not np.isin(self.face_tags, list(TAG_NAMES)).all():
            raise MeshError("unknown face tag code")

    # -- local views --------------------------------------------------------

    def cell_polygon(self, k: int) -> np.ndarray:
        return self.vertices[self.cells[k]]

    def cell_face_vectors(self, k: int) -> np.ndarray:
        """Vectors c_{K,f} from the cell centroid to its face midpoints."""
        return self.face_midpoint[self.cell_faces[k]] - self.cell_centroid[k]


def kappa_as_tensor(kappa) -> np.ndarray:
    """Normalize a permeability-mobility spec to a 2x2 SPD tensor."""
    arr = np.asarray(kappa, dtype=float)
    if arr.ndim == 0:
        return float(arr) * np.eye(2)
    if arr.shape == (2,):
        return np.diag(arr)
    if arr.shape == (2, 2):
        return arr
    raise ValueError("kappa must be a scalar, a 2-vector, or a 2x2 tensor")


def k_orthogonality_defect(mesh: PolyMesh, kappa) -> float:
    """Largest angular defect between kappa * n_{K,f} and c_{K,f}.

    Zero for kappa-orthogonal meshes, where the two-point flux variant of the
    flow inner product is consistent.
    """
    kt = kappa_as_tensor(kappa)
    worst = 0.0
    for k in range(mesh.num_cells):
        kn = mesh.cell_normals[k] @ kt.T
        c = mesh.cell_face_vectors(k)
        cross = np.abs(kn[:, 0] * c[:, 1] - kn[:, 1] * c[:, 0])
        scale = np.hypot(kn[:, 0], kn[:, 1]) * np.hypot(c[:, 0], c[:, 1])
        worst = max(worst, float((cross / scale).max()))
    return worst


def is_k_orthogonal(mesh: PolyMesh, kappa, tol: float = 1e-10) -> bool:
    return k_orthogonality_defect(mesh, kappa) <= tol
