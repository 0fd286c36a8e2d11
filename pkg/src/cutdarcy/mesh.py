"""Structured background triangulation and the active (cut) mesh."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import (CutGeometry, DegenerateCut, LevelSet, Location, SNAP_FACTOR,
                       classify_element, clip_element)


class EmptyActiveMesh(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class BackgroundMesh:
    """Triangulation of a rectangle; each cell is split along its (SW, NE) diagonal.

    ``element_faces[t, i]`` is the face opposite local vertex ``i`` and
    ``element_face_signs[t, i]`` is +1 when the global face normal points out
    of ``t``. ``face_elements[f] = (owner, neighbor)`` with -1 for no neighbor.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    faces: np.ndarray
    face_elements: np.ndarray
    face_normals: np.ndarray
    face_lengths: np.ndarray
    element_faces: np.ndarray
    element_face_signs: np.ndarray
    areas: np.ndarray
    h_max: float
    box: tuple
    nx: int
    ny: int

    @property
    def n_elements(self) -> int:
        return len(self.triangles)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    def element_vertices(self, t) -> np.ndarray:
        return self.vertices[self.triangles[t]]

    def face_midpoints(self) -> np.ndarray:
        return self.vertices[self.faces].mean(axis=1)

    def boundary_side(self, f) -> str | None:
        """'left', 'right', 'bottom' or 'top' for faces on the box boundary."""
        if self.face_elements[f, 1] >= 0:
            return None
        (x0, y0), (x1, y1) = self.box
        m = self.vertices[self.faces[f]].mean(axis=0)
        tol = 1e-12 * max(x1 - x0, y1 - y0)
        if abs(m[0] - x0) < tol:
            return "left"
        if abs(m[0] - x1) < tol:
            return "right"
        if abs(m[1] - y0) < tol:
            return "bottom"
        return "top"


def build_background_mesh(nx: int, ny: int, box=((0.0, 0.0), (1.0, 1.0))) -> BackgroundMesh:
    if nx < 1 or ny < 1:
        raise ValueError("nx and ny must be positive")
    (x0, y0), (x1, y1) = box
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    X, Y = np.meshgrid(xs, ys)  # vertex (i, j) -> j * (nx + 1) + i
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    tris = []
    for j in range(ny):
        for i in range(nx):
            v00 = j * (nx + 1) + i
            v10, v01, v11 = v00 + 1, v00 + nx + 1, v00 + nx + 2
            tris.append((v00, v10, v11))
            tris.append((v00, v11, v01))
    triangles = np.array(tris, dtype=np.int64)

    # face i of a triangle is opposite local vertex i
    local = ((1, 2), (2, 0), (0, 1))
    face_index: dict[tuple[int, int], int] = {}
    faces, owners, neighbors = [], [], []
    element_faces = np.empty((len(triangles), 3), dtype=np.int64)
    element_face_signs = np.empty((len(triangles), 3))
    for t, tri in enumerate(triangles):
        for i, (a, b) in enumerate(local):
            key = tuple(sorted((int(tri[a]), int(tri[b]))))
            f = face_index.get(key)
            if f is None:
                f = len(faces)
                face_index[key] = f
                faces.append(key)
                owners.append(t)
                neighbors.append(-1)
                element_face_signs[t, i] = 1.0
            else:
                neighbors[f] = t
                element_face_signs[t, i] = -1.0
            element_faces[t, i] = f

    faces = np.array(faces, dtype=np.int64)
    face_elements = np.column_stack([owners, neighbors]).astype(np.int64)
    tangents = vertices[faces[:, 1]] - vertices[faces[:, 0]]
    lengths = np.linalg.norm(tangents, axis=1)
    normals = np.column_stack([tangents[:, 1], -tangents[:, 0]]) / lengths[:, None]
    # orient from owner to neighbor: outward from the owner triangle
    owner_centroids = vertices[triangles[face_elements[:, 0]]].mean(axis=1)
    mids = vertices[faces].mean(axis=1)
    flip = np.einsum("ij,ij->i", normals, mids - owner_centroids) < 0
    normals[flip] *= -1

    p = vertices[triangles]
    areas = 0.5 * ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
                   - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1]))
    h_max = float(np.hypot((x1 - x0) / nx, (y1 - y0) / ny))
    return BackgroundMesh(vertices, triangles, faces, face_elements, normals, lengths,
                          element_faces, element_face_signs, areas, h_max,
                          ((float(x0), float(y0)), (float(x1), float(y1))), nx, ny)


@dataclass(eq=False)
class ActiveMesh:
    background: BackgroundMesh
    geometry: LevelSet
    location: np.ndarray              # Location per background element
    volume_fraction: np.ndarray       # |T cap Omega| / |T| per background element
    cut: dict[int, CutGeometry]       # elements of T_Sigma
    active_elements: np.ndarray
    active_faces: np.ndarray          # faces touching at least one active element
    sigma_faces: np.ndarray           # F_Sigma
    sigma_interior_faces: np.ndarray  # interior faces of T_Sigma
    fitted_boundary_faces: dict = field(default_factory=dict)
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def h(self) -> float:
        return self.background.h_max

    @property
    def cut_elements(self) -> np.ndarray:
        return np.array(sorted(self.cut), dtype=np.int64)

    @property
    def is_active(self) -> np.ndarray:
        return self.location != Location.OUTSIDE

    def stabilized_faces(self) -> np.ndarray:
        """Faces of F_Sigma with an active element on both sides."""
        fe = self.background.face_elements[self.sigma_faces]
        act = self.is_active
        both = (fe[:, 1] >= 0) & act[fe[:, 0]] & act[np.maximum(fe[:, 1], 0)]
        return self.sigma_faces[both]

    def measure(self) -> float:
        return float(np.dot(self.volume_fraction, self.background.areas))


def _face_meets_domain(bg, f, geom, h) -> bool:
    a, b = bg.vertices[bg.faces[f]]
    vals = geom(np.array([a, b]))
    if np.any(vals < SNAP_FACTOR * h):
        return True
    roots = geom.edge_roots(a, b)
    if roots is not None:
        return len(roots) > 0
    t = np.linspace(0, 1, 9)[1:-1, None]
    return bool(np.any(geom(a + t * (b - a)) < 0))


def extract_active_mesh(bg: BackgroundMesh, geom: LevelSet, fitted_sides=()) -> ActiveMesh:
    """Classify elements, clip cut ones and collect the face sets.

    ``fitted_sides`` names box sides that coincide with parts of the physical
    boundary; their faces meeting Omega are returned in
    ``fitted_boundary_faces[side]``.
    """
    nt = bg.n_elements
    location = np.empty(nt, dtype=np.int64)
    fraction = np.zeros(nt)
    cut: dict[int, CutGeometry] = {}
    for t in range(nt):
        tri = bg.element_vertices(t)
        loc = classify_element(tri, geom)
        if loc == Location.CUT:
            try:
                cg = clip_element(tri, geom, t)
            except DegenerateCut:
                # sliver or grazing cut: snap by majority of enclosed area
                inside = geom(tri) < SNAP_FACTOR * bg.h_max
                loc = Location.INSIDE if inside.sum() >= 2 else Location.OUTSIDE
            else:
                if cg.segment is None:
                    loc = Location.INSIDE
                else:
                    cut[t] = cg
                    fraction[t] = cg.volume_fraction
        if loc == Location.INSIDE:
            fraction[t] = 1.0
        location[t] = loc

    active = np.flatnonzero(location != Location.OUTSIDE)
    if len(active) == 0:
        raise EmptyActiveMesh("no element intersects the domain")

    fe = bg.face_elements
    is_active = location != Location.OUTSIDE
    touches = is_active[fe[:, 0]] | ((fe[:, 1] >= 0) & is_active[np.maximum(fe[:, 1], 0)])
    active_faces = np.flatnonzero(touches)

    in_sigma = np.zeros(nt, dtype=bool)
    in_sigma[list(cut)] = True
    sigma_faces = []
    sigma_interior = []
    for f in active_faces:
        o, n = fe[f]
        own = in_sigma[o] or (n >= 0 and in_sigma[n])
        if not own:
            continue
        if _face_meets_domain(bg, f, geom, bg.h_max):
            sigma_faces.append(f)
        if n >= 0 and in_sigma[o] and in_sigma[n]:
            sigma_interior.append(f)

    fitted = {}
    for side in fitted_sides:
        fitted[side] = np.array([f for f in active_faces
                                 if bg.boundary_side(f) == side
                                 and _face_meets_domain(bg, f, geom, bg.h_max)], dtype=np.int64)

    return ActiveMesh(bg, geom, location, fraction, cut, active, active_faces,
                      np.array(sigma_faces, dtype=np.int64),
                      np.array(sigma_interior, dtype=np.int64), fitted)


def dump_mesh(am: ActiveMesh, path) -> None:
    """Plain-text dump: vertices, then triangles with their classification."""
    bg = am.background
    with open(path, "w") as fh:
        fh.write(f"# vertices {len(bg.vertices)}\n")
        for x, y in bg.vertices:
            fh.write(f"{x:.16e} {y:.16e}\n")
        fh.write(f"# triangles {bg.n_elements} (v0 v1 v2 location fraction)\n")
        for t, (a, b, c) in enumerate(bg.triangles):
            fh.write(f"{a} {b} {c} {Location(am.location[t]).name} {am.volume_fraction[t]:.16e}\n")
        fh.write(f"# segments {len(am.cut)} (element x0 y0 x1 y1 nx ny)\n")
        for t in sorted(am.cut):
            cg = am.cut[t]
            (x0, y0), (x1, y1) = cg.segment
            fh.write(f"{t} {x0:.16e} {y0:.16e} {x1:.16e} {y1:.16e} "
                     f"{cg.normal[0]:.16e} {cg.normal[1]:.16e}\n")
