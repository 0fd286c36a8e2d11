"""Lowest-order spaces on the active mesh.

Velocity: RT0 with one flux degree of freedom per face, ``int_F v.n_F = dof``.
Pressure: one constant per active element. Multiplier: discontinuous P1
(vertex values on the physical triangle) or P0 on each element of T_Sigma.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import (cut_volume_quadrature, gauss_points, reference_triangle_rule)
from .mesh import ActiveMesh

BLOCKS = ("velocity", "pressure", "multiplier")


@dataclass(eq=False)
class DofLayout:
    mesh: ActiveMesh
    multiplier_degree: int
    velocity_dof: np.ndarray     # per background face, -1 if absent
    pressure_dof: np.ndarray     # per background element, -1 if inactive
    multiplier_elements: np.ndarray
    multiplier_slot: np.ndarray  # per background element, index into multiplier_elements or -1
    n_mean: int = 0

    @classmethod
    def build(cls, am: ActiveMesh, multiplier_degree: int = 1, mean: bool = False,
              with_multiplier: bool = True) -> "DofLayout":
        if multiplier_degree not in (0, 1):
            raise ValueError("multiplier degree must be 0 or 1")
        bg = am.background
        vdof = -np.ones(bg.n_faces, dtype=np.int64)
        vdof[am.active_faces] = np.arange(len(am.active_faces))
        pdof = -np.ones(bg.n_elements, dtype=np.int64)
        pdof[am.active_elements] = np.arange(len(am.active_elements))
        mel = am.cut_elements if with_multiplier else np.zeros(0, dtype=np.int64)
        slot = -np.ones(bg.n_elements, dtype=np.int64)
        slot[mel] = np.arange(len(mel))
        return cls(am, multiplier_degree, vdof, pdof, mel, slot, int(bool(mean)))

    @property
    def n_velocity(self) -> int:
        return int((self.velocity_dof >= 0).sum())

    @property
    def n_pressure(self) -> int:
        return int((self.pressure_dof >= 0).sum())

    @property
    def multiplier_per_element(self) -> int:
        return 3 if self.multiplier_degree == 1 else 1

    @property
    def n_multiplier(self) -> int:
        return self.multiplier_per_element * len(self.multiplier_elements)

    @property
    def offsets(self) -> dict:
        u = 0
        p = self.n_velocity
        m = p + self.n_pressure
        mean = m + self.n_multiplier
        return {"velocity": u, "pressure": p, "multiplier": m, "mean": mean}

    @property
    def size(self) -> int:
        return self.n_velocity + self.n_pressure + self.n_multiplier + self.n_mean

    def element_velocity_dofs(self, t):
        """Velocity dofs and orientation signs of element(s) ``t``."""
        bg = self.mesh.background
        return self.velocity_dof[bg.element_faces[t]], bg.element_face_signs[t]

    def element_multiplier_dofs(self, t) -> np.ndarray:
        k = self.multiplier_per_element
        s = self.multiplier_slot[t]
        if np.any(np.asarray(s) < 0):
            raise KeyError(f"element {t} carries no multiplier")
        return np.asarray(s)[..., None] * k + np.arange(k)

    def split(self, x: np.ndarray) -> dict:
        o = self.offsets
        return {"velocity": x[:o["pressure"]], "pressure": x[o["pressure"]:o["multiplier"]],
                "multiplier": x[o["multiplier"]:o["mean"]], "mean": x[o["mean"]:]}


@dataclass
class FeFunction:
    layout: DofLayout
    coefficients: np.ndarray
    block: str

    def __post_init__(self):
        if self.block not in BLOCKS:
            raise ValueError(f"unknown block {self.block!r}")


# ---------------------------------------------------------------------------
# basis functions (vectorized over elements/points)
# ---------------------------------------------------------------------------

def rt0_basis(tri, signs, points):
    """Values ``(n, 3, 2)`` and divergences ``(3,)`` of the flux basis on ``tri``.

    ``psi_i = s_i (x - P_i) / (2|T|)``: unit flux through face ``i`` (opposite
    vertex ``P_i``) measured with the global normal, zero flux elsewhere.
    """
    tri = np.asarray(tri, dtype=float)
    signs = np.asarray(signs, dtype=float)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    area = 0.5 * ((tri[1, 0] - tri[0, 0]) * (tri[2, 1] - tri[0, 1])
                  - (tri[2, 0] - tri[0, 0]) * (tri[1, 1] - tri[0, 1]))
    vals = signs[None, :, None] * (pts[:, None, :] - tri[None, :, :]) / (2 * area)
    return vals, signs / area


def rt0_values(P, signs, area, x):
    """Batched basis values: ``P (n,3,2)``, ``signs (n,3)``, ``area (n,)``, ``x (n,2)``."""
    return signs[:, :, None] * (x[:, None, :] - P) / (2 * area)[:, None, None]


def barycentric_matrix(tri) -> np.ndarray:
    """Rows are ``(c, gx, gy)`` with ``lambda_a(x) = c_a + g_a . x``."""
    tri = np.asarray(tri, dtype=float)
    A = np.vstack([np.ones(3), tri[:, 0], tri[:, 1]])
    return np.linalg.inv(A)


def p1_values(tri, points):
    coef = barycentric_matrix(tri)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    return coef[:, 0][None, :] + pts @ coef[:, 1:].T, coef[:, 1:]


def multiplier_values(layout: DofLayout, t, points):
    """Multiplier basis values ``(n, k)`` and gradients ``(k, 2)`` on element ``t``."""
    tri = layout.mesh.background.element_vertices(t)
    pts = np.atleast_2d(points)
    if layout.multiplier_degree == 0:
        return np.ones((len(pts), 1)), np.zeros((1, 2))
    return p1_values(tri, pts)


# ---------------------------------------------------------------------------
# quadrature over the active mesh
# ---------------------------------------------------------------------------

def volume_points(am: ActiveMesh, order: int = 4, full: bool = False):
    """Quadrature over ``T cap Omega`` (or full ``T``) for every active element.

    Returns ``(elements, points, weights)`` with one entry per point.
    """
    key = ("volume", order, full)
    if key in am._cache:
        return am._cache[key]
    bg = am.background
    bary, w = reference_triangle_rule(order)
    act = am.active_elements
    if full:
        whole = act
    else:
        whole = act[~np.isin(act, am.cut_elements)]
    P = bg.vertices[bg.triangles[whole]]
    pts = np.einsum("qa,ead->eqd", bary, P).reshape(-1, 2)
    wts = (np.abs(bg.areas[whole])[:, None] * w[None, :]).ravel()
    els = np.repeat(whole, len(w))
    if not full:
        e_list, p_list, w_list = [els], [pts], [wts]
        for t in am.cut_elements:
            rule = cut_volume_quadrature(am.cut[t], order)
            e_list.append(np.full(len(rule.weights), t))
            p_list.append(rule.points)
            w_list.append(rule.weights)
        els = np.concatenate(e_list)
        pts = np.vstack(p_list)
        wts = np.concatenate(w_list)
    order_idx = np.argsort(els, kind="stable")
    out = (els[order_idx], pts[order_idx], wts[order_idx])
    am._cache[key] = out
    return out


def segment_points(am: ActiveMesh, order: int = 5):
    """Gauss points on every boundary segment: ``(elements, points, weights, normals)``."""
    key = ("segment", order)
    if key in am._cache:
        return am._cache[key]
    t_ref, w_ref = gauss_points(order)
    els, pts, wts, nrm = [], [], [], []
    for t in am.cut_elements:
        cg = am.cut[t]
        a, b = cg.segment
        L = np.linalg.norm(b - a)
        els.append(np.full(len(w_ref), t))
        pts.append(a + t_ref[:, None] * (b - a))
        wts.append(w_ref * L)
        nrm.append(np.tile(cg.normal, (len(w_ref), 1)))
    if not els:
        out = (np.zeros(0, dtype=np.int64), np.zeros((0, 2)), np.zeros(0), np.zeros((0, 2)))
    else:
        out = (np.concatenate(els), np.vstack(pts), np.concatenate(wts), np.vstack(nrm))
    am._cache[key] = out
    return out


def basis_at(layout: DofLayout, els, pts):
    """Velocity dofs ``(n,3)``, basis values ``(n,3,2)`` and divergences ``(n,3)``."""
    bg = layout.mesh.background
    P = bg.vertices[bg.triangles[els]]
    signs = bg.element_face_signs[els]
    area = bg.areas[els]
    dofs = layout.velocity_dof[bg.element_faces[els]]
    return dofs, rt0_values(P, signs, area, pts), signs / area[:, None]


# ---------------------------------------------------------------------------
# interpolation, projection, evaluation
# ---------------------------------------------------------------------------

def interpolate_velocity(layout: DofLayout, v, order: int = 5) -> FeFunction:
    """Canonical RT0 interpolant: dof = ``int_F v . n_F``."""
    bg = layout.mesh.background
    faces = np.flatnonzero(layout.velocity_dof >= 0)
    t_ref, w_ref = gauss_points(order)
    a = bg.vertices[bg.faces[faces, 0]]
    b = bg.vertices[bg.faces[faces, 1]]
    pts = a[:, None, :] + t_ref[None, :, None] * (b - a)[:, None, :]
    vals = np.asarray(v(pts), dtype=float)
    flux = np.einsum("fqd,fd,q->f", vals, bg.face_normals[faces], w_ref) * bg.face_lengths[faces]
    coef = np.zeros(layout.n_velocity)
    coef[layout.velocity_dof[faces]] = flux
    return FeFunction(layout, coef, "velocity")


def project_pressure(layout: DofLayout, g, order: int = 4) -> FeFunction:
    """Element means of ``g`` over the full active elements."""
    am = layout.mesh
    els, pts, wts = volume_points(am, order, full=True)
    vals = np.asarray(g(pts), dtype=float) * np.ones(len(pts))
    idx = layout.pressure_dof[els]
    num = np.bincount(idx, weights=wts * vals, minlength=layout.n_pressure)
    den = np.bincount(idx, weights=wts, minlength=layout.n_pressure)
    return FeFunction(layout, num / den, "pressure")


def velocity_divergence(fe: FeFunction) -> np.ndarray:
    """Elementwise (constant) divergence, indexed like the pressure dofs."""
    lay = fe.layout
    bg = lay.mesh.background
    act = lay.mesh.active_elements
    dofs, signs = lay.element_velocity_dofs(act)
    return np.einsum("ei,ei->e", fe.coefficients[dofs], signs) / bg.areas[act]


def evaluate(fe: FeFunction, element: int, points) -> np.ndarray:
    """Evaluate ``fe`` restricted to ``element`` at ``points`` (may lie outside it)."""
    lay = fe.layout
    bg = lay.mesh.background
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if fe.block == "velocity":
        dofs, signs = lay.element_velocity_dofs(element)
        vals, _ = rt0_basis(bg.element_vertices(element), signs, pts)
        return np.einsum("qid,i->qd", vals, fe.coefficients[dofs])
    if fe.block == "pressure":
        return np.full(len(pts), fe.coefficients[lay.pressure_dof[element]])
    vals, _ = multiplier_values(lay, element, pts)
    return vals @ fe.coefficients[lay.element_multiplier_dofs(element)]


def velocity_at(fe: FeFunction, els, pts) -> np.ndarray:
    """Batched velocity evaluation, one element per point."""
    dofs, vals, _ = basis_at(fe.layout, els, pts)
    return np.einsum("qid,qi->qd", vals, fe.coefficients[dofs])
