"""Assembly of the stabilized saddle-point system.

Block layout (Lagrange multiplier method)::

    [ M   B^T  C^T   0  ] [u]   [F  ]
    [ B   0    0     m^T] [p] = [G  ]
    [ C   0   -S_c   0  ] [l]   [U_B]
    [ 0   m    0     0  ] [r]   [p_mean]

The last row/column is present only for purely essential boundary
conditions and fixes the pressure mean on Omega.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp

from .fespace import (DofLayout, basis_at, gauss_points, multiplier_values, rt0_values,
                      segment_points, volume_points)
from .geometry import reference_triangle_rule
from .macro import MacroPartition, build_macro_partition
from .mesh import ActiveMesh

log = logging.getLogger(__name__)

VARIANTS = ("sc", "sc-hat", "sc-tilde")
FACE_MODES = ("all", "macro")
IMPL_MODES = ("patch", "face")
NORMAL_SOURCES = ("levelset", "segment")
METHODS = ("lagrange", "penalty")
DEFAULT_PENALTY = 100.0


class IncompatibleData(ValueError):
    pass


class SingularConfig(ValueError):
    pass


@dataclass
class StabilizationConfig:
    tau: float = 1.0
    tau_b: float = 1.0
    tau_c: float = 1.0
    variant: str = "sc"
    face_mode: str = "all"
    impl_mode: str = "patch"
    bulk_normal: str = "levelset"
    delta: float = 0.3
    volume_order: int = 4
    boundary_order: int = 5

    def __post_init__(self):
        if min(self.tau, self.tau_b, self.tau_c) <= 0:
            raise ValueError("stabilization parameters must be positive")
        for value, allowed in ((self.variant, VARIANTS), (self.face_mode, FACE_MODES),
                               (self.impl_mode, IMPL_MODES),
                               (self.bulk_normal, NORMAL_SOURCES)):
            if value not in allowed:
                raise ValueError(f"{value!r} not in {allowed}")


def _zero_scalar(x):
    return np.zeros(np.shape(x)[:-1])


def _zero_vector(x):
    return np.zeros(np.shape(x))


@dataclass
class ProblemData:
    """Data of ``eta u + grad p = f``, ``div u = g``, ``u.n = u_B``.

    ``u_B(x, n)`` is the normal flux datum on Sigma and on strongly imposed
    box sides; ``p_N(x)`` is the pressure on ``neumann_sides``.
    """

    f: Callable = _zero_vector
    g: Callable = _zero_scalar
    u_B: Callable = lambda x, n: _zero_scalar(x)
    eta: float = 1.0
    p_N: Optional[Callable] = None
    strong_sides: tuple = ()
    neumann_sides: tuple = ()
    p_mean: float = 0.0

    @property
    def pure_essential(self) -> bool:
        return not self.neumann_sides


@dataclass(eq=False)
class SaddleSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    layout: DofLayout
    method: str
    symmetric: bool
    blocks: dict = field(default_factory=dict)
    constrained: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def asymmetry(self) -> float:
        D = (self.matrix - self.matrix.T).tocoo()
        return float(np.abs(D.data).max()) if D.nnz else 0.0


def _coo(rows, cols, vals, shape):
    rows = np.asarray(rows).ravel()
    cols = np.asarray(cols).ravel()
    vals = np.asarray(vals, dtype=float).ravel()
    keep = (rows >= 0) & (cols >= 0)
    return sp.coo_matrix((vals[keep], (rows[keep], cols[keep])), shape=shape).tocsr()


def _symmetrize(A):
    # (a + b) and (b + a) round identically, so the result is exactly symmetric
    return ((A + A.T) * 0.5).tocsr()


def stabilization_faces(am: ActiveMesh, cfg: StabilizationConfig,
                        macro: MacroPartition | None = None) -> np.ndarray:
    if cfg.face_mode == "macro":
        if macro is None:
            macro = build_macro_partition(am, cfg.delta)
        return macro.macro_faces
    return am.stabilized_faces()


# ---------------------------------------------------------------------------
# patch / face jump operators for the velocity and its divergence
# ---------------------------------------------------------------------------

def _face_pairs(am: ActiveMesh, faces):
    fe = am.background.face_elements[faces]
    return fe[:, 0], fe[:, 1]


def _patch_jump_values(layout: DofLayout, faces, order):
    """Jump basis ``[psi^T1, -psi^T2]`` at quadrature points of ``T1 cup T2``.

    Returns dofs ``(nF, 6)``, weights ``(nF, nq)`` and values ``(nF, nq, 6, 2)``.
    """
    bg = layout.mesh.background
    t1, t2 = _face_pairs(layout.mesh, faces)
    bary, w = reference_triangle_rule(order)
    nF = len(faces)
    pts = np.concatenate([np.einsum("qa,fad->fqd", bary, bg.vertices[bg.triangles[t]])
                          for t in (t1, t2)], axis=1)
    wts = np.concatenate([np.abs(bg.areas[t1])[:, None] * w, np.abs(bg.areas[t2])[:, None] * w],
                         axis=1)
    nq = pts.shape[1]
    vals = []
    for t, sgn in ((t1, 1.0), (t2, -1.0)):
        P = np.repeat(bg.vertices[bg.triangles[t]], nq, axis=0)
        s = np.repeat(bg.element_face_signs[t], nq, axis=0)
        A = np.repeat(bg.areas[t], nq)
        vals.append(sgn * rt0_values(P, s, A, pts.reshape(-1, 2)).reshape(nF, nq, 3, 2))
    dofs = np.hstack([layout.velocity_dof[bg.element_faces[t1]],
                      layout.velocity_dof[bg.element_faces[t2]]])
    return dofs, wts, np.concatenate(vals, axis=2)


def _divergence_jump(layout: DofLayout, faces):
    """Coefficients of ``div u^T1 - div u^T2`` on the 6 local dofs."""
    bg = layout.mesh.background
    t1, t2 = _face_pairs(layout.mesh, faces)
    d = np.hstack([bg.element_face_signs[t1] / bg.areas[t1][:, None],
                   -bg.element_face_signs[t2] / bg.areas[t2][:, None]])
    dofs = np.hstack([layout.velocity_dof[bg.element_faces[t1]],
                      layout.velocity_dof[bg.element_faces[t2]]])
    return dofs, d


def velocity_stabilization(layout: DofLayout, faces, cfg: StabilizationConfig):
    """Ghost penalty ``s(u, v)`` on the given faces."""
    am = layout.mesh
    bg = am.background
    n = layout.n_velocity
    faces = np.asarray(faces, dtype=np.int64)
    if len(faces) == 0:
        return sp.csr_matrix((n, n))
    if cfg.impl_mode == "patch":
        dofs, wts, vals = _patch_jump_values(layout, faces, max(cfg.volume_order, 2))
        local = cfg.tau * np.einsum("fq,fqid,fqjd->fij", wts, vals, vals)
    else:
        h = am.h
        t1, t2 = _face_pairs(am, faces)
        t_ref, w_ref = gauss_points(3)
        a = bg.vertices[bg.faces[faces, 0]]
        b = bg.vertices[bg.faces[faces, 1]]
        L = bg.face_lengths[faces]
        nq = len(w_ref)
        pts = (a[:, None, :] + t_ref[None, :, None] * (b - a)[:, None, :]).reshape(-1, 2)
        vals = []
        for t, sgn in ((t1, 1.0), (t2, -1.0)):
            P = np.repeat(bg.vertices[bg.triangles[t]], nq, axis=0)
            s = np.repeat(bg.element_face_signs[t], nq, axis=0)
            A = np.repeat(bg.areas[t], nq)
            vals.append(sgn * rt0_values(P, s, A, pts).reshape(len(faces), nq, 3, 2))
        vals = np.concatenate(vals, axis=2)
        wts = w_ref[None, :] * L[:, None]
        local = cfg.tau * h * np.einsum("fq,fqid,fqjd->fij", wts, vals, vals)
        # normal derivative of a + b x is b n_F: jump of the scalar slope b
        slope = np.hstack([bg.element_face_signs[t1] / (2 * bg.areas[t1][:, None]),
                           -bg.element_face_signs[t2] / (2 * bg.areas[t2][:, None])])
        local += cfg.tau * h ** 3 * L[:, None, None] * slope[:, :, None] * slope[:, None, :]
        dofs = np.hstack([layout.velocity_dof[bg.element_faces[t1]],
                          layout.velocity_dof[bg.element_faces[t2]]])
    return _coo(np.repeat(dofs[:, :, None], 6, axis=2), np.repeat(dofs[:, None, :], 6, axis=1),
                local, (n, n))


def divergence_stabilization(layout: DofLayout, faces, cfg: StabilizationConfig):
    """``s_b(u, q)`` as a ``(n_pressure, n_velocity)`` matrix."""
    am = layout.mesh
    bg = am.background
    faces = np.asarray(faces, dtype=np.int64)
    shape = (layout.n_pressure, layout.n_velocity)
    if len(faces) == 0:
        return sp.csr_matrix(shape)
    t1, t2 = _face_pairs(am, faces)
    dofs, d = _divergence_jump(layout, faces)
    if cfg.impl_mode == "patch":
        weight = cfg.tau_b * (np.abs(bg.areas[t1]) + np.abs(bg.areas[t2]))
    else:
        weight = cfg.tau_b * am.h * bg.face_lengths[faces]
    qdofs = np.column_stack([layout.pressure_dof[t1], layout.pressure_dof[t2]])
    qsign = np.array([1.0, -1.0])
    local = weight[:, None, None] * qsign[None, :, None] * d[:, None, :]
    return _coo(np.repeat(qdofs[:, :, None], 6, axis=2), np.repeat(dofs[:, None, :], 2, axis=1),
                local, shape)


# ---------------------------------------------------------------------------
# blocks
# ---------------------------------------------------------------------------

def assemble_mass(am: ActiveMesh, layout: DofLayout, eta: float = 1.0,
                  cfg: StabilizationConfig | None = None,
                  macro: MacroPartition | None = None, stabilize: bool = True):
    """``(eta u, v)_Omega + s(u, v)``."""
    cfg = cfg or StabilizationConfig()
    els, pts, wts = volume_points(am, cfg.volume_order)
    dofs, vals, _ = basis_at(layout, els, pts)
    local = eta * np.einsum("q,qid,qjd->qij", wts, vals, vals)
    n = layout.n_velocity
    M = _coo(np.repeat(dofs[:, :, None], 3, axis=2), np.repeat(dofs[:, None, :], 3, axis=1),
             local, (n, n))
    if stabilize:
        M = M + velocity_stabilization(layout, stabilization_faces(am, cfg, macro), cfg)
    return _symmetrize(M)


def assemble_divergence(am: ActiveMesh, layout: DofLayout,
                        cfg: StabilizationConfig | None = None,
                        macro: MacroPartition | None = None, stabilize: bool = True):
    """``B(u, q) = -(div u, q)_Omega - s_b(u, q)`` as ``(n_pressure, n_velocity)``."""
    cfg = cfg or StabilizationConfig()
    bg = am.background
    act = am.active_elements
    dofs, signs = layout.element_velocity_dofs(act)
    omega_area = am.volume_fraction[act] * np.abs(bg.areas[act])
    local = -signs / bg.areas[act][:, None] * omega_area[:, None]
    rows = np.repeat(layout.pressure_dof[act][:, None], 3, axis=1)
    B = _coo(rows, dofs, local, (layout.n_pressure, layout.n_velocity))
    if stabilize:
        B = B - divergence_stabilization(layout, stabilization_faces(am, cfg, macro), cfg)
    return B.tocsr()


def assemble_coupling(am: ActiveMesh, layout: DofLayout, order: int = 5):
    """``c(u, chi) = (u.n, chi)_Sigma`` as ``(n_multiplier, n_velocity)``."""
    shape = (layout.n_multiplier, layout.n_velocity)
    els, pts, wts, nrm = segment_points(am, order)
    if len(els) == 0 or layout.n_multiplier == 0:
        return sp.csr_matrix(shape)
    dofs, vals, _ = basis_at(layout, els, pts)
    flux = np.einsum("qid,qd->qi", vals, nrm)
    rows, cols, data = [], [], []
    for t in np.unique(els):
        sel = els == t
        lam, _ = multiplier_values(layout, t, pts[sel])
        mdofs = layout.element_multiplier_dofs(t)
        local = np.einsum("q,qa,qi->ai", wts[sel], lam, flux[sel])
        rows.append(np.repeat(mdofs[:, None], 3, axis=1))
        cols.append(np.repeat(dofs[sel][0][None, :], len(mdofs), axis=0))
        data.append(local)
    return _coo(np.concatenate([r.ravel() for r in rows]),
                np.concatenate([c.ravel() for c in cols]),
                np.concatenate([d.ravel() for d in data]), shape)


def _bulk_normal_tensor(am: ActiveMesh, t, cfg: StabilizationConfig):
    """``int_T n n^T`` over the full element."""
    bg = am.background
    tri = bg.element_vertices(t)
    area = abs(bg.areas[t])
    if cfg.bulk_normal == "segment":
        n = am.cut[t].normal
        return area * np.outer(n, n)
    bary, w = reference_triangle_rule(cfg.volume_order)
    n = am.geometry.normal(bary @ tri)
    return area * np.einsum("q,qi,qj->ij", w, n, n)


def assemble_multiplier_stab(am: ActiveMesh, layout: DofLayout,
                             cfg: StabilizationConfig | None = None):
    """Multiplier stabilization ``S_c`` for the selected variant."""
    cfg = cfg or StabilizationConfig()
    bg = am.background
    h = am.h
    nm = layout.n_multiplier
    k = layout.multiplier_per_element
    rows, cols, data = [], [], []

    def add(dofs, local):
        rows.append(np.repeat(dofs[:, None], len(dofs), axis=1).ravel())
        cols.append(np.repeat(dofs[None, :], len(dofs), axis=0).ravel())
        data.append(np.asarray(local).ravel())

    t_ref, w_ref = gauss_points(3)
    for f in am.sigma_interior_faces:
        t1, t2 = bg.face_elements[f]
        if layout.multiplier_slot[t1] < 0 or layout.multiplier_slot[t2] < 0:
            continue
        a, b = bg.vertices[bg.faces[f]]
        L = bg.face_lengths[f]
        pts = a + t_ref[:, None] * (b - a)
        v1, g1 = multiplier_values(layout, t1, pts)
        v2, g2 = multiplier_values(layout, t2, pts)
        jump = np.hstack([v1, -v2])
        dofs = np.concatenate([layout.element_multiplier_dofs(t1),
                               layout.element_multiplier_dofs(t2)])
        local = cfg.tau_c / h * np.einsum("q,qa,qb->ab", w_ref * L, jump, jump)
        if k == 3 and cfg.variant in ("sc", "sc-hat"):
            gj = np.vstack([g1, -g2])
            local = local + cfg.tau_c * h * L * gj @ gj.T
        add(dofs, local)

    if k == 3:
        for t in layout.multiplier_elements:
            _, G = multiplier_values(layout, t, np.zeros((1, 2)))
            dofs = layout.element_multiplier_dofs(t)
            if cfg.variant == "sc":
                cg = am.cut[t]
                gn = G @ cg.normal
                local = cfg.tau_c * h * cg.segment_length * np.outer(gn, gn)
            else:
                N = _bulk_normal_tensor(am, t, cfg)
                local = cfg.tau_c * h * G @ N @ G.T
            add(dofs, local)

    if not rows:
        return sp.csr_matrix((nm, nm))
    S = _coo(np.concatenate(rows), np.concatenate(cols), np.concatenate(data), (nm, nm))
    return _symmetrize(S)


def assemble_penalty_terms(am: ActiveMesh, layout: DofLayout, penalty: float, order: int = 5):
    """``lambda/h (u.n, v.n)_Sigma`` and the ``(p, v.n)_Sigma`` coupling."""
    els, pts, wts, nrm = segment_points(am, order)
    nu, npr = layout.n_velocity, layout.n_pressure
    if len(els) == 0:
        return sp.csr_matrix((nu, nu)), sp.csr_matrix((nu, npr))
    dofs, vals, _ = basis_at(layout, els, pts)
    flux = np.einsum("qid,qd->qi", vals, nrm)
    local = penalty / am.h * np.einsum("q,qi,qj->qij", wts, flux, flux)
    Mb = _coo(np.repeat(dofs[:, :, None], 3, axis=2), np.repeat(dofs[:, None, :], 3, axis=1),
              local, (nu, nu))
    pd = np.repeat(layout.pressure_dof[els][:, None], 3, axis=1)
    Pb = _coo(dofs, pd, wts[:, None] * flux, (nu, npr))
    return _symmetrize(Mb), Pb


def mean_row(am: ActiveMesh, layout: DofLayout) -> np.ndarray:
    """Coefficients of ``int_Omega q`` on the pressure dofs."""
    act = am.active_elements
    row = np.zeros(layout.n_pressure)
    row[layout.pressure_dof[act]] = am.volume_fraction[act] * np.abs(am.background.areas[act])
    return row


# ---------------------------------------------------------------------------
# right-hand side
# ---------------------------------------------------------------------------

def _face_flux_integrals(bg, faces, func, order=5):
    """``int_F func(x, n_F) ds`` for each face."""
    t_ref, w_ref = gauss_points(order)
    a = bg.vertices[bg.faces[faces, 0]]
    b = bg.vertices[bg.faces[faces, 1]]
    pts = a[:, None, :] + t_ref[None, :, None] * (b - a)[:, None, :]
    nrm = np.repeat(bg.face_normals[faces][:, None, :], len(w_ref), axis=1)
    vals = np.asarray(func(pts, nrm), dtype=float) * np.ones(pts.shape[:2])
    return vals @ w_ref * bg.face_lengths[faces]


def assemble_rhs(am: ActiveMesh, layout: DofLayout, data: ProblemData,
                 cfg: StabilizationConfig | None = None, method: str = "lagrange",
                 penalty: float = DEFAULT_PENALTY) -> np.ndarray:
    cfg = cfg or StabilizationConfig()
    bg = am.background
    o = layout.offsets
    rhs = np.zeros(layout.size)

    els, pts, wts = volume_points(am, cfg.volume_order)
    dofs, vals, _ = basis_at(layout, els, pts)
    fv = np.asarray(data.f(pts), dtype=float) * np.ones_like(pts)
    np.add.at(rhs, dofs.ravel(), (wts[:, None] * np.einsum("qid,qd->qi", vals, fv)).ravel())

    gv = np.asarray(data.g(pts), dtype=float) * np.ones(len(pts))
    rhs[o["pressure"]:o["multiplier"]] = -np.bincount(
        layout.pressure_dof[els], weights=wts * gv, minlength=layout.n_pressure)

    for side in data.neumann_sides:
        faces = am.fitted_boundary_faces.get(side, np.zeros(0, dtype=np.int64))
        if len(faces) == 0 or data.p_N is None:
            continue
        # the face's own basis has v.n_F = 1/|F| on F, all others vanish there
        pint = _face_flux_integrals(bg, faces, lambda x, n: data.p_N(x), cfg.boundary_order)
        np.add.at(rhs, layout.velocity_dof[faces], -pint / bg.face_lengths[faces])

    s_els, s_pts, s_wts, s_nrm = segment_points(am, cfg.boundary_order)
    if len(s_els):
        ub = np.asarray(data.u_B(s_pts, s_nrm), dtype=float) * np.ones(len(s_pts))
        if method == "lagrange" and layout.n_multiplier:
            for t in np.unique(s_els):
                sel = s_els == t
                lam, _ = multiplier_values(layout, t, s_pts[sel])
                idx = o["multiplier"] + layout.element_multiplier_dofs(t)
                rhs[idx] += lam.T @ (s_wts[sel] * ub[sel])
        elif method == "penalty":
            sd, sv, _ = basis_at(layout, s_els, s_pts)
            flux = np.einsum("qid,qd->qi", sv, s_nrm)
            np.add.at(rhs, sd.ravel(), (penalty / am.h * (s_wts * ub)[:, None] * flux).ravel())

    if layout.n_mean:
        rhs[o["mean"]] = data.p_mean
    return rhs


def compatibility_defect(am: ActiveMesh, data: ProblemData, order: int = 5) -> float:
    """``int_Omega g - int_{dOmega} u_B`` for purely essential problems."""
    els, pts, wts = volume_points(am, 4)
    total = float(wts @ (np.asarray(data.g(pts)) * np.ones(len(pts))))
    _, s_pts, s_wts, s_nrm = segment_points(am, order)
    if len(s_pts):
        total -= float(s_wts @ (np.asarray(data.u_B(s_pts, s_nrm)) * np.ones(len(s_pts))))
    bg = am.background
    for side in data.strong_sides:
        faces = am.fitted_boundary_faces.get(side, np.zeros(0, dtype=np.int64))
        if len(faces):
            total -= float(_face_flux_integrals(bg, faces, data.u_B, order).sum())
    return total


# ---------------------------------------------------------------------------
# global system
# ---------------------------------------------------------------------------

def strong_faces(am: ActiveMesh, data: ProblemData) -> np.ndarray:
    faces = [am.fitted_boundary_faces.get(s, np.zeros(0, dtype=np.int64))
             for s in data.strong_sides]
    return np.unique(np.concatenate(faces)) if faces else np.zeros(0, dtype=np.int64)


def assemble_system(am: ActiveMesh, layout: DofLayout, data: ProblemData,
                    cfg: StabilizationConfig | None = None, method: str = "lagrange",
                    penalty: float = DEFAULT_PENALTY,
                    macro: MacroPartition | None = None) -> SaddleSystem:
    cfg = cfg or StabilizationConfig()
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    if data.pure_essential:
        if method == "penalty":
            raise SingularConfig("penalty method needs a natural boundary part to fix the pressure")
        if not layout.n_mean:
            raise IncompatibleData("purely essential conditions need the pressure-mean constraint")
        defect = compatibility_defect(am, data, cfg.boundary_order)
        if abs(defect) > 1e-6 * max(1.0, am.measure()):
            log.warning("data violate int g = int u_B by %.3e", defect)
    if cfg.face_mode == "macro" and macro is None:
        macro = build_macro_partition(am, cfg.delta)

    M = assemble_mass(am, layout, data.eta, cfg, macro)
    B = assemble_divergence(am, layout, cfg, macro)
    nu, npr, nm = layout.n_velocity, layout.n_pressure, layout.n_multiplier
    blocks = {"M": M, "B": B}

    if method == "lagrange":
        C = assemble_coupling(am, layout, cfg.boundary_order)
        S = assemble_multiplier_stab(am, layout, cfg)
        blocks.update(C=C, S=S)
        rows = [[M, B.T, C.T], [B, None, None], [C, None, -S]]
        if layout.n_mean:
            m = sp.csr_matrix(mean_row(am, layout)[None, :])
            blocks["m"] = m
            rows = [r + [None] for r in rows]
            rows[1][3] = m.T
            rows.append([None, m, None, None])
        A = sp.bmat(rows, format="csr")
        if A.shape[0] != layout.size:
            raise RuntimeError("block sizes do not match the dof layout")
        symmetric = True
    else:
        Mb, Pb = assemble_penalty_terms(am, layout, penalty, cfg.boundary_order)
        blocks.update(Mb=Mb, Pb=Pb)
        if nm:
            raise ValueError("penalty layouts carry no multiplier dofs")
        A = sp.bmat([[M + Mb, B.T + Pb], [B, sp.csr_matrix((npr, npr))]], format="csr")
        symmetric = False

    rhs = assemble_rhs(am, layout, data, cfg, method, penalty)
    system = SaddleSystem(A, rhs, layout, method, symmetric, blocks)
    faces = strong_faces(am, data)
    if len(faces):
        system = apply_strong_bc(system, faces, data.u_B, cfg.boundary_order)
    return system


def apply_strong_bc(system: SaddleSystem, faces, u_B, order: int = 5) -> SaddleSystem:
    """Fix face fluxes to ``int_F u_B(x, n_F)`` by symmetric elimination."""
    lay = system.layout
    bg = lay.mesh.background
    faces = np.asarray(faces, dtype=np.int64)
    dofs = lay.velocity_dof[faces]
    values = _face_flux_integrals(bg, faces, u_B, order)
    n = system.size
    x = np.zeros(n)
    x[dofs] = values
    keep = np.ones(n)
    keep[dofs] = 0.0
    K = sp.diags(keep)
    A = system.matrix
    rhs = keep * (system.rhs - A @ x) + (1.0 - keep) * x
    A = (K @ A @ K + sp.diags(1.0 - keep)).tocsr()
    A.eliminate_zeros()
    return SaddleSystem(A, rhs, lay, system.method, system.symmetric, system.blocks,
                        np.union1d(system.constrained, dofs))
