"""Manufactured-solution experiments, error norms and convergence tables."""
from __future__ import annotations

import csv
import io
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .assembly import (DEFAULT_PENALTY, ProblemData, SaddleSystem, StabilizationConfig,
                       assemble_system)
from .fespace import (DofLayout, FeFunction, basis_at, segment_points, velocity_divergence,
                      volume_points)
from .geometry import Circle, HalfPlane, LevelSet, constant_level_set
from .linalg import condest_1norm, factorize
from .macro import MacroPartition, build_macro_partition
from .mesh import ActiveMesh, BackgroundMesh, build_background_mesh, extract_active_mesh

log = logging.getLogger(__name__)

EXAMPLES = ("1", "1.2", "1-const", "2", "2-fitted", "mixed")
CSV_COLUMNS = ("example", "method", "stab", "mult_deg", "nx", "h", "N", "err_u_L2", "err_p_L2",
               "err_div_L2", "err_div_max", "condest", "eoc_u", "eoc_p", "eoc_div", "runtime_s")

TWO_PI = 2 * np.pi


# ---------------------------------------------------------------------------
# manufactured solutions
# ---------------------------------------------------------------------------

@dataclass
class Manufactured:
    name: str
    u: Callable
    p: Callable
    g: Callable
    data: ProblemData
    geometry: LevelSet
    box: tuple = ((0.0, 0.0), (1.0, 1.0))
    fitted_sides: tuple = ()
    aspect: float = 1.0  # rows per column of the background grid
    theta: Optional[float] = None

    def mesh(self, nx: int) -> BackgroundMesh:
        if self.theta is None:
            return build_background_mesh(nx, max(1, round(nx * self.aspect)), self.box)
        # Sigma = {y = 0.5} sits a fraction theta up the top cell row
        ny = nx // 2 + 1
        hy = 0.5 / (ny - 1 + self.theta)
        return build_background_mesh(nx, ny, ((0.0, 0.0), (1.0, ny * hy)))


def _flux(u):
    def u_B(x, n):
        return np.einsum("...d,...d->...", u(x), n)
    return u_B


def _ex1_u(x):
    X, Y = x[..., 0], x[..., 1]
    return np.stack([TWO_PI * np.cos(TWO_PI * X) * np.cos(TWO_PI * Y),
                     -TWO_PI * np.sin(TWO_PI * X) * np.sin(TWO_PI * Y)], axis=-1)


def _ex1_p(x):
    return -np.sin(TWO_PI * x[..., 0]) * np.cos(TWO_PI * x[..., 1])


def _ex1_g(x):
    return -2 * TWO_PI ** 2 * np.sin(TWO_PI * x[..., 0]) * np.cos(TWO_PI * x[..., 1])


def _ex2_u(x):
    X, Y = x[..., 0], x[..., 1]
    return np.stack([X * (X - 1), Y * (Y - 0.5)], axis=-1)


def _ex2_p(x):
    X, Y = x[..., 0], x[..., 1]
    return -(X ** 3 / 3 - X ** 2 / 2 + Y ** 3 / 3 - Y ** 2 / 4)


def _ex2_g(x):
    return 2 * x[..., 0] + 2 * x[..., 1] - 1.5


def _zero_vec(x):
    return np.zeros(np.shape(x))


def _zero(x):
    return np.zeros(np.shape(x)[:-1])


CIRCLE = Circle((0.5, 0.5), 0.45)


def manufactured_solution(example: str, C: float = 100.0, theta: float = 0.3,
                          div_constant: float = 1.5) -> Manufactured:
    """Exact fields, data and geometry of a named example.

    ``"1"``: trigonometric solution on the disk of radius 0.45.
    ``"1.2"``: ``u = 0`` with the cubic pressure scaled by ``C``.
    ``"1-const"``: disk with constant divergence ``div_constant``.
    ``"2"`` / ``"2-fitted"``: the rectangle ``[0,1] x [0,0.5]`` with an
    unfitted (respectively fitted) top edge.
    ``"mixed"``: as ``"2"`` but with the pressure prescribed on the bottom edge.
    """
    if example == "1":
        data = ProblemData(f=_zero_vec, g=_ex1_g, u_B=_flux(_ex1_u))
        return Manufactured(example, _ex1_u, _ex1_p, _ex1_g, data, CIRCLE)

    if example == "1.2":
        def p(x):
            y = x[..., 1]
            return C * (y ** 3 - y ** 2 / 2 + y - 7 / 12)

        def f(x):
            y = x[..., 1]
            return np.stack([np.zeros_like(y), C * (3 * y ** 2 - y + 1)], axis=-1)

        data = ProblemData(f=f, g=_zero, u_B=lambda x, n: _zero(x))
        return Manufactured(example, _zero_vec, p, _zero, data, CIRCLE)

    if example == "1-const":
        c = div_constant

        def u(x):
            X, Y = x[..., 0] - 0.5, x[..., 1] - 0.5
            return np.stack([0.5 * c * X + Y ** 2, 0.5 * c * Y + X ** 2], axis=-1)

        def p(x):
            return np.sin(np.pi * x[..., 0]) * np.cos(np.pi * x[..., 1])

        def f(x):
            X, Y = x[..., 0], x[..., 1]
            grad = np.stack([np.pi * np.cos(np.pi * X) * np.cos(np.pi * Y),
                             -np.pi * np.sin(np.pi * X) * np.sin(np.pi * Y)], axis=-1)
            return u(x) + grad

        def g(x):
            return np.full(np.shape(x)[:-1], c)

        data = ProblemData(f=f, g=g, u_B=_flux(u))
        return Manufactured(example, u, p, g, data, CIRCLE)

    if example in ("2", "mixed"):
        geom = HalfPlane(axis=1, offset=0.5)
        if example == "2":
            data = ProblemData(f=_zero_vec, g=_ex2_g, u_B=_flux(_ex2_u),
                               strong_sides=("left", "right", "bottom"))
        else:
            data = ProblemData(f=_zero_vec, g=_ex2_g, u_B=_flux(_ex2_u),
                               p_N=_ex2_p, strong_sides=("left", "right"),
                               neumann_sides=("bottom",))
        return Manufactured(example, _ex2_u, _ex2_p, _ex2_g, data, geom,
                            fitted_sides=("left", "right", "bottom"), theta=theta)

    if example == "2-fitted":
        sides = ("left", "right", "bottom", "top")
        data = ProblemData(f=_zero_vec, g=_ex2_g, u_B=_flux(_ex2_u), strong_sides=sides)
        return Manufactured(example, _ex2_u, _ex2_p, _ex2_g, data, constant_level_set(-1.0),
                            box=((0.0, 0.0), (1.0, 0.5)), fitted_sides=sides, aspect=0.5)

    raise ValueError(f"unknown example {example!r}; expected one of {EXAMPLES}")


# ---------------------------------------------------------------------------
# solving and errors
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class Solution:
    system: SaddleSystem
    x: np.ndarray
    residual: float
    factorization: object = None

    @property
    def layout(self) -> DofLayout:
        return self.system.layout

    def block(self, name: str) -> FeFunction:
        return FeFunction(self.layout, self.layout.split(self.x)[name], name)

    @property
    def velocity(self) -> FeFunction:
        return self.block("velocity")

    @property
    def pressure(self) -> FeFunction:
        return self.block("pressure")

    @property
    def multiplier(self) -> FeFunction:
        return self.block("multiplier")

    @property
    def mean_multiplier(self) -> float:
        rest = self.layout.split(self.x)["mean"]
        return float(rest[0]) if len(rest) else 0.0


def solve_system(system: SaddleSystem) -> Solution:
    fact = factorize(system.matrix)
    x = fact.solve(system.rhs)
    return Solution(system, x, fact.residual(x, system.rhs), fact)


def boundary_flux(fe: FeFunction, order: int = 5) -> float:
    """``int_Sigma u_h . n`` over the reconstructed boundary."""
    els, pts, wts, nrm = segment_points(fe.layout.mesh, order)
    if len(els) == 0:
        return 0.0
    dofs, vals, _ = basis_at(fe.layout, els, pts)
    return float(np.einsum("q,qid,qd,qi->", wts, vals, nrm, fe.coefficients[dofs]))


def boundary_datum_integral(am: ActiveMesh, u_B, order: int = 5) -> float:
    els, pts, wts, nrm = segment_points(am, order)
    if len(els) == 0:
        return 0.0
    return float(wts @ (np.asarray(u_B(pts, nrm)) * np.ones(len(pts))))


@dataclass
class ErrorRow:
    nx: int
    h: float
    N: int
    err_u_L2: float
    err_p_L2: float
    err_div_L2: float
    err_div_max: float
    condest: float = math.nan
    runtime_s: float = math.nan
    flux_defect: float = math.nan
    mean_multiplier: float = math.nan
    residual: float = math.nan
    extra: dict = field(default_factory=dict)


def compute_errors(velocity: FeFunction, pressure: FeFunction | None, exact: Manufactured,
                   order: int = 4) -> dict:
    """Cut-aware L2 errors; the pressure error removes the Omega-mean offset."""
    lay = velocity.layout
    am = lay.mesh
    els, pts, wts = volume_points(am, max(order, 4))
    dofs, vals, _ = basis_at(lay, els, pts)
    uh = np.einsum("qid,qi->qd", vals, velocity.coefficients[dofs])
    eu = uh - exact.u(pts)
    err_u = math.sqrt(float(wts @ np.einsum("qd,qd->q", eu, eu)))

    if pressure is not None:
        ph = pressure.coefficients[lay.pressure_dof[els]]
        dp = ph - exact.p(pts)
        dp = dp - (wts @ dp) / wts.sum()
        err_p = math.sqrt(float(wts @ dp ** 2))
    else:
        err_p = math.nan

    div_el = velocity_divergence(velocity)
    dd = div_el[lay.pressure_dof[els]] - np.asarray(exact.g(pts)) * np.ones(len(pts))
    return {"err_u_L2": err_u, "err_p_L2": err_p,
            "err_div_L2": math.sqrt(float(wts @ dd ** 2)),
            "err_div_max": float(np.abs(dd).max())}


def compute_eoc(errors, hs) -> list:
    """``log(e_i / e_{i+1}) / log(h_i / h_{i+1})`` for consecutive levels."""
    out = []
    for (e0, e1), (h0, h1) in zip(zip(errors[:-1], errors[1:]), zip(hs[:-1], hs[1:])):
        if not (e0 > 0 and e1 > 0):
            out.append(math.nan)
        else:
            out.append(math.log(e0 / e1) / math.log(h0 / h1))
    return out


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------

@dataclass
class ExperimentConfig:
    example: str = "1"
    nx: tuple = (10, 20, 40, 80)
    method: str = "lagrange"
    penalty: float = DEFAULT_PENALTY
    multiplier_degree: int = 1
    stab: StabilizationConfig = field(default_factory=StabilizationConfig)
    C: float = 100.0
    theta: float = 0.3
    condest: bool = True
    timing: bool = True
    out: Optional[str] = None

    def __post_init__(self):
        self.nx = tuple(int(n) for n in self.nx)
        if any(b <= a for a, b in zip(self.nx[:-1], self.nx[1:])):
            raise ValueError("mesh sizes must be strictly increasing")
        if self.example not in EXAMPLES:
            raise ValueError(f"unknown example {self.example!r}")


@dataclass(eq=False)
class LevelRun:
    """Everything produced on one mesh level, kept for inspection."""

    exact: Manufactured
    mesh: ActiveMesh
    layout: DofLayout
    solution: Solution
    macro: Optional[MacroPartition]
    row: ErrorRow


class LevelFailure(RuntimeError):
    def __init__(self, nx, exc):
        super().__init__(f"level nx={nx}: {exc}")
        self.nx = nx
        self.cause = exc


def run_level(cfg: ExperimentConfig, nx: int) -> LevelRun:
    t0 = time.perf_counter()
    exact = manufactured_solution(cfg.example, C=cfg.C, theta=cfg.theta)
    bg = exact.mesh(nx)
    am = extract_active_mesh(bg, exact.geometry, exact.fitted_sides)
    data = exact.data
    lagrange = cfg.method == "lagrange"
    layout = DofLayout.build(am, cfg.multiplier_degree,
                             mean=data.pure_essential and lagrange, with_multiplier=lagrange)
    macro = None
    if cfg.stab.face_mode == "macro":
        macro = build_macro_partition(am, cfg.stab.delta)
    system = assemble_system(am, layout, data, cfg.stab, cfg.method, cfg.penalty, macro)
    sol = solve_system(system)
    errs = compute_errors(sol.velocity, sol.pressure, exact, cfg.stab.volume_order)
    kappa = condest_1norm(system.matrix, sol.factorization) if cfg.condest else math.nan
    flux_defect = (boundary_flux(sol.velocity, cfg.stab.boundary_order)
                   - boundary_datum_integral(am, data.u_B, cfg.stab.boundary_order))
    runtime = time.perf_counter() - t0 if cfg.timing else math.nan
    row = ErrorRow(nx, bg.h_max, system.size, condest=kappa, runtime_s=runtime,
                   flux_defect=flux_defect, mean_multiplier=sol.mean_multiplier,
                   residual=sol.residual, **errs)
    log.info("nx=%d N=%d err_u=%.3e err_p=%.3e err_div=%.3e", nx, system.size,
             row.err_u_L2, row.err_p_L2, row.err_div_L2)
    return LevelRun(exact, am, layout, sol, macro, row)


def run_experiment(cfg: ExperimentConfig, keep_levels: bool = False):
    """Run every mesh level; returns the error rows (and level runs if asked)."""
    rows, levels = [], []
    for nx in cfg.nx:
        try:
            lv = run_level(cfg, nx)
        except Exception as exc:  # attach the level, keep the original type reachable
            raise LevelFailure(nx, exc) from exc
        rows.append(lv.row)
        if keep_levels:
            levels.append(lv)
    if cfg.out:
        with open(cfg.out, "w", newline="") as fh:
            fh.write(format_csv(cfg, rows))
    return (rows, levels) if keep_levels else rows


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return "nan"
    return f"{float(v):.9e}"


def format_csv(cfg: ExperimentConfig, rows) -> str:
    hs = [r.h for r in rows]
    eocs = {k: [math.nan] + compute_eoc([getattr(r, k) for r in rows], hs)
            for k in ("err_u_L2", "err_p_L2", "err_div_L2")}
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    stab = cfg.stab.variant if cfg.method == "lagrange" else "none"
    for i, r in enumerate(rows):
        w.writerow([cfg.example, cfg.method, stab, cfg.multiplier_degree, r.nx, _fmt(r.h), r.N,
                    _fmt(r.err_u_L2), _fmt(r.err_p_L2), _fmt(r.err_div_L2), _fmt(r.err_div_max),
                    _fmt(r.condest), _fmt(eocs["err_u_L2"][i]), _fmt(eocs["err_p_L2"][i]),
                    _fmt(eocs["err_div_L2"][i]), _fmt(r.runtime_s)])
    return buf.getvalue()
