"""Separated-variable trajectories of the overdetermined 2D system and the
residual checks tying them to its partial differential equations::

    dx/dt1 = A1 x + Bt s1 u
    dx/dt2 = A2 x + Bt s2 u
    y      = D u + C x
    s2 du/dt1 - s1 du/dt2 + g u = 0
    s2* dy/dt1 - s1* dy/dt2 + g* y = 0
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridError, StructuralError
from .numgrid import TimeGrid, as_cmat, expm
from .odeflow import evolution_flow, fundamental_input
from .vesselcore import DiffVessel, resolvent_solve, transfer

__all__ = [
    "TrajectoryBundle",
    "PDEReport",
    "default_grids",
    "separated_trajectory",
    "pde_residuals",
    "two_path_consistency",
]

SHEET_POINTS = 33


@dataclass(frozen=True)
class TrajectoryBundle:
    """Input, state and output sheets sampled on a ``t1 x t2`` grid.

    Arrays are indexed ``[i1, i2, component]``.
    """

    t1_grid: TimeGrid
    t2_grid: TimeGrid
    u: np.ndarray
    x: np.ndarray
    y: np.ndarray
    lam: complex | None = None

    def replace(self, **changes) -> "TrajectoryBundle":
        fields = dict(t1_grid=self.t1_grid, t2_grid=self.t2_grid, u=self.u, x=self.x,
                      y=self.y, lam=self.lam)
        fields.update(changes)
        return TrajectoryBundle(**fields)

    def rows(self):
        """Flat records ``(t1, t2, u, x, y)`` in row-major grid order."""
        for i, t1 in enumerate(self.t1_grid.nodes):
            for j, t2 in enumerate(self.t2_grid.nodes):
                yield t1, t2, self.u[i, j], self.x[i, j], self.y[i, j]


@dataclass
class PDEReport:
    """Max-norm residuals of the system and compatibility equations."""

    state_t1: float
    state_t2: float
    output_eq: float
    input_compat: float
    output_compat: float
    tol: float = 1e-6

    NAMES = ("state_t1", "state_t2", "output_eq", "input_compat", "output_compat")

    def items(self):
        return [(k, getattr(self, k)) for k in self.NAMES]

    @property
    def max_residual(self) -> float:
        return max(v for _, v in self.items())

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tol


def default_grids(v: DiffVessel, points: int = SHEET_POINTS) -> tuple:
    """Square sheet of ``points`` nodes per axis with the vessel's node spacing.

    The t2 axis is the first ``points`` vessel nodes (the whole vessel grid if
    it is shorter) and the t1 axis starts at 0 with the same spacing.  Using
    vessel nodes avoids interpolation, and the fine spacing keeps the
    fourth-order differencing error of :func:`pde_residuals` small.
    """
    g = v.grid
    points = min(int(points), g.points)
    t2_end = g.nodes[points - 1]
    return TimeGrid(0.0, t2_end - g.t_start, points), TimeGrid(g.t_start, t2_end, points)


def separated_trajectory(v: DiffVessel, lam: complex, u0, grids: tuple | None = None) -> TrajectoryBundle:
    """Trajectory ``u = u_lam(t2) e^{lam t1}`` with its state and output.

    ``u_lam`` solves the input equation from ``u_lam(t2_start) = u0``;
    ``x_lam = (lam - A1)^{-1} Bt s1 u_lam`` and ``y_lam = S(lam, t2) u_lam``.
    """
    lam = complex(lam)
    t1_grid, t2_grid = grids if grids is not None else default_grids(v)
    for t in (t2_grid.t_start, t2_grid.t_end):
        v.grid.check(t)
    u0 = as_cmat(u0).reshape(-1)
    if u0.size != v.sig.e:
        raise StructuralError(f"u0 must have {v.sig.e} entries")
    phi = fundamental_input(v.sig, lam, t2_grid.t_start)
    n2 = t2_grid.points
    u2 = np.empty((n2, v.sig.e), dtype=complex)
    x2 = np.empty((n2, v.n), dtype=complex)
    y2 = np.empty((n2, v.sig.es), dtype=complex)
    for j, t2 in enumerate(t2_grid.nodes):
        u2[j] = phi(t2) @ u0
        x2[j] = resolvent_solve(v, lam, t2) @ u2[j]
        y2[j] = transfer(v, lam, t2) @ u2[j]
    e1 = np.exp(lam * t1_grid.nodes)[:, None, None]
    return TrajectoryBundle(t1_grid, t2_grid, e1 * u2[None], e1 * x2[None], e1 * y2[None], lam)


def _d1(a: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order central difference along axis 0 on interior nodes."""
    return (a[:-4] - 8 * a[1:-3] + 8 * a[3:-1] - a[4:]) / (12 * h)


def _interior(a: np.ndarray) -> np.ndarray:
    return a[2:-2, 2:-2]


def _maxabs(a: np.ndarray) -> float:
    return float(np.max(np.abs(a))) if a.size else 0.0


def pde_residuals(v: DiffVessel, traj: TrajectoryBundle, tol: float = 1e-6) -> PDEReport:
    """Residuals of the system and compatibility equations on interior nodes.

    Raises
    ------
    GridError
        If either grid has fewer than 5 nodes.
    """
    g1, g2 = traj.t1_grid, traj.t2_grid
    if g1.points < 5 or g2.points < 5:
        raise GridError("pde_residuals needs at least 5 nodes per axis")
    for t in (g2.t_start, g2.t_end):
        v.grid.check(t)
    u, x, y = traj.u, traj.x, traj.y
    h1, h2 = g1.spacing, g2.spacing

    def d_t1(a):
        return _d1(a, h1)[:, 2:-2]

    def d_t2(a):
        return np.swapaxes(_d1(np.swapaxes(a, 0, 1), h2), 0, 1)[2:-2]

    ts = g2.nodes[2:-2]
    M = {name: np.stack([f(t) for t in ts]) for name, f in (
        ("A1", v.A1), ("A2", v.A2), ("Bt", v.Bt), ("C", v.C), ("D", v.D),
        ("s1", v.sig.sigma1), ("s2", v.sig.sigma2), ("g", v.sig.gamma),
        ("s1s", v.sig.sigma1s), ("s2s", v.sig.sigma2s), ("gs", v.sig.gammas),
    )}

    def apply(name, a):
        # a[i1, i2, k] -> M[i2] @ a[i1, i2]
        return np.einsum("jab,ijb->ija", M[name], a)

    ui, xi, yi = _interior(u), _interior(x), _interior(y)
    state_t1 = d_t1(x) - apply("A1", xi) - apply("Bt", apply("s1", ui))
    state_t2 = d_t2(x) - apply("A2", xi) - apply("Bt", apply("s2", ui))
    out_eq = yi - apply("D", ui) - apply("C", xi)
    in_c = apply("s2", d_t1(u)) - apply("s1", d_t2(u)) + apply("g", ui)
    out_c = apply("s2s", d_t1(y)) - apply("s1s", d_t2(y)) + apply("gs", yi)
    return PDEReport(_maxabs(state_t1), _maxabs(state_t2), _maxabs(out_eq),
                     _maxabs(in_c), _maxabs(out_c), tol)


def two_path_consistency(v: DiffVessel, x0, corner: tuple, origin: tuple | None = None) -> float:
    """Mismatch of the two free-evolution paths from ``origin`` to ``corner``.

    Compares ``e^{A1(t2)(t1 - t1_0)} F(t2, t2_0) x0`` with
    ``F(t2, t2_0) e^{A1(t2_0)(t1 - t1_0)} x0``.
    """
    t1, t2 = map(float, corner)
    t1_0, t2_0 = (0.0, v.grid.t_start) if origin is None else map(float, origin)
    x0 = as_cmat(x0).reshape(-1)
    if t1 == t1_0:
        return 0.0
    F = evolution_flow(v.A2, t2_0)(t2)
    dt = t1 - t1_0
    a = expm(v.A1(t2) * dt) @ F @ x0
    b = F @ expm(v.A1(t2_0) * dt) @ x0
    return float(np.max(np.abs(a - b), initial=0.0))
