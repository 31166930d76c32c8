"""Differential vessels: data types, axiom residuals, transfer functions and
the class-I membership test.

Sign conventions (the only set under which the transfer function satisfies
its t2-differential equation)::

    Lax      A1' = A2 A1 - A1 A2
    input    (Bt s1)' = A2 Bt s1 - A1 Bt s2 - Bt g
    output   s1* C' = s2* C A1 - s1* C A2 + g* C
    linkage  s1* D = Dt s1,  s2* D = Dt s2,
             Dt g = s2* C Bt s1 - s1* C Bt s2 - s1* D' + g* D

with ``s1, s2, g`` the input signature and ``s1*, s2*, g*`` the output one.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import odeflow
from .errors import DomainError, ResolventError, StructuralError
from .numgrid import MatFn, TimeGrid

__all__ = [
    "DEFAULT_TOL",
    "Signature",
    "DiffVessel",
    "ResidualReport",
    "ClassIReport",
    "verify_vessel",
    "transfer",
    "transfer_many",
    "resolvent_solve",
    "transfer_ode_residual",
    "check_intertwining",
    "intertwining_residuals",
    "class_I_check",
    "spectrum",
]

DEFAULT_TOL = 1e-6
RESOLVENT_THRESHOLD = 1e-10


@dataclass(frozen=True)
class Signature:
    """External data ``(sigma1, sigma2, gamma)`` of the input side and
    ``(sigma1s, sigma2s, gammas)`` of the output side."""

    sigma1: MatFn
    sigma2: MatFn
    gamma: MatFn
    sigma1s: MatFn
    sigma2s: MatFn
    gammas: MatFn

    def __post_init__(self):
        grid = self.sigma1.grid
        for name in _SIG_NAMES:
            f = getattr(self, name)
            if not isinstance(f, MatFn):
                raise StructuralError(f"signature entry {name} must be a MatFn")
            if f.grid != grid:
                raise StructuralError(f"signature entry {name} lives on a different grid")
        for trio, dim in ((("sigma1", "sigma2", "gamma"), self.sigma1.rows),
                          (("sigma1s", "sigma2s", "gammas"), self.sigma1s.rows)):
            for name in trio:
                if getattr(self, name).shape != (dim, dim):
                    raise StructuralError(
                        f"signature entry {name} has shape {getattr(self, name).shape}, "
                        f"expected {(dim, dim)}"
                    )

    @property
    def grid(self) -> TimeGrid:
        return self.sigma1.grid

    @property
    def e(self) -> int:
        return self.sigma1.rows

    @property
    def es(self) -> int:
        return self.sigma1s.rows

    @property
    def input_side(self) -> tuple:
        return (self.sigma1, self.sigma2, self.gamma)

    @property
    def output_side(self) -> tuple:
        return (self.sigma1s, self.sigma2s, self.gammas)

    @classmethod
    def from_sides(cls, input_side, output_side) -> "Signature":
        return cls(*input_side, *output_side)

    def swapped(self) -> "Signature":
        """Signature with the input and output families exchanged."""
        return Signature.from_sides(self.output_side, self.input_side)

    @classmethod
    def constant(cls, grid: TimeGrid, sigma1, sigma2, gamma, sigma1s=None,
                 sigma2s=None, gammas=None) -> "Signature":
        """Signature with constant entries; the output side defaults to the input side."""
        if sigma1s is None:
            sigma1s, sigma2s, gammas = sigma1, sigma2, gamma
        vals = (sigma1, sigma2, gamma, sigma1s, sigma2s, gammas)
        return cls(*(MatFn.constant(grid, x) for x in vals))


_SIG_NAMES = ("sigma1", "sigma2", "gamma", "sigma1s", "sigma2s", "gammas")
_BLOCKS = ("A1", "A2", "Bt", "C", "D", "Dt")


@dataclass(frozen=True)
class DiffVessel:
    """Differential vessel ``(A1, A2, Bt, C, D, Dt; sig)`` on the state space C^n."""

    A1: MatFn
    A2: MatFn
    Bt: MatFn
    C: MatFn
    D: MatFn
    Dt: MatFn
    sig: Signature
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        grid = self.sig.grid
        for name in _BLOCKS:
            f = getattr(self, name)
            if not isinstance(f, MatFn):
                raise StructuralError(f"vessel block {name} must be a MatFn")
            if f.grid != grid:
                raise StructuralError(f"vessel block {name} lives on a different grid")
        n, e, es = self.A1.rows, self.sig.e, self.sig.es
        expected = {
            "A1": (n, n), "A2": (n, n), "Bt": (n, e),
            "C": (es, n), "D": (es, e), "Dt": (es, e),
        }
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise StructuralError(
                    f"vessel block {name} has shape {getattr(self, name).shape}, "
                    f"expected {shape}"
                )

    @property
    def grid(self) -> TimeGrid:
        return self.sig.grid

    @property
    def n(self) -> int:
        return self.A1.rows

    @property
    def state_dim(self) -> int:
        return self.A1.rows

    def replace(self, **changes) -> "DiffVessel":
        return replace(self, **changes)

    def blocks(self) -> dict:
        return {name: getattr(self, name) for name in _BLOCKS}


@dataclass
class ResidualReport:
    """Max-norm residual of every vessel axiom over the grid."""

    lax: float
    input_cond: float
    output_cond: float
    linkage1: float
    linkage2: float
    linkage3: float
    tol: float
    per_node: dict = field(default_factory=dict, repr=False)

    NAMES = ("lax", "input_cond", "output_cond", "linkage1", "linkage2", "linkage3")

    @property
    def max_over_grid(self) -> float:
        return max(getattr(self, k) for k in self.NAMES)

    @property
    def passed(self) -> bool:
        return self.max_over_grid <= self.tol

    def items(self):
        return [(k, getattr(self, k)) for k in self.NAMES]

    def worst_node(self, name: str) -> int:
        return int(np.argmax(self.per_node[name]))


def _node_norms(f: MatFn) -> np.ndarray:
    if f.samples.size == 0:
        return np.zeros(f.grid.points)
    return np.max(np.abs(f.samples), axis=(1, 2))


def axiom_residuals(v: DiffVessel) -> dict:
    """Residual matrix functions of the six axioms, keyed by report name."""
    s = v.sig
    A1, A2, Bt, C, D, Dt = v.A1, v.A2, v.Bt, v.C, v.D, v.Dt
    Bs1 = Bt @ s.sigma1
    CBt = C @ Bt
    return {
        "lax": A1.derivative() - (A2 @ A1 - A1 @ A2),
        "input_cond": Bs1.derivative() - A2 @ Bs1 + A1 @ Bt @ s.sigma2 + Bt @ s.gamma,
        "output_cond": s.sigma1s @ C.derivative() + s.sigma1s @ C @ A2
        - s.sigma2s @ C @ A1 - s.gammas @ C,
        "linkage1": s.sigma1s @ D - Dt @ s.sigma1,
        "linkage2": s.sigma2s @ D - Dt @ s.sigma2,
        "linkage3": Dt @ s.gamma - (s.sigma2s @ CBt @ s.sigma1 - s.sigma1s @ CBt @ s.sigma2
                                    - s.sigma1s @ D.derivative() + s.gammas @ D),
    }


def verify_vessel(v: DiffVessel, tol: float | None = None) -> ResidualReport:
    """Check the vessel axioms node by node.

    Parameters
    ----------
    v : DiffVessel
    tol : float, optional
        Pass threshold; defaults to the tolerance stored on ``v``.

    Returns
    -------
    ResidualReport
        ``passed`` is true iff every residual is at most ``tol``.
    """
    tol = v.tol if tol is None else float(tol)
    per_node = {k: _node_norms(r) for k, r in axiom_residuals(v).items()}
    return ResidualReport(
        **{k: float(np.max(arr)) for k, arr in per_node.items()}, tol=tol, per_node=per_node
    )


def spectrum(v: DiffVessel, t2: float) -> np.ndarray:
    """Eigenvalues of ``A1(t2)`` sorted by real then imaginary part."""
    ev = np.linalg.eigvals(v.A1(t2)) if v.n else np.empty(0, dtype=complex)
    return np.sort_complex(ev)


def _check_resolvent(A1: np.ndarray, lam: complex):
    n = A1.shape[0]
    M = lam * np.eye(n) - A1
    if n == 0:
        return M
    smin = np.linalg.svd(M, compute_uv=False)[-1]
    scale = max(np.linalg.norm(A1, 2), 1.0)
    if smin <= RESOLVENT_THRESHOLD * scale:
        raise ResolventError(
            f"lambda={lam} lies in the numerical spectrum of A1 "
            f"(distance estimate {smin:.3g})",
            distance=float(smin),
        )
    return M


def resolvent_solve(v: DiffVessel, lam: complex, t2: float) -> np.ndarray:
    """``X`` with ``(lam I - A1(t2)) X = Bt(t2) sigma1(t2)``."""
    lam = complex(lam)
    M = _check_resolvent(v.A1(t2), lam)
    rhs = v.Bt(t2) @ v.sig.sigma1(t2)
    return np.linalg.solve(M, rhs) if v.n else rhs


def transfer(v: DiffVessel, lam: complex, t2: float) -> np.ndarray:
    """Transfer function ``S(lam, t2) = D + C (lam I - A1)^{-1} Bt sigma1``.

    Raises
    ------
    ResolventError
        If ``lam`` is numerically in the spectrum of ``A1(t2)``.
    """
    X = resolvent_solve(v, lam, t2)
    return v.D(t2) + v.C(t2) @ X


def transfer_many(v: DiffVessel, lams, t2: float) -> np.ndarray:
    """``S(lam, t2)`` for an array of ``lam``; shape ``(len(lams), e*, e)``."""
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    A1, D, C = v.A1(t2), v.D(t2), v.C(t2)
    rhs = v.Bt(t2) @ v.sig.sigma1(t2)
    for lam in lams:
        _check_resolvent(A1, lam)
    if v.n == 0:
        return np.broadcast_to(D, (lams.size,) + D.shape).copy()
    M = lams[:, None, None] * np.eye(v.n) - A1
    X = np.linalg.solve(M, np.broadcast_to(rhs, (lams.size,) + rhs.shape))
    return D + C @ X


def _stencil_times(grid: TimeGrid, t2: float):
    t2 = grid.check(t2)
    h = grid.spacing
    i = grid.node_index(t2)
    if i is not None:
        if i < 2 or i > grid.points - 3:
            raise DomainError(f"t2={t2} is within two grid spacings of an interval end")
        return grid.nodes[[i - 2, i - 1, i + 1, i + 2]], h
    times = t2 + h * np.array([-2.0, -1.0, 1.0, 2.0])
    if times[0] < grid.t_start or times[-1] > grid.t_end:
        raise DomainError(f"t2={t2} is within two grid spacings of an interval end")
    return times, h


def _ode_rhs(v: DiffVessel, lam: complex, t2: float, S: np.ndarray) -> np.ndarray:
    s = v.sig
    left = np.linalg.solve(s.sigma1s(t2), lam * s.sigma2s(t2) + s.gammas(t2))
    right = np.linalg.solve(s.sigma1(t2), lam * s.sigma2(t2) + s.gamma(t2))
    return left @ S - S @ right


def transfer_ode_residual(v: DiffVessel, lam: complex, t2: float) -> float:
    """Residual of ``dS/dt2 = s1*^{-1}(lam s2* + g*) S - S s1^{-1}(lam s2 + g)``.

    ``dS/dt2`` is taken by fourth-order central differences with step equal to
    the grid spacing, so ``t2`` must be at least two spacings from either end.
    """
    times, h = _stencil_times(v.grid, t2)
    Sm2, Sm1, Sp1, Sp2 = (transfer(v, lam, t) for t in times)
    dS = (Sm2 - 8.0 * Sm1 + 8.0 * Sp1 - Sp2) / (12.0 * h)
    S = transfer(v, lam, t2)
    return float(np.max(np.abs(dS - _ode_rhs(v, lam, t2, S))))


def intertwining_residuals(v: DiffVessel, lams, t0: float, t2s) -> np.ndarray:
    """``||S(lam,t2) Phi(lam,t2,t0) - Phi*(lam,t2,t0) S(lam,t0)||`` on a (lam, t2) table."""
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    t2s = np.atleast_1d(np.asarray(t2s, dtype=float))
    phis = odeflow.fundamental_input_many(v.sig, lams, t0)
    phiss = odeflow.fundamental_output_many(v.sig, lams, t0)
    S0 = transfer_many(v, lams, t0)
    out = np.empty((lams.size, t2s.size))
    for j, t2 in enumerate(t2s):
        S = transfer_many(v, lams, t2)
        for k in range(lams.size):
            diff = S[k] @ phis[k](t2) - phiss[k](t2) @ S0[k]
            out[k, j] = np.max(np.abs(diff)) if diff.size else 0.0
    return out


def check_intertwining(v: DiffVessel, lam: complex, t0: float, t2: float) -> float:
    """``||S(lam,t2) Phi(lam,t2,t0) - Phi*(lam,t2,t0) S(lam,t0)||`` (max entry)."""
    return float(intertwining_residuals(v, [lam], t0, [t2])[0, 0])


@dataclass
class ClassIReport:
    """Worst residual of each defining property of class I."""

    analyticity: float
    smoothness: float
    intertwining: float
    tol: float

    @property
    def analytic_ok(self) -> bool:
        return self.analyticity <= self.tol

    @property
    def smooth_ok(self) -> bool:
        return self.smoothness <= self.tol

    @property
    def intertwining_ok(self) -> bool:
        return self.intertwining <= self.tol

    @property
    def passed(self) -> bool:
        return self.analytic_ok and self.smooth_ok and self.intertwining_ok


def class_I_check(sampler, sig: Signature, lambda_radius: float, tol: float = DEFAULT_TOL,
                  angles: int = 16, t2_samples: int = 3) -> ClassIReport:
    """Test a sampled function ``S(lam, t2)`` for membership in class I.

    Parameters
    ----------
    sampler : callable
        ``sampler(lam, t2)`` returning an ``e* x e`` matrix.
    sig : Signature
        Signature whose input/output equations ``S`` must intertwine.
    lambda_radius : float
        ``S`` must be analytic for ``|lam| >= lambda_radius``.
    tol : float
        Pass threshold applied to each property.

    Notes
    -----
    Analyticity is probed with Cauchy-Riemann central differences on the
    circle ``|lam| = 2 lambda_radius``.  Smoothness in t2 compares every node
    value with the cubic prediction from its four nearest neighbours.  The
    intertwining residual uses fundamental matrices based at the grid start.
    """
    grid = sig.grid
    R = 2.0 * max(float(lambda_radius), 0.5)
    delta = 1e-4 * max(1.0, R)
    lams = R * np.exp(2j * np.pi * (np.arange(angles) + 0.5) / angles)
    t2s = grid.sample(t2_samples)

    def S(lam, t2):
        return np.atleast_2d(np.asarray(sampler(complex(lam), float(t2)), dtype=complex))

    analyticity = 0.0
    for t2 in t2s:
        for lam in lams:
            fx = (S(lam + delta, t2) - S(lam - delta, t2)) / (2 * delta)
            fy = (S(lam + 1j * delta, t2) - S(lam - 1j * delta, t2)) / (2 * delta)
            analyticity = max(analyticity, float(np.max(np.abs(fx + 1j * fy))))

    smoothness = 0.0
    for lam in lams[:: max(1, angles // 4)]:
        vals = np.stack([S(lam, t) for t in grid.nodes])
        pred = (-vals[:-4] + 4 * vals[1:-3] + 4 * vals[3:-1] - vals[4:]) / 6.0
        smoothness = max(smoothness, float(np.max(np.abs(vals[2:-2] - pred))))

    t0 = grid.t_start
    probe = lams[:: max(1, angles // 4)]
    phis = odeflow.fundamental_input_many(sig, probe, t0)
    phiss = odeflow.fundamental_output_many(sig, probe, t0)
    intertwining = 0.0
    for lam, phi, phis_ in zip(probe, phis, phiss):
        S0 = S(lam, t0)
        for t2 in t2s:
            diff = S(lam, t2) @ phi(t2) - phis_(t2) @ S0
            intertwining = max(intertwining, float(np.max(np.abs(diff))))
    return ClassIReport(analyticity, smoothness, intertwining, float(tol))
