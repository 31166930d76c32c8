"""Linear ODEs in t2: evolution semigroups, fundamental matrices with a
spectral parameter, and inhomogeneous companion chains.

Every solver integrates with an embedded Runge-Kutta 4(5) pair from the base
time towards both ends of the grid and samples the solution at the grid nodes.
Steps never exceed the grid spacing, which keeps the dense-output error of the
node samples well below what spline differentiation would amplify.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import SolverError, StructuralError
from .numgrid import MatFn, TimeGrid, as_cmat, inverse_fn

__all__ = [
    "RTOL",
    "ATOL",
    "FundMatrix",
    "integrate_linear",
    "evolution_semigroup",
    "evolution_flow",
    "spectral_flows",
    "inverse_spectral_flows",
    "signature_coefficients",
    "fundamental_input",
    "fundamental_output",
    "fundamental_adjoint_input",
    "fundamental_adjoint_output",
    "fundamental_input_many",
    "fundamental_output_many",
    "solve_companion_chain",
]

RTOL = 1e-10
ATOL = 1e-12


@dataclass(frozen=True)
class FundMatrix:
    """Fundamental matrix ``Phi(lambda, ., base_time)`` sampled on a grid."""

    lam: complex
    base_time: float
    flow: MatFn

    def __call__(self, t2: float) -> np.ndarray:
        return self.flow(t2)

    def inverse(self) -> MatFn:
        return inverse_fn(self.flow, cond_limit=np.inf, name="fundamental matrix")


def _evaluator(f: MatFn):
    """Fast unchecked evaluation of ``f`` inside its grid interval."""
    if f.is_constant or f.samples.size == 0:
        value = np.array(f.samples[0])
        return lambda t: value
    spline = f._spline
    return lambda t: spline(t)


def _run(rhs, y0: np.ndarray, t0: float, t1: float, t_eval, max_step: float = np.inf):
    shape = y0.shape

    def flat_rhs(t, y):
        return rhs(t, y.reshape(shape)).ravel()

    sol = solve_ivp(
        flat_rhs,
        (t0, t1),
        y0.ravel().astype(complex),
        method="RK45",
        rtol=RTOL,
        atol=ATOL,
        t_eval=t_eval,
        max_step=max_step,
    )
    if sol.status != 0:
        raise SolverError(f"integration from t2={t0} to t2={t1} failed: {sol.message}")
    return sol


def integrate_linear(grid: TimeGrid, rhs, y0, t0: float) -> np.ndarray:
    """Integrate ``y' = rhs(t, y)`` from ``y(t0) = y0`` over the whole grid.

    Returns the samples at every node, shape ``(points,) + y0.shape``.  The
    sample at a node equal to ``t0`` is ``y0`` exactly.
    """
    y0 = np.array(y0, dtype=complex)
    t0 = grid.check(t0)
    nodes = grid.nodes
    out = np.empty((grid.points,) + y0.shape, dtype=complex)
    ahead = np.flatnonzero(nodes > t0)
    behind = np.flatnonzero(nodes < t0)[::-1]
    for idx, t_end in ((ahead, grid.t_end), (behind, grid.t_start)):
        if idx.size == 0:
            continue
        sol = _run(rhs, y0, t0, t_end, nodes[idx], max_step=grid.spacing)
        out[idx] = np.moveaxis(sol.y, -1, 0).reshape((idx.size,) + y0.shape)
    at = np.flatnonzero(nodes == t0)
    out[at] = y0
    return out


def evolution_semigroup(A2: MatFn, t_from: float, t_to: float) -> np.ndarray:
    """``F(t_to, t_from)`` for ``dF/dt2 = A2 F`` with ``F(t_from, t_from) = I``."""
    grid = A2.grid
    t_from, t_to = grid.check(t_from), grid.check(t_to)
    n = A2.rows
    eye = np.eye(n, dtype=complex)
    if t_from == t_to or not np.any(A2.samples):
        return eye
    a2 = _evaluator(A2)
    sol = _run(lambda t, y: a2(t) @ y, eye, t_from, t_to, None)
    return sol.y[:, -1].reshape(n, n)


def evolution_flow(A2: MatFn, t0: float) -> MatFn:
    """``F(., t0)`` sampled on the grid of ``A2``."""
    n = A2.rows
    if not np.any(A2.samples):
        return MatFn.identity(A2.grid, n)
    a2 = _evaluator(A2)
    return MatFn(A2.grid, integrate_linear(A2.grid, lambda t, y: a2(t) @ y, np.eye(n), t0))


def spectral_flows(P: MatFn, Q: MatFn, lams, t0: float) -> np.ndarray:
    """Solve ``Y' = (lam P + Q) Y``, ``Y(t0) = I`` for several ``lam`` at once.

    Returns an array of shape ``(len(lams), points, n, n)``.
    """
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    n = P.rows
    if P.shape != (n, n) or Q.shape != (n, n):
        raise StructuralError("spectral flow coefficients must be square and equal-sized")
    grid = P.grid
    if not np.any(P.samples) and not np.any(Q.samples):
        eye = np.broadcast_to(np.eye(n, dtype=complex), (lams.size, grid.points, n, n))
        return np.array(eye)
    p, q = _evaluator(P), _evaluator(Q)
    lam_col = lams[:, None, None]

    def rhs(t, y):
        return (lam_col * p(t) + q(t)) @ y

    y0 = np.broadcast_to(np.eye(n, dtype=complex), (lams.size, n, n))
    out = integrate_linear(grid, rhs, y0, t0)
    return np.moveaxis(out, 0, 1)


def inverse_spectral_flows(P: MatFn, Q: MatFn, lams, t0: float) -> np.ndarray:
    """Solve ``Y' = -Y (lam P + Q)``, ``Y(t0) = I``: the inverses of :func:`spectral_flows`."""
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    n = P.rows
    grid = P.grid
    if not np.any(P.samples) and not np.any(Q.samples):
        eye = np.broadcast_to(np.eye(n, dtype=complex), (lams.size, grid.points, n, n))
        return np.array(eye)
    p, q = _evaluator(P), _evaluator(Q)
    lam_col = lams[:, None, None]

    def rhs(t, y):
        return -(y @ (lam_col * p(t) + q(t)))

    y0 = np.broadcast_to(np.eye(n, dtype=complex), (lams.size, n, n))
    return np.moveaxis(integrate_linear(grid, rhs, y0, t0), 0, 1)


def signature_coefficients(sigma1: MatFn, sigma2: MatFn, gamma: MatFn):
    """``(sigma1^{-1} sigma2, sigma1^{-1} gamma)``."""
    inv = inverse_fn(sigma1, name="sigma1")
    return inv @ sigma2, inv @ gamma


def _adjoint_coefficients(sigma1: MatFn, sigma2: MatFn, gamma: MatFn):
    s1h = sigma1.H
    inv = inverse_fn(s1h, name="sigma1^H")
    return inv @ sigma2.H, inv @ (-gamma.H - s1h.derivative())


def _many(P, Q, lams, t0):
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    flows = spectral_flows(P, Q, lams, t0)
    t0 = P.grid.check(t0)
    return [FundMatrix(complex(lam), t0, MatFn(P.grid, f)) for lam, f in zip(lams, flows)]


def fundamental_input_many(sig, lams, t0: float) -> list:
    """Input fundamental matrices ``Phi(lam, ., t0)`` for each ``lam``."""
    return _many(*signature_coefficients(sig.sigma1, sig.sigma2, sig.gamma), lams, t0)


def fundamental_output_many(sig, lams, t0: float) -> list:
    """Output fundamental matrices ``Phi*(lam, ., t0)`` for each ``lam``."""
    return _many(*signature_coefficients(sig.sigma1s, sig.sigma2s, sig.gammas), lams, t0)


def fundamental_input(sig, lam: complex, t0: float) -> FundMatrix:
    """Solve ``dPhi/dt2 = sigma1^{-1}(lam sigma2 + gamma) Phi``, ``Phi(t0) = I``."""
    return fundamental_input_many(sig, [lam], t0)[0]


def fundamental_output(sig, lam: complex, t0: float) -> FundMatrix:
    """Solve ``dPhi*/dt2 = sigma1*^{-1}(lam sigma2* + gamma*) Phi*``, ``Phi*(t0) = I``."""
    return fundamental_output_many(sig, [lam], t0)[0]


def fundamental_adjoint_input(sig, mu: complex, t0: float) -> FundMatrix:
    """Fundamental matrix ``Psi(mu, ., t0)`` of the adjoint input equation.

    Solves ``sigma1*^H u' = (mu sigma2*^H - gamma*^H - (sigma1*^H)') u``.
    """
    return _many(*_adjoint_coefficients(sig.sigma1s, sig.sigma2s, sig.gammas), [mu], t0)[0]


def fundamental_adjoint_output(sig, mu: complex, t0: float) -> FundMatrix:
    """Fundamental matrix ``Psi*(mu, ., t0)`` of the adjoint output equation.

    Solves ``sigma1^H u' = (mu sigma2^H - gamma^H - (sigma1^H)') u``.
    """
    return _many(*_adjoint_coefficients(sig.sigma1, sig.sigma2, sig.gamma), [mu], t0)[0]


def solve_companion_chain(sig, z: complex, length: int, side: str, t0: float, seeds) -> list:
    """Companion chain of solutions at the spectral value ``z``.

    Parameters
    ----------
    sig : Signature
    z : complex
        Pole location.
    length : int
        Number of chain members.
    side : {"output", "input"}
        ``"output"`` solves ``sigma1* c_i' = (z sigma2* + gamma*) c_i - sigma2* c_{i-1}``.
        ``"input"`` solves the adjoint output equation at ``mu = -conj(z)``,
        ``sigma1^H b_i' = (mu sigma2^H - gamma^H - (sigma1^H)') b_i - sigma2^H b_{i-1}``.
    t0 : float
        Time at which the seeds are prescribed.
    seeds : sequence of vectors
        Initial value of each member at ``t0``.

    Returns
    -------
    list of MatFn
        Column-vector valued functions, one per member.
    """
    length = int(length)
    if length < 1:
        raise StructuralError("a companion chain needs length >= 1")
    seeds = [as_cmat(s).reshape(-1) for s in seeds]
    if len(seeds) != length:
        raise StructuralError(f"expected {length} seeds, got {len(seeds)}")
    if side == "output":
        P, Q = signature_coefficients(sig.sigma1s, sig.sigma2s, sig.gammas)
        K, L = z * P + Q, -P
    elif side == "input":
        P, Q = _adjoint_coefficients(sig.sigma1, sig.sigma2, sig.gamma)
        K, L = -np.conj(z) * P + Q, -P
    else:
        raise StructuralError(f"side must be 'input' or 'output', not {side!r}")
    d = K.rows
    for s in seeds:
        if s.size != d:
            raise StructuralError(f"chain seeds must have length {d}")
    k, l = _evaluator(K), _evaluator(L)

    def rhs(t, y):
        kt, lt = k(t), l(t)
        dy = y @ kt.T
        dy[1:] += y[:-1] @ lt.T
        return dy

    out = integrate_linear(K.grid, rhs, np.stack(seeds), t0)
    return [MatFn(K.grid, out[:, i, :]) for i in range(length)]
