"""Realization of transfer functions from pole data.

The realized vessels always have a constant main operator ``A1`` built from
Jordan blocks and a trivial evolution ``A2 = 0``.  The t2-dependence lives in
``C`` and ``Bt``, which solve the output equation and the input equation with
the matrix spectral parameter ``A1``::

    s1* C' = s2* C A1 + g* C
    (Bt s1)' = -A1 Bt s2 - Bt g

For a single Jordan block at ``z`` the columns of ``C`` are ``(-1)^k c_k``
and the rows of ``Bt`` are ``b_{n-1}^H, ..., b_0^H`` where ``c_k`` and ``b_k``
are companion chains (see :func:`vessellab.odeflow.solve_companion_chain`).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import odeflow
from .errors import ContourError, InvalidChainError, LinkageError, OrderOverflowError, StructuralError
from .numgrid import MatFn, as_cmat, block, inverse_fn
from .vesselcore import DiffVessel, Signature, axiom_residuals

__all__ = [
    "CHAIN_TOL",
    "LINKAGE_TOL",
    "PoleChain",
    "PoleTriple",
    "LaurentData",
    "jordan",
    "make_chain",
    "chain_residual",
    "realize_single_pole",
    "realize_chains",
    "realize_mittag_leffler",
    "solve_feedthrough",
    "linkage_residuals",
    "propagate_CB",
    "extract_pole_data",
    "pole_defect",
]

CHAIN_TOL = 1e-7
LINKAGE_TOL = 1e-6
CONTOUR_NODES = 256
LAURENT_NODES = 256
ORDER_CUTOFF = 1e-8


def jordan(z: complex, n: int) -> np.ndarray:
    """Jordan block with ``z`` on the diagonal and ones on the superdiagonal."""
    return complex(z) * np.eye(n, dtype=complex) + np.eye(n, k=1, dtype=complex)


@dataclass(frozen=True)
class PoleChain:
    """Pole ``z`` of order ``len(out_chain)`` with its companion chains.

    ``out_chain`` holds ``e*``-vector functions solving the output chain,
    ``in_chain`` holds ``e``-vector functions solving the adjoint chain at
    ``-conj(z)``.
    """

    z: complex
    out_chain: tuple
    in_chain: tuple

    def __post_init__(self):
        if len(self.out_chain) != len(self.in_chain) or not self.out_chain:
            raise InvalidChainError("chains must be non-empty and of equal length")

    @property
    def order(self) -> int:
        return len(self.out_chain)

    def C(self) -> MatFn:
        cols = [(-1) ** k * c for k, c in enumerate(self.out_chain)]
        return block([cols])

    def Bt(self) -> MatFn:
        return block([[b.H] for b in reversed(self.in_chain)])

    def to_triple(self) -> "PoleTriple":
        return PoleTriple(self.C(), jordan(self.z, self.order), self.Bt())


@dataclass(frozen=True)
class PoleTriple:
    """Pole triple ``(X, T, Y)``: ``S - X (lam - T)^{-1} Y s1`` is analytic at the poles."""

    X: MatFn
    T: np.ndarray
    Y: MatFn

    def __post_init__(self):
        T = as_cmat(self.T)
        object.__setattr__(self, "T", T)
        m = T.shape[0]
        if T.shape != (m, m) or self.X.cols != m or self.Y.rows != m:
            raise StructuralError("pole triple blocks have inconsistent sizes")

    def residuals(self, sig: Signature) -> tuple:
        """Max residuals of the output equation for ``X`` and the input one for ``Y``."""
        X, Y, T = self.X, self.Y, self.T
        out = sig.sigma1s @ X.derivative() - sig.sigma2s @ X @ T - sig.gammas @ X
        Ys1 = Y @ sig.sigma1
        inp = Ys1.derivative() + T @ Y @ sig.sigma2 + Y @ sig.gamma
        return out.max_abs(), inp.max_abs()


def make_chain(sig: Signature, z: complex, order: int, out_seeds, in_seeds,
               t0: float | None = None) -> PoleChain:
    """Solve both companion chains at ``z`` from seeds prescribed at ``t0``."""
    t0 = sig.grid.t_start if t0 is None else t0
    outs = odeflow.solve_companion_chain(sig, z, order, "output", t0, out_seeds)
    ins = odeflow.solve_companion_chain(sig, z, order, "input", t0, in_seeds)
    return PoleChain(complex(z), tuple(outs), tuple(ins))


def chain_residual(chain: PoleChain, sig: Signature) -> float:
    """Largest residual of the chain relations, by spline derivatives."""
    z = chain.z
    worst = 0.0
    prev = None
    for c in chain.out_chain:
        r = sig.sigma1s @ c.derivative() - (z * sig.sigma2s + sig.gammas) @ c
        if prev is not None:
            r = r + sig.sigma2s @ prev
        worst = max(worst, r.max_abs())
        prev = c
    mu = -np.conj(z)
    s1h = sig.sigma1.H
    prev = None
    for b in chain.in_chain:
        r = s1h @ b.derivative() - (mu * sig.sigma2.H - sig.gamma.H - s1h.derivative()) @ b
        if prev is not None:
            r = r + sig.sigma2.H @ prev
        worst = max(worst, r.max_abs())
        prev = b
    return worst


def linkage_residuals(C: MatFn, Bt: MatFn, D: MatFn, sig: Signature) -> dict:
    """Residuals of the three linkage conditions with ``Dt = s1* D s1^{-1}``."""
    Dt = sig.sigma1s @ D @ inverse_fn(sig.sigma1, name="sigma1")
    n = Bt.rows
    grid = sig.grid
    probe = DiffVessel(MatFn.zeros(grid, n, n), MatFn.zeros(grid, n, n), Bt, C, D, Dt, sig)
    res = axiom_residuals(probe)
    return {k: res[k].max_abs() for k in ("linkage1", "linkage2", "linkage3")}


def _assemble(A: np.ndarray, C: MatFn, Bt: MatFn, D, sig: Signature, tol: float) -> DiffVessel:
    grid = sig.grid
    D = D if isinstance(D, MatFn) else MatFn.constant(grid, D)
    res = linkage_residuals(C, Bt, D, sig)
    bad = {k: r for k, r in res.items() if r > tol}
    if bad:
        worst = max(bad, key=bad.get)
        raise LinkageError(
            f"linkage conditions violated ({worst} residual {bad[worst]:.3g})", residuals=res
        )
    n = A.shape[0]
    Dt = sig.sigma1s @ D @ inverse_fn(sig.sigma1, name="sigma1")
    return DiffVessel(MatFn.constant(grid, A), MatFn.zeros(grid, n, n), Bt, C, D, Dt, sig)


def realize_chains(chains, D, sig: Signature, tol: float = LINKAGE_TOL) -> DiffVessel:
    """Direct sum of Jordan-block realizations, one per chain."""
    chains = list(chains)
    for ch in chains:
        r = chain_residual(ch, sig)
        if r > CHAIN_TOL:
            raise InvalidChainError(f"chain at z={ch.z} has residual {r:.3g}")
    A = scipy.linalg.block_diag(*[jordan(ch.z, ch.order) for ch in chains])
    C = block([[ch.C() for ch in chains]])
    Bt = block([[ch.Bt()] for ch in chains])
    return _assemble(A, C, Bt, D, sig, tol)


def realize_single_pole(chain: PoleChain, D, sig: Signature, tol: float = LINKAGE_TOL) -> DiffVessel:
    """Vessel with ``A1 = Jordan(z)``, ``A2 = 0`` realizing one pole chain.

    Raises
    ------
    InvalidChainError
        If the chain relations fail by more than ``CHAIN_TOL``.
    LinkageError
        If ``D`` violates a linkage condition by more than ``tol``.
    """
    return realize_chains([chain], D, sig, tol)


def realize_mittag_leffler(triples, D, sig: Signature, tol: float = LINKAGE_TOL) -> DiffVessel:
    """Vessel ``D + X (lam - T)^{-1} Y s1`` from a sequence of pole triples."""
    triples = list(triples)
    for tr in triples:
        r_out, r_in = tr.residuals(sig)
        if max(r_out, r_in) > CHAIN_TOL:
            raise InvalidChainError(
                f"pole triple fails its equations (output {r_out:.3g}, input {r_in:.3g})"
            )
    A = scipy.linalg.block_diag(*[tr.T for tr in triples])
    C = block([[tr.X for tr in triples]])
    Bt = block([[tr.Y] for tr in triples])
    return _assemble(A, C, Bt, D, sig, tol)


def solve_feedthrough(C: MatFn, Bt: MatFn, sig: Signature, D0, t0: float | None = None) -> MatFn:
    """Feedthrough ``D`` satisfying the third linkage condition with ``Dt = s1* D s1^{-1}``.

    Solves ``s1* D' = s2* C Bt s1 - s1* C Bt s2 + g* D - s1* D s1^{-1} g``
    from ``D(t0) = D0``.
    """
    grid = sig.grid
    t0 = grid.t_start if t0 is None else t0
    s1s_inv = inverse_fn(sig.sigma1s, name="sigma1s")
    s1_inv = inverse_fn(sig.sigma1, name="sigma1")
    CB = C @ Bt
    forcing = s1s_inv @ sig.sigma2s @ CB @ sig.sigma1 - CB @ sig.sigma2
    left = s1s_inv @ sig.gammas
    right = s1_inv @ sig.gamma
    f, lft, rgt = (odeflow._evaluator(x) for x in (forcing, left, right))

    def rhs(t, d):
        return f(t) + lft(t) @ d - d @ rgt(t)

    return MatFn(grid, odeflow.integrate_linear(grid, rhs, as_cmat(D0), t0))


def _contour(A: np.ndarray, radius: float | None, nodes: int):
    n = A.shape[0]
    r = 1.5 * np.linalg.norm(A, "fro") + 1.0 if radius is None else float(radius)
    ev = np.linalg.eigvals(A) if n else np.zeros(0)
    if ev.size and np.max(np.abs(ev)) > r * (1 - 1e-3):
        raise ContourError(
            f"contour radius {r:.3g} does not clear the spectrum (max |eig| {np.max(np.abs(ev)):.3g})"
        )
    lams = r * np.exp(2j * np.pi * np.arange(nodes) / nodes)
    res = np.linalg.inv(lams[:, None, None] * np.eye(n) - A)
    return lams, res


def _trapezoid(values: np.ndarray, lams: np.ndarray) -> tuple:
    """(1/2 pi i) contour integral by the trapezoid rule plus a node-halving error estimate."""
    w = lams.reshape((-1,) + (1,) * (values.ndim - 1))
    full = np.mean(values * w, axis=0)
    half = np.mean(values[::2] * w[::2], axis=0)
    return full, float(np.max(np.abs(full - half), initial=0.0))


def propagate_CB(C0, B0, A1, sig: Signature, method: str = "ode", t0: float | None = None,
                 radius: float | None = None, nodes: int = CONTOUR_NODES) -> tuple:
    """Extend a base realization ``(C0, A1, B0)`` at ``t0`` to all of the grid.

    Parameters
    ----------
    C0, B0 : array_like
        ``C(t0)`` (``e* x n``) and ``Bt(t0)`` (``n x e``).
    A1 : array_like
        Constant main operator.
    method : {"ode", "contour"}
        ``"ode"`` integrates the two equations with the matrix spectral
        parameter directly; ``"contour"`` evaluates the normalized resolvent
        integrals ``(1/2 pi i) \\oint Phi*(lam) C0 (lam - A1)^{-1} dlam`` and
        ``(1/2 pi i) \\oint (lam - A1)^{-1} B0 s1(t0) Phi(lam)^{-1} dlam``.

    Returns
    -------
    (MatFn, MatFn)
        ``C`` and ``Bt``.
    """
    grid = sig.grid
    t0 = grid.t_start if t0 is None else grid.check(t0)
    C0, B0, A = as_cmat(C0), as_cmat(B0), as_cmat(A1)
    G0 = B0 @ sig.sigma1(t0)
    s1_inv = inverse_fn(sig.sigma1, name="sigma1")
    Ps, Qs = odeflow.signature_coefficients(sig.sigma1s, sig.sigma2s, sig.gammas)
    P, Q = odeflow.signature_coefficients(sig.sigma1, sig.sigma2, sig.gamma)
    if method == "ode":
        ps, qs, p, q = (odeflow._evaluator(x) for x in (Ps, Qs, P, Q))
        C = odeflow.integrate_linear(grid, lambda t, c: ps(t) @ c @ A + qs(t) @ c, C0, t0)
        G = odeflow.integrate_linear(grid, lambda t, g: -(A @ g @ p(t)) - g @ q(t), G0, t0)
    elif method == "contour":
        lams, R = _contour(A, radius, nodes)
        phis = odeflow.spectral_flows(Ps, Qs, lams, t0)          # (L, N, e*, e*)
        phinv = odeflow.inverse_spectral_flows(P, Q, lams, t0)    # (L, N, e, e)
        C, errC = _trapezoid(phis @ (C0 @ R)[:, None], lams)
        G, errG = _trapezoid((R @ G0)[:, None] @ phinv, lams)
        scale = max(1.0, np.max(np.abs(C), initial=0.0), np.max(np.abs(G), initial=0.0))
        if max(errC, errG) > 1e-6 * scale:
            raise ContourError(f"contour quadrature did not converge (estimate {max(errC, errG):.3g})")
    else:
        raise StructuralError(f"unknown propagation method {method!r}")
    Cf = MatFn(grid, C)
    Bt = MatFn(grid, G) @ s1_inv
    return Cf, Bt


@dataclass
class LaurentData:
    """Principal part ``sum_j S_{-j} (lam - z)^{-j}`` of a sampled function at ``z``."""

    z: complex
    t2: float
    coefficients: list  # coefficients[j - 1] = S_{-j}

    @property
    def order(self) -> int:
        order = 0
        for j, c in enumerate(self.coefficients, start=1):
            if np.max(np.abs(c), initial=0.0) > ORDER_CUTOFF:
                order = j
        return order

    def coefficient(self, j: int) -> np.ndarray:
        """``S_{-j}`` for ``j >= 1``."""
        return self.coefficients[j - 1]


def extract_pole_data(sampler, z: complex, max_order: int, t2: float, radius: float = 0.1,
                      nodes: int = LAURENT_NODES) -> LaurentData:
    """Negative Laurent coefficients of ``sampler(., t2)`` at ``z``.

    ``S_{-j} = (1/N) sum_k S(z + r w_k) (r w_k)^j`` with ``w_k`` the ``N``-th
    roots of unity.  The disc of radius ``radius`` around ``z`` must contain
    no other singularity.

    Raises
    ------
    OrderOverflowError
        If ``S_{-(max_order + 1)}`` does not vanish.
    """
    z = complex(z)
    offsets = radius * np.exp(2j * np.pi * (np.arange(nodes) + 0.5) / nodes)
    vals = np.stack([np.atleast_2d(np.asarray(sampler(z + d, t2), dtype=complex)) for d in offsets])
    coeffs = []
    for j in range(1, max_order + 2):
        coeffs.append(np.mean(vals * (offsets ** j)[:, None, None], axis=0))
    overflow = np.max(np.abs(coeffs[-1]))
    if overflow > ORDER_CUTOFF:
        raise OrderOverflowError(
            f"Laurent coefficient of order {max_order + 1} at z={z} is {overflow:.3g}"
        )
    return LaurentData(z, float(t2), coeffs[:-1])


def pole_defect(sampler, triple: PoleTriple, sig: Signature, z: complex, t2: float,
                max_order: int | None = None, radius: float = 0.1) -> float:
    """Largest negative Laurent coefficient of ``S - X (lam - T)^{-1} Y s1`` at ``z``."""
    X, Y, s1 = triple.X(t2), triple.Y(t2), sig.sigma1(t2)
    m = triple.T.shape[0]

    def local(lam, t):
        return sampler(lam, t) - X @ np.linalg.solve(lam * np.eye(m) - triple.T, Y @ s1)

    data = extract_pole_data(local, z, max_order or m, t2, radius)
    return max(float(np.max(np.abs(c))) for c in data.coefficients)
