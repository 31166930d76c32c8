"""Operations on vessels: cascade, inverse, adjoint, gauge transform,
projection onto invariant subspaces, compression onto co-invariant ones, and
the factorization obtained from a complementary pair of such subspaces.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np
import scipy.linalg

from .errors import PreconditionError, StructuralError
from .numgrid import MatFn, TimeGrid, block, inverse_fn
from .odeflow import evolution_flow
from .vesselcore import DiffVessel, Signature, transfer

__all__ = [
    "COMPAT_TOL",
    "SUBSPACE_TOL",
    "SubspaceFamily",
    "InvarianceReport",
    "cascade",
    "invert",
    "adjoint",
    "adjoint_relation_check",
    "gauge_transform",
    "inverse_operators",
    "transport",
    "check_invariant",
    "project",
    "compress",
    "factorize",
]

COMPAT_TOL = 1e-10
SUBSPACE_TOL = 1e-7


def _orthonormalize(samples: np.ndarray) -> np.ndarray:
    """Column-orthonormal factor of a QR with positive real diagonal, node-wise.

    The positive-diagonal normalization makes the result depend smoothly on t2.
    """
    if samples.shape[2] == 0:
        return samples
    q, r = np.linalg.qr(samples)
    d = np.diagonal(r, axis1=1, axis2=2)
    phase = np.where(np.abs(d) > 0, d / np.where(np.abs(d) > 0, np.abs(d), 1), 1)
    return q * phase[:, None, :]


@dataclass(frozen=True)
class SubspaceFamily:
    """Family of k-dimensional subspaces of C^n given by orthonormal bases.

    Parameters
    ----------
    basis : MatFn
        ``n x k`` with orthonormal columns at every node.
    kind : {"invariant", "co-invariant"}
    """

    basis: MatFn
    kind: str = "invariant"

    def __post_init__(self):
        if self.kind not in ("invariant", "co-invariant"):
            raise StructuralError(f"unknown subspace kind {self.kind!r}")
        q = self.basis.samples
        gram = np.conj(np.swapaxes(q, 1, 2)) @ q
        err = np.max(np.abs(gram - np.eye(q.shape[2]))) if q.size else 0.0
        if err > 1e-10:
            raise StructuralError(f"subspace basis columns are not orthonormal (error {err:.2e})")

    @classmethod
    def constant(cls, grid: TimeGrid, vectors, kind: str = "invariant") -> "SubspaceFamily":
        """Constant family spanned by the columns of ``vectors``."""
        vecs = np.asarray(vectors, dtype=complex)
        if vecs.ndim == 1:
            vecs = vecs[:, None]
        if vecs.shape[1]:
            vecs = scipy.linalg.orth(vecs)
        return cls(MatFn.constant(grid, vecs), kind)

    @classmethod
    def spanned(cls, grid: TimeGrid, samples, kind: str = "invariant") -> "SubspaceFamily":
        """Family spanned node-wise by full-column-rank ``samples`` (N, n, k)."""
        return cls(MatFn(grid, _orthonormalize(np.asarray(samples, dtype=complex))), kind)

    @classmethod
    def zero(cls, grid: TimeGrid, n: int, kind: str = "invariant") -> "SubspaceFamily":
        return cls(MatFn.zeros(grid, n, 0), kind)

    @property
    def grid(self) -> TimeGrid:
        return self.basis.grid

    @property
    def n(self) -> int:
        return self.basis.rows

    @property
    def k(self) -> int:
        return self.basis.cols

    def projector(self) -> MatFn:
        return self.basis @ self.basis.H

    def complement(self, kind: str | None = None) -> "SubspaceFamily":
        """Smooth orthonormal basis of the orthogonal complement."""
        if kind is None:
            kind = "co-invariant" if self.kind == "invariant" else "invariant"
        q = self.basis.samples
        n, k = self.n, self.k
        if k == 0:
            return SubspaceFamily.constant(self.grid, np.eye(n), kind)
        if k == n:
            return SubspaceFamily.zero(self.grid, n, kind)
        w0 = scipy.linalg.null_space(np.conj(q[0].T))
        m = w0[None] - q @ (np.conj(np.swapaxes(q, 1, 2)) @ w0[None])
        # Loewdin orthonormalization keeps the basis smooth and equal to w0 at t_start.
        vals, vecs = np.linalg.eigh(np.conj(np.swapaxes(m, 1, 2)) @ m)
        if np.min(vals) < 1e-8:
            raise PreconditionError("subspace family rotates too far for a smooth complement")
        inv_sqrt = (vecs / np.sqrt(vals)[:, None, :]) @ np.conj(np.swapaxes(vecs, 1, 2))
        return SubspaceFamily(MatFn(self.grid, m @ inv_sqrt), kind)


@dataclass
class InvarianceReport:
    """Residuals of the operator and flow invariance conditions."""

    operator_residual: float
    flow_residual: float
    tol: float

    @property
    def passed(self) -> bool:
        return max(self.operator_residual, self.flow_residual) <= self.tol


# -- cascade, inverse, adjoint, gauge ---------------------------------------


def _compat_error(name, f, g):
    diff = np.max(np.abs(f.samples - g.samples), axis=(1, 2)) if f.samples.size else [0.0]
    node = int(np.argmax(diff))
    if diff[node] > COMPAT_TOL:
        return f"{name} differs at node {node} (t2={f.grid.nodes[node]:.6g}) by {diff[node]:.3g}"
    return None


def cascade(v1: DiffVessel, v2: DiffVessel) -> DiffVessel:
    """Series connection feeding the output of ``v1`` into ``v2``.

    The transfer function of the result is ``S2(lam, t2) S1(lam, t2)``.

    Raises
    ------
    PreconditionError
        If the output signature of ``v1`` differs from the input signature of
        ``v2`` at some node.
    """
    if v1.grid != v2.grid:
        raise PreconditionError("cascade operands live on different grids")
    s1, s2 = v1.sig, v2.sig
    if s1.es != s2.e:
        raise PreconditionError(
            f"output dimension {s1.es} of the first vessel does not match "
            f"input dimension {s2.e} of the second"
        )
    problems = [
        msg for msg in (
            _compat_error("sigma1s'/sigma1''", s1.sigma1s, s2.sigma1),
            _compat_error("sigma2s'/sigma2''", s1.sigma2s, s2.sigma2),
            _compat_error("gammas'/gamma''", s1.gammas, s2.gamma),
        ) if msg
    ]
    if problems:
        raise PreconditionError("cascade compatibility violated: " + "; ".join(problems))
    n1, n2 = v1.n, v2.n
    grid = v1.grid
    z12 = MatFn.zeros(grid, n1, n2)
    A1 = block([[v1.A1, z12], [v2.Bt @ s2.sigma1 @ v1.C, v2.A1]])
    A2 = block([[v1.A2, z12], [v2.Bt @ s2.sigma2 @ v1.C, v2.A2]])
    Bt = block([[v1.Bt], [v2.Bt @ v1.Dt]])
    C = block([[v2.D @ v1.C, v2.C]])
    sig = Signature.from_sides(s1.input_side, s2.output_side)
    return DiffVessel(A1, A2, Bt, C, v2.D @ v1.D, v2.Dt @ v1.Dt, sig,
                      tol=max(v1.tol, v2.tol))


def inverse_operators(v: DiffVessel) -> tuple:
    """``(A1x, A2x)`` with ``Aix = Ai - Bt sigma_i D^{-1} C``."""
    Dinv = inverse_fn(v.D, name="D")
    A1x = v.A1 - v.Bt @ v.sig.sigma1 @ Dinv @ v.C
    A2x = v.A2 - v.Bt @ v.sig.sigma2 @ Dinv @ v.C
    return A1x, A2x


def invert(v: DiffVessel) -> DiffVessel:
    """Vessel realizing ``S(lam, t2)^{-1}``; the two signature sides swap."""
    if v.sig.e != v.sig.es:
        raise StructuralError("only square feedthrough can be inverted")
    Dinv = inverse_fn(v.D, name="D")
    Dtinv = inverse_fn(v.Dt, name="Dt")
    A1x, A2x = inverse_operators(v)
    return DiffVessel(A1x, A2x, v.Bt @ Dtinv, -(Dinv @ v.C), Dinv, Dtinv,
                      v.sig.swapped(), tol=v.tol)


def adjoint(v: DiffVessel) -> DiffVessel:
    """Adjoint vessel ``(-A1^H, -A2^H, -C^H, Bt^H, Dt^H, D^H)``.

    Its input signature is ``(s1*^H, s2*^H, -g*^H - (s1*^H)')`` and its
    output signature ``(s1^H, s2^H, -g^H - (s1^H)')``.
    """
    s = v.sig

    def side(s1, s2, g):
        s1h = s1.H
        return (s1h, s2.H, -g.H - s1h.derivative())

    sig = Signature.from_sides(side(*s.output_side), side(*s.input_side))
    return DiffVessel(-v.A1.H, -v.A2.H, -v.C.H, v.Bt.H, v.Dt.H, v.D.H, sig, tol=v.tol)


def adjoint_relation_check(v: DiffVessel, lam: complex, t2: float) -> float:
    """``||S(lam,t2) - s1*^{-1} S_adj(-conj(lam),t2)^H s1||`` (max entry)."""
    lam = complex(lam)
    S = transfer(v, lam, t2)
    Sa = transfer(adjoint(v), -np.conj(lam), t2)
    s = v.sig
    rebuilt = np.linalg.solve(s.sigma1s(t2), np.conj(Sa.T) @ s.sigma1(t2))
    return float(np.max(np.abs(S - rebuilt)))


def gauge_transform(v: DiffVessel, T: MatFn) -> DiffVessel:
    """Change of state coordinates ``x -> T(t2) x``; the transfer is unchanged."""
    if T.shape != (v.n, v.n):
        raise StructuralError(f"gauge map must be {v.n}x{v.n}, got {T.shape}")
    Tinv = inverse_fn(T, name="T")
    return v.replace(
        A1=T @ v.A1 @ Tinv,
        A2=T @ v.A2 @ Tinv + T.derivative() @ Tinv,
        Bt=T @ v.Bt,
        C=v.C @ Tinv,
    )


# -- invariant subspaces ------------------------------------------------------


def _flow_for(v: DiffVessel, kind: str):
    if kind == "invariant":
        return v.A1, evolution_flow(v.A2, v.grid.t_start)
    A1x, A2x = inverse_operators(v)
    return A1x, evolution_flow(A2x, v.grid.t_start)


def transport(v: DiffVessel, vectors, kind: str = "invariant", t0: float | None = None) -> SubspaceFamily:
    """Carry ``span(vectors)`` at ``t0`` along ``F`` (invariant) or ``F x`` (co-invariant)."""
    vecs = np.asarray(vectors, dtype=complex)
    if vecs.ndim == 1:
        vecs = vecs[:, None]
    if vecs.shape[1] == 0:
        return SubspaceFamily.zero(v.grid, v.n, kind)
    t0 = v.grid.t_start if t0 is None else t0
    _, flow = _flow_for(v, kind)
    at_t0 = np.linalg.solve(flow(t0), scipy.linalg.orth(vecs))
    return SubspaceFamily.spanned(v.grid, flow.samples @ at_t0, kind)


def check_invariant(v: DiffVessel, G: SubspaceFamily, tol: float = SUBSPACE_TOL,
                    pairs: int = 4) -> InvarianceReport:
    """Residuals of ``A1 G in G`` and ``F(t, s) G_s = G_t``.

    For ``kind == "co-invariant"`` the operators are ``A1x`` and ``Fx``
    generated by ``A2x``.
    """
    if G.n != v.n or G.grid != v.grid:
        raise StructuralError("subspace family does not fit the vessel")
    if G.k in (0, v.n):
        return InvarianceReport(0.0, 0.0, tol)
    A, flow = _flow_for(v, G.kind)
    P = G.projector().samples
    Icomp = np.eye(v.n) - P
    op = float(np.max(np.abs(Icomp @ A.samples @ P)))
    grid = v.grid
    idx = np.unique(np.round(np.linspace(0, grid.points - 1, pairs)).astype(int))
    F = flow.samples
    fl = 0.0
    for i in idx:
        for j in idx:
            if i == j:
                continue
            Fts = F[i] @ np.linalg.inv(F[j])
            fl = max(fl, float(np.max(np.abs(Icomp[i] @ Fts @ P[j]))))
    return InvarianceReport(op, fl, float(tol))


def _eigen_candidates(A0: np.ndarray, k: int):
    vals, vecs = np.linalg.eig(A0)
    for subset in combinations(range(len(vals)), k):
        yield vecs[:, list(subset)]


def _complement(v: DiffVessel, F: SubspaceFamily, tol: float) -> SubspaceFamily:
    """A complement of ``F`` of the opposite kind, preferring the orthogonal one."""
    kind = "co-invariant" if F.kind == "invariant" else "invariant"
    try:
        orth = F.complement(kind)
        if check_invariant(v, orth, tol).passed:
            return orth
    except PreconditionError:
        pass
    A, _ = _flow_for(v, kind)
    t0 = v.grid.t_start
    Q0 = F.basis(t0)
    for W in _eigen_candidates(A(t0), v.n - F.k):
        if np.linalg.svd(np.hstack([Q0, W]), compute_uv=False)[-1] < 1e-6:
            continue
        cand = transport(v, W, kind, t0)
        if check_invariant(v, cand, tol).passed:
            return cand
    raise PreconditionError(f"no {kind} complement found for the given {F.kind} subspace")


# -- projection, compression, factorization -----------------------------------


def _require(v: DiffVessel, F: SubspaceFamily, kind: str, tol: float):
    if F.kind != kind:
        raise PreconditionError(f"expected a {kind} subspace family, got {F.kind}")
    report = check_invariant(v, F, tol)
    if not report.passed:
        raise PreconditionError(
            f"subspace is not {kind}: operator residual {report.operator_residual:.3g}, "
            f"flow residual {report.flow_residual:.3g}"
        )


def _split(v: DiffVessel, feedthrough_split):
    if feedthrough_split is None:
        return v.D, MatFn.identity(v.grid, v.sig.es)
    first, second = feedthrough_split
    grid = v.grid
    first = first if isinstance(first, MatFn) else MatFn.constant(grid, first)
    second = second if isinstance(second, MatFn) else MatFn.constant(grid, second)
    err = (second @ first - v.D).max_abs()
    if err > 1e-10 * max(1.0, v.D.max_abs()):
        raise PreconditionError(f"feedthrough split does not multiply to D (error {err:.3g})")
    return first, second


def factorize(v: DiffVessel, G: SubspaceFamily, Gx: SubspaceFamily | None = None,
              feedthrough_split=None, tol: float = SUBSPACE_TOL) -> tuple:
    """Split ``v`` into ``(first, second)`` with ``cascade(first, second)`` realizing ``S``.

    ``second`` lives on the invariant subspace ``G``, ``first`` on the
    co-invariant complement ``Gx``.  The default feedthrough split gives the
    first factor ``D`` and the second the identity.
    """
    if G is None:
        _require(v, Gx, "co-invariant", tol)
        G = _complement(v, Gx, tol)
    elif Gx is None:
        _require(v, G, "invariant", tol)
        Gx = _complement(v, G, tol)
    _require(v, G, "invariant", tol)
    _require(v, Gx, "co-invariant", tol)
    if G.k + Gx.k != v.n:
        raise PreconditionError("the two subspaces do not have complementary dimensions")
    U = block([[Gx.basis, G.basis]]) if v.n else MatFn.zeros(v.grid, 0, 0)
    if v.n and np.min(np.linalg.svd(U.samples, compute_uv=False)) < 1e-8:
        raise PreconditionError("the two subspaces are not complementary")
    D1, D2 = _split(v, feedthrough_split)
    s = v.sig
    if v.n:
        w = gauge_transform(v, inverse_fn(U, name="basis"))
    else:
        w = v
    m = Gx.k
    a11 = MatFn(v.grid, w.A1.samples[:, :m, :m])
    a22 = MatFn(v.grid, w.A1.samples[:, m:, m:])
    a2_11 = MatFn(v.grid, w.A2.samples[:, :m, :m])
    a2_22 = MatFn(v.grid, w.A2.samples[:, m:, m:])
    b1 = MatFn(v.grid, w.Bt.samples[:, :m, :])
    b2 = MatFn(v.grid, w.Bt.samples[:, m:, :])
    c1 = MatFn(v.grid, w.C.samples[:, :, :m])
    c2 = MatFn(v.grid, w.C.samples[:, :, m:])

    # intermediate signature between the two factors
    s1m = s.sigma1s
    s1m_inv = inverse_fn(s1m, name="sigma1s")
    Dt2 = s.sigma1s @ D2 @ s1m_inv
    Dt2_inv = inverse_fn(Dt2, name="Dt''")
    s2m = Dt2_inv @ s.sigma2s @ D2
    Bt2 = b2 @ inverse_fn(v.Dt, name="Dt") @ Dt2
    CB = c2 @ Bt2
    gm = Dt2_inv @ (s.sigma2s @ CB @ s1m - s.sigma1s @ CB @ s2m
                    - s.sigma1s @ D2.derivative() + s.gammas @ D2)
    mid = (s1m, s2m, gm)
    first = DiffVessel(a11, a2_11, b1, inverse_fn(D2, name="D''") @ c1, D1, Dt2_inv @ v.Dt,
                       Signature.from_sides(s.input_side, mid), tol=v.tol)
    second = DiffVessel(a22, a2_22, Bt2, c2, D2, Dt2,
                        Signature.from_sides(mid, s.output_side), tol=v.tol)
    return first, second


def project(v: DiffVessel, G: SubspaceFamily, Gx: SubspaceFamily | None = None,
            feedthrough_split=None) -> DiffVessel:
    """Restriction of ``v`` to the invariant subspace family ``G``.

    The projected vessel is the second factor of the factorization along
    ``G`` and a co-invariant complement ``Gx`` (the orthogonal complement
    when it qualifies, otherwise a spectral one found automatically).
    """
    return factorize(v, G, Gx, feedthrough_split)[1]


def compress(v: DiffVessel, Gx: SubspaceFamily, feedthrough_split=None,
             G: SubspaceFamily | None = None) -> DiffVessel:
    """Compression of ``v`` to the co-invariant subspace family ``Gx``.

    With the default feedthrough split ``(D, I)`` the compression carries
    the full feedthrough, so that ``cascade(compress(v, Gx), project(v, G))``
    realizes the transfer function of ``v``.
    """
    return factorize(v, G, Gx, feedthrough_split)[0]
