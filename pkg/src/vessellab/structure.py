"""Controllability and observability subspaces, Kalman decomposition,
moments, and the similarity between vessels with equal transfer functions.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import NoSimilarityError, PreconditionError
from .numgrid import MatFn, inverse_fn
from .odeflow import evolution_flow
from .vesselcore import DiffVessel

__all__ = [
    "numerical_rank",
    "krylov",
    "controllable_subspace",
    "global_controllable_subspace",
    "unobservable_subspace",
    "global_unobservable_subspace",
    "principal_angles",
    "is_minimal",
    "KalmanDecomp",
    "kalman_decompose",
    "moments",
    "hankel_rank",
    "equivalent",
    "similarity_residuals",
    "build_similarity",
]


def _threshold(s: np.ndarray, n: int, scale: float | None = None) -> float:
    top = s[0] if s.size else 0.0
    if scale is not None:
        top = max(top, scale)
    return n * np.finfo(float).eps * top * 1e3


def numerical_rank(M: np.ndarray, scale: float | None = None) -> int:
    """Rank with the threshold ``n * eps * sigma_max * 1e3``.

    For a product of matrices pass the product of the factor norms as
    ``scale``; otherwise a product that is pure rounding noise would be
    judged relative to its own noise level.
    """
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    return int(np.sum(s > _threshold(s, max(M.shape), scale)))


def _range(M: np.ndarray, n: int) -> np.ndarray:
    if M.size == 0:
        return np.zeros((n, 0), dtype=complex)
    u, s, _ = np.linalg.svd(M, full_matrices=False)
    return u[:, s > _threshold(s, max(M.shape))]


def _kernel(M: np.ndarray, n: int, scale: float | None = None) -> np.ndarray:
    if M.size == 0:
        return np.eye(n, dtype=complex)
    _, s, vh = np.linalg.svd(M, full_matrices=True)
    r = int(np.sum(s > _threshold(s, max(M.shape), scale)))
    return np.conj(vh[r:].T)


def _norm2(M: np.ndarray) -> float:
    return float(np.linalg.norm(M, 2)) if M.size else 0.0


def krylov(A: np.ndarray, B: np.ndarray, depth: int | None = None) -> np.ndarray:
    """``[B, AB, ..., A^{depth-1} B]`` with depth defaulting to ``n``."""
    n = A.shape[0]
    depth = n if depth is None else depth
    blocks, cur = [], B
    for _ in range(depth):
        blocks.append(cur)
        cur = A @ cur
    return np.hstack(blocks) if blocks else np.zeros((n, 0), dtype=complex)


def _observability(A: np.ndarray, C: np.ndarray, depth: int | None = None) -> np.ndarray:
    n = A.shape[0]
    depth = n if depth is None else depth
    blocks, cur = [], C
    for _ in range(depth):
        blocks.append(cur)
        cur = cur @ A
    return np.vstack(blocks) if blocks else np.zeros((0, n), dtype=complex)


def controllable_subspace(v: DiffVessel, t2: float) -> np.ndarray:
    """Orthonormal basis of ``span{A1^j Bt : j < n}`` at ``t2``."""
    return _range(krylov(v.A1(t2), v.Bt(t2)), v.n)


def unobservable_subspace(v: DiffVessel, t2: float) -> np.ndarray:
    """Orthonormal basis of ``intersection of Ker C A1^j`` at ``t2``."""
    return _kernel(_observability(v.A1(t2), v.C(t2)), v.n)


def _transition(v: DiffVessel):
    """Callable ``(t, s) -> F(t, s)`` built from one sampled flow."""
    flow = evolution_flow(v.A2, v.grid.t_start)

    def F(t, s):
        return flow(t) @ np.linalg.inv(flow(s)) if v.n else np.zeros((0, 0))

    return F


def global_controllable_subspace(v: DiffVessel, t2: float, s_samples: int = 5) -> np.ndarray:
    """Orthonormal basis of ``span{F(t2, s) A1(s)^j Bt(s)}`` over sampled ``s``."""
    if s_samples < 2:
        raise PreconditionError("global subspaces need at least two s samples")
    F = _transition(v)
    gens = [F(t2, s) @ krylov(v.A1(s), v.Bt(s)) for s in v.grid.sample(s_samples)]
    return _range(np.hstack(gens), v.n)


def global_unobservable_subspace(v: DiffVessel, t2: float, s_samples: int = 5) -> np.ndarray:
    """Orthonormal basis of vectors ``x`` with ``C(s) A1(s)^j F(s, t2) x = 0`` for sampled ``s``."""
    if s_samples < 2:
        raise PreconditionError("global subspaces need at least two s samples")
    F = _transition(v)
    rows = [_observability(v.A1(s), v.C(s)) @ F(s, t2) for s in v.grid.sample(s_samples)]
    return _kernel(np.vstack(rows), v.n)


def principal_angles(U: np.ndarray, V: np.ndarray) -> np.ndarray:
    """Principal angles between two column spans (empty if either is trivial)."""
    if U.shape[1] == 0 or V.shape[1] == 0:
        return np.zeros(0)
    return scipy.linalg.subspace_angles(U, V)


def is_minimal(v: DiffVessel, t2: float) -> bool:
    """Controllable subspace is everything and the unobservable one is trivial."""
    return (controllable_subspace(v, t2).shape[1] == v.n
            and unobservable_subspace(v, t2).shape[1] == 0)


def moments(v: DiffVessel, t2: float, kmax: int) -> list:
    """Taylor coefficients ``C A1^k Bt`` at ``t2`` for ``k < kmax``."""
    if kmax < 1:
        raise PreconditionError("kmax must be at least 1")
    A, B, C = v.A1(t2), v.Bt(t2), v.C(t2)
    out, cur = [], B
    for _ in range(kmax):
        out.append(C @ cur)
        cur = A @ cur
    return out


def hankel_rank(v: DiffVessel, t2: float) -> int:
    """Rank of the block Hankel matrix of the first ``2n`` moments."""
    n = v.n
    if n == 0:
        return 0
    m = moments(v, t2, 2 * n)
    H = np.block([[m[i + j] for j in range(n)] for i in range(n)])
    A, B, C = v.A1(t2), v.Bt(t2), v.C(t2)
    return numerical_rank(H, _norm2(_observability(A, C)) * _norm2(krylov(A, B)))


@dataclass
class KalmanDecomp:
    """Four-block splitting of the state space at one ``t2``.

    ``bases`` maps the labels ``"c_obar"``, ``"co"``, ``"cbar_o"`` and
    ``"cbar_obar"`` to orthonormal column bases.  ``A1``, ``Bt`` and ``C``
    are expressed in the concatenated basis ordered
    ``(c_obar, co, cbar_obar, cbar_o)``, in which ``A1`` is block upper
    triangular, ``Bt`` vanishes on the last two blocks and ``C`` on the first
    and third.
    """

    t2: float
    bases: dict
    A1: np.ndarray
    Bt: np.ndarray
    C: np.ndarray
    minimal: DiffVessel
    order: tuple = ("c_obar", "co", "cbar_obar", "cbar_o")
    dims_order: tuple = field(default=("c_obar", "co", "cbar_o", "cbar_obar"), repr=False)

    @property
    def dims(self) -> tuple:
        """Block dimensions as ``(c_obar, co, cbar_o, cbar_obar)``."""
        return tuple(self.bases[k].shape[1] for k in self.dims_order)

    @property
    def basis(self) -> np.ndarray:
        return np.hstack([self.bases[k] for k in self.order])


def _orth_complement_within(Q: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Columns of ``Q`` spanning the orthogonal complement of ``Q Y`` in ``range Q``."""
    r = Q.shape[1]
    if Y.shape[1] == 0:
        return Q
    return Q @ scipy.linalg.null_space(np.conj(Y.T)) if Y.shape[1] < r else Q[:, :0]


def kalman_decompose(v: DiffVessel, t2: float) -> KalmanDecomp:
    """Kalman decomposition at ``t2`` and the minimal sub-vessel on ``H^co``."""
    n = v.n
    A, B, C = v.A1(t2), v.Bt(t2), v.C(t2)
    obs = _observability(A, C)
    Qc = controllable_subspace(v, t2)
    # c_obar: controllable vectors killed by the observability matrix
    obs_scale = _norm2(obs)
    Y = _kernel(obs @ Qc, Qc.shape[1], obs_scale) if Qc.shape[1] else np.zeros((0, 0))
    c_obar = scipy.linalg.orth(Qc @ Y) if Y.shape[1] else np.zeros((n, 0), dtype=complex)
    co = _orth_complement_within(Qc, Y) if Qc.shape[1] else np.zeros((n, 0), dtype=complex)
    Qp = scipy.linalg.null_space(np.conj(Qc.T)) if Qc.shape[1] else np.eye(n, dtype=complex)
    if Qp.shape[1]:
        Z = _kernel(_observability(np.conj(Qp.T) @ A @ Qp, C @ Qp), Qp.shape[1], obs_scale)
        cbar_obar = Qp @ Z
        cbar_o = _orth_complement_within(Qp, Z)
    else:
        cbar_obar = cbar_o = np.zeros((n, 0), dtype=complex)
    bases = {"c_obar": c_obar, "co": co, "cbar_obar": cbar_obar, "cbar_o": cbar_o}
    U = np.hstack([bases[k] for k in ("c_obar", "co", "cbar_obar", "cbar_o")])
    Uh = np.conj(U.T)
    minimal = _minimal_part(v, t2, co)
    return KalmanDecomp(float(t2), bases, Uh @ A @ U, Uh @ B, C @ U, minimal)


def _minimal_part(v: DiffVessel, t2: float, Q: np.ndarray) -> DiffVessel:
    """Sub-vessel on the constant (after gauging ``A2`` to zero) subspace ``Q``."""
    grid = v.grid
    k = Q.shape[1]
    Qh = np.conj(Q.T)
    flow = evolution_flow(v.A2, t2)            # F(t, t2)
    back = inverse_fn(flow, cond_limit=np.inf)  # F(t2, t)
    A1m = MatFn.constant(grid, Qh @ v.A1(t2) @ Q) if k else MatFn.zeros(grid, 0, 0)
    Bm = Qh @ (back @ v.Bt) if k else MatFn.zeros(grid, 0, v.sig.e)
    Cm = (v.C @ flow) @ Q if k else MatFn.zeros(grid, v.sig.es, 0)
    return DiffVessel(A1m, MatFn.zeros(grid, k, k), Bm, Cm, v.D, v.Dt, v.sig, tol=v.tol)


def _same(f: MatFn, g: MatFn, tol: float) -> bool:
    if f.shape != g.shape:
        return False
    return f.samples.size == 0 or float(np.max(np.abs(f.samples - g.samples))) <= tol


def equivalent(v1: DiffVessel, v2: DiffVessel, t2_samples: int = 5, tol: float = 1e-8) -> bool:
    """Whether two vessels with equal external data share their transfer function.

    Moments ``C A1^k Bt`` are compared for ``k < n1 + n2`` at ``t2_samples``
    grid nodes, which decides equality of rational transfer functions.

    Raises
    ------
    PreconditionError
        If the signatures or the feedthrough matrices differ.
    """
    if v1.grid != v2.grid:
        raise PreconditionError("vessels live on different grids")
    for name in ("sigma1", "sigma2", "gamma", "sigma1s", "sigma2s", "gammas"):
        if not _same(getattr(v1.sig, name), getattr(v2.sig, name), tol):
            raise PreconditionError(f"signatures differ in {name}")
    for name in ("D", "Dt"):
        if not _same(getattr(v1, name), getattr(v2, name), tol):
            raise PreconditionError(f"feedthrough {name} differs")
    kmax = max(1, v1.n + v2.n)
    for t2 in v1.grid.sample(t2_samples):
        for m1, m2 in zip(moments(v1, t2, kmax), moments(v2, t2, kmax)):
            scale = max(1.0, float(np.max(np.abs(m1), initial=0.0)))
            if m1.size and float(np.max(np.abs(m1 - m2))) > tol * scale:
                return False
    return True


def similarity_residuals(v1: DiffVessel, v2: DiffVessel, T: MatFn) -> dict:
    """Max residuals of ``T`` intertwining ``v1`` into ``v2``."""

    def norm(f):
        return f.max_abs()

    return {
        "A1": norm(v2.A1 @ T - T @ v1.A1),
        "A2": norm(v2.A2 @ T - T @ v1.A2 - T.derivative()),
        "Bt": norm(T @ v1.Bt - v2.Bt),
        "C": norm(v2.C @ T - v1.C),
    }


def build_similarity(v1: DiffVessel, v2: DiffVessel, t2: float | None = None,
                     tol: float = 1e-6) -> MatFn:
    """Invertible ``T(t2)`` with ``v2 = gauge_transform(v1, T)``.

    At each node ``T`` solves ``T K1 = K2`` in the least-squares sense, where
    ``Ki`` are the Krylov generator matrices of the two vessels.

    Raises
    ------
    PreconditionError
        If either vessel is not minimal at ``t2``.
    NoSimilarityError
        If the vessels are not equivalent or a residual exceeds ``tol``.
    """
    t2 = v1.grid.t_start if t2 is None else t2
    for name, v in (("first", v1), ("second", v2)):
        if not is_minimal(v, t2):
            raise PreconditionError(f"the {name} vessel is not minimal at t2={t2}")
    if v1.n != v2.n:
        raise NoSimilarityError("minimal vessels of different state dimension")
    if not equivalent(v1, v2, tol=max(tol * 1e-2, 1e-10)):
        raise NoSimilarityError("the transfer functions differ")
    n = v1.n
    samples = []
    for i in range(v1.grid.points):
        K1 = krylov(v1.A1.samples[i], v1.Bt.samples[i])
        K2 = krylov(v2.A1.samples[i], v2.Bt.samples[i])
        Th, *_ = np.linalg.lstsq(np.conj(K1.T), np.conj(K2.T), rcond=None)
        samples.append(np.conj(Th.T))
    T = MatFn(v1.grid, np.array(samples).reshape(-1, n, n))
    res = similarity_residuals(v1, v2, T)
    worst = max(res.values())
    if worst > tol:
        raise NoSimilarityError(f"intertwining residual {worst:.3g} exceeds {tol:g}: {res}")
    return T
