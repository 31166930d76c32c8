"""Reference vessels with closed-form transfer functions.

========  ===============================================  =====================
name      data                                             S(lam, t2)
========  ===============================================  =====================
V0        s1=1, s2=0, g=0, A1=A2=0, Bt=C=D=Dt=1            1 + 1/lam
VA(a)     s1=s2=1, g=0, A1=a, Bt=e^{-a t}, C=e^{a t}        1 + 1/(lam - a)
VG(g)     as VA(0) with g*=g, C=D=Dt=e^{g t}               e^{g t}(1 + 1/lam)
VC2       cascade(V0, V0)                                  (1 + 1/lam)^2
========  ===============================================  =====================

Both signature sides coincide unless stated otherwise.
"""
from __future__ import annotations

import numpy as np

from .numgrid import DEFAULT_POINTS, MatFn, TimeGrid, block
from .vesselcore import DiffVessel, Signature

__all__ = [
    "default_grid",
    "v0",
    "va",
    "vg",
    "vc2",
    "shifted_v0",
    "scalar_vessel",
    "random_side",
    "random_signature",
    "random_vessel",
]


def default_grid(points: int = DEFAULT_POINTS) -> TimeGrid:
    return TimeGrid(0.0, 1.0, points)


def scalar_vessel(grid, A1, A2, Bt, C, D, Dt, sig) -> DiffVessel:
    """Vessel from scalars or callables of t2."""

    def fn(x):
        if isinstance(x, MatFn):
            return x
        if callable(x):
            return MatFn.from_callable(grid, x)
        return MatFn.constant(grid, x)

    return DiffVessel(fn(A1), fn(A2), fn(Bt), fn(C), fn(D), fn(Dt), sig)


def v0(grid: TimeGrid | None = None) -> DiffVessel:
    grid = grid or default_grid()
    sig = Signature.constant(grid, 1.0, 0.0, 0.0)
    return scalar_vessel(grid, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, sig)


def shifted_v0(z: complex = 1.0, grid: TimeGrid | None = None) -> DiffVessel:
    """V0 with its pole moved to ``z``: ``S = 1 + 1/(lam - z)``."""
    grid = grid or default_grid()
    sig = Signature.constant(grid, 1.0, 0.0, 0.0)
    return scalar_vessel(grid, z, 0.0, 1.0, 1.0, 1.0, 1.0, sig)


def va(a: float = 1.0, grid: TimeGrid | None = None) -> DiffVessel:
    grid = grid or default_grid()
    sig = Signature.constant(grid, 1.0, 1.0, 0.0)
    return scalar_vessel(grid, a, 0.0, lambda t: np.exp(-a * t), lambda t: np.exp(a * t),
                         1.0, 1.0, sig)


def vg(g: float = 1.0, grid: TimeGrid | None = None) -> DiffVessel:
    grid = grid or default_grid()
    sig = Signature.constant(grid, 1.0, 1.0, 0.0, 1.0, 1.0, g)
    egt = lambda t: np.exp(g * t)  # noqa: E731
    return scalar_vessel(grid, 0.0, 0.0, 1.0, egt, egt, egt, sig)


def vc2(grid: TimeGrid | None = None) -> DiffVessel:
    from .vesselops import cascade

    base = v0(grid)
    return cascade(base, base)


# -- random population ---------------------------------------------------------


def _unit(rng: np.random.Generator, d: int) -> np.ndarray:
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return v / np.linalg.norm(v)


def _smooth_matrix(rng: np.random.Generator, grid: TimeGrid, d: int, bound: float) -> MatFn:
    """Random smooth ``d x d`` function with spectral norm at most ``bound``."""
    coeffs = rng.standard_normal((3, d, d)) + 1j * rng.standard_normal((3, d, d))
    omega = rng.uniform(0.5, 3.0)
    phase = rng.uniform(0, 2 * np.pi)
    t = grid.nodes[:, None, None]
    samples = coeffs[0] + coeffs[1] * t + coeffs[2] * np.sin(omega * t + phase)
    peak = max(np.linalg.norm(s, 2) for s in samples)
    return MatFn(grid, samples * (bound * rng.uniform(0.3, 1.0) / peak))


def random_side(rng: np.random.Generator, grid: TimeGrid, e: int = 2) -> tuple:
    """``(I, s(t2) I, g(t2))`` with a smooth scalar ``|s| <= 1`` and ``||g|| <= 1``."""
    a, b = rng.uniform(-0.5, 0.5, size=2)
    omega, phase = rng.uniform(0.5, 3.0), rng.uniform(0, 2 * np.pi)
    s = a + b * np.sin(omega * grid.nodes + phase)
    sigma2 = MatFn(grid, s[:, None, None] * np.eye(e))
    return (MatFn.identity(grid, e), sigma2, _smooth_matrix(rng, grid, e, 1.0))


def random_signature(rng: np.random.Generator, grid: TimeGrid | None = None, e: int = 2,
                     input_side: tuple | None = None) -> Signature:
    """Random signature with identity ``sigma1``, scalar ``sigma2`` shared by both
    sides, and independent smooth ``gamma``, ``gamma*``.

    Sharing the scalar ``sigma2`` makes the first two linkage conditions hold
    for every feedthrough ``D``.
    """
    grid = grid or default_grid()
    if input_side is None:
        input_side = random_side(rng, grid, e)
    out = (MatFn.identity(grid, e), input_side[1], _smooth_matrix(rng, grid, e, 1.0))
    return Signature.from_sides(input_side, out)


def random_vessel(rng: np.random.Generator, grid: TimeGrid | None = None, poles: int = 2,
                  e: int = 2, sig: Signature | None = None, pole_radius: float = 1.0) -> DiffVessel:
    """Realized vessel with random simple poles in ``|z| <= pole_radius``.

    Each pole gets a one-member chain with random unit seeds; ``D`` solves
    the third linkage condition from a random start near the identity.
    """
    from .realize import make_chain, realize_chains, solve_feedthrough

    grid = grid or default_grid()
    sig = sig or random_signature(rng, grid, e)
    chains = []
    for _ in range(poles):
        z = pole_radius * np.sqrt(rng.uniform()) * np.exp(2j * np.pi * rng.uniform())
        chains.append(make_chain(sig, z, 1, [_unit(rng, sig.es)], [_unit(rng, sig.e)]))
    C = block([[ch.C() for ch in chains]])
    Bt = block([[ch.Bt()] for ch in chains])
    D0 = np.eye(sig.es, sig.e) + 0.2 * (rng.standard_normal((sig.es, sig.e))
                                        + 1j * rng.standard_normal((sig.es, sig.e)))
    D = solve_feedthrough(C, Bt, sig, D0)
    return realize_chains(chains, D, sig)
