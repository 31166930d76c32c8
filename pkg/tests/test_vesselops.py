import numpy as np
import pytest

from vessellab import fixtures
from vessellab.errors import InvertibilityError, PreconditionError, StructuralError
from vessellab.numgrid import MatFn, inverse_fn
from vessellab.vesselcore import transfer, verify_vessel
from vessellab.vesselops import (
    SubspaceFamily,
    adjoint,
    adjoint_relation_check,
    cascade,
    check_invariant,
    compress,
    factorize,
    gauge_transform,
    invert,
    project,
    transport,
)


def _lams(v, count=20, seed=0):
    """Sample points with |lam| >= 2(||A1|| + 1)."""
    r = 2 * (np.linalg.norm(v.A1(0.0), 2) + 1) if v.n else 2.0
    rng = np.random.default_rng(seed)
    return r * rng.uniform(1.0, 3.0, count) * np.exp(2j * np.pi * rng.uniform(size=count))


T2S = np.linspace(0.0, 1.0, 5)


@pytest.fixture(scope="module")
def compatible_pair():
    rng = np.random.default_rng(11)
    v1 = fixtures.random_vessel(rng)
    sig2 = fixtures.random_signature(rng, v1.grid, input_side=v1.sig.output_side)
    v2 = fixtures.random_vessel(rng, sig=sig2)
    return v1, v2


def _e(k, n=2):
    return np.eye(n)[:, [k]]


def test_cascade_v0_v0(v0):
    c = cascade(v0, v0)
    assert transfer(c, 1.0, 0.5)[0, 0] == pytest.approx(4.0, abs=1e-12)
    assert verify_vessel(c).max_over_grid < 1e-12


def test_cascade_incompatible(v0, va1):
    with pytest.raises(PreconditionError, match="sigma2"):
        cascade(v0, va1)


def test_cascade_multiplies_in_order(compatible_pair):
    v1, v2 = compatible_pair
    c = cascade(v1, v2)
    assert verify_vessel(c).max_over_grid < 10 * v1.tol
    worst_swap = 0.0
    for lam in _lams(c):
        for t2 in T2S:
            S1, S2 = transfer(v1, lam, t2), transfer(v2, lam, t2)
            Sc = transfer(c, lam, t2)
            assert np.max(np.abs(Sc - S2 @ S1)) < 1e-8
            worst_swap = max(worst_swap, np.max(np.abs(Sc - S1 @ S2)))
    # the matrix factors do not commute, so the reversed product is detected
    assert worst_swap > 1e-4


def test_invert_v0(v0):
    inv = invert(v0)
    assert transfer(inv, 1.0, 0.2)[0, 0] == pytest.approx(0.5, abs=1e-12)
    assert inv.A1(0.0)[0, 0] == pytest.approx(-1.0)
    twice = invert(inv)
    for lam in (2.0, 3j, -4.0):
        assert abs(transfer(twice, lam, 0.5) - transfer(v0, lam, 0.5))[0, 0] < 1e-10


def test_invert_vg(vg1):
    inv = invert(vg1)
    assert verify_vessel(inv).passed
    for lam in _lams(vg1):
        for t2 in T2S:
            assert abs(transfer(inv, lam, t2) @ transfer(vg1, lam, t2) - 1)[0, 0] < 1e-8


def test_invert_random(random_vessels):
    v = random_vessels[0]
    inv = invert(v)
    assert verify_vessel(inv).max_over_grid < 10 * v.tol
    assert inv.sig.input_side == v.sig.output_side
    for lam in _lams(v, 8):
        S = transfer(v, lam, 0.4)
        assert np.max(np.abs(transfer(inv, lam, 0.4) @ S - np.eye(2))) < 1e-8


def test_invert_singular_D(v0):
    D = np.ones(v0.grid.points)
    D[3] = 0.0
    bad = v0.replace(D=MatFn(v0.grid, D), Dt=MatFn(v0.grid, D))
    with pytest.raises(InvertibilityError):
        invert(bad)


def test_adjoint_v0(v0):
    a = adjoint(v0)
    assert transfer(a, 2.0, 0.5)[0, 0] == pytest.approx(0.5, abs=1e-12)
    assert verify_vessel(a).max_over_grid < 1e-12


@pytest.mark.parametrize("name", ["V0", "VA(1)", "VG(1)", "VC2"])
def test_adjoint_relation_fixtures(fixture_set, name):
    v = fixture_set[name]
    assert adjoint_relation_check(v, 1 + 1j, 0.5) < 1e-9


def test_adjoint_relation_random(random_vessels):
    for v in random_vessels:
        a = adjoint(v)
        assert verify_vessel(a).max_over_grid < 10 * v.tol
        for lam in _lams(v, 5):
            assert adjoint_relation_check(v, lam, 0.7) < 1e-8


def test_double_adjoint(random_vessels):
    v = random_vessels[1]
    aa = adjoint(adjoint(v))
    for lam in _lams(v, 5):
        assert np.max(np.abs(transfer(aa, lam, 0.3) - transfer(v, lam, 0.3))) < 1e-9


def test_gauge_identity(v0):
    g = gauge_transform(v0, MatFn.identity(v0.grid, 1))
    for name, f in v0.blocks().items():
        assert np.allclose(g.blocks()[name].samples, f.samples, atol=1e-14)


def test_gauge_exponential_on_v0(v0):
    T = MatFn.from_callable(v0.grid, np.exp)
    g = gauge_transform(v0, T)
    t = v0.grid.nodes
    assert np.max(np.abs(g.A2.samples[:, 0, 0] - 1)) < 1e-7
    assert np.max(np.abs(g.Bt.samples[:, 0, 0] - np.exp(t))) < 1e-12
    assert np.max(np.abs(g.C.samples[:, 0, 0] - np.exp(-t))) < 1e-12
    for lam in (2.0, 1j, -3.0):
        assert abs(transfer(g, lam, 0.6)[0, 0] - (1 + 1 / lam)) < 1e-9


def test_gauge_round_trip(random_vessels):
    """Algebraic blocks return exactly; A2 goes through spline derivatives of T and T^-1."""
    v = random_vessels[2]
    T = MatFn.from_callable(v.grid, lambda t: np.array([[2.0, t], [0.5 * t * t, 1.0 + t]]))
    back = gauge_transform(gauge_transform(v, T), inverse_fn(T))
    for name, f in v.blocks().items():
        assert np.max(np.abs(back.blocks()[name].samples - f.samples)) < 1e-9


def test_gauge_preserves_transfer(random_vessels):
    v = random_vessels[3]
    T = MatFn.from_callable(v.grid, lambda t: np.array([[1.0 + t, 1j], [0.5, 2.0]]))
    g = gauge_transform(v, T)
    assert verify_vessel(g).max_over_grid < 10 * v.tol
    for lam in _lams(v):
        for t2 in T2S:
            assert np.max(np.abs(transfer(g, lam, t2) - transfer(v, lam, t2))) < 1e-8


def test_gauge_singular(v0):
    T = np.ones(v0.grid.points)
    T[9] = 0.0
    with pytest.raises(InvertibilityError):
        gauge_transform(v0, MatFn(v0.grid, T))


def test_subspace_family_orthonormal(grid):
    with pytest.raises(StructuralError):
        SubspaceFamily(MatFn.constant(grid, np.array([[2.0], [0.0]])))
    with pytest.raises(StructuralError):
        SubspaceFamily(MatFn.constant(grid, np.eye(2)), kind="semi")
    fam = SubspaceFamily.constant(grid, np.array([[1.0], [1.0]]))
    assert np.allclose(fam.basis(0.3).conj().T @ fam.basis(0.3), 1)
    comp = fam.complement()
    assert comp.kind == "co-invariant"
    assert np.allclose(fam.basis(0.0).conj().T @ comp.basis(0.0), 0)


def test_invariance_examples(vc2):
    g = vc2.grid
    assert check_invariant(vc2, SubspaceFamily.constant(g, _e(1))).passed
    bad = check_invariant(vc2, SubspaceFamily.constant(g, _e(0)))
    assert not bad.passed
    assert bad.operator_residual == pytest.approx(1.0)
    co = check_invariant(vc2, SubspaceFamily.constant(g, _e(0), "co-invariant"))
    assert co.passed


def test_project_vc2(vc2):
    p = project(vc2, SubspaceFamily.constant(vc2.grid, _e(1)))
    assert p.n == 1
    assert verify_vessel(p).max_over_grid < 1e-6
    for lam in (2.0, 1 + 1j):
        assert abs(transfer(p, lam, 0.5)[0, 0] - (1 + 1 / lam)) < 1e-9


def test_project_full_space(random_vessels):
    """The projection onto the whole space reproduces S once it carries D."""
    v = random_vessels[0]
    full = SubspaceFamily.constant(v.grid, np.eye(2))
    eye = MatFn.identity(v.grid, 2)
    p = project(v, full, feedthrough_split=(eye, v.D))
    default = project(v, full)
    for lam in _lams(v, 5):
        S = transfer(v, lam, 0.5)
        assert np.max(np.abs(transfer(p, lam, 0.5) - S)) < 1e-9
        # the default split leaves D with the compression
        assert np.max(np.abs(transfer(default, lam, 0.5) - S @ np.linalg.inv(v.D(0.5)))) < 1e-9


def test_project_requires_invariance(vc2):
    with pytest.raises(PreconditionError, match="not invariant"):
        project(vc2, SubspaceFamily.constant(vc2.grid, _e(0)))


def test_compress_vc2(vc2):
    c = compress(vc2, SubspaceFamily.constant(vc2.grid, _e(0), "co-invariant"))
    assert c.n == 1
    for lam in (2.0, 1 + 1j):
        assert abs(transfer(c, lam, 0.5)[0, 0] - (1 + 1 / lam)) < 1e-9


def test_compress_requires_coinvariance(vc2):
    with pytest.raises(PreconditionError):
        compress(vc2, SubspaceFamily.constant(vc2.grid, _e(1), "co-invariant"))


def test_compress_zero_subspace(random_vessels):
    v = random_vessels[0]
    c = compress(v, SubspaceFamily.zero(v.grid, v.n, "co-invariant"))
    assert c.n == 0
    assert np.allclose(transfer(c, 3.0, 0.5), v.D(0.5))


def test_factorization_vc2(vc2):
    g = vc2.grid
    first = compress(vc2, SubspaceFamily.constant(g, _e(0), "co-invariant"))
    second = project(vc2, SubspaceFamily.constant(g, _e(1)))
    c = cascade(first, second)
    for lam in _lams(vc2):
        assert abs(transfer(c, lam, 0.5) - transfer(vc2, lam, 0.5))[0, 0] < 1e-8


def test_factorization_random(random_vessels):
    v = random_vessels[1]
    ev, vecs = np.linalg.eig(v.A1(0.0))
    G = transport(v, vecs[:, [0]], "invariant")
    first, second = factorize(v, G)
    for f in (first, second):
        assert verify_vessel(f).max_over_grid < 10 * v.tol
    c = cascade(first, second)
    for lam in _lams(v):
        for t2 in (0.0, 0.5, 1.0):
            assert np.max(np.abs(transfer(c, lam, t2) - transfer(v, lam, t2))) < 1e-7


def test_feedthrough_split(vc2):
    g = vc2.grid
    G = SubspaceFamily.constant(g, _e(1))
    first, second = factorize(vc2, G, feedthrough_split=(2.0, 0.5))
    c = cascade(first, second)
    assert abs(transfer(c, 3.0, 0.5) - transfer(vc2, 3.0, 0.5))[0, 0] < 1e-9
    with pytest.raises(PreconditionError):
        factorize(vc2, G, feedthrough_split=(2.0, 2.0))
