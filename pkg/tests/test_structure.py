import numpy as np
import pytest

from vessellab import fixtures
from vessellab.errors import NoSimilarityError, PreconditionError
from vessellab.numgrid import MatFn
from vessellab.structure import (
    build_similarity,
    controllable_subspace,
    equivalent,
    global_controllable_subspace,
    global_unobservable_subspace,
    hankel_rank,
    is_minimal,
    kalman_decompose,
    moments,
    principal_angles,
    similarity_residuals,
    unobservable_subspace,
)
from vessellab.vesselcore import DiffVessel, Signature, transfer, verify_vessel
from vessellab.vesselops import gauge_transform


def diag_vessel(Bt=(1.0, 0.0), C=(0.0, 1.0)):
    """``A1 = diag(1, 2)`` with the V0 signature."""
    grid = fixtures.default_grid()
    sig = Signature.constant(grid, 1.0, 0.0, 0.0)
    c = lambda x: MatFn.constant(grid, x)  # noqa: E731
    return DiffVessel(c(np.diag([1.0, 2.0])), c(np.zeros((2, 2))), c(np.reshape(Bt, (2, 1))),
                      c(np.reshape(C, (1, 2))), c(1.0), c(1.0), sig)


def _same_span(U, V):
    return U.shape == V.shape and (U.shape[1] == 0 or np.max(principal_angles(U, V)) < 1e-8)


def test_diag_vessel_is_valid():
    assert verify_vessel(diag_vessel()).max_over_grid < 1e-14


def test_controllable_examples(v0):
    assert controllable_subspace(v0, 0.5).shape == (1, 1)
    Q = controllable_subspace(diag_vessel(), 0.5)
    assert _same_span(Q, np.array([[1.0], [0.0]]))
    assert controllable_subspace(diag_vessel(Bt=(0.0, 0.0)), 0.5).shape[1] == 0


def test_global_controllable_examples(v0):
    assert global_controllable_subspace(v0, 0.5).shape[1] == 1
    assert global_controllable_subspace(diag_vessel(Bt=(0.0, 0.0)), 0.5).shape[1] == 0
    with pytest.raises(PreconditionError):
        global_controllable_subspace(v0, 0.5, s_samples=1)


def test_unobservable_examples(v0):
    assert unobservable_subspace(v0, 0.5).shape[1] == 0
    N = unobservable_subspace(diag_vessel(), 0.5)
    assert _same_span(N, np.array([[1.0], [0.0]]))
    assert unobservable_subspace(diag_vessel(C=(0.0, 0.0)), 0.5).shape[1] == 2


@pytest.mark.parametrize("name", ["V0", "VA(1)", "VG(1)", "VC2"])
def test_local_equals_global_fixtures(fixture_set, name):
    v = fixture_set[name]
    for t2 in (0.0, 0.5, 1.0):
        assert _same_span(controllable_subspace(v, t2), global_controllable_subspace(v, t2))
        assert _same_span(unobservable_subspace(v, t2), global_unobservable_subspace(v, t2))


def test_local_equals_global_random(random_vessels):
    for v in random_vessels:
        for t2 in np.linspace(0, 1, 5):
            C1, C2 = controllable_subspace(v, t2), global_controllable_subspace(v, t2)
            assert C1.shape == C2.shape
            if C1.shape[1]:
                assert np.max(principal_angles(C1, C2)) < 1e-6


def test_global_dimension_independent_of_t2(vc2):
    dims = {global_controllable_subspace(vc2, t).shape[1] for t in np.linspace(0, 1, 5)}
    assert len(dims) == 1


def test_kalman_diag_example():
    v = diag_vessel()
    kd = kalman_decompose(v, 0.5)
    assert kd.dims == (1, 0, 1, 0)
    assert _same_span(kd.bases["c_obar"], np.array([[1.0], [0.0]]))
    assert _same_span(kd.bases["cbar_o"], np.array([[0.0], [1.0]]))
    assert kd.minimal.n == 0
    assert transfer(kd.minimal, 3.0, 0.5)[0, 0] == 1.0


def test_kalman_v0_and_vc2(v0, vc2):
    kd = kalman_decompose(v0, 0.3)
    assert kd.dims == (0, 1, 0, 0)
    assert abs(transfer(kd.minimal, 2.0, 0.3) - 1.5)[0, 0] < 1e-12
    assert kalman_decompose(vc2, 0.3).dims[1] == 2


def test_kalman_structure_random(random_vessels):
    v = random_vessels[0]
    kd = kalman_decompose(v, 0.4)
    U = kd.basis
    assert np.allclose(U.conj().T @ U, np.eye(v.n), atol=1e-10)
    lams = 3 * (np.linalg.norm(v.A1(0), 2) + 1) * np.exp(2j * np.pi * np.arange(20) / 20)
    for lam in lams:
        for t2 in (0.0, 0.4, 1.0):
            assert np.max(np.abs(transfer(kd.minimal, lam, t2) - transfer(v, lam, t2))) < 1e-8


def test_kalman_triangular_nonminimal(random_vessels, v0):
    from vessellab.vesselops import cascade, invert

    v = random_vessels[1]
    # v followed by its inverse has S = I and an uncontrollable or unobservable part
    c = cascade(v, invert(v))
    kd = kalman_decompose(c, 0.5)
    sizes = [kd.bases[k].shape[1] for k in kd.order]
    edges = np.cumsum([0] + sizes)
    A = kd.A1
    for i in range(4):
        for j in range(i):
            blk = A[edges[i]:edges[i + 1], edges[j]:edges[j + 1]]
            assert blk.size == 0 or np.max(np.abs(blk)) < 1e-8
    assert kd.dims[1] == 0
    assert np.max(np.abs(transfer(kd.minimal, 5.0, 0.5) - np.eye(2))) < 1e-8
    assert not is_minimal(c, 0.5)
    assert hankel_rank(c, 0.5) == 0


def test_moments_examples(v0, va1, vc2):
    assert [m[0, 0] for m in moments(v0, 0.5, 4)] == [1, 0, 0, 0]
    assert np.allclose([m[0, 0] for m in moments(va1, 0.5, 4)], 1.0)
    assert np.allclose([m[0, 0] for m in moments(vc2, 0.5, 4)], [2, 1, 0, 0])
    with pytest.raises(PreconditionError):
        moments(v0, 0.5, 0)


def test_hankel_rank_of_minimal_part(random_vessels, vc2):
    assert hankel_rank(vc2, 0.5) == 2
    for v in random_vessels:
        kd = kalman_decompose(v, 0.5)
        assert hankel_rank(kd.minimal, 0.5) == kd.minimal.n


def test_equivalent_examples(v0):
    g = gauge_transform(v0, MatFn.from_callable(v0.grid, np.exp))
    assert equivalent(v0, g)
    assert not equivalent(v0, fixtures.shifted_v0(1.0))
    assert equivalent(v0, v0)


def test_equivalent_signature_mismatch(v0, va1):
    with pytest.raises(PreconditionError):
        equivalent(v0, va1)


def test_build_similarity_gauge(random_vessels):
    v = random_vessels[2]
    T0 = MatFn.from_callable(v.grid, lambda t: np.array([[1.0 + t, 0.3], [-0.2j, 2.0 - t]]))
    g = gauge_transform(v, T0)
    T = build_similarity(v, g)
    res = similarity_residuals(v, g, T)
    assert max(res.values()) < 1e-6
    assert res["A1"] < 1e-7


def test_build_similarity_identity(random_vessels):
    v = random_vessels[3]
    T = build_similarity(v, v)
    assert np.max(np.abs(T.samples - np.eye(v.n))) < 1e-9


def test_build_similarity_rejects(v0):
    with pytest.raises(NoSimilarityError):
        build_similarity(v0, fixtures.shifted_v0(1.0))
    with pytest.raises(PreconditionError):
        build_similarity(diag_vessel(), diag_vessel())
