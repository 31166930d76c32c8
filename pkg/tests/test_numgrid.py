import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vessellab.errors import DomainError, InvertibilityError, StructuralError
from vessellab.numgrid import MatFn, TimeGrid, block, derivative, eval, expm, inverse_fn, max_norm


def test_grid_invariants():
    g = TimeGrid(0.0, 2.0, 9)
    assert g.spacing == 0.25
    assert np.all(np.diff(g.nodes) > 0)
    with pytest.raises(StructuralError):
        TimeGrid(1.0, 0.0, 10)
    with pytest.raises(StructuralError):
        TimeGrid(0.0, 1.0, 3)


def test_constant_eval(grid):
    f = MatFn.constant(grid, 3.0)
    for t in (0.0, 0.123, 0.9):
        assert eval(f, t) == pytest.approx(3.0)


def test_exponential_eval_64_nodes():
    g = TimeGrid(0.0, 1.0, 64)
    f = MatFn.from_callable(g, np.exp)
    assert abs(eval(f, 0.5)[0, 0] - np.exp(0.5)) < 1e-8


def test_node_exact(rng, grid):
    samples = rng.standard_normal((grid.points, 2, 3)) + 1j * rng.standard_normal((grid.points, 2, 3))
    f = MatFn(grid, samples)
    for k in (0, 17, grid.points - 1):
        assert np.array_equal(f(grid.nodes[k]), samples[k])


def test_eval_outside_interval(grid):
    with pytest.raises(DomainError):
        MatFn.constant(grid, 1.0)(1.5)


def test_derivative_of_constant_is_zero(grid):
    assert np.all(derivative(MatFn.constant(grid, np.eye(2))).samples == 0)


def test_derivative_of_exponential():
    g = TimeGrid(0.0, 1.0, 64)
    f = MatFn.from_callable(g, np.exp)
    assert np.max(np.abs(derivative(f).samples[:, 0, 0] - np.exp(g.nodes))) < 1e-5


def test_derivative_of_linear(grid):
    f = MatFn.from_callable(grid, lambda t: t * np.eye(2))
    assert np.max(np.abs(derivative(f).samples - np.eye(2))) < 1e-10


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=4, max_size=4), st.floats(0, 1))
def test_derivative_exact_on_cubics(c, t):
    g = TimeGrid(0.0, 1.0, 33)
    p = np.polynomial.Polynomial(c)
    f = MatFn.from_callable(g, p)
    assert abs(derivative(f)(t)[0, 0] - p.deriv()(t)) < 1e-10 * max(1.0, np.abs(c).max())


def test_inverse_examples(grid):
    assert np.allclose(inverse_fn(MatFn.constant(grid, 2.0)).samples, 0.5)
    f = MatFn.from_callable(grid, np.exp)
    inv = inverse_fn(f)
    ts = np.linspace(0, 1, 37)
    assert np.max(np.abs(inv.at(ts)[:, 0, 0] - np.exp(-ts))) < 1e-8


def test_inverse_singular_names_node(grid):
    samples = np.ones((grid.points, 2, 2), dtype=complex) * np.eye(2)
    samples[5] = 0
    with pytest.raises(InvertibilityError) as info:
        inverse_fn(MatFn(grid, samples))
    assert info.value.node == 5


def test_inverse_times_f_is_identity(rng, grid):
    samples = np.eye(3) + 0.3 * rng.standard_normal((grid.points, 3, 3))
    f = MatFn(grid, samples)
    prod = (inverse_fn(f) @ f).samples
    assert np.max(np.abs(prod - np.eye(3))) < 1e-10


def test_arithmetic_and_block(grid):
    a = MatFn.from_callable(grid, lambda t: np.array([[t, 1.0]]))
    b = MatFn.constant(grid, np.array([[2.0], [3.0]]))
    prod = a @ b
    assert prod(0.5)[0, 0] == pytest.approx(4.0)
    assert (a - a).max_abs() == 0
    assert (2 * a).H.shape == (2, 1)
    m = block([[a], [a]])
    assert m.shape == (2, 2)
    assert max_norm(a) == pytest.approx(1.0)


def test_expm_matches_series():
    n = np.array([[0.0, 1.0], [0.0, 0.0]])
    assert np.allclose(expm(n), np.eye(2) + n)
    assert np.allclose(expm(np.diag([1.0, 2.0])), np.diag(np.exp([1.0, 2.0])))
