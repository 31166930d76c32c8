import numpy as np
import pytest

from vessellab import fixtures
from vessellab.errors import GridError
from vessellab.numgrid import MatFn, TimeGrid
from vessellab.simulate2d import (
    default_grids,
    pde_residuals,
    separated_trajectory,
    two_path_consistency,
)
from vessellab.vesselcore import transfer
from vessellab.vesselops import gauge_transform


def test_default_grids_use_vessel_nodes(v0):
    g1, g2 = default_grids(v0)
    assert g1.points == g2.points == 33
    assert g1.spacing == pytest.approx(v0.grid.spacing)
    assert np.allclose(g2.nodes, v0.grid.nodes[:33])


def test_v0_closed_form(v0):
    traj = separated_trajectory(v0, 1.0, [1.0])
    e = np.exp(traj.t1_grid.nodes)[:, None]
    assert np.max(np.abs(traj.u[..., 0] - e)) < 1e-10
    assert np.max(np.abs(traj.x[..., 0] - e)) < 1e-10
    assert np.max(np.abs(traj.y[..., 0] - 2 * e)) < 1e-10
    assert pde_residuals(v0, traj).passed


def test_va_residuals(va1):
    report = pde_residuals(va1, separated_trajectory(va1, 2.0, [1.0]))
    assert report.max_residual < 1e-6


@pytest.mark.parametrize("lam", [2.0, 3 + 1j, -2.0, 4j])
def test_fixture_and_random_residuals(fixture_set, random_vessels, lam):
    for v in list(fixture_set.values()) + list(random_vessels):
        u0 = np.ones(v.sig.e)
        assert pde_residuals(v, separated_trajectory(v, lam, u0)).passed


def test_zero_input_gives_zero_bundle(va1):
    traj = separated_trajectory(va1, 2.0, [0.0])
    for a in (traj.u, traj.x, traj.y):
        assert np.max(np.abs(a)) == 0
    assert pde_residuals(va1, traj).max_residual == 0


def test_output_defect_detected(va1):
    traj = separated_trajectory(va1, 2.0, [1.0])
    bad = traj.replace(y=np.zeros_like(traj.y))
    report = pde_residuals(va1, bad)
    expected = np.max(np.abs(traj.y[2:-2, 2:-2]))
    assert report.output_eq == pytest.approx(expected, rel=1e-8)
    assert not report.passed


def test_output_is_transfer_times_input(random_vessels):
    v = random_vessels[0]
    lam = 2.5 - 0.5j
    traj = separated_trajectory(v, lam, [1.0, -1j])
    for j in (0, 10, 32):
        t2 = traj.t2_grid.nodes[j]
        S = transfer(v, lam, t2)
        assert np.max(np.abs(traj.y[5, j] - S @ traj.u[5, j])) < 1e-10


def test_grid_too_small(v0):
    g = TimeGrid(0.0, 0.01, 4)
    traj = separated_trajectory(v0, 1.0, [1.0], grids=(g, TimeGrid(0.0, 0.01, 4)))
    with pytest.raises(GridError):
        pde_residuals(v0, traj)


def test_fourth_order_convergence(va1):
    errors = []
    for points in (9, 17, 33, 65):
        g1 = TimeGrid(0.0, 0.5, points)
        g2 = TimeGrid(0.0, 0.5, points)
        traj = separated_trajectory(va1, 2.0, [1.0], grids=(g1, g2))
        errors.append(pde_residuals(va1, traj).state_t1)
    rates = np.log2(np.array(errors[:-1]) / np.array(errors[1:]))
    assert np.all(rates > 3.5)


def test_rows_order(v0):
    traj = separated_trajectory(v0, 1.0, [1.0])
    rows = list(traj.rows())
    assert len(rows) == 33 * 33
    t1, t2 = rows[1][:2]
    assert t1 == traj.t1_grid.nodes[0] and t2 == traj.t2_grid.nodes[1]


def test_two_path_consistent_vessels(fixture_set, random_vessels):
    for v in list(fixture_set.values()) + list(random_vessels):
        x0 = np.ones(v.n)
        assert two_path_consistency(v, x0, (0.7, 0.9)) < 1e-8


def test_two_path_time_varying_lax(vc2):
    T = MatFn.from_callable(vc2.grid, lambda t: np.array([[1 + t, t * t], [0.5 * t, 2 - t]]))
    w = gauge_transform(vc2, T)
    assert np.max(np.abs(w.A1(0.0) - w.A1(1.0))) > 1
    for corner in ((0.7, 0.9), (1.0, 1.0), (0.3, 0.5)):
        assert two_path_consistency(w, np.ones(2), corner) < 1e-8


def test_two_path_detects_lax_violation(v0):
    N = np.array([[0.0, 1.0], [0.0, 0.0]])
    grid = v0.grid
    base = fixtures.vc2()
    A1 = MatFn.from_callable(grid, lambda t: t * N)
    broken = base.__class__(A1, base.A2, base.Bt, base.C, base.D, base.Dt, base.sig)
    x0 = np.array([0.0, 1.0])
    gaps = [two_path_consistency(broken, x0, (1.0, t2)) for t2 in (0.25, 0.5, 1.0)]
    assert gaps == pytest.approx([0.25, 0.5, 1.0], abs=1e-9)
