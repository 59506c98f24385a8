import math

import numpy as np
import pytest
import torch
from conftest import random_grid

from rocofd.errors import InvalidDisturbanceError, ModelAssumptionError, ZeroInertiaError
from rocofd.network import assemble_blocks
from rocofd.rocof import (
    Disturbance,
    PropagationMatrix,
    coi_rocof,
    distribute_impact,
    generator_rocof,
    load_rocof,
    nodal_rocof_report,
    propagation_matrix,
)


def test_star_fixture(star_grid):
    blocks = assemble_blocks(star_grid)
    impact = distribute_impact(blocks, Disturbance("L1", 150.0))
    np.testing.assert_allclose(impact.delta_pg_n, [50.0, 100.0], rtol=1e-9)
    np.testing.assert_allclose(impact.theta_d_m, [-0.1], rtol=1e-9)
    np.testing.assert_allclose(generator_rocof(impact, star_grid), [-2.5, -1.25], rtol=1e-9)

    t = propagation_matrix(blocks)
    np.testing.assert_allclose(t.t_mn, [[1 / 3, 2 / 3]], rtol=1e-9)
    assert t.nonnegative

    report = nodal_rocof_report(star_grid, Disturbance("L1", 150.0))
    assert report.worst_bus == "G1"
    np.testing.assert_allclose(report.worst_rocof, -2.5)
    np.testing.assert_allclose(report.load_rocof_m, [-5 / 3])
    assert report.bus_ids == ["G1", "G2", "L1"]
    np.testing.assert_allclose(report.coi_rocof, -50.0 * 150.0 / (2 * 2500.0))
    assert report.exceeds_coi == ["G1", "L1"]


def test_chain_fixture(chain_grid):
    report = nodal_rocof_report(chain_grid, Disturbance("L1", 150.0))
    np.testing.assert_allclose(report.impact.delta_pg_n, [128.571429, 21.428571], rtol=1e-6)
    np.testing.assert_allclose(report.gen_rocof_n, [-3.21428571, -0.53571429], rtol=1e-6)
    np.testing.assert_allclose(report.load_rocof_m, [-2.83163265, -0.91836735], rtol=1e-6)
    np.testing.assert_allclose(propagation_matrix(assemble_blocks(chain_grid)).t_mn, [[6 / 7, 1 / 7], [1 / 7, 6 / 7]])
    assert report.worst_bus == "G1"
    assert [r["bus_kind"] for r in report.records()] == ["generator", "generator", "load", "load"]


def test_single_machine(single_grid):
    report = nodal_rocof_report(single_grid, Disturbance("L1", 150.0))
    np.testing.assert_allclose(report.rocof, [-3.75, -3.75])
    # one generator and one load tie; the generator wins
    assert report.worst_bus == "G1"


def test_virtual_inertia_lowers_rocof(star_grid):
    report = nodal_rocof_report(star_grid, Disturbance("L1", 150.0), h_v=[750.0, 500.0])
    np.testing.assert_allclose(report.gen_rocof_n, [-1.0, -1.0])
    assert report.worst_bus == "G1"


def test_chain_mirrored_disturbance(chain_grid):
    report = nodal_rocof_report(chain_grid, Disturbance("L2", 150.0))
    assert report.worst_bus == "G2"
    np.testing.assert_allclose(report.worst_rocof, -3.21428571, rtol=1e-6)


@pytest.mark.parametrize(
    "d, message",
    [
        (Disturbance("G1", 150.0), "not a load bus"),
        (Disturbance("X", 150.0), "not a load bus"),
        (Disturbance("L1", 0.0), "must be positive"),
        (Disturbance("L1", -1.0), "must be positive"),
        (Disturbance("L1", math.nan), "must be positive and finite"),
        (Disturbance("L1", math.inf), "must be positive and finite"),
    ],
)
def test_invalid_disturbance(chain_grid, d, message):
    with pytest.raises(InvalidDisturbanceError, match=message):
        nodal_rocof_report(chain_grid, d)


def test_zero_inertia(star_grid):
    with pytest.raises(ZeroInertiaError, match="G1"):
        nodal_rocof_report(star_grid, Disturbance("L1", 150.0), h_v=[-500.0, 0.0])


def test_load_rocof_shape(chain_grid):
    t = propagation_matrix(assemble_blocks(chain_grid))
    with pytest.raises(ValueError, match="shape"):
        load_rocof(t, torch.zeros(3, dtype=torch.float64))


def test_worst_at_load_raises(star_grid):
    # a propagation matrix that leaves the generator range
    t = PropagationMatrix(t_mn=torch.tensor([[2.0, -1.0]], dtype=torch.float64), nonnegative=False)
    with pytest.raises(ModelAssumptionError, match="load bus 'L1'") as e:
        nodal_rocof_report(star_grid, Disturbance("L1", 150.0), t=t)
    assert e.value.report.worst_bus == "L1"
    assert e.value.report.worst_rocof < -2.5


def test_coi_rocof(star_grid):
    np.testing.assert_allclose(coi_rocof(star_grid, 150.0), -1.5)
    np.testing.assert_allclose(coi_rocof(star_grid, 150.0, h_v=[750.0, 500.0]), -1.0)


def test_random_grids(rng):
    # row sums, sign, conservation and argmax location over an ensemble of grids
    for _ in range(1000):
        grid = random_grid(rng)
        blocks = assemble_blocks(grid)
        t = propagation_matrix(blocks)
        np.testing.assert_allclose(t.t_mn.sum(dim=1), 1.0, atol=1e-9, rtol=0)
        assert float(t.t_mn.min()) >= -1e-12

        d = Disturbance(grid.load_buses[int(rng.integers(0, grid.m))], float(rng.uniform(1.0, 1000.0)))
        report = nodal_rocof_report(grid, d, blocks=blocks, t=t)
        assert report.impact.conservation_residual <= 1e-6
        assert report.worst_bus in grid.gen_ids
        # every load bus lies within the range of the generators
        assert float(report.load_rocof_m.min()) >= float(report.gen_rocof_n.min()) - 1e-9
        assert float(report.load_rocof_m.max()) <= float(report.gen_rocof_n.max()) + 1e-9


@pytest.mark.parametrize("p_dis", [math.nan, math.inf, -1.0])
def test_distribute_impact_rejects_size(star_grid, p_dis):
    with pytest.raises(InvalidDisturbanceError, match="non-negative and finite"):
        distribute_impact(assemble_blocks(star_grid), Disturbance("L1", p_dis))


def test_doubling_inertia_halves_rocof(rng):
    for _ in range(100):
        grid = random_grid(rng)
        d = Disturbance(grid.load_buses[int(rng.integers(0, grid.m))], float(rng.uniform(1.0, 1000.0)))
        report = nodal_rocof_report(grid, d)
        doubled = nodal_rocof_report(grid.with_inertia(grid.inertia()), d)
        torch.testing.assert_close(doubled.rocof, report.rocof / 2, rtol=1e-12, atol=1e-15)
        assert doubled.worst_bus == report.worst_bus
