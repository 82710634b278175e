#!/usr/bin/env python
# -*- coding: utf-8 -*-

'''
test_solver
-----------

Tests for the `solver` module: stencils, boundaries, stability checks
and whole runs against analytic solutions.
'''
import math

import numpy as np
import pytest

from mesaplume import solver
from mesaplume.exceptions import DomainError
from mesaplume.exceptions import NumericalError
from mesaplume.exceptions import StabilityError
from mesaplume.grid import ConcentrationField
from mesaplume.grid import GridSpec
from mesaplume.grid import baseline_grid
from mesaplume.grid import total_mass
from mesaplume.kinetics import published_release_model
from mesaplume.metrics import CeiAccumulator
from mesaplume.metrics import cei_from_fields
from mesaplume.metrics import log_thresholds
from mesaplume.scenarios import build_deployment
from mesaplume.solver import MassBudget
from mesaplume.wind import WindModelParams
from mesaplume.wind import WindSample

from tests import common


# CFL -------------------------------------------------------------------------


def test_cfl_baseline_setup():
    config = solver.SolverConfig(1e-5, 2.0, 43200)
    report = solver.precheck(baseline_grid(), config, WindModelParams())
    assert report.passed
    assert report.advective_limit == pytest.approx(4.386, rel=0.02)
    assert report.diffusive_limit == pytest.approx(4166.7, rel=0.02)
    assert report.binding_axis == 'x'
    assert 'pass' in report.describe()


def test_cfl_diffusive_violation():
    config = solver.SolverConfig(1e-5, 5000.0, 10)
    with pytest.raises(StabilityError) as excinfo:
        solver.precheck(baseline_grid(), config, WindModelParams())
    assert 'diffusive limit' in str(excinfo.value)
    assert excinfo.value.step is None


def test_cfl_advective_violation():
    config = solver.SolverConfig(1e-5, 5.0, 10)
    with pytest.raises(StabilityError) as excinfo:
        solver.precheck(baseline_grid(), config, WindModelParams())
    assert 'advective limit' in str(excinfo.value)
    assert 'diffusive' not in str(excinfo.value)


def test_cfl_without_wind_or_diffusion():
    config = solver.SolverConfig(0.0, 1e6, 1)
    report = solver.check_cfl(baseline_grid(), config, (0.0, 0.0, 0.0))
    assert report.passed
    assert math.isinf(report.advective_limit)
    assert math.isinf(report.diffusive_limit)
    assert report.binding_axis is None


def test_cfl_rejects_negative_bounds():
    with pytest.raises(ValueError):
        solver.check_cfl(baseline_grid(), solver.SolverConfig(0.0, 1.0, 1),
                         (-1.0, 0.0, 0.0))


@pytest.mark.parametrize('args', [
    (1e-5, 0.0, 10),
    (-1.0, 1.0, 10),
    (1e-5, 1.0, 0),
])
def test_invalid_solver_config(args):
    with pytest.raises(ValueError):
        solver.SolverConfig(*args)


# Stencils --------------------------------------------------------------------


@pytest.fixture
def grid():
    return GridSpec(0, 6, 0, 6, 0, 3, 1.0, 1.0, 0.5)


def test_diffusion_of_linear_field_is_zero(grid):
    x = grid.axis('x').reshape(-1, 1, 1)
    z = grid.axis('z').reshape(1, 1, -1)
    field = ConcentrationField(grid, np.broadcast_to(3.0 * x + 2.0 * z, grid.shape))
    assert solver.diffusion_term(field, (3, 3, 3), 2.0) == pytest.approx(0.0, abs=1e-12)


def test_diffusion_of_quadratic_field(grid):
    z = grid.axis('z').reshape(1, 1, -1)
    field = ConcentrationField(grid, np.broadcast_to(z * z, grid.shape))
    assert solver.diffusion_term(field, (2, 2, 2), 0.5) == pytest.approx(1.0)


def test_advection_picks_upwind_neighbor(grid):
    x = grid.axis('x').reshape(-1, 1, 1)
    values = np.broadcast_to(x * x, grid.shape)
    field = ConcentrationField(grid, values)
    # C = x^2 at x = 3: backward difference 5, forward difference 7
    assert solver.advection_term(field, (3, 2, 2), WindSample(2.0, 0, 0)) == -10.0
    assert solver.advection_term(field, (3, 2, 2), WindSample(-2.0, 0, 0)) == 14.0


def test_stencils_need_interior_cells(grid):
    field = ConcentrationField(grid)
    with pytest.raises(ValueError):
        solver.diffusion_term(field, (0, 2, 2), 1.0)
    with pytest.raises(ValueError):
        solver.advection_term(field, (2, 2, 6), WindSample(0, 0, 0))


def test_interior_rate_matches_single_cell_operators(grid):
    rng = np.random.default_rng(1)
    field = ConcentrationField(grid, rng.random(grid.shape))
    velocity = tuple(rng.normal(size=grid.shape) for __ in range(3))
    rate = solver.interior_rate(field.values, velocity, grid, 0.3)
    for i in range(1, grid.nx - 1):
        for j in range(1, grid.ny - 1):
            for k in range(1, grid.nz - 1):
                wind = WindSample(*(v[i, j, k] for v in velocity))
                expected = (solver.diffusion_term(field, (i, j, k), 0.3)
                    + solver.advection_term(field, (i, j, k), wind))
                assert rate[i - 1, j - 1, k - 1] == pytest.approx(expected, rel=1e-12, abs=1e-12)


# Sources and boundaries ------------------------------------------------------


def test_inject_sources(grid):
    field = ConcentrationField(grid)
    budget = MassBudget()
    model = published_release_model(1000.0)
    deployment = common.point_source((3.0, 3.0, 1.0), spheres=10)
    injected = solver.inject_sources(field, deployment, model, 0.0, 3600.0, budget)
    assert injected == pytest.approx(10 * 1000.0 * 0.4429)
    assert budget.released == injected
    assert total_mass(field) == pytest.approx(injected)
    assert field.values[3, 3, 2] > 0


def test_inject_sources_rejects_ground(grid):
    cells = np.array([[2, 2, 0]], dtype=np.intp)
    with pytest.raises(DomainError):
        solver.inject_sources(ConcentrationField(grid), (cells, np.array([1.0])),
                              published_release_model(1.0), 0.0, 1.0, MassBudget())


def test_ground_absorbs(grid):
    prev = ConcentrationField(grid)
    prev.values[2, 2, 1] = 8.0
    nxt = prev.copy()
    nxt.values[:, :, 0] = 5.0
    still = tuple(np.zeros(grid.shape) for __ in range(3))
    budget = MassBudget()
    solver.apply_boundaries(prev, nxt, still, 0.1, budget, diffusion_coefficient=0.5)
    assert np.all(nxt.values[:, :, 0] == 0.0)
    # what was there plus the diffusive flux D dt / dz^2 * (8 - 0)
    V = grid.cell_volume
    expected = (5.0 * grid.nx * grid.ny + 0.5 * 0.1 / 0.25 * 8.0) * V
    assert budget.absorbed_ground == pytest.approx(expected)


def test_outflow_and_inflow_boundaries(grid):
    prev = ConcentrationField(grid)
    prev.values[...] = 1.0
    prev.values[-2, :, :] = 3.0
    nxt = prev.copy()
    vx = np.full(grid.shape, 2.0)
    velocity = (vx, np.zeros(grid.shape), np.zeros(grid.shape))
    solver.apply_boundaries(prev, nxt, velocity, 0.1, MassBudget())
    # x = x_max: outflow, upwind update from the interior neighbor
    assert nxt.values[-1, 3, 3] == pytest.approx(1.0 - 0.1 * 2.0 * (1.0 - 3.0))
    # x = x_min: inflow
    assert nxt.values[0, 3, 3] == 0.0
    # y faces and top: no normal wind counts as inflow
    assert nxt.values[3, 0, 3] == 0.0
    assert nxt.values[3, 3, -1] == 0.0
    # interior untouched
    assert nxt.values[3, 3, 3] == 1.0


def test_lateral_mask(grid):
    mask = solver.lateral_mask(grid)
    assert not mask[:, :, 0].any()
    assert mask[0, 3, 3] and mask[3, 3, -1] and mask[3, 6, 2]
    assert not mask[1:-1, 1:-1, 1:-1].any()


# Runs ------------------------------------------------------------------------


def test_diffusion_matches_gaussian():
    grid = common.cube_grid(65)
    D = 1.0
    limit = 1.0 / (6.0 * D)
    config = common.solver_config(D, 0.5 * limit, 96)
    center = (0.0, 0.0, 32.0)
    total = 1e12

    start = ConcentrationField(grid)
    start.values[32, 32, 32] = total / grid.cell_volume
    result = solver.run(grid, config, common.still_air(), common.no_release(),
        common.no_sources(), snapshot_steps=(48, 96), slab=(32.0, 0.0),
        initial_field=start)

    for step in (48, 96):
        t = step * config.dt
        exact = common.gaussian_point_solution(grid, center, total, D, t)
        error = np.abs(result.snapshots[step].values - exact).max()
        assert error <= 0.05 * exact.max()


def test_advection_moves_center_of_mass():
    grid = GridSpec(0, 120, -2, 2, 0, 4, 1.0, 1.0, 1.0)
    speed, dt, steps = 1.0, 0.5, 120
    config = common.solver_config(0.0, dt, steps)

    x = grid.axis('x')
    start = ConcentrationField(grid)
    start.values[:, 2, 2] = np.exp(-0.5 * ((x - 20.0) / 2.0) ** 2)

    def center(values):
        profile = values.sum(axis=(1, 2))
        return float((profile * x).sum() / profile.sum())

    before = center(start.values)
    result = solver.run(grid, config, common.steady_wind(speed),
        common.no_release(), common.no_sources(), snapshot_steps=(steps,),
        slab=(2.0, 0.0), initial_field=start)

    travelled = center(result.snapshots[steps].values) - before
    assert speed * dt * steps >= 50 * grid.dx
    assert travelled == pytest.approx(speed * dt * steps, abs=grid.dx)


def test_mass_budget_one_hour_without_wind():
    grid = baseline_grid()
    config = common.solver_config(1e-5, 2.0, 1800)
    model = published_release_model(1.121e15)
    deployment = build_deployment('central_patch', 1000, grid)
    result = solver.run(grid, config, common.still_air(), model, deployment)

    assert len(result.budget_trace) == 1800
    for step, time, released, in_domain, absorbed, outflow in result.budget_trace:
        assert released > 0
        imbalance = released - (in_domain + absorbed + outflow)
        assert abs(imbalance) <= 0.01 * released
    final = result.budget
    assert final.released == pytest.approx(
        1000 * 1.121e15 * model.fraction_at_seconds(3600.0), rel=1e-9)


def test_mass_budget_with_boundary_losses():
    grid = common.cube_grid(11)
    config = common.solver_config(0.1, 0.5, 400)
    deployment = common.point_source((0.0, 0.0, 2.0))
    result = solver.run(grid, config, common.still_air(),
        published_release_model(1e6), deployment, budget_every=50)

    assert [row[0] for row in result.budget_trace] == list(range(50, 401, 50))
    budget = result.budget
    assert budget.absorbed_ground > 0
    assert budget.boundary_outflow > 0
    assert abs(budget.imbalance) <= 1e-9 * budget.released


def test_runs_are_deterministic():
    grid = common.cube_grid(9)
    config = common.solver_config(0.01, 0.5, 40)
    wind = WindModelParams(seed=11)
    deployment = common.point_source((0.0, 0.0, 3.0))
    model = published_release_model(1e9)

    first = solver.run(grid, config, wind, model, deployment, snapshot_steps=(40,))
    second = solver.run(grid, config, wind, model, deployment, snapshot_steps=(40,))
    other = solver.run(grid, config, wind.with_seed(12), model, deployment,
                       snapshot_steps=(40,))
    assert np.array_equal(first.snapshots[40].values, second.snapshots[40].values)
    assert first.budget_trace == second.budget_trace
    assert not np.array_equal(first.snapshots[40].values, other.snapshots[40].values)


@pytest.mark.parametrize('wind', [common.still_air(), common.steady_wind(0.2)])
def test_shifting_sources_shifts_the_field(wind):
    grid = common.cube_grid(21)
    config = common.solver_config(0.1, 0.5, 6)
    model = published_release_model(1e6)
    here = common.point_source((0.0, 0.0, 5.0))
    there = here.shifted(2.0, -1.0)

    first = solver.run(grid, config, wind, model, here, snapshot_steps=(6,))
    second = solver.run(grid, config, wind, model, there, snapshot_steps=(6,))
    a = first.snapshots[6].values
    b = second.snapshots[6].values
    assert a.max() > 0
    assert np.array_equal(a[:-2, 1:, :], b[2:, :-1, :])
    assert first.budget.in_domain == pytest.approx(second.budget.in_domain, rel=1e-12)


def test_streamed_cei_equals_brute_force():
    grid = common.cube_grid(9)
    config = common.solver_config(0.01, 0.5, 50)
    thresholds = log_thresholds(1e2, 1e8, 13)
    acc = CeiAccumulator(grid, thresholds)
    result = solver.run(grid, config, WindModelParams(seed=3),
        published_release_model(1e9), common.point_source((0.0, 0.0, 3.0)),
        cei=acc, retain_fields=True)

    assert len(result.fields) == 50
    streamed = acc.finalize()
    brute = cei_from_fields(result.fields, thresholds)
    assert np.array_equal(streamed.cei, brute.cei)
    assert streamed.steps == 50
    assert streamed.time == 25.0


def test_runtime_speed_check():
    grid = common.cube_grid(9)
    config = common.solver_config(0.0, 1.0, 5, noise_clamp_sigmas=0.5)
    wind = WindModelParams(mean_speed=0.1, diurnal_amplitude=0.0,
        speed_noise_variance=1.0, speed_noise_clamp=0, vertical_scale=0.0, seed=2)
    with pytest.raises(StabilityError) as excinfo:
        solver.run(grid, config, wind, common.no_release(), common.no_sources())
    assert excinfo.value.step == 0


def test_runtime_check_can_be_disabled():
    grid = common.cube_grid(9)
    config = common.solver_config(0.0, 1.0, 5, noise_clamp_sigmas=0.5,
                                  cfl_runtime_check=False)
    wind = WindModelParams(mean_speed=0.1, diurnal_amplitude=0.0,
        speed_noise_variance=1.0, speed_noise_clamp=0, vertical_scale=0.0, seed=2)
    result = solver.run(grid, config, wind, common.no_release(), common.no_sources())
    assert result.steps == 5
    assert result.max_velocity[0] > 0.15


def test_non_finite_values_abort():
    grid = common.cube_grid(9)
    config = common.solver_config(0.1, 0.5, 10, nan_check_every=1)
    start = ConcentrationField(grid)
    start.values[4, 4, 4] = np.nan
    with pytest.raises(NumericalError) as excinfo:
        solver.run(grid, config, common.still_air(), common.no_release(),
                   common.no_sources(), initial_field=start)
    assert excinfo.value.step == 0


def test_negative_values_are_clamped():
    grid = common.cube_grid(9)
    config = common.solver_config(0.0, 0.5, 2)
    start = ConcentrationField(grid)
    start.values[4, 4, 4] = -1e-30
    result = solver.run(grid, config, common.still_air(), common.no_release(),
        common.no_sources(), snapshot_steps=(2,), initial_field=start)
    assert result.clamped_cells == 1
    assert result.snapshots[2].values.min() == 0.0


def test_zero_steps():
    grid = common.cube_grid(9)
    result = solver.run(grid, common.solver_config(0.1, 0.5, 10),
        common.still_air(), common.no_release(), common.no_sources(), steps=0)
    assert result.steps == 0
    assert result.budget_trace == []
