#!/usr/bin/env python
# -*- coding: utf-8 -*-

'''
test_wind
---------

Tests for the `wind` module.
'''
import csv
import math

import numpy as np
import pytest

from mesaplume import wind
from mesaplume.grid import GridSpec
from mesaplume.grid import baseline_grid
from mesaplume.wind import WindField
from mesaplume.wind import WindModelParams

from tests import common


@pytest.fixture
def params():
    return WindModelParams(seed=42)


def quiet(**kwargs):
    '''The diurnal model without noise.'''
    return WindModelParams(speed_noise_variance=0.0,
                           direction_noise_variance=0.0, **kwargs)


def test_diurnal_factor():
    assert wind.diurnal_factor(0.0) == 0.0
    assert wind.diurnal_factor(21600.0) == pytest.approx(1.0)
    assert wind.diurnal_factor(64800.0) == pytest.approx(-1.0)


def test_diurnal_factor_negative_time():
    with pytest.raises(ValueError):
        wind.diurnal_factor(-1.0)


def test_noise_free_wind_at_quarter_day():
    sample = wind.wind_at(quiet(), (3, 4, 10), 5.0, 21600.0, 10800)
    assert sample.vx == pytest.approx(0.0, abs=1e-12)
    assert sample.vy == pytest.approx(0.75)
    assert sample.vz == pytest.approx(0.1 * 0.75 * math.log(2.0))
    assert sample.vz == pytest.approx(0.05199, abs=1e-5)


def test_noise_free_wind_at_start():
    sample = wind.wind_at(quiet(), (0, 0, 0), 0.0, 0.0, 0)
    assert tuple(sample) == pytest.approx((0.5, 0.0, 0.0))


def test_same_seed_same_wind(params):
    a = wind.wind_at(params, (5, 6, 2), 1.0, 100.0, 50)
    b = wind.wind_at(WindModelParams(seed=42), (5, 6, 2), 1.0, 100.0, 50)
    assert a == b


def test_seed_changes_wind(params):
    a = wind.wind_at(params, (5, 6, 2), 1.0, 100.0, 50)
    b = wind.wind_at(params.with_seed(43), (5, 6, 2), 1.0, 100.0, 50)
    assert a != b


def test_noise_differs_between_cells_and_steps(params):
    base = wind.wind_at(params, (5, 6, 2), 1.0, 100.0, 50)
    assert wind.wind_at(params, (5, 6, 3), 1.0, 100.0, 50) != base
    assert wind.wind_at(params, (5, 6, 2), 1.0, 100.0, 51) != base


def test_field_matches_single_cell_evaluation(params):
    grid = common.cube_grid(5)
    vx, vy, vz = WindField(params, grid).sample(7, 14.0)
    zs = grid.axis('z')
    cells = [(i, j, k) for i in range(5) for j in range(5) for k in range(5)]
    # any evaluation order gives the same values
    for i, j, k in reversed(cells):
        sample = wind.wind_at(params, (i, j, k), zs[k], 14.0, 7)
        assert sample.vx == pytest.approx(vx[i, j, k], rel=1e-12, abs=1e-15)
        assert sample.vy == pytest.approx(vy[i, j, k], rel=1e-12, abs=1e-15)
        assert sample.vz == pytest.approx(vz[i, j, k], rel=1e-12, abs=1e-15)


def test_standard_normals():
    keys = wind.cell_keys(1, np.arange(200).reshape(-1, 1, 1),
                          np.arange(100).reshape(1, -1, 1),
                          np.arange(5).reshape(1, 1, -1))
    a, b = wind.standard_normal_pair(keys, 3)
    for values in (a.ravel(), b.ravel()):
        assert abs(values.mean()) < 0.02
        assert values.std() == pytest.approx(1.0, abs=0.02)
    assert abs(np.corrcoef(a.ravel(), b.ravel())[0, 1]) < 0.02


@pytest.fixture
def million_cells():
    return GridSpec(0, 99, 0, 99, 0, 99, 1.0, 1.0, 1.0)


def test_speed_noise_variance(million_cells):
    params = WindModelParams(mean_speed=1.0, diurnal_amplitude=0.0, seed=8,
        speed_noise_variance=0.03, direction_noise_variance=0.0,
        speed_noise_clamp=0)
    vx, vy, __ = WindField(params, million_cells).sample(0, 0.0)
    assert vx.size == 10 ** 6
    assert np.all(vy == 0.0)
    eta = vx - 1.0
    assert abs(eta.mean()) < 1e-3
    assert eta.var() == pytest.approx(0.03, rel=0.05)


def test_direction_noise_variance(million_cells):
    params = WindModelParams(mean_speed=1.0, diurnal_amplitude=0.0, seed=8,
        speed_noise_variance=0.0, direction_noise_variance=1.5)
    vx, vy, __ = WindField(params, million_cells).sample(0, 0.0)
    # speed is 1 and theta = eta, so E[vx] = E[cos eta] = exp(-var / 2)
    assert np.allclose(np.hypot(vx, vy), 1.0)
    assert abs(vy.mean()) < 3e-3
    assert -2.0 * math.log(vx.mean()) == pytest.approx(1.5, rel=0.05)


def test_speed_bound():
    assert wind.speed_bound(WindModelParams()) == pytest.approx(1.140, abs=1e-3)


def test_velocity_bounds():
    vx, vy, vz = wind.velocity_bounds(WindModelParams(), 5.0)
    assert vx == vy == pytest.approx(1.1397, abs=1e-4)
    assert vz == pytest.approx(0.079, abs=1e-3)


def test_clamped_speed_stays_below_bound(params):
    grid = baseline_grid()
    field = WindField(params, grid)
    bound = wind.speed_bound(params, 3.0)
    vbounds = wind.velocity_bounds(params, grid.z_max, 3.0)
    for step in range(0, 43200, 4321):
        vx, vy, vz = field.sample(step, step * 2.0)
        speed = np.hypot(vx, vy)
        assert speed.max() <= bound * (1 + 1e-12)
        assert np.abs(vz).max() <= vbounds[2] * (1 + 1e-12)


def test_unclamped_speed_can_exceed_bound():
    params = WindModelParams(seed=1, speed_noise_clamp=0, speed_noise_variance=1.0)
    vx, vy, __ = WindField(params, baseline_grid()).sample(10800, 21600.0)
    assert np.hypot(vx, vy).max() > wind.speed_bound(params, 3.0)


def test_speed_is_never_negative():
    params = WindModelParams(seed=5, speed_noise_clamp=0, speed_noise_variance=4.0,
                             direction_noise_variance=0.0, diurnal_amplitude=0.0)
    vx, vy, __ = WindField(params, baseline_grid()).sample(1, 2.0)
    # with the direction noise off, theta is the diurnal angle
    theta = 2 * math.pi * 2.0 / params.diurnal_period
    along = vx * math.cos(theta) + vy * math.sin(theta)
    assert along.min() >= 0.0
    assert np.count_nonzero(along == 0.0) > 0


@pytest.mark.parametrize('kwargs', [
    {'mean_speed': -1.0},
    {'speed_noise_variance': -0.1},
    {'reference_height': 0.0},
    {'diurnal_period': 0.0},
    {'speed_noise_clamp': -1.0},
])
def test_invalid_params(kwargs):
    with pytest.raises(ValueError):
        WindModelParams(**kwargs)


def test_write_wind_csv(tmpdir, params):
    grid = common.cube_grid(3)
    velocity = WindField(params, grid).sample(0, 0.0)
    path = str(tmpdir.join('wind.csv'))
    wind.write_wind_csv(path, grid, velocity)
    with open(path) as f:
        rows = list(csv.reader(f))
    assert tuple(rows[0]) == wind.WIND_CSV_HEADER
    assert len(rows) == 1 + grid.size
    i, j, k = (int(v) for v in rows[1 + 5][:3])
    assert float(rows[1 + 5][6]) == velocity[0][i, j, k]
