#-*- coding: utf-8 -*-
'''
Helpers shared by the test modules.
'''
import math

import numpy as np

from mesaplume.grid import GridSpec
from mesaplume.kinetics import ReleaseModel
from mesaplume.scenarios import Deployment
from mesaplume.solver import SolverConfig
from mesaplume.wind import WindModelParams


# A config small enough to run all four presets in a second. The grid
# still holds the whole 80 m stripe.
SMALL_CONFIG = '''
[simulation]
seed = 7
preset = central_patch
total_spheres = 1000

[grid]
x_min = -50
x_max = 50
y_min = -10
y_max = 10
z_min = 0
z_max = 2
dx = 10
dy = 5
dz = 0.5

[solver]
dt = 2
total_steps = 30
progress_every = 10

[metrics]
thresholds = 1e4 1e8 1e12
snapshot_times = 0.01
slab_center = 1.0
slab_half_width = 0.5
timeseries_every = 5
timeseries_threshold = 1e8
'''


def write_config(tmpdir, text=SMALL_CONFIG, name='small.conf'):
    path = tmpdir.join(name)
    path.write(text)
    return str(path)


def cube_grid(n, spacing=1.0):
    '''``n`` points per axis, centered on the origin in x and y.'''
    half = (n - 1) * spacing / 2.0
    return GridSpec(-half, half, -half, half, 0.0, (n - 1) * spacing,
                    spacing, spacing, spacing)


def still_air(seed=0):
    '''No wind at all.'''
    return WindModelParams(mean_speed=0.0, diurnal_amplitude=0.0,
        speed_noise_variance=0.0, direction_noise_variance=0.0,
        vertical_scale=0.0, seed=seed)


def steady_wind(speed, seed=0):
    '''Constant wind along +x (the diurnal turn takes ~30000 years).'''
    return WindModelParams(mean_speed=speed, diurnal_amplitude=0.0,
        diurnal_period=1e12, speed_noise_variance=0.0,
        direction_noise_variance=0.0, vertical_scale=0.0, seed=seed)


def no_release():
    return ReleaseModel(0.4429, 0.1789, molecules_per_sphere=0.0)


def no_sources():
    return Deployment([], name='none')


def point_source(position, spheres=1000):
    return Deployment([(position, spheres)], name='point')


def solver_config(diffusion_coefficient, dt, total_steps, **kwargs):
    kwargs.setdefault('progress_every', 10 ** 9)
    return SolverConfig(diffusion_coefficient, dt, total_steps, **kwargs)


def gaussian_point_solution(grid, center, total, diffusion_coefficient, t):
    '''Free-space concentration ``t`` seconds after releasing ``total``
    molecules at ``center``.'''
    x = grid.axis('x').reshape(-1, 1, 1) - center[0]
    y = grid.axis('y').reshape(1, -1, 1) - center[1]
    z = grid.axis('z').reshape(1, 1, -1) - center[2]
    r2 = x * x + y * y + z * z
    spread = 4.0 * diffusion_coefficient * t
    return total / (math.pi * spread) ** 1.5 * np.exp(-r2 / spread)
