#-*- coding: utf-8 -*-
'''
Stochastic diurnal wind field.

Horizontal speed and direction at cell ``(i, j, k)`` and time ``t``::

    d(t)  = sin(2 pi t / period)
    speed = v_mean * (1 + a * d(t)) * max(1 + eta_speed, 0)
    theta = 2 pi t / period + eta_dir
    vx, vy = speed * cos(theta), speed * sin(theta)
    vz    = c * speed * ln(1 + z / z_ref)

``eta_speed`` and ``eta_dir`` are zero-mean Gaussians given by their
*variances*. They are white in space and time: each (cell, step) gets
its own pair, derived from a counter-based hash of
``(seed, i, j, k, step)`` so any cell can be evaluated on its own and
the field never depends on evaluation order.
'''
import csv
import logging
import math

import numpy as np

from mesaplume import kernels
from mesaplume.kernels import MIX1
from mesaplume.kernels import MIX2
from mesaplume.kernels import TAG_ANGLE
from mesaplume.kernels import TAG_RADIUS


LOG = logging.getLogger(__name__)


DAY = 86400.0

_MASK = (1 << 64) - 1
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_SEED_TAG = 0x6D65736177696E64

WIND_CSV_HEADER = ('i', 'j', 'k', 'x', 'y', 'z', 'vx', 'vy', 'vz')


class WindModelParams:
    '''Parameters of the wind model.

    :var float mean_speed: m/s
    :var float diurnal_amplitude: relative speed modulation
    :var float diurnal_period: s
    :var float speed_noise_variance: variance of the relative speed noise
    :var float direction_noise_variance: rad^2
    :var float vertical_scale: ratio of vertical to horizontal speed at
        ``ln(1 + z / z_ref) = 1``
    :var float reference_height: m
    :var int seed: 64-bit noise seed
    :var float speed_noise_clamp:
        ``eta_speed`` is truncated to +/- this many standard deviations;
        ``0`` disables the clamp.
    '''

    def __init__(self, mean_speed=0.5, diurnal_amplitude=0.5,
        diurnal_period=DAY, speed_noise_variance=0.03,
        direction_noise_variance=1.5, vertical_scale=0.1,
        reference_height=5.0, seed=0, speed_noise_clamp=3.0):
        self.mean_speed = float(mean_speed)
        self.diurnal_amplitude = float(diurnal_amplitude)
        self.diurnal_period = float(diurnal_period)
        self.speed_noise_variance = float(speed_noise_variance)
        self.direction_noise_variance = float(direction_noise_variance)
        self.vertical_scale = float(vertical_scale)
        self.reference_height = float(reference_height)
        self.seed = int(seed) & _MASK
        self.speed_noise_clamp = float(speed_noise_clamp or 0.0)

        if self.mean_speed < 0:
            raise ValueError('mean_speed must be >= 0.')
        if self.speed_noise_variance < 0 or self.direction_noise_variance < 0:
            raise ValueError('Noise variances must be >= 0.')
        if not self.reference_height > 0:
            raise ValueError('reference_height must be > 0.')
        if not self.diurnal_period > 0:
            raise ValueError('diurnal_period must be > 0.')
        if self.speed_noise_clamp < 0:
            raise ValueError('speed_noise_clamp must be >= 0.')

    def with_seed(self, seed):
        params = WindModelParams(**self.as_dict())
        params.seed = int(seed) & _MASK
        return params

    def as_dict(self):
        return {
            'mean_speed': self.mean_speed,
            'diurnal_amplitude': self.diurnal_amplitude,
            'diurnal_period': self.diurnal_period,
            'speed_noise_variance': self.speed_noise_variance,
            'direction_noise_variance': self.direction_noise_variance,
            'vertical_scale': self.vertical_scale,
            'reference_height': self.reference_height,
            'seed': self.seed,
            'speed_noise_clamp': self.speed_noise_clamp,
        }

    def __repr__(self):
        return '<WindModelParams v={s.mean_speed!r} seed={s.seed}>'.format(s=self)


class WindSample:
    '''Wind velocity at one cell and step, m/s.'''

    __slots__ = ('vx', 'vy', 'vz')

    def __init__(self, vx, vy, vz):
        self.vx = float(vx)
        self.vy = float(vy)
        self.vz = float(vz)

    def __iter__(self):
        return iter((self.vx, self.vy, self.vz))

    def __eq__(self, other):
        return isinstance(other, WindSample) and tuple(self) == tuple(other)

    def __repr__(self):
        return '<WindSample ({s.vx!r}, {s.vy!r}, {s.vz!r})>'.format(s=self)


# Noise -----------------------------------------------------------------------


def _mix(z):
    '''SplitMix64 finalizer on uint64 arrays (wraps modulo 2**64).'''
    z = (z ^ (z >> np.uint64(30))) * MIX1
    z = (z ^ (z >> np.uint64(27))) * MIX2
    return z ^ (z >> np.uint64(31))


def _counter(value):
    return np.uint64(((int(value) + 1) * int(_GOLDEN)) & _MASK)


def cell_keys(seed, i, j, k):
    '''Hash ``(seed, i, j, k)`` into per-cell uint64 keys.
    ``i``, ``j``, ``k`` broadcast against each other.'''
    with np.errstate(over='ignore'):
        key = _mix(np.asarray(np.uint64((seed ^ _SEED_TAG) & _MASK)))
        for index in (i, j, k):
            index = np.asarray(index, dtype=np.uint64)
            key = _mix(key + (index + np.uint64(1)) * _GOLDEN)
    return key


def _uniform(bits):
    '''Top 53 bits as a float in (0, 1].'''
    return ((bits >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0 ** -53


def standard_normal_pair(keys, step):
    '''Two independent standard normals per key for time step ``step``.'''
    with np.errstate(over='ignore'):
        base = _mix(keys + _counter(step))
        u_radius = _uniform(_mix(base ^ TAG_RADIUS))
        u_angle = _uniform(_mix(base ^ TAG_ANGLE))
    radius = np.sqrt(-2.0 * np.log(u_radius))
    angle = 2.0 * math.pi * u_angle
    return radius * np.cos(angle), radius * np.sin(angle)


# Field -----------------------------------------------------------------------


def diurnal_factor(t, period=DAY):
    '''``sin(2 pi t / period)``, ``t`` in seconds.'''
    if t < 0:
        raise ValueError('Time must be >= 0, got {!r}.'.format(t))
    return math.sin(2.0 * math.pi * t / period)


def _velocity(params, keys, z, t, step):
    z_speed, z_dir = standard_normal_pair(keys, step)
    if params.speed_noise_clamp:
        z_speed = np.clip(z_speed, -params.speed_noise_clamp,
                          params.speed_noise_clamp)
    eta_speed = math.sqrt(params.speed_noise_variance) * z_speed
    eta_dir = math.sqrt(params.direction_noise_variance) * z_dir

    base = params.mean_speed * (
        1.0 + params.diurnal_amplitude * diurnal_factor(t, params.diurnal_period))
    speed = base * np.maximum(1.0 + eta_speed, 0.0)
    theta = 2.0 * math.pi * t / params.diurnal_period + eta_dir

    vx = speed * np.cos(theta)
    vy = speed * np.sin(theta)
    vz = params.vertical_scale * speed * np.log1p(z / params.reference_height)
    return vx, vy, vz


def wind_at(params, cell, z, t, step):
    '''Wind at a single cell ``(i, j, k)`` of height ``z`` (m),
    time ``t`` (s) and step index ``step``.'''
    i, j, k = cell
    keys = cell_keys(params.seed, [i], [j], [k])
    vx, vy, vz = _velocity(params, keys, np.array([float(z)]), t, step)
    return WindSample(vx[0], vy[0], vz[0])


class WindField:
    '''Samples the wind on every cell of a grid.

    Keeps the per-cell hash keys and heights around. With the numpy
    backend values equal :func:`wind_at` cell by cell; the numba
    backend evaluates the same formulas in a compiled loop and writes
    into buffers that are reused by the next call.

    :param str backend: ``'auto'``, ``'numpy'`` or ``'numba'``
    '''

    def __init__(self, params, grid, backend='numpy'):
        self.params = params
        self.grid = grid
        self.backend = kernels.resolve_backend(backend)
        self._keys = cell_keys(params.seed,
            np.arange(grid.nx).reshape(-1, 1, 1),
            np.arange(grid.ny).reshape(1, -1, 1),
            np.arange(grid.nz).reshape(1, 1, -1))
        self._z = np.broadcast_to(grid.axis('z').reshape(1, 1, -1), grid.shape)
        if self.backend == 'numba':
            self._keys = np.ascontiguousarray(self._keys)
            self._profile = np.log1p(grid.axis('z') / params.reference_height)
            self._out = tuple(np.empty(grid.shape) for __ in range(3))

    def sample(self, step, t):
        '''``(vx, vy, vz)`` arrays shaped like the grid.'''
        if self.backend == 'numba':
            return self._sample_compiled(step, t)
        return _velocity(self.params, self._keys, self._z, t, step)

    def _sample_compiled(self, step, t):
        p = self.params
        base = p.mean_speed * (
            1.0 + p.diurnal_amplitude * diurnal_factor(t, p.diurnal_period))
        theta0 = 2.0 * math.pi * t / p.diurnal_period
        vx, vy, vz = self._out
        kernels.sample_wind(self._keys, self._profile, _counter(step), base,
            theta0, math.sqrt(p.speed_noise_variance),
            math.sqrt(p.direction_noise_variance), p.speed_noise_clamp,
            p.vertical_scale, vx, vy, vz)
        return self._out


def speed_bound(params, clamp_sigmas=3.0):
    '''Upper bound of the horizontal speed with the speed noise clamped
    at ``clamp_sigmas`` standard deviations.'''
    if not clamp_sigmas > 0:
        raise ValueError('clamp_sigmas must be > 0, got {!r}.'.format(clamp_sigmas))
    return (params.mean_speed
        * (1.0 + params.diurnal_amplitude)
        * (1.0 + clamp_sigmas * math.sqrt(params.speed_noise_variance)))


def vertical_speed_bound(params, z_max, clamp_sigmas=3.0):
    return (params.vertical_scale * speed_bound(params, clamp_sigmas)
        * math.log1p(z_max / params.reference_height))


def velocity_bounds(params, z_max, clamp_sigmas=3.0):
    '''Per-axis speed bounds ``(vx, vy, vz)`` for the CFL pre-check.'''
    horizontal = speed_bound(params, clamp_sigmas)
    return (horizontal, horizontal,
            vertical_speed_bound(params, z_max, clamp_sigmas))


def write_wind_csv(path, grid, velocity):
    '''Dump one sampled wind field, one row per cell.'''
    vx, vy, vz = velocity
    xs, ys, zs = grid.axis('x'), grid.axis('y'), grid.axis('z')
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(WIND_CSV_HEADER)
        for i in range(grid.nx):
            for j in range(grid.ny):
                for k in range(grid.nz):
                    writer.writerow((i, j, k,
                        repr(float(xs[i])), repr(float(ys[j])), repr(float(zs[k])),
                        repr(float(vx[i, j, k])),
                        repr(float(vy[i, j, k])),
                        repr(float(vz[i, j, k]))))
