#-*- coding: utf-8 -*-
'''
Compiled per-step kernels.

numba is optional (``pip install mesaplume[fast]``). Without it the
solver runs on plain numpy array expressions; with it the wind sample,
the interior update and the CEI counts run as compiled loops that
release the GIL, so the worker threads of a sweep run in parallel.

The interior update and the CEI counts repeat the numpy operation
order and give identical results. The wind kernel evaluates the same
formulas with scalar libm calls; it may differ from numpy's vectorised
transcendentals in the last bit, so a run is reproducible per backend.

Backends::

    auto    numba if it is installed, numpy otherwise
    numpy
    numba
'''
import logging
import math

import numpy as np

try:
    import numba
except ImportError:
    numba = None


LOG = logging.getLogger(__name__)


HAVE_NUMBA = numba is not None
BACKENDS = ('auto', 'numpy', 'numba')

# serial loops: results must not depend on the thread schedule
NUMBA_OPTIONS = {
    'nopython': True,
    'nogil': True,
    'cache': True,
}

MIX1 = np.uint64(0xBF58476D1CE4E5B9)
MIX2 = np.uint64(0x94D049BB133111EB)
TAG_RADIUS = np.uint64(0x243F6A8885A308D3)
TAG_ANGLE = np.uint64(0x13198A2E03707344)
_SHIFT_A = np.uint64(30)
_SHIFT_B = np.uint64(27)
_SHIFT_C = np.uint64(31)
_SHIFT_MANTISSA = np.uint64(11)
_EPSILON_53 = 2.0 ** -53
_TWO_PI = 2.0 * math.pi


def resolve_backend(name):
    '''Map a configured backend name to ``'numpy'`` or ``'numba'``.

    :raises ValueError: unknown name, or numba requested but missing.
    '''
    name = (name or 'auto').strip().lower()
    if name not in BACKENDS:
        raise ValueError('Unknown backend {!r}; expected one of {}.'.format(
            name, ', '.join(BACKENDS)))
    if name == 'auto':
        return 'numba' if HAVE_NUMBA else 'numpy'
    if name == 'numba' and not HAVE_NUMBA:
        raise ValueError(('backend "numba" needs numba;'
            ' install it with "pip install mesaplume[fast]".'))
    return name


def _jit(func):
    if numba is None:
        return func
    return numba.jit(**NUMBA_OPTIONS)(func)


# Wind ------------------------------------------------------------------------


@_jit
def _mix64(z):
    z = (z ^ (z >> _SHIFT_A)) * MIX1
    z = (z ^ (z >> _SHIFT_B)) * MIX2
    return z ^ (z >> _SHIFT_C)


@_jit
def _uniform53(bits):
    return (np.float64(bits >> _SHIFT_MANTISSA) + 1.0) * _EPSILON_53


@_jit
def sample_wind(keys, profile, counter, base_speed, theta0, sd_speed,
                sd_dir, clamp, vertical_scale, vx, vy, vz):
    '''Fill ``vx``, ``vy``, ``vz`` for one step.

    :param keys: per-cell uint64 hash keys, shaped like the grid
    :param profile: ``ln(1 + z / z_ref)`` per z level
    :param counter: uint64 step counter
    '''
    nx, ny, nz = keys.shape
    for i in range(nx):
        for j in range(ny):
            for k in range(nz):
                base = _mix64(keys[i, j, k] + counter)
                u_radius = _uniform53(_mix64(base ^ TAG_RADIUS))
                u_angle = _uniform53(_mix64(base ^ TAG_ANGLE))
                radius = math.sqrt(-2.0 * math.log(u_radius))
                angle = _TWO_PI * u_angle
                z_speed = radius * math.cos(angle)
                z_dir = radius * math.sin(angle)
                if clamp > 0.0:
                    z_speed = min(max(z_speed, -clamp), clamp)
                speed = base_speed * max(1.0 + sd_speed * z_speed, 0.0)
                theta = theta0 + sd_dir * z_dir
                vx[i, j, k] = speed * math.cos(theta)
                vy[i, j, k] = speed * math.sin(theta)
                vz[i, j, k] = vertical_scale * speed * profile[k]


# Transport -------------------------------------------------------------------


@_jit
def _axis_rate(rate, c, behind, ahead, v, step, step_sq, D):
    if D != 0.0:
        rate += D * (ahead - 2.0 * c + behind) / step_sq
    if v >= 0:
        rate -= v * ((c - behind) / step)
    else:
        rate -= v * ((ahead - c) / step)
    return rate


@_jit
def interior_update(P, N, vx, vy, vz, dt, D, dx, dy, dz):
    '''``N = P + dt * (D lap(P) - v . grad(P))`` on the interior cells.'''
    nx, ny, nz = P.shape
    dx2, dy2, dz2 = dx ** 2, dy ** 2, dz ** 2
    for i in range(1, nx - 1):
        for j in range(1, ny - 1):
            for k in range(1, nz - 1):
                c = P[i, j, k]
                rate = 0.0
                rate = _axis_rate(rate, c, P[i - 1, j, k], P[i + 1, j, k],
                                  vx[i, j, k], dx, dx2, D)
                rate = _axis_rate(rate, c, P[i, j - 1, k], P[i, j + 1, k],
                                  vy[i, j, k], dy, dy2, D)
                rate = _axis_rate(rate, c, P[i, j, k - 1], P[i, j, k + 1],
                                  vz[i, j, k], dz, dz2, D)
                N[i, j, k] = c + dt * rate


# Metrics ---------------------------------------------------------------------


@_jit
def covered_counts(values, thresholds, out):
    '''Add, per threshold, the number of ``values >= threshold`` to
    ``out``.'''
    m = thresholds.size
    buckets = np.zeros(m + 1, dtype=np.int64)
    n0, n1, n2 = values.shape
    for i in range(n0):
        for j in range(n1):
            for k in range(n2):
                value = values[i, j, k]
                lo, hi = 0, m
                while lo < hi:
                    mid = (lo + hi) // 2
                    if thresholds[mid] <= value:
                        lo = mid + 1
                    else:
                        hi = mid
                buckets[lo] += 1
    running = 0
    for b in range(m, 0, -1):
        running += buckets[b]
        out[b - 1] += running
