#-*- coding: utf-8 -*-
'''
Discretized 3D domain and the concentration field living on it.

Grid points sit at ``x_i = x_min + i * dx`` (likewise ``y_j``, ``z_k``),
boundaries included. Values are stored densely as a C-ordered
``(nx, ny, nz)`` float64 array, so ``k`` (height) is the fastest index.

Snapshot format (little endian)::

    magic    4s   b'MPSN'
    version  H    1
    nx ny nz 3I
    dx dy dz 3d
    x0 y0 z0 3d   grid origin (x_min, y_min, z_min)
    time     d    seconds
    values   nx*ny*nz float64, index order (i, j, k), k fastest

'''
import csv
import logging
import math
import struct

import numpy as np

from mesaplume.exceptions import DomainError
from mesaplume.exceptions import StorageError


LOG = logging.getLogger(__name__)


SNAPSHOT_MAGIC = b'MPSN'
SNAPSHOT_VERSION = 1
_HEADER = struct.Struct('<4sH3I7d')

SLAB_HEADER = ('x', 'y', 'concentration')

# relative slack when matching coordinates against grid lines
_EPS = 1e-9


class GridSpec:
    '''Uniform rectilinear grid.

    ``nx = (x_max - x_min) / dx + 1`` must hold exactly (likewise for y
    and z) and every axis needs at least 3 points.
    '''

    def __init__(self, x_min, x_max, y_min, y_max, z_min, z_max, dx, dy, dz):
        self.x_min, self.x_max = float(x_min), float(x_max)
        self.y_min, self.y_max = float(y_min), float(y_max)
        self.z_min, self.z_max = float(z_min), float(z_max)
        self.dx, self.dy, self.dz = float(dx), float(dy), float(dz)

        counts = []
        for name, lo, hi, step in (
                ('x', self.x_min, self.x_max, self.dx),
                ('y', self.y_min, self.y_max, self.dy),
                ('z', self.z_min, self.z_max, self.dz)):
            if not step > 0:
                raise ValueError('d{} must be > 0, got {!r}.'.format(name, step))
            cells = (hi - lo) / step
            count = int(round(cells)) + 1
            if abs(cells - round(cells)) > _EPS * max(1.0, abs(cells)):
                raise ValueError(('{0} extent [{1!r}, {2!r}] is not a multiple'
                    ' of d{0} = {3!r}.').format(name, lo, hi, step))
            if count < 3:
                raise ValueError(('Need at least 3 points along {}, got {}.'
                    ).format(name, count))
            counts.append(count)
        self.nx, self.ny, self.nz = counts

    @classmethod
    def from_origin(cls, origin, spacing, shape):
        (x0, y0, z0), (dx, dy, dz), (nx, ny, nz) = origin, spacing, shape
        return cls(x0, x0 + (nx - 1) * dx, y0, y0 + (ny - 1) * dy,
                   z0, z0 + (nz - 1) * dz, dx, dy, dz)

    @property
    def shape(self):
        return (self.nx, self.ny, self.nz)

    @property
    def size(self):
        return self.nx * self.ny * self.nz

    @property
    def spacing(self):
        return (self.dx, self.dy, self.dz)

    @property
    def origin(self):
        return (self.x_min, self.y_min, self.z_min)

    @property
    def cell_volume(self):
        return self.dx * self.dy * self.dz

    def axis(self, name):
        '''Coordinates of the grid lines along ``'x'``, ``'y'`` or ``'z'``.'''
        lo, step, count = {
            'x': (self.x_min, self.dx, self.nx),
            'y': (self.y_min, self.dy, self.ny),
            'z': (self.z_min, self.dz, self.nz),
        }[name]
        return lo + step * np.arange(count)

    def contains(self, point):
        x, y, z = point
        return all(
            lo - _EPS * step <= value <= hi + _EPS * step
            for value, lo, hi, step in (
                (x, self.x_min, self.x_max, self.dx),
                (y, self.y_min, self.y_max, self.dy),
                (z, self.z_min, self.z_max, self.dz),
            )
        )

    def as_dict(self):
        return {
            'x_min': self.x_min, 'x_max': self.x_max,
            'y_min': self.y_min, 'y_max': self.y_max,
            'z_min': self.z_min, 'z_max': self.z_max,
            'dx': self.dx, 'dy': self.dy, 'dz': self.dz,
        }

    def __eq__(self, other):
        if not isinstance(other, GridSpec):
            return NotImplemented
        return (self.shape == other.shape
            and np.allclose(self.origin + self.spacing,
                            other.origin + other.spacing,
                            rtol=_EPS, atol=0.0))

    def __hash__(self):
        return hash(self.shape)

    def __repr__(self):
        return '<GridSpec {s.nx}x{s.ny}x{s.nz} d=({s.dx}, {s.dy}, {s.dz})>'.format(s=self)


def baseline_grid():
    '''200 m x 200 m x 5 m field at 5 m / 5 m / 0.5 m resolution.'''
    return GridSpec(-100.0, 100.0, -100.0, 100.0, 0.0, 5.0, 5.0, 5.0, 0.5)


class ConcentrationField:
    '''MeSA concentration in molecules/m^3 on a :class:`GridSpec`.

    :var ndarray values:
        ``(nx, ny, nz)`` float64 array.
    :var GridSpec grid:
    :var float time:
        Simulation time in seconds.
    '''

    def __init__(self, grid, values=None, time=0.0):
        self.grid = grid
        if values is None:
            values = np.zeros(grid.shape)
        else:
            values = np.ascontiguousarray(values, dtype=np.float64)
            if values.shape != grid.shape:
                raise ValueError('Field shape {} does not match grid {}.'.format(
                    values.shape, grid.shape))
        self.values = values
        self.time = float(time)

    def copy(self):
        return ConcentrationField(self.grid, self.values.copy(), self.time)

    @property
    def max(self):
        return float(self.values.max())

    def __repr__(self):
        return '<ConcentrationField t={s.time!r} max={s.max:.4g}>'.format(s=self)


# Indexing --------------------------------------------------------------------


def _nearest_index(value, lo, step, count):
    # exact midpoints round toward the lower index
    index = math.ceil((value - lo) / step - 0.5)
    return min(max(index, 0), count - 1)


def nearest_cell(grid, point):
    '''Index ``(i, j, k)`` of the grid point nearest to ``point``,
    chosen independently per axis.

    :raises DomainError: ``point`` lies outside the grid.
    '''
    if not grid.contains(point):
        raise DomainError('Point {!r} is outside the domain {!r}.'.format(
            tuple(point), grid))
    x, y, z = point
    return (
        _nearest_index(x, grid.x_min, grid.dx, grid.nx),
        _nearest_index(y, grid.y_min, grid.dy, grid.ny),
        _nearest_index(z, grid.z_min, grid.dz, grid.nz),
    )


def cell_coordinates(grid, cell):
    i, j, k = cell
    return (grid.x_min + i * grid.dx,
            grid.y_min + j * grid.dy,
            grid.z_min + k * grid.dz)


def is_interior(grid, cell):
    return all(1 <= index <= count - 2
               for index, count in zip(cell, grid.shape))


# Reductions ------------------------------------------------------------------


def total_mass(field):
    '''Number of molecules in the field.

    ``numpy.sum`` accumulates pairwise, which keeps the round-off of the
    mass budget far below its tolerance over long runs.
    '''
    return float(np.sum(field.values)) * field.grid.cell_volume


def slab_levels(grid, z_center, half_width):
    '''Indices of the z-levels inside ``[z_center - half_width,
    z_center + half_width]``.'''
    z = grid.axis('z')
    slack = _EPS * grid.dz
    levels = np.nonzero((z >= z_center - half_width - slack)
                        & (z <= z_center + half_width + slack))[0]
    if levels.size == 0:
        raise DomainError(('Slab {!r} +/- {!r} m contains no grid level'
            ' (z in [{!r}, {!r}]).').format(
                z_center, half_width, grid.z_min, grid.z_max))
    return levels


def slab_mean(field, z_center, half_width):
    '''Mean concentration per ``(i, j)`` column over the levels of a
    horizontal slab; returns an ``(nx, ny)`` array.'''
    levels = slab_levels(field.grid, z_center, half_width)
    return field.values[:, :, levels].mean(axis=2)


# Files -----------------------------------------------------------------------


def write_snapshot(path, field):
    grid = field.grid
    header = _HEADER.pack(SNAPSHOT_MAGIC, SNAPSHOT_VERSION,
        grid.nx, grid.ny, grid.nz,
        grid.dx, grid.dy, grid.dz,
        grid.x_min, grid.y_min, grid.z_min,
        field.time)
    LOG.debug('Write snapshot t=%s to %r.', field.time, path)
    with open(path, 'wb') as f:
        f.write(header)
        f.write(field.values.astype('<f8', copy=False).tobytes(order='C'))


def read_snapshot(path):
    '''Read a field written by :func:`write_snapshot`.'''
    with open(path, 'rb') as f:
        data = f.read()

    if len(data) < _HEADER.size:
        raise StorageError('Snapshot {!r} is truncated.'.format(path))

    (magic, version, nx, ny, nz, dx, dy, dz,
        x0, y0, z0, time) = _HEADER.unpack_from(data)
    if magic != SNAPSHOT_MAGIC:
        raise StorageError('{!r} is not a snapshot file.'.format(path))
    if version != SNAPSHOT_VERSION:
        raise StorageError('Unsupported snapshot version {} in {!r}.'.format(
            version, path))

    expected = nx * ny * nz * 8
    payload = data[_HEADER.size:]
    if len(payload) != expected:
        raise StorageError('Snapshot {!r} has {} value bytes, expected {}.'.format(
            path, len(payload), expected))

    grid = GridSpec.from_origin((x0, y0, z0), (dx, dy, dz), (nx, ny, nz))
    values = np.frombuffer(payload, dtype='<f8').reshape((nx, ny, nz))
    return ConcentrationField(grid, values.astype(np.float64), time)


def write_slab_csv(path, grid, slab, **meta):
    '''Write a 2D slab as ``x,y,concentration`` rows, ``i`` outer, ``j``
    inner. Keyword arguments end up in a leading ``#`` comment line.'''
    xs, ys = grid.axis('x'), grid.axis('y')
    with open(path, 'w', newline='') as f:
        if meta:
            f.write('# {}\n'.format(' '.join(
                '{}={!r}'.format(key, meta[key]) for key in sorted(meta))))
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(SLAB_HEADER)
        for i, x in enumerate(xs.tolist()):
            for j, y in enumerate(ys.tolist()):
                writer.writerow((repr(x), repr(y), repr(float(slab[i, j]))))


def read_slab_csv(path):
    '''Read a slab CSV.

    :rtype tuple:
        ``(xs, ys, values, meta)`` with ``values`` shaped
        ``(len(xs), len(ys))`` and ``meta`` the parsed comment line.
    '''
    meta = {}
    rows = []
    with open(path, newline='') as f:
        lines = [line for line in f]

    body = []
    for line in lines:
        if line.startswith('#'):
            for item in line[1:].split():
                key, __, value = item.partition('=')
                meta[key] = value
        elif line.strip():
            body.append(line)

    reader = csv.reader(body)
    try:
        header = next(reader)
    except StopIteration:
        raise StorageError('Empty slab file {!r}.'.format(path))
    if tuple(h.strip() for h in header) != SLAB_HEADER:
        raise StorageError('Unexpected header {!r} in {!r}.'.format(header, path))

    try:
        for row in reader:
            x, y, value = row
            rows.append((float(x), float(y), float(value)))
    except ValueError:
        raise StorageError('Malformed row {!r} in {!r}.'.format(row, path))

    if not rows:
        raise StorageError('Slab file {!r} has no values.'.format(path))

    xs = np.unique([r[0] for r in rows])
    ys = np.unique([r[1] for r in rows])
    if len(rows) != xs.size * ys.size:
        raise StorageError('Slab file {!r} is not a full x/y grid.'.format(path))

    values = np.empty((xs.size, ys.size))
    x_index = {x: i for i, x in enumerate(xs.tolist())}
    y_index = {y: j for j, y in enumerate(ys.tolist())}
    for x, y, value in rows:
        values[x_index[x], y_index[y]] = value
    return xs, ys, values, meta
