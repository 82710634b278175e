#-*- coding: utf-8 -*-
'''
Microsphere deployments.

All presets live in the flower stripe, a 4 m x 80 m band centered at the
origin with its long side along x::

    central_patch     4 m x 4 m patch around (0, 0)
    uniform_patch     the whole 4 m x 80 m stripe
    four_corners      four 1 m x 1 m patches centered at (+/-39.5, +/-1.5)
    perimeter_stripe  a 0.5 m wide band along the inside of the stripe

Regions are sampled on a cell-centered lattice (default pitch 0.5 m) and
every lattice point becomes one source group at ``z = 0.5 m``.
Spheres are split equally across points; the integer remainder goes one
sphere each to the first points in scan order (y outer, x inner, for
the perimeter: counterclockwise from the lower left corner).
'''
import csv
import fnmatch
import logging
import math

import numpy as np

from mesaplume.exceptions import ConfigError
from mesaplume.exceptions import DomainError
from mesaplume.grid import nearest_cell


LOG = logging.getLogger(__name__)


PRESETS = ('central_patch', 'uniform_patch', 'four_corners', 'perimeter_stripe')

DEFAULT_PITCH = 0.5
DEFAULT_HEIGHT = 0.5

STRIPE_LENGTH = 80.0
STRIPE_WIDTH = 4.0
CENTRAL_PATCH_SIZE = 4.0
CORNER_PATCH_SIZE = 1.0
CORNER_CENTER = (39.5, 1.5)
PERIMETER_BAND = 0.5

CSV_HEADER = ('x', 'y', 'z', 'sphere_count')


class Deployment:
    '''Point sources of microspheres.

    :var list sources:
        ``((x, y, z), sphere_count)`` pairs, positions in metres.
    :var str name:
        Preset name or the file the deployment was read from.
    '''

    def __init__(self, sources, name=None):
        self.sources = []
        for position, count in sources:
            x, y, z = (float(v) for v in position)
            count = int(count)
            if count < 0:
                raise ValueError('Negative sphere count {} at {!r}.'.format(
                    count, (x, y, z)))
            if not z > 0:
                raise DomainError('Source at {!r} is not above ground.'.format(
                    (x, y, z)))
            self.sources.append(((x, y, z), count))
        self.name = name

    @property
    def total_spheres(self):
        return sum(count for __, count in self.sources)

    @property
    def positions(self):
        return np.array([p for p, __ in self.sources]).reshape(-1, 3)

    @property
    def counts(self):
        return np.array([c for __, c in self.sources], dtype=np.int64)

    def shifted(self, dx, dy):
        '''A copy moved by ``(dx, dy)`` metres.'''
        return Deployment((((x + dx, y + dy, z), count)
                           for (x, y, z), count in self.sources),
                          name=self.name)

    def validate(self, grid):
        '''Raise :class:`DomainError` unless every source is inside
        ``grid`` and above the ground plane.'''
        for position, __ in self.sources:
            __, __, k = nearest_cell(grid, position)
            if k < 1:
                raise DomainError(('Source at {!r} maps to the ground plane'
                    ' of {!r}.').format(position, grid))

    def source_cells(self, grid):
        '''Sphere counts summed per nearest grid cell.

        :rtype tuple:
            ``(cells, counts)``; ``cells`` an ``(m, 3)`` int array in
            first-seen order, ``counts`` a float array of length ``m``.
        '''
        totals = {}
        for position, count in self.sources:
            if count == 0:
                continue
            cell = nearest_cell(grid, position)
            totals[cell] = totals.get(cell, 0) + count
        cells = np.array(list(totals.keys()), dtype=np.intp).reshape(-1, 3)
        counts = np.array(list(totals.values()), dtype=np.float64)
        return cells, counts

    def __len__(self):
        return len(self.sources)

    def __repr__(self):
        return '<Deployment {s.name!r} sources={n} spheres={s.total_spheres}>'.format(
            s=self, n=len(self.sources))


# Presets ---------------------------------------------------------------------


def _axis_points(lo, hi, pitch):
    count = int(round((hi - lo) / pitch))
    if count < 1:
        raise ValueError('Pitch {!r} is wider than the region [{!r}, {!r}].'.format(
            pitch, lo, hi))
    return [lo + (m + 0.5) * pitch for m in range(count)]


def _lattice(x_lo, x_hi, y_lo, y_hi, pitch):
    '''Cell-centered lattice points of a rectangle, y outer, x inner.'''
    xs = _axis_points(x_lo, x_hi, pitch)
    ys = _axis_points(y_lo, y_hi, pitch)
    return [(x, y) for y in ys for x in xs]


def _perimeter(x_half, y_half, pitch):
    '''Points every ``pitch`` along the closed rectangle
    ``[-x_half, x_half] x [-y_half, y_half]``, counterclockwise from
    the lower left corner.'''
    corners = [(-x_half, -y_half), (x_half, -y_half),
               (x_half, y_half), (-x_half, y_half)]
    points = []
    for (x0, y0), (x1, y1) in zip(corners, corners[1:] + corners[:1]):
        length = math.hypot(x1 - x0, y1 - y0)
        count = int(round(length / pitch))
        for m in range(count):
            f = m / count
            points.append((x0 + f * (x1 - x0), y0 + f * (y1 - y0)))
    return points


def _split(total, parts):
    '''Split ``total`` into ``parts`` integers, remainder to the front.'''
    share, remainder = divmod(int(total), parts)
    return [share + (1 if m < remainder else 0) for m in range(parts)]


def _regions(preset, pitch):
    '''Lattice points per region of a preset.'''
    half_length = STRIPE_LENGTH / 2.0
    half_width = STRIPE_WIDTH / 2.0
    if preset == 'central_patch':
        half = CENTRAL_PATCH_SIZE / 2.0
        return [_lattice(-half, half, -half, half, pitch)]
    elif preset == 'uniform_patch':
        return [_lattice(-half_length, half_length, -half_width, half_width, pitch)]
    elif preset == 'four_corners':
        cx, cy = CORNER_CENTER
        half = CORNER_PATCH_SIZE / 2.0
        return [_lattice(sx * cx - half, sx * cx + half,
                         sy * cy - half, sy * cy + half, pitch)
                for sy in (-1, 1) for sx in (-1, 1)]
    elif preset == 'perimeter_stripe':
        inset = PERIMETER_BAND / 2.0
        return [_perimeter(half_length - inset, half_width - inset, pitch)]
    raise ConfigError('Unknown deployment preset {!r}.'.format(preset))


def build_deployment(preset, total_spheres, grid, pitch=DEFAULT_PITCH,
    height=DEFAULT_HEIGHT):
    '''Build one of the :data:`PRESETS` with ``total_spheres`` spheres.

    Spheres are first split across the regions of the preset (only
    ``four_corners`` has more than one), then across the lattice points
    of each region.

    :raises DomainError: a source lies outside ``grid``.
    '''
    if int(total_spheres) < 1:
        raise ValueError('total_spheres must be >= 1, got {!r}.'.format(
            total_spheres))
    if not pitch > 0:
        raise ValueError('pitch must be > 0, got {!r}.'.format(pitch))

    regions = _regions(preset, pitch)
    sources = []
    for points, region_total in zip(regions, _split(total_spheres, len(regions))):
        for (x, y), count in zip(points, _split(region_total, len(points))):
            sources.append(((x, y, height), count))

    deployment = Deployment(sources, name=preset)
    deployment.validate(grid)
    LOG.debug('Built %r.', deployment)
    return deployment


def match_presets(*patterns):
    '''Preset names matching any of the shell-style ``patterns``;
    ``all`` selects every preset. Order follows :data:`PRESETS`.

    :raises ConfigError: a pattern matches nothing.
    '''
    selected = set()
    for pattern in patterns:
        if pattern == 'all':
            matches = PRESETS
        else:
            matches = fnmatch.filter(PRESETS, pattern)
        if not matches:
            raise ConfigError('No deployment preset matches {!r}.'.format(pattern))
        selected.update(matches)
    return [name for name in PRESETS if name in selected]


def is_deployment_file(value):
    return value.lower().endswith('.csv')


# Files -----------------------------------------------------------------------


def read_deployment_csv(path):
    '''Read a deployment from ``x,y,z,sphere_count`` rows.

    :raises ConfigError: malformed file, with the offending line.
    '''
    with open(path, newline='') as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise ConfigError('Empty deployment file {!r}.'.format(path))
        if tuple(h.strip() for h in header) != CSV_HEADER:
            raise ConfigError('Expected header {!r} in {!r}, got {!r}.'.format(
                ','.join(CSV_HEADER), path, header), lineno=1)

        sources = []
        for row in reader:
            if not row or not ''.join(row).strip():
                continue
            try:
                x, y, z, count = row
                count = float(count)
                if count != int(count):
                    raise ValueError('fractional sphere count')
                sources.append(((float(x), float(y), float(z)), int(count)))
            except ValueError as e:
                raise ConfigError('Bad deployment row {!r} in {!r}: {}.'.format(
                    row, path, e), lineno=reader.line_num)

    if not sources:
        raise ConfigError('Deployment file {!r} has no sources.'.format(path))
    return Deployment(sources, name=path)


def write_deployment_csv(path, deployment):
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(CSV_HEADER)
        for (x, y, z), count in deployment.sources:
            writer.writerow((repr(x), repr(y), repr(z), count))
