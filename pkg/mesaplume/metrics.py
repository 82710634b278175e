#-*- coding: utf-8 -*-
'''
Coverage Effectiveness Index (CEI)::

    CEI(t, C_th) = 1/t * integral_0^t ( 1/V * integral_V 1(C >= C_th) dV ) dtau

On the grid the inner integral is the fraction of cells in the
subvolume at or above the threshold, the outer one the mean over the
completed steps. Cells are counted with integers so the streamed value
equals a recomputation from stored fields exactly.
'''
import csv
import logging
import math

import numpy as np

from mesaplume import kernels
from mesaplume.exceptions import DomainError
from mesaplume.exceptions import GridMismatchError
from mesaplume.exceptions import StorageError


LOG = logging.getLogger(__name__)


THRESHOLD_HEADER = ('threshold', 'cei')
TIME_HEADER = ('time_s', 'cei')
AGGREGATE_THRESHOLD_HEADER = ('preset', 'threshold', 'mean', 'std', 'runs')
AGGREGATE_TIME_HEADER = ('preset', 'time_s', 'mean', 'std', 'runs')

_EPS = 1e-9


class Subvolume:
    '''Axis-aligned box in metres, bounds inclusive.
    Use :meth:`whole` for the complete domain.'''

    def __init__(self, x_min=None, x_max=None, y_min=None, y_max=None,
        z_min=None, z_max=None):
        self.bounds = (x_min, x_max, y_min, y_max, z_min, z_max)
        for lo, hi in zip(self.bounds[::2], self.bounds[1::2]):
            if lo is not None and hi is not None and hi < lo:
                raise ValueError('Empty subvolume {!r}.'.format(self.bounds))

    @classmethod
    def whole(cls):
        return cls()

    @classmethod
    def parse(cls, text):
        '''``all`` or six numbers ``x_min x_max y_min y_max z_min z_max``.'''
        text = (text or '').strip()
        if text in ('', 'all'):
            return cls.whole()
        values = [float(v) for v in text.replace(',', ' ').split()]
        if len(values) != 6:
            raise ValueError(('Subvolume needs six bounds'
                ' (x_min x_max y_min y_max z_min z_max), got {!r}.').format(text))
        return cls(*values)

    @property
    def is_whole(self):
        return all(b is None for b in self.bounds)

    def slices(self, grid):
        '''Index slices of the cells inside this box.

        :raises DomainError: no cell of ``grid`` lies inside.
        '''
        result = []
        for name, lo, hi in zip('xyz', self.bounds[::2], self.bounds[1::2]):
            axis = grid.axis(name)
            step = grid.spacing['xyz'.index(name)]
            inside = np.ones(axis.shape, dtype=bool)
            if lo is not None:
                inside &= axis >= lo - _EPS * step
            if hi is not None:
                inside &= axis <= hi + _EPS * step
            indices = np.nonzero(inside)[0]
            if indices.size == 0:
                raise DomainError('Subvolume {!r} holds no cells of {!r}.'.format(
                    self, grid))
            result.append(slice(int(indices[0]), int(indices[-1]) + 1))
        return tuple(result)

    def describe(self):
        if self.is_whole:
            return 'all'
        return ' '.join(repr(float(b)) if b is not None else 'nan'
                        for b in self.bounds)

    def __repr__(self):
        return '<Subvolume {}>'.format(self.describe())


def log_thresholds(lo, hi, count):
    '''``count`` log-spaced thresholds from ``lo`` to ``hi`` inclusive.'''
    if not 0 < lo < hi:
        raise ValueError('Need 0 < lo < hi, got {!r}, {!r}.'.format(lo, hi))
    if count < 2:
        raise ValueError('Need at least 2 thresholds, got {!r}.'.format(count))
    values = np.logspace(math.log10(lo), math.log10(hi), int(count))
    values[0], values[-1] = lo, hi
    return values


def _check_thresholds(thresholds):
    thresholds = np.asarray(thresholds, dtype=np.float64).ravel()
    if thresholds.size == 0:
        raise ValueError('At least one threshold is required.')
    if not np.all(thresholds > 0):
        raise ValueError('Thresholds must be > 0.')
    if not np.all(np.diff(thresholds) > 0):
        raise ValueError('Thresholds must be strictly increasing.')
    return thresholds


def _covered_counts(values, thresholds):
    '''Per threshold, the number of ``values >= threshold``.'''
    # bucket b: thresholds[:b] <= value < thresholds[b:]
    buckets = np.searchsorted(thresholds, values.ravel(), side='right')
    per_bucket = np.bincount(buckets, minlength=thresholds.size + 1)
    return np.cumsum(per_bucket[::-1])[::-1][1:].astype(np.int64)


class CeiResult:
    '''Final CEI per threshold.

    :var ndarray thresholds:
    :var ndarray cei:
    :var int steps:
    :var float time: seconds covered by the average
    '''

    def __init__(self, thresholds, cei, steps, time):
        self.thresholds = np.asarray(thresholds, dtype=np.float64)
        self.cei = np.asarray(cei, dtype=np.float64)
        self.steps = steps
        self.time = time

    def at(self, threshold):
        return float(self.cei[_threshold_index(self.thresholds, threshold)])

    def rows(self):
        return list(zip(self.thresholds.tolist(), self.cei.tolist()))

    def __repr__(self):
        return '<CeiResult thresholds={} steps={}>'.format(
            self.thresholds.size, self.steps)


def _threshold_index(thresholds, threshold):
    matches = np.nonzero(np.isclose(thresholds, threshold, rtol=1e-12, atol=0.0))[0]
    if matches.size == 0:
        raise ValueError('Unknown threshold {!r}.'.format(threshold))
    return int(matches[0])


class CeiAccumulator:
    '''Streams fields into running CEI sums.

    :param GridSpec grid:
    :param list thresholds: strictly increasing, > 0, molecules/m^3
    :param Subvolume subvolume: defaults to the whole domain
    :param int timeseries_every:
        Record the running average every this many accumulated steps.
    '''

    def __init__(self, grid, thresholds, subvolume=None, timeseries_every=1):
        self.grid = grid
        self.thresholds = _check_thresholds(thresholds)
        self.subvolume = subvolume or Subvolume.whole()
        self.timeseries_every = max(1, int(timeseries_every))
        self._slices = self.subvolume.slices(grid)
        self.cell_count = int(np.prod([s.stop - s.start for s in self._slices]))
        self._covered = np.zeros(self.thresholds.size, dtype=np.int64)
        self.steps_seen = 0
        self.last_time = 0.0
        self._series = []

    def accumulate(self, field, step=None):
        '''Add the covered fraction of ``field`` for every threshold.

        :raises GridMismatchError: ``field`` lives on another grid.
        '''
        if field.grid != self.grid:
            raise GridMismatchError('Field on {!r}, accumulator on {!r}.'.format(
                field.grid, self.grid))
        view = field.values[self._slices]
        if kernels.HAVE_NUMBA:
            kernels.covered_counts(view, self.thresholds, self._covered)
        else:
            self._covered += _covered_counts(view, self.thresholds)
        self.steps_seen += 1
        self.last_time = field.time
        if self.steps_seen % self.timeseries_every == 0:
            self._series.append((field.time, self.steps_seen, self._covered.copy()))

    def fractions(self):
        '''Current running averages per threshold.'''
        if self.steps_seen == 0:
            return np.zeros(self.thresholds.size)
        return self._covered / float(self.steps_seen * self.cell_count)

    def finalize(self):
        '''
        :rtype CeiResult:
        :raises ValueError: nothing was accumulated.
        '''
        if self.steps_seen == 0:
            raise ValueError('No steps accumulated.')
        return CeiResult(self.thresholds, self.fractions(), self.steps_seen,
                         self.last_time)

    def timeseries(self, threshold):
        return cei_timeseries(self, threshold)

    def __repr__(self):
        return '<CeiAccumulator thresholds={} cells={} steps={}>'.format(
            self.thresholds.size, self.cell_count, self.steps_seen)


def cei_timeseries(acc, threshold):
    '''Running CEI at every recorded step for one of the accumulator's
    thresholds, as ``(time_s, cei)`` pairs.

    :raises ValueError: ``threshold`` is not one of ``acc.thresholds``.
    '''
    index = _threshold_index(acc.thresholds, threshold)
    return [(time, covered[index] / float(steps * acc.cell_count))
            for time, steps, covered in acc._series]


def cei_from_fields(fields, thresholds, subvolume=None):
    '''Brute-force CEI from a sequence of stored fields.'''
    fields = list(fields)
    if not fields:
        raise ValueError('No fields given.')
    thresholds = _check_thresholds(thresholds)
    subvolume = subvolume or Subvolume.whole()
    slices = subvolume.slices(fields[0].grid)
    covered = np.zeros(thresholds.size, dtype=np.int64)
    cells = 0
    for field in fields:
        values = field.values[slices]
        cells = values.size
        for index, threshold in enumerate(thresholds):
            covered[index] += np.count_nonzero(values >= threshold)
    return CeiResult(thresholds, covered / float(len(fields) * cells),
                     len(fields), fields[-1].time)


# Files -----------------------------------------------------------------------


def _write_rows(path, header, rows):
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([v if isinstance(v, (str, int)) else repr(float(v))
                             for v in row])


def _read_rows(path, header, types):
    with open(path, newline='') as f:
        reader = csv.reader(f)
        try:
            found = next(reader)
        except StopIteration:
            raise StorageError('Empty file {!r}.'.format(path))
        if tuple(h.strip() for h in found) != header:
            raise StorageError('Expected header {!r} in {!r}, got {!r}.'.format(
                ','.join(header), path, found))
        rows = []
        for row in reader:
            if not row:
                continue
            try:
                rows.append(tuple(t(v) for t, v in zip(types, row)))
            except ValueError:
                raise StorageError('Malformed row {!r} in {!r} (line {}).'.format(
                    row, path, reader.line_num))
    return rows


def write_cei_vs_threshold(path, result):
    _write_rows(path, THRESHOLD_HEADER, result.rows())


def read_cei_vs_threshold(path):
    return _read_rows(path, THRESHOLD_HEADER, (float, float))


def write_cei_vs_time(path, series):
    _write_rows(path, TIME_HEADER, series)


def read_cei_vs_time(path):
    return _read_rows(path, TIME_HEADER, (float, float))


# Aggregation -----------------------------------------------------------------


def aggregate_tables(tables):
    '''Mean and population standard deviation across runs.

    :param list tables:
        Per run, a list of ``(key, value)`` rows with identical keys
        (thresholds or times).
    :rtype list:
        ``(key, mean, std, runs)`` rows.
    '''
    tables = [list(t) for t in tables]
    if not tables:
        return []
    keys = [row[0] for row in tables[0]]
    for table in tables[1:]:
        other = [row[0] for row in table]
        if len(other) != len(keys) or not np.allclose(other, keys, rtol=1e-12, atol=0.0):
            raise ValueError('Runs do not share the same thresholds/times.')
    values = np.array([[row[1] for row in table] for table in tables])
    means = values.mean(axis=0)
    stds = values.std(axis=0)
    return [(key, float(m), float(s), len(tables))
            for key, m, s in zip(keys, means, stds)]


def write_aggregate(path, header, rows_by_preset):
    '''Write ``preset,<key>,mean,std,runs`` rows.'''
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(header)
        for preset, rows in rows_by_preset:
            for key, mean, std, runs in rows:
                writer.writerow((preset, repr(float(key)), repr(mean),
                                 repr(std), runs))
