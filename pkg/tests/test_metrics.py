#!/usr/bin/env python
# -*- coding: utf-8 -*-

'''
test_metrics
------------

Tests for the Coverage Effectiveness Index.
'''
import numpy as np
import pytest

from mesaplume import metrics
from mesaplume.exceptions import DomainError
from mesaplume.exceptions import GridMismatchError
from mesaplume.exceptions import StorageError
from mesaplume.grid import ConcentrationField
from mesaplume.metrics import CeiAccumulator
from mesaplume.metrics import Subvolume

from tests import common


@pytest.fixture
def grid():
    return common.cube_grid(9)


def random_fields(grid, count, seed=0):
    rng = np.random.default_rng(seed)
    return [ConcentrationField(grid, 10.0 ** rng.uniform(0, 12, grid.shape),
                               time=2.0 * (n + 1))
            for n in range(count)]


def test_log_thresholds():
    values = metrics.log_thresholds(1e4, 1e14, 41)
    assert values.size == 41
    assert values[0] == 1e4
    assert values[-1] == 1e14
    assert values[4] == pytest.approx(1e5)
    assert np.all(np.diff(values) > 0)


@pytest.mark.parametrize('args', [(0.0, 1.0, 5), (10.0, 1.0, 5), (1.0, 10.0, 1)])
def test_invalid_log_thresholds(args):
    with pytest.raises(ValueError):
        metrics.log_thresholds(*args)


@pytest.mark.parametrize('thresholds', [[], [1.0, 1.0], [0.0, 1.0], [5.0, 2.0]])
def test_invalid_thresholds(grid, thresholds):
    with pytest.raises(ValueError):
        CeiAccumulator(grid, thresholds)


def test_cei_bounds_and_monotonic(grid):
    thresholds = metrics.log_thresholds(1.0, 1e12, 25)
    acc = CeiAccumulator(grid, thresholds)
    for field in random_fields(grid, 20):
        acc.accumulate(field)
        fractions = acc.fractions()
        assert np.all(fractions >= 0.0) and np.all(fractions <= 1.0)
        assert np.all(np.diff(fractions) <= 0.0)
    result = acc.finalize()
    assert result.cei[0] == 1.0
    assert result.steps == 20
    assert result.time == 40.0


def test_threshold_equal_counts_as_covered(grid):
    field = ConcentrationField(grid)
    field.values[1, 2, 3] = 5.0
    acc = CeiAccumulator(grid, [4.0, 5.0, 6.0])
    acc.accumulate(field)
    assert acc.finalize().cei.tolist() == [1.0 / 729, 1.0 / 729, 0.0]


def test_streamed_equals_brute_force(grid):
    thresholds = metrics.log_thresholds(10.0, 1e11, 11)
    box = Subvolume(-2.0, 2.0, -4.0, 0.0, 1.0, 3.0)
    fields = random_fields(grid, 50, seed=4)
    acc = CeiAccumulator(grid, thresholds, subvolume=box)
    for field in fields:
        acc.accumulate(field)
    brute = metrics.cei_from_fields(fields, thresholds, subvolume=box)
    assert np.array_equal(acc.finalize().cei, brute.cei)
    assert acc.cell_count == 5 * 5 * 3


def test_subvolume_partition_adds_up(grid):
    thresholds = metrics.log_thresholds(10.0, 1e11, 11)
    parts = [Subvolume(x_lo, x_hi, None, None, z_lo, z_hi)
             for x_lo, x_hi in ((-4.0, -1.0), (0.0, 4.0))
             for z_lo, z_hi in ((0.0, 3.0), (4.0, 8.0))]
    whole = CeiAccumulator(grid, thresholds)
    pieces = [CeiAccumulator(grid, thresholds, subvolume=box) for box in parts]
    for field in random_fields(grid, 12, seed=6):
        whole.accumulate(field)
        for acc in pieces:
            acc.accumulate(field)
        assert sum(acc.cell_count for acc in pieces) == whole.cell_count
        assert np.array_equal(sum(acc._covered for acc in pieces), whole._covered)

    weighted = sum(acc.cell_count * acc.finalize().cei for acc in pieces)
    assert np.allclose(weighted / whole.cell_count, whole.finalize().cei,
                       rtol=1e-12, atol=0.0)


def test_timeseries(grid):
    thresholds = [1e3, 1e6]
    acc = CeiAccumulator(grid, thresholds, timeseries_every=5)
    fields = random_fields(grid, 20, seed=2)
    for field in fields:
        acc.accumulate(field)
    series = metrics.cei_timeseries(acc, 1e6)
    assert [t for t, __ in series] == [10.0, 20.0, 30.0, 40.0]
    expected = metrics.cei_from_fields(fields[:10], thresholds).at(1e6)
    assert series[1][1] == expected
    assert series[-1][1] == acc.finalize().at(1e6)
    with pytest.raises(ValueError):
        acc.timeseries(5.0)


def test_grid_mismatch(grid):
    acc = CeiAccumulator(grid, [1.0])
    with pytest.raises(GridMismatchError):
        acc.accumulate(ConcentrationField(common.cube_grid(7)))


def test_finalize_without_steps(grid):
    with pytest.raises(ValueError):
        CeiAccumulator(grid, [1.0]).finalize()


def test_subvolume_parse():
    assert Subvolume.parse('all').is_whole
    assert Subvolume.parse('').is_whole
    box = Subvolume.parse('-10 10, -5 5, 0 2')
    assert box.bounds == (-10.0, 10.0, -5.0, 5.0, 0.0, 2.0)
    assert Subvolume.parse(box.describe()).bounds == box.bounds
    with pytest.raises(ValueError):
        Subvolume.parse('1 2 3')
    with pytest.raises(ValueError):
        Subvolume(5.0, 1.0)


def test_subvolume_outside_grid(grid):
    with pytest.raises(DomainError):
        Subvolume(100.0, 200.0).slices(grid)


def test_cei_files(tmpdir, grid):
    acc = CeiAccumulator(grid, [1e3, 1e6, 1e9], timeseries_every=2)
    for field in random_fields(grid, 6):
        acc.accumulate(field)
    result = acc.finalize()
    by_threshold = str(tmpdir.join('cei_vs_threshold.csv'))
    by_time = str(tmpdir.join('cei_vs_time.csv'))
    metrics.write_cei_vs_threshold(by_threshold, result)
    metrics.write_cei_vs_time(by_time, acc.timeseries(1e6))

    assert metrics.read_cei_vs_threshold(by_threshold) == result.rows()
    assert metrics.read_cei_vs_time(by_time) == acc.timeseries(1e6)
    assert tmpdir.join('cei_vs_threshold.csv').readlines()[0] == 'threshold,cei\n'


def test_read_bad_cei_file(tmpdir):
    path = tmpdir.join('cei.csv')
    path.write('threshold,value\n1,0.5\n')
    with pytest.raises(StorageError):
        metrics.read_cei_vs_threshold(str(path))
    path.write('threshold,cei\n1,half\n')
    with pytest.raises(StorageError):
        metrics.read_cei_vs_threshold(str(path))


def test_aggregate_tables():
    rows = metrics.aggregate_tables([
        [(1.0, 0.2), (10.0, 0.1)],
        [(1.0, 0.4), (10.0, 0.1)],
    ])
    assert rows[0] == (1.0, pytest.approx(0.3), pytest.approx(0.1), 2)
    assert rows[1] == (10.0, pytest.approx(0.1), pytest.approx(0.0), 2)
    assert metrics.aggregate_tables([]) == []


def test_aggregate_mismatched_tables():
    with pytest.raises(ValueError):
        metrics.aggregate_tables([[(1.0, 0.2)], [(2.0, 0.2)]])


def test_write_aggregate(tmpdir):
    path = tmpdir.join('aggregate.csv')
    metrics.write_aggregate(str(path), metrics.AGGREGATE_THRESHOLD_HEADER,
        [('central_patch', [(1.0, 0.5, 0.25, 3)])])
    assert path.read() == ('preset,threshold,mean,std,runs\n'
                           'central_patch,1.0,0.5,0.25,3\n')
