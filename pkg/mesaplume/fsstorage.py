#-*- coding: utf-8 -*-
'''
File system storage.

Layout below the output directory::

    <label>/seed-<seed>/
        manifest.json
        budget.csv
        cei_vs_threshold.csv
        cei_vs_time.csv
        snapshots/field-<hours>h.snap
        slabs/slab-<hours>h.csv
        error.json                  failed runs only
    aggregate_cei_vs_threshold.csv
    aggregate_cei_vs_time.csv
'''
import csv
import json
import logging
import os
import re

from mesaplume.storage import Storage
from mesaplume.exceptions import StorageError
from mesaplume.grid import write_slab_csv
from mesaplume.grid import write_snapshot
from mesaplume.metrics import AGGREGATE_THRESHOLD_HEADER
from mesaplume.metrics import AGGREGATE_TIME_HEADER
from mesaplume.metrics import read_cei_vs_threshold
from mesaplume.metrics import read_cei_vs_time
from mesaplume.metrics import write_aggregate
from mesaplume.metrics import write_cei_vs_threshold
from mesaplume.metrics import write_cei_vs_time
from mesaplume.solver import BUDGET_HEADER
from mesaplume.utils import delete_if_exists
from mesaplume.utils import hours_label
from mesaplume.utils import require_directory


LOG = logging.getLogger(__name__)

MANIFEST = 'manifest.json'
ERROR = 'error.json'
BUDGET = 'budget.csv'
CEI_VS_THRESHOLD = 'cei_vs_threshold.csv'
CEI_VS_TIME = 'cei_vs_time.csv'
AGGREGATE_VS_THRESHOLD = 'aggregate_cei_vs_threshold.csv'
AGGREGATE_VS_TIME = 'aggregate_cei_vs_time.csv'

_SEED_DIR = re.compile(r'^seed-(-?\d+)$')


class FileSystemStorage(Storage):

    def __init__(self, output_dir):
        self.output_dir = output_dir

    def run_dir(self, label, seed):
        return os.path.join(self.output_dir, label, 'seed-{}'.format(seed))

    def _path(self, label, seed, *parts):
        return os.path.join(self.run_dir(label, seed), *parts)

    def _prepare(self, path):
        require_directory(os.path.dirname(path))
        return path

    # Runs --------------------------------------------------------------------

    def iter_runs(self, predicate=None):
        '''Iterate over ``(label, seed)`` of all runs with a manifest,
        sorted by label and seed.'''
        predicate = predicate or (lambda label: True)
        try:
            labels = sorted(os.listdir(self.output_dir))
        except FileNotFoundError:
            return

        for label in labels:
            base = os.path.join(self.output_dir, label)
            if not os.path.isdir(base) or not predicate(label):
                continue
            seeds = []
            for name in os.listdir(base):
                match = _SEED_DIR.match(name)
                if match and os.path.isfile(os.path.join(base, name, MANIFEST)):
                    seeds.append(int(match.group(1)))
            for seed in sorted(seeds):
                yield label, seed

    def save_manifest(self, label, seed, manifest):
        path = self._prepare(self._path(label, seed, MANIFEST))
        LOG.debug('Save manifest to %r.', path)
        with open(path, 'w') as dst:
            json.dump(manifest, dst, indent=2, sort_keys=True)
            dst.write('\n')
        delete_if_exists(self._path(label, seed, ERROR))
        return path

    def load_manifest(self, label, seed):
        path = self._path(label, seed, MANIFEST)
        try:
            with open(path) as src:
                return json.load(src)
        except FileNotFoundError:
            raise StorageError('No manifest at {!r}.'.format(path))
        except ValueError as e:
            raise StorageError('Malformed manifest {!r}: {}'.format(path, e))

    def save_error(self, label, seed, error):
        path = self._prepare(self._path(label, seed, ERROR))
        report = {
            'type': error.__class__.__name__,
            'message': str(error),
            'step': getattr(error, 'step', None),
        }
        LOG.debug('Save error report to %r.', path)
        with open(path, 'w') as dst:
            json.dump(report, dst, indent=2, sort_keys=True)
            dst.write('\n')
        return path

    # Tables ------------------------------------------------------------------

    def save_budget(self, label, seed, rows):
        path = self._prepare(self._path(label, seed, BUDGET))
        with open(path, 'w', newline='') as dst:
            writer = csv.writer(dst, lineterminator='\n')
            writer.writerow(BUDGET_HEADER)
            for step, *values in rows:
                writer.writerow([step] + [repr(float(v)) for v in values])
        return path

    def save_cei(self, label, seed, result, series):
        by_threshold = self._prepare(self._path(label, seed, CEI_VS_THRESHOLD))
        write_cei_vs_threshold(by_threshold, result)
        by_time = self._path(label, seed, CEI_VS_TIME)
        write_cei_vs_time(by_time, series)
        return by_threshold, by_time

    def load_cei_vs_threshold(self, label, seed):
        return self._load(read_cei_vs_threshold,
                          self._path(label, seed, CEI_VS_THRESHOLD))

    def load_cei_vs_time(self, label, seed):
        return self._load(read_cei_vs_time, self._path(label, seed, CEI_VS_TIME))

    def _load(self, reader, path):
        try:
            return reader(path)
        except FileNotFoundError:
            raise StorageError('Missing {!r}.'.format(path))

    def save_aggregate(self, by_threshold, by_time):
        require_directory(self.output_dir)
        threshold_path = os.path.join(self.output_dir, AGGREGATE_VS_THRESHOLD)
        time_path = os.path.join(self.output_dir, AGGREGATE_VS_TIME)
        write_aggregate(threshold_path, AGGREGATE_THRESHOLD_HEADER, by_threshold)
        write_aggregate(time_path, AGGREGATE_TIME_HEADER, by_time)
        LOG.info('Wrote %r and %r.', threshold_path, time_path)
        return threshold_path, time_path

    # Fields ------------------------------------------------------------------

    def save_snapshot(self, label, seed, field, hours):
        path = self._prepare(self._path(label, seed, 'snapshots',
            'field-{}.snap'.format(hours_label(hours))))
        write_snapshot(path, field)
        return path

    def save_slab(self, label, seed, grid, slab, hours, **meta):
        path = self._prepare(self._path(label, seed, 'slabs',
            'slab-{}.csv'.format(hours_label(hours))))
        write_slab_csv(path, grid, slab, hours=hours, **meta)
        return path

    def image_path(self, label, seed, hours):
        return self._prepare(self._path(label, seed, 'images',
            'slab-{}.png'.format(hours_label(hours))))
