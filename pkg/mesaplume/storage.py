#-*- coding: utf-8 -*-
'''
Definition for the storage interface.

A Storage implementation is responsible for persisting run artifacts:
- the run manifest (config echo, seed, version, CFL report)
- the mass budget trace
- CEI tables (versus threshold and versus time)
- field snapshots and slab means
- an error report for failed runs

Runs are addressed by ``(label, seed)``, where ``label`` is the preset
name or the name of the deployment file.
'''
import logging

from mesaplume.exceptions import StorageError


LOG = logging.getLogger(__name__)


class Storage:

    # Runs --------------------------------------------------------------------

    def iter_runs(self, predicate=None):
        '''Iterate over ``(label, seed)`` of all stored runs
        whose label matches ``predicate``.'''
        raise StorageError('Not Implemented')

    def save_manifest(self, label, seed, manifest):
        raise StorageError('Not Implemented')

    def load_manifest(self, label, seed):
        raise StorageError('Not Implemented')

    def save_error(self, label, seed, error):
        '''Record why a run failed.'''
        raise StorageError('Not Implemented')

    # Tables ------------------------------------------------------------------

    def save_budget(self, label, seed, rows):
        raise StorageError('Not Implemented')

    def save_cei(self, label, seed, result, series):
        '''Save the final CEI per threshold and the CEI time series.'''
        raise StorageError('Not Implemented')

    def load_cei_vs_threshold(self, label, seed):
        raise StorageError('Not Implemented')

    def load_cei_vs_time(self, label, seed):
        raise StorageError('Not Implemented')

    def save_aggregate(self, by_threshold, by_time):
        raise StorageError('Not Implemented')

    # Fields ------------------------------------------------------------------

    def save_snapshot(self, label, seed, field, hours):
        raise StorageError('Not Implemented')

    def save_slab(self, label, seed, grid, slab, hours, **meta):
        raise StorageError('Not Implemented')

    def image_path(self, label, seed, hours):
        '''Where the rendered slab at ``hours`` goes.'''
        raise StorageError('Not Implemented')
