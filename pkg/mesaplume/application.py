#-*- coding: utf-8 -*-
'''
Main application module.

:class:`Mesaplume` runs simulations for a :class:`SimulationConfig` and
persists their artifacts through a :class:`Storage`. Sweeps over
deployments and seeds are independent jobs, processed by a pool of
worker threads; results do not depend on the number of threads.
'''
import fnmatch
import logging
import queue
import threading

from mesaplume import __version__
from mesaplume import kernels
from mesaplume import kinetics
from mesaplume import metrics
from mesaplume import solver
from mesaplume.fsstorage import FileSystemStorage
from mesaplume.utils import run_label
from mesaplume.wind import WindField
from mesaplume.wind import write_wind_csv


LOG = logging.getLogger(__name__)


class RunOutcome:
    '''What happened to one ``(target, seed)`` job.

    :var str label:
    :var int seed:
    :var RunResult result: *None* if the run failed
    :var Exception error: *None* if the run succeeded
    '''

    def __init__(self, label, seed, result=None, error=None, files=None):
        self.label = label
        self.seed = seed
        self.result = result
        self.error = error
        self.files = files or []

    @property
    def ok(self):
        return self.error is None

    def __repr__(self):
        return '<RunOutcome {s.label}/seed-{s.seed} ok={s.ok}>'.format(s=self)


class Mesaplume:
    '''The main application class.

    :var SimulationConfig config:
    :var Storage storage:
        Where artifacts go; defaults to a :class:`FileSystemStorage`
        below ``config.output_dir``.
    :var int run_threads:
        The number of worker threads for sweeps.
    '''

    def __init__(self, config, storage=None, run_threads=None):
        self.config = config
        self.storage = storage or FileSystemStorage(config.output_dir)
        self.run_threads = max(1, run_threads or config.run_threads)

        LOG.debug('config: %r', self.config)
        LOG.debug('storage: %r', self.storage)
        LOG.debug('run_threads: %s', self.run_threads)

    # Runs --------------------------------------------------------------------

    def run_one(self, target, seed):
        '''Run a single simulation and write its artifacts.

        :param str target: preset name or deployment CSV path
        :rtype RunOutcome:
        :raises MesaplumeError:
            Whatever aborted the run, after ``error.json`` was written.
        '''
        label = run_label(target)
        try:
            config = self.config.for_run(target, seed)
            deployment = config.deployment(target)
            LOG.info('Run %s, seed %s: %s spheres at %s sources, %s steps.',
                label, seed, deployment.total_spheres, len(deployment),
                config.solver.total_steps)

            acc = metrics.CeiAccumulator(config.grid, config.thresholds,
                subvolume=config.subvolume,
                timeseries_every=config.timeseries_every)
            snapshot_steps = config.snapshot_steps
            result = solver.run(config.grid, config.solver, config.wind,
                config.release, deployment, cei=acc,
                snapshot_steps=snapshot_steps, slab=config.slab,
                budget_every=config.budget_every)
        except Exception as err:
            LOG.error('Run %s, seed %s failed: %s', label, seed, err)
            LOG.debug(err, exc_info=True)
            self.storage.save_error(label, seed, err)
            raise
        except KeyboardInterrupt as err:
            LOG.warning('Run %s, seed %s interrupted.', label, seed)
            self.storage.save_error(label, seed, err)
            raise

        files = self._save_run(label, seed, config, deployment, result,
                               snapshot_steps)
        return RunOutcome(label, seed, result=result, files=files)

    def _save_run(self, label, seed, config, deployment, result, snapshot_steps):
        store = self.storage
        files = [store.save_budget(label, seed, result.budget_trace)]

        series = metrics.cei_timeseries(result.cei, config.timeseries_threshold)
        files.extend(store.save_cei(label, seed, result.cei.finalize(), series))

        for step in sorted(result.snapshots):
            hours = snapshot_steps[step]
            if 'snapshot' in config.formats:
                files.append(store.save_snapshot(label, seed,
                    result.snapshots[step], hours))
            if 'slab' in config.formats:
                z_center, half_width = config.slab
                files.append(store.save_slab(label, seed, config.grid,
                    result.slabs[step], hours, slab_center=z_center,
                    slab_half_width=half_width, time_s=step * config.solver.dt))
            if config.render:
                files.extend(self._render_slab(label, seed, config, deployment,
                    result.slabs[step], hours))

        imbalance = result.budget.imbalance
        if abs(imbalance) > result.budget.released:
            LOG.warning('Run %s, seed %s: mass budget off by %.4g, more than the'
                ' %.4g released.', label, seed, imbalance, result.budget.released)

        manifest = {
            'version': __version__,
            'label': label,
            'seed': seed,
            'config': config.as_dict(),
            'backend': kernels.resolve_backend(config.solver.backend),
            'cfl': result.cfl.as_dict(),
            'steps': result.steps,
            'max_velocity': list(result.max_velocity),
            'budget': result.budget.as_dict(),
            'budget_imbalance': result.budget.imbalance,
            'clamped_cells': result.clamped_cells,
        }
        files.append(store.save_manifest(label, seed, manifest))
        LOG.info('Run %s, seed %s done: final CEI(%g) = %.4g.', label, seed,
            config.timeseries_threshold,
            result.cei.finalize().at(config.timeseries_threshold))
        return files

    def _render_slab(self, label, seed, config, deployment, slab, hours):
        from mesaplume import render
        try:
            path = self.storage.image_path(label, seed, hours)
            return [render.render_heatmap(path, slab,
                xs=config.grid.axis('x'), ys=config.grid.axis('y'),
                footprint=[p for p, __ in deployment.sources])]
        except Exception as err:
            LOG.warning('Could not render slab at %s h: %s', hours, err)
            LOG.debug(err, exc_info=True)
            return []

    def sweep(self, targets=None, seeds=None):
        '''Run every ``target`` with every seed.

        Jobs are processed by ``run_threads`` worker threads if there is
        more than one job. A failed job does not stop the others.

        :rtype list:
            :class:`RunOutcome` per job, in ``targets x seeds`` order.
        '''
        targets = targets or self.config.targets()
        seeds = seeds or [self.config.seed]
        jobs = [(t, s) for t in targets for s in seeds]
        outcomes = [None] * len(jobs)
        started = set()

        tasks = queue.Queue()
        for index, job in enumerate(jobs):
            tasks.put((index, job))

        def work():
            done = False
            while not done:
                try:
                    index, job = tasks.get(block=False)
                except queue.Empty:
                    done = True
                else:
                    run_job(index, *job)

        def run_job(index, target, seed):
            started.add(index)
            try:
                outcomes[index] = self.run_one(target, seed)
            except Exception as err:
                outcomes[index] = RunOutcome(run_label(target), seed, error=err)
            finally:
                tasks.task_done()

        num_workers = min(self.run_threads, len(jobs))
        use_threading = len(jobs) > 1 and num_workers > 1

        if use_threading:
            LOG.debug('Using %s run-threads.', num_workers)
            for index in range(1, num_workers + 1):
                threading.Thread(
                    name='run-thread-{}'.format(index),
                    daemon=True,
                    target=work,
                ).start()
        else:
            work()

        try:
            tasks.join()
        except KeyboardInterrupt as err:
            self._save_interrupted(jobs, started, outcomes, err)
            raise
        failed = [o for o in outcomes if not o.ok]
        LOG.info('%s of %s runs succeeded.', len(outcomes) - len(failed), len(outcomes))
        return outcomes

    def _save_interrupted(self, jobs, started, outcomes, err):
        '''error.json for every job a worker thread was still running.'''
        for index in sorted(started):
            if outcomes[index] is None:
                target, seed = jobs[index]
                label = run_label(target)
                LOG.warning('Run %s, seed %s interrupted.', label, seed)
                self.storage.save_error(label, seed, err)

    # Analysis ----------------------------------------------------------------

    def aggregate(self, *patterns):
        '''Mean and standard deviation of the CEI tables across seeds,
        per run label matching ``patterns`` (all if none given).

        :rtype tuple:
            Paths of the two aggregate CSV files.
        '''
        patterns = patterns or ('*',)

        def predicate(label):
            return any(fnmatch.fnmatch(label, p) for p in patterns)

        seeds_by_label = {}
        for label, seed in self.storage.iter_runs(predicate=predicate):
            seeds_by_label.setdefault(label, []).append(seed)
        if not seeds_by_label:
            LOG.warning('No runs found to aggregate.')

        by_threshold, by_time = [], []
        for label, seeds in seeds_by_label.items():
            LOG.info('Aggregate %s over %s seeds.', label, len(seeds))
            by_threshold.append((label, metrics.aggregate_tables(
                self.storage.load_cei_vs_threshold(label, s) for s in seeds)))
            by_time.append((label, metrics.aggregate_tables(
                self.storage.load_cei_vs_time(label, s) for s in seeds)))
        return self.storage.save_aggregate(by_threshold, by_time)

    def fit(self, dataset_path):
        '''Fit the release model to a ``time_hours,fraction`` CSV.

        :rtype tuple:
            ``(FitResult, report_text)``
        '''
        data = kinetics.read_release_csv(dataset_path)
        result = kinetics.fit_korsmeyer_peppas(data)
        return result, kinetics.format_fit_report(result)

    def check(self):
        '''Summary of the validated config: CFL report, Chapman-Enskog
        estimate, inventory and the run targets.'''
        config = self.config
        lines = [
            '[cfl]',
            config.cfl.describe(),
            '',
            '[diffusion]',
            'configured       = {!r} m^2/s'.format(config.solver.diffusion_coefficient),
            'chapman-enskog   = {:.6g} m^2/s'.format(
                kinetics.chapman_enskog_diffusion(config.gas)),
            '',
            '[inventory]',
        ]
        lines.extend('{:<20} = {:.6g}'.format(key, value)
                     for key, value in config.inventory.as_dict().items())
        lines.extend([
            'total_spheres        = {}'.format(config.total_spheres),
            '',
            '[runs]',
            'targets          = {}'.format(' '.join(config.targets())),
            'steps            = {}'.format(config.solver.total_steps),
        ])
        return '\n'.join(lines)

    def wind_dump(self, path, step=0):
        '''Write the wind field of one step to a CSV file.'''
        config = self.config
        field = WindField(config.wind, config.grid)
        write_wind_csv(path, config.grid, field.sample(step, step * config.solver.dt))
        LOG.info('Wrote wind field of step %s to %r.', step, path)
        return path
