#-*- coding: utf-8 -*-
'''
Simulation configuration.

Configs are ini files. The packaged ``baseline.conf`` holds every
option with its default; a user file is read on top of it and command
line overrides are applied last. Values are coerced per section with the
converters in ``CFG_TYPES``.

The resolved values (derived ones like ``total_steps`` included) are
kept as strings in :attr:`SimulationConfig.sections`, which is what a
run manifest echoes. :func:`parse_config` accepts such a manifest and
rebuilds the identical config.
'''
import configparser
import json
import logging
import os
from importlib import resources

import numpy as np

from mesaplume.exceptions import ConfigError
from mesaplume.exceptions import DomainError
from mesaplume.exceptions import StabilityError
from mesaplume.grid import GridSpec
from mesaplume.grid import slab_levels
from mesaplume.kinetics import GasPairSpec
from mesaplume.kinetics import MicrosphereSpec
from mesaplume.kinetics import ReleaseModel
from mesaplume.kinetics import SECONDS_PER_HOUR
from mesaplume.kinetics import chapman_enskog_diffusion
from mesaplume.kinetics import microsphere_inventory
from mesaplume.metrics import Subvolume
from mesaplume.metrics import log_thresholds
from mesaplume.scenarios import build_deployment
from mesaplume.scenarios import is_deployment_file
from mesaplume.scenarios import match_presets
from mesaplume.scenarios import read_deployment_csv
from mesaplume.solver import SolverConfig
from mesaplume.solver import precheck
from mesaplume.wind import WindModelParams


LOG = logging.getLogger(__name__)


BASELINE = 'baseline'
# alternative names of packaged configs
CONFIG_ALIASES = {
    'paper_baseline': BASELINE,
}
CONFIG_PACKAGE = 'mesaplume'
CONFIG_DIR = 'configs'
CHAPMAN_ENSKOG = 'chapman-enskog'
FORMATS = ('snapshot', 'slab')


def _mk_config_parser():
    '''No interpolation, option names keep their case.'''
    cfg = configparser.ConfigParser(interpolation=None)
    cfg.optionxform = str
    return cfg


# Converters ------------------------------------------------------------------


def _boolean(strval):
    if strval is None:
        return False
    elif strval.lower() in ('1', 'y', 'yes', 'true', 'on'):
        return True
    elif strval.lower() in ('0', 'n', 'no', 'false', 'off'):
        return False
    raise ValueError('not a boolean: {!r}'.format(strval))


def _whitespace_list(strval):
    if strval is None:
        return []
    else:
        return strval.split()


def _float_list(strval):
    return [float(v) for v in _whitespace_list(strval)]


def _optional(conv):
    def convert(strval):
        if strval is None or not strval.strip():
            return None
        return conv(strval)
    return convert


def _integer(strval):
    value = float(strval)
    if value != int(value):
        raise ValueError('not an integer: {!r}'.format(strval))
    return int(value)


def _diffusion(strval):
    if strval.strip().lower() == CHAPMAN_ENSKOG:
        return CHAPMAN_ENSKOG
    return float(strval)


def _path(strval):
    if strval is None or not strval.strip():
        return None
    return os.path.normpath(os.path.expanduser(strval.strip()))


CFG_TYPES = {
    'simulation': {
        'seed': int,
        'preset': str,
        'deployment_csv': _path,
        'total_spheres': _optional(_integer),
    },
    'grid': {
        'x_min': float, 'x_max': float,
        'y_min': float, 'y_max': float,
        'z_min': float, 'z_max': float,
        'dx': float, 'dy': float, 'dz': float,
    },
    'solver': {
        'diffusion_coefficient': _diffusion,
        'dt': float,
        'duration_hours': float,
        'total_steps': _optional(_integer),
        'cfl_runtime_check': _boolean,
        'noise_clamp_sigmas': float,
        'nan_check_every': int,
        'budget_every': int,
        'progress_every': int,
        'backend': str,
    },
    'wind': {
        'mean_speed': float,
        'diurnal_amplitude': float,
        'diurnal_period': float,
        'speed_noise_variance': float,
        'direction_noise_variance': float,
        'vertical_scale': float,
        'reference_height': float,
        'speed_noise_clamp': float,
    },
    'release': {
        'k': float,
        'n': float,
        'molecules_per_sphere': _optional(float),
    },
    'microspheres': {
        'diameter': float,
        'matrix_density': float,
        'cargo_density': float,
        'cargo_mass_fraction': float,
        'cargo_molar_mass': float,
        'total_microsphere_mass': float,
        'total_cargo_mass': float,
    },
    'gas': {
        'molar_mass_a': float,
        'molar_mass_b': float,
        'collision_diameter_a': float,
        'collision_diameter_b': float,
        'temperature': float,
        'pressure': float,
        'collision_integral': float,
    },
    'deployment': {
        'pitch': float,
        'height': float,
    },
    'metrics': {
        'thresholds': _float_list,
        'threshold_min': float,
        'threshold_max': float,
        'threshold_count': int,
        'subvolume': Subvolume.parse,
        'snapshot_times': _float_list,
        'slab_center': float,
        'slab_half_width': float,
        'timeseries_every': int,
        'timeseries_threshold': float,
    },
    'output': {
        'directory': _path,
        'formats': _whitespace_list,
        'run_threads': int,
        'render': _boolean,
    },
}


# Reading ---------------------------------------------------------------------


def packaged_configs():
    '''Names of the configs shipped with the package, aliases included.'''
    folder = resources.files(CONFIG_PACKAGE).joinpath(CONFIG_DIR)
    names = {entry.name[:-len('.conf')] for entry in folder.iterdir()
             if entry.name.endswith('.conf')}
    names.update(alias for alias, name in CONFIG_ALIASES.items() if name in names)
    return sorted(names)


def _packaged_text(name):
    name = CONFIG_ALIASES.get(name, name)
    return resources.files(CONFIG_PACKAGE).joinpath(
        CONFIG_DIR).joinpath('{}.conf'.format(name)).read_text(encoding='utf-8')


def _read_text(cfg, text, source):
    try:
        cfg.read_string(text, source=source)
    except configparser.ParsingError as e:
        lineno = e.errors[0][0] if e.errors else None
        raise ConfigError('Cannot parse config {!r}.'.format(source), lineno=lineno)
    except configparser.Error as e:
        raise ConfigError('Cannot parse config {!r}: {}'.format(
            source, e.message), lineno=getattr(e, 'lineno', None))


def _read_manifest(cfg, path):
    try:
        with open(path) as f:
            manifest = json.load(f)
        sections = manifest['config']
    except (ValueError, KeyError, TypeError) as e:
        raise ConfigError('{!r} is not a run manifest: {}'.format(path, e))
    cfg.read_dict(sections, source=path)


def _read_source(cfg, source):
    '''Layer a config name, ini file or manifest onto ``cfg``.'''
    if not os.path.exists(source):
        if os.sep not in source and source in packaged_configs():
            LOG.debug('Read packaged config %r.', source)
            _read_text(cfg, _packaged_text(source), source)
            return
        raise ConfigError('No config file exists at {!r}.'.format(source))

    if source.lower().endswith('.json'):
        LOG.debug('Read run manifest %r.', source)
        _read_manifest(cfg, source)
        return

    with open(source, encoding='utf-8') as f:
        text = f.read()
    if not text.strip():
        raise ConfigError('Config file {!r} is empty.'.format(source), lineno=1)
    LOG.debug('Read config %r.', source)
    _read_text(cfg, text, source)


def _check_known(cfg):
    for section in cfg.sections():
        if section not in CFG_TYPES:
            raise ConfigError('Unknown config section [{}].'.format(section))
        for option in cfg.options(section):
            if option not in CFG_TYPES[section]:
                raise ConfigError('Unknown option {!r} in [{}].'.format(
                    option, section))


def parse_config(source=None, overrides=None, validate=True):
    '''Read and validate a :class:`SimulationConfig`.

    :param str source:
        A packaged config name (``baseline``), the path of an ini
        file, or the path of a run manifest (``manifest.json``).
        *None* reads the baseline only.
    :param dict overrides:
        ``{(section, option): value}`` applied last (command line).
    :raises ConfigError:
        Unreadable text (with line info if known), unknown options,
        values that fail conversion or validation.
    '''
    cfg = _mk_config_parser()
    _read_text(cfg, _packaged_text(BASELINE), BASELINE)
    if source:
        _read_source(cfg, source)
    for (section, option), value in (overrides or {}).items():
        if not cfg.has_section(section):
            cfg.add_section(section)
        cfg.set(section, option, '' if value is None else str(value))
    _check_known(cfg)

    config = SimulationConfig(_convert(cfg), name=source or BASELINE)
    if validate:
        config.validate()
    return config


def _convert(cfg):
    values = {}
    for section, types in CFG_TYPES.items():
        values[section] = {}
        for option, conv in types.items():
            raw = cfg.get(section, option, fallback=None)
            try:
                values[section][option] = conv(raw)
            except (TypeError, ValueError) as e:
                raise ConfigError('Invalid value {!r} for {}.{}: {}'.format(
                    raw, section, option, e))
    return values


# Config ----------------------------------------------------------------------


def _fmt(value):
    if value is None:
        return ''
    if isinstance(value, bool):
        return 'yes' if value else 'no'
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple, np.ndarray)):
        return ' '.join(_fmt(v) for v in value)
    if isinstance(value, Subvolume):
        return value.describe()
    return str(value)


class SimulationConfig:
    '''A resolved, validated simulation setup.

    :var dict sections: option strings per section, derived values
        filled in (the manifest echo)
    :var GridSpec grid:
    :var SolverConfig solver:
    :var WindModelParams wind: seeded with ``seed``
    :var ReleaseModel release:
    :var MicrosphereSpec microsphere:
    :var Inventory inventory:
    :var GasPairSpec gas:
    :var ndarray thresholds:
    :var Subvolume subvolume:
    '''

    def __init__(self, values, name=None):
        self.name = name
        self.values = values
        sim = values['simulation']
        self.seed = sim['seed']
        self.preset = sim['preset']
        self.deployment_csv = sim['deployment_csv']

        try:
            self._build(values)
        except ValueError as e:
            raise ConfigError('Invalid configuration: {}'.format(e))

        self.sections = {
            section: {option: _fmt(value) for option, value in options.items()}
            for section, options in values.items()
        }
        resolved = self.sections
        resolved['simulation']['total_spheres'] = str(self.total_spheres)
        resolved['solver']['total_steps'] = str(self.solver.total_steps)
        resolved['solver']['diffusion_coefficient'] = repr(
            self.solver.diffusion_coefficient)
        resolved['release']['molecules_per_sphere'] = repr(
            self.release.molecules_per_sphere)
        resolved['metrics']['thresholds'] = _fmt(self.thresholds.tolist())

    def _build(self, values):
        self.grid = GridSpec(**values['grid'])

        micro = dict(values['microspheres'])
        microsphere_mass = micro.pop('total_microsphere_mass')
        cargo_mass = micro.pop('total_cargo_mass')
        self.microsphere = MicrosphereSpec(**micro)
        self.inventory = microsphere_inventory(self.microsphere,
                                               microsphere_mass, cargo_mass)
        self.gas = GasPairSpec(**values['gas'])

        total_spheres = values['simulation']['total_spheres']
        if total_spheres is None:
            total_spheres = int(round(self.inventory.sphere_count))
        self.total_spheres = total_spheres

        release = values['release']
        per_sphere = release['molecules_per_sphere']
        if per_sphere is None:
            per_sphere = self.inventory.molecules_per_sphere
        self.release = ReleaseModel(release['k'], release['n'], per_sphere)

        solver = values['solver']
        diffusion = solver['diffusion_coefficient']
        if diffusion == CHAPMAN_ENSKOG:
            diffusion = chapman_enskog_diffusion(self.gas)
        total_steps = solver['total_steps']
        if total_steps is None:
            total_steps = int(round(
                solver['duration_hours'] * SECONDS_PER_HOUR / solver['dt']))
        self.solver = SolverConfig(diffusion, solver['dt'], total_steps,
            cfl_runtime_check=solver['cfl_runtime_check'],
            noise_clamp_sigmas=solver['noise_clamp_sigmas'],
            nan_check_every=solver['nan_check_every'],
            progress_every=solver['progress_every'],
            backend=solver['backend'])
        self.budget_every = solver['budget_every']

        self.wind = WindModelParams(seed=self.seed, **values['wind'])

        self.pitch = values['deployment']['pitch']
        self.height = values['deployment']['height']

        metrics = values['metrics']
        if metrics['thresholds']:
            self.thresholds = np.array(metrics['thresholds'], dtype=np.float64)
        else:
            self.thresholds = log_thresholds(metrics['threshold_min'],
                metrics['threshold_max'], metrics['threshold_count'])
        self.subvolume = metrics['subvolume']
        self.snapshot_times = metrics['snapshot_times']
        self.slab = (metrics['slab_center'], metrics['slab_half_width'])
        self.timeseries_every = metrics['timeseries_every']
        self.timeseries_threshold = metrics['timeseries_threshold']

        output = values['output']
        self.output_dir = output['directory'] or 'out'
        self.formats = output['formats']
        self.run_threads = max(1, output['run_threads'])
        self.render = output['render']

    # derived -----------------------------------------------------------------

    @property
    def snapshot_steps(self):
        '''Step index per snapshot time (hours), ``{step: hours}``.'''
        return {int(round(h * SECONDS_PER_HOUR / self.solver.dt)): h
                for h in self.snapshot_times}

    def targets(self):
        '''Deployment targets of this config: preset names or a CSV path.'''
        if self.deployment_csv:
            return [self.deployment_csv]
        patterns = self.preset.split()
        files = [p for p in patterns if is_deployment_file(p)]
        names = [p for p in patterns if not is_deployment_file(p)]
        return (match_presets(*names) if names else []) + files

    def deployment(self, target):
        '''Build the :class:`Deployment` for a preset name or CSV path.'''
        if is_deployment_file(target):
            deployment = read_deployment_csv(target)
            deployment.validate(self.grid)
            return deployment
        return build_deployment(target, self.total_spheres, self.grid,
                                pitch=self.pitch, height=self.height)

    def for_run(self, target, seed):
        '''The config of a single run, as echoed by its manifest.'''
        overrides = {('simulation', 'seed'): seed}
        if is_deployment_file(target):
            overrides[('simulation', 'deployment_csv')] = target
        else:
            overrides[('simulation', 'preset')] = target
            overrides[('simulation', 'deployment_csv')] = ''
        return self.replace(overrides)

    def replace(self, overrides):
        cfg = _mk_config_parser()
        cfg.read_dict(self.sections)
        for (section, option), value in overrides.items():
            cfg.set(section, option, '' if value is None else str(value))
        config = SimulationConfig(_convert(cfg), name=self.name)
        config.validate()
        return config

    # validation --------------------------------------------------------------

    def validate(self):
        '''Check the config as a whole.

        :raises ConfigError: naming the violated condition.
        '''
        if self.solver.cfl_runtime_check and self.wind.speed_noise_variance > 0:
            clamp = self.wind.speed_noise_clamp
            sigmas = self.solver.noise_clamp_sigmas
            if not 0 < clamp <= sigmas:
                raise ConfigError(('[wind] speed_noise_clamp = {!r} must lie in'
                    ' (0, {!r}] ([solver] noise_clamp_sigmas) while'
                    ' cfl_runtime_check is on; the runtime check would'
                    ' abort the run.').format(clamp, sigmas))
        try:
            self.cfl = precheck(self.grid, self.solver, self.wind)
        except StabilityError as e:
            raise ConfigError(str(e))
        except ValueError as e:
            raise ConfigError('[solver] {}'.format(e))

        if not np.all(self.thresholds > 0) or not np.all(np.diff(self.thresholds) > 0):
            raise ConfigError('[metrics] thresholds must be > 0 and strictly increasing.')
        if not np.any(np.isclose(self.thresholds, self.timeseries_threshold,
                rtol=1e-12, atol=0.0)):
            raise ConfigError(('[metrics] timeseries_threshold {!r} is not one'
                ' of the thresholds.').format(self.timeseries_threshold))

        for step, hours in self.snapshot_steps.items():
            if not 1 <= step <= self.solver.total_steps:
                raise ConfigError(('[metrics] snapshot time {!r} h lies outside'
                    ' the run (1 .. {} steps).').format(hours, self.solver.total_steps))

        unknown = set(self.formats) - set(FORMATS)
        if unknown:
            raise ConfigError('[output] unknown formats: {}.'.format(
                ', '.join(sorted(unknown))))

        try:
            self.subvolume.slices(self.grid)
            slab_levels(self.grid, *self.slab)
            for target in self.targets():
                self.deployment(target)
        except DomainError as e:
            raise ConfigError(str(e))
        except ValueError as e:
            raise ConfigError('Invalid deployment: {}'.format(e))

        LOG.debug('Config %r is valid.', self.name)
        return self

    def as_dict(self):
        return {section: dict(options) for section, options in self.sections.items()}

    def __repr__(self):
        return '<SimulationConfig {s.name!r} preset={s.preset!r} seed={s.seed}>'.format(s=self)
