#!/usr/bin/env python
# -*- coding: utf-8 -*-

'''
test_config
-----------

Tests for reading and validating simulation configs.
'''
import json

import pytest

from mesaplume import config
from mesaplume.config import parse_config
from mesaplume.exceptions import ConfigError
from mesaplume.scenarios import PRESETS

from tests import common


def test_packaged_configs():
    assert 'baseline' in config.packaged_configs()


def test_baseline():
    cfg = parse_config()
    assert cfg.grid.shape == (41, 41, 11)
    assert cfg.solver.dt == 2.0
    assert cfg.solver.total_steps == 43200
    assert cfg.solver.diffusion_coefficient == 1e-5
    assert cfg.total_spheres == pytest.approx(7.063e8, rel=5e-3)
    assert cfg.release.k == 0.4429
    assert cfg.release.molecules_per_sphere == pytest.approx(1.121e15, rel=5e-3)
    assert cfg.thresholds.size == 41
    assert cfg.snapshot_steps == {1800: 1.0, 19800: 11.0, 39600: 22.0}
    assert cfg.cfl.passed
    assert cfg.cfl.advective_limit == pytest.approx(4.386, rel=0.02)
    assert cfg.targets() == ['central_patch']


def test_baseline_by_name():
    assert parse_config('baseline').sections == parse_config().sections


def test_baseline_alias():
    assert 'paper_baseline' in config.packaged_configs()
    assert parse_config('paper_baseline').sections == parse_config().sections


def test_resolved_sections():
    cfg = parse_config()
    assert cfg.sections['solver']['total_steps'] == '43200'
    assert cfg.sections['simulation']['total_spheres'] == str(cfg.total_spheres)
    assert cfg.sections['metrics']['thresholds'].split()[0] == '10000.0'


def test_user_file_overrides_baseline(tmpdir):
    path = common.write_config(tmpdir)
    cfg = parse_config(path)
    assert cfg.grid.shape == (11, 5, 5)
    assert cfg.seed == 7
    assert cfg.total_spheres == 1000
    assert cfg.solver.total_steps == 30
    assert cfg.wind.seed == 7
    # untouched options keep the baseline values
    assert cfg.wind.mean_speed == 0.5
    assert cfg.release.n == 0.1789


def test_overrides_win(tmpdir):
    path = common.write_config(tmpdir)
    cfg = parse_config(path, overrides={
        ('simulation', 'seed'): 3,
        ('simulation', 'preset'): 'all',
    })
    assert cfg.seed == 3
    assert cfg.targets() == list(PRESETS)


def test_chapman_enskog_option():
    cfg = parse_config(overrides={('solver', 'diffusion_coefficient'): 'chapman-enskog'})
    assert cfg.solver.diffusion_coefficient == pytest.approx(1.0e-5, rel=0.03)
    assert cfg.sections['solver']['diffusion_coefficient'] != 'chapman-enskog'


def test_duration_sets_steps():
    cfg = parse_config(overrides={('solver', 'duration_hours'): '1',
                                  ('metrics', 'snapshot_times'): '0.5 1'})
    assert cfg.solver.total_steps == 1800


def test_missing_file():
    with pytest.raises(ConfigError):
        parse_config('/does/not/exist.conf')


def test_empty_file(tmpdir):
    path = common.write_config(tmpdir, text='  \n')
    with pytest.raises(ConfigError) as excinfo:
        parse_config(path)
    assert excinfo.value.lineno == 1


def test_parse_error_has_line_number(tmpdir):
    path = common.write_config(tmpdir, text='[grid]\ndx = 5\nthis line is broken\n')
    with pytest.raises(ConfigError) as excinfo:
        parse_config(path)
    assert excinfo.value.lineno == 3
    assert '(line 3)' in str(excinfo.value)


def test_unknown_option(tmpdir):
    path = common.write_config(tmpdir, text='[grid]\ndx = 5\ncolour = red\n')
    with pytest.raises(ConfigError) as excinfo:
        parse_config(path)
    assert 'colour' in str(excinfo.value)


def test_unknown_section(tmpdir):
    path = common.write_config(tmpdir, text='[plotting]\ndpi = 300\n')
    with pytest.raises(ConfigError):
        parse_config(path)


def test_bad_value_names_option():
    with pytest.raises(ConfigError) as excinfo:
        parse_config(overrides={('solver', 'dt'): 'two'})
    assert 'solver.dt' in str(excinfo.value)


@pytest.mark.parametrize('section, option, value, message', [
    ('solver', 'dt', '5000', 'diffusive limit'),
    ('solver', 'dt', '5', 'advective limit'),
    ('metrics', 'timeseries_threshold', '123', 'timeseries_threshold'),
    ('metrics', 'snapshot_times', '30', 'snapshot time'),
    ('output', 'formats', 'snapshot hdf5', 'hdf5'),
    ('metrics', 'subvolume', '500 600 0 1 0 1', 'Subvolume'),
    ('metrics', 'slab_center', '9', 'Slab'),
    ('simulation', 'preset', 'spiral', 'spiral'),
    ('grid', 'dx', '3', 'multiple'),
    ('release', 'k', '-1', 'k'),
])
def test_invalid_configs(section, option, value, message):
    with pytest.raises(ConfigError) as excinfo:
        parse_config(overrides={(section, option): value})
    assert message in str(excinfo.value)


@pytest.mark.parametrize('speed_clamp, sigmas', [
    ('4', '3'),
    ('0', '3'),
    ('2', '0'),
])
def test_noise_clamp_must_fit_runtime_bound(speed_clamp, sigmas):
    with pytest.raises(ConfigError) as excinfo:
        parse_config(overrides={('wind', 'speed_noise_clamp'): speed_clamp,
                                ('solver', 'noise_clamp_sigmas'): sigmas})
    assert 'noise_clamp' in str(excinfo.value)


def test_noise_clamp_below_runtime_bound():
    cfg = parse_config(overrides={('wind', 'speed_noise_clamp'): '2.5'})
    assert cfg.wind.speed_noise_clamp == 2.5


def test_noise_clamp_free_without_runtime_check():
    cfg = parse_config(overrides={('wind', 'speed_noise_clamp'): '0',
                                  ('solver', 'cfl_runtime_check'): 'no'})
    assert cfg.wind.speed_noise_clamp == 0.0


def test_zero_clamp_sigmas_is_config_error():
    with pytest.raises(ConfigError) as excinfo:
        parse_config(overrides={('solver', 'noise_clamp_sigmas'): '0',
                                ('solver', 'cfl_runtime_check'): 'no'})
    assert 'clamp_sigmas' in str(excinfo.value)


def test_thresholds_must_increase():
    with pytest.raises(ConfigError):
        parse_config(overrides={('metrics', 'thresholds'): '1e10 1e8',
                                ('metrics', 'timeseries_threshold'): '1e8'})


def test_deployment_csv(tmpdir):
    layout = tmpdir.join('rows.csv')
    layout.write('x,y,z,sphere_count\n0,0,1,500\n10,10,1,500\n')
    cfg = parse_config(overrides={('simulation', 'deployment_csv'): str(layout)})
    assert cfg.targets() == [str(layout)]
    deployment = cfg.deployment(cfg.targets()[0])
    assert deployment.total_spheres == 1000


def test_deployment_csv_outside_grid(tmpdir):
    layout = tmpdir.join('rows.csv')
    layout.write('x,y,z,sphere_count\n500,0,1,500\n')
    with pytest.raises(ConfigError):
        parse_config(overrides={('simulation', 'deployment_csv'): str(layout)})


def test_for_run(tmpdir):
    cfg = parse_config(common.write_config(tmpdir))
    run_cfg = cfg.for_run('four_corners', 12)
    assert run_cfg.seed == 12
    assert run_cfg.wind.seed == 12
    assert run_cfg.preset == 'four_corners'
    assert run_cfg.sections['simulation']['seed'] == '12'
    assert cfg.seed == 7


def test_manifest_roundtrip(tmpdir):
    cfg = parse_config(common.write_config(tmpdir)).for_run('uniform_patch', 5)
    manifest = tmpdir.join('manifest.json')
    manifest.write(json.dumps({'seed': 5, 'config': cfg.as_dict()}))
    again = parse_config(str(manifest))
    assert again.sections == cfg.sections
    assert again.grid == cfg.grid
    assert again.seed == 5


def test_bad_manifest(tmpdir):
    manifest = tmpdir.join('manifest.json')
    manifest.write(json.dumps({'seed': 5}))
    with pytest.raises(ConfigError):
        parse_config(str(manifest))
