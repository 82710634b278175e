#!/usr/bin/env python
# -*- coding: utf-8 -*-

'''
test_scenario_runs
------------------

Full 24 hour runs of all presets over several seeds. These take a
while; run them with ``pytest --runslow``.
'''
import numpy as np
import pytest

from mesaplume.application import Mesaplume
from mesaplume.config import parse_config
from mesaplume.scenarios import PRESETS


SEEDS = [1, 2, 3, 4, 5]


@pytest.fixture(scope='module')
def final_cei(tmpdir_factory):
    out = tmpdir_factory.mktemp('scenario-runs')
    config = parse_config(overrides={
        ('simulation', 'preset'): 'all',
        ('output', 'directory'): str(out),
        ('output', 'formats'): '',
        ('output', 'run_threads'): 4,
    })
    app = Mesaplume(config)
    outcomes = app.sweep(seeds=SEEDS)
    assert all(o.ok for o in outcomes)

    values = {}
    for outcome in outcomes:
        cei = outcome.result.cei.finalize()
        values.setdefault(outcome.label, []).append((cei.at(1e4), cei.at(1e14)))
    return {label: np.array(rows) for label, rows in values.items()}


@pytest.mark.slow
def test_high_threshold_ordering(final_cei):
    high = {label: final_cei[label][:, 1] for label in PRESETS}
    mean = {label: values.mean() for label, values in high.items()}
    spread = max(values.std() for values in high.values())

    assert mean['four_corners'] - mean['uniform_patch'] > spread
    assert mean['four_corners'] - mean['perimeter_stripe'] > spread
    assert mean['uniform_patch'] - mean['central_patch'] > spread
    assert mean['perimeter_stripe'] - mean['central_patch'] > spread
    assert mean['uniform_patch'] == pytest.approx(mean['perimeter_stripe'], rel=0.15)


@pytest.mark.slow
def test_low_threshold_convergence(final_cei):
    low = [final_cei[label][:, 0].mean() for label in PRESETS]
    assert max(low) == pytest.approx(min(low), rel=0.10)
