"""
Shared fixtures: the committed default configuration and heralded states built from it
"""

import dataclasses
import os
import sys

import numpy as np
import pytest

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
from processors.counting import DetectorSpec, ExperimentConfig
from processors.sources import SourceSpec, herald_pair
from processors.spectral import FilterSpec, PumpPulse
from utils.run_config import load_run_config


def _half_maximum_width(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    half = 0.5 * y.max()
    above = np.nonzero(y >= half)[0]
    left, right = int(above[0]), int(above[-1])
    assert 0 < left and right < len(y) - 1, "profile does not fall to half maximum inside the grid"

    def crossing(i_out, i_in):
        return x[i_out] + (half - y[i_out]) / (y[i_in] - y[i_out]) * (x[i_in] - x[i_out])

    return crossing(right + 1, right) - crossing(left - 1, left)


@pytest.fixture
def profile_fwhm():
    """Full width at half maximum of a single-peaked sampled profile, linearly interpolated"""
    return _half_maximum_width


@pytest.fixture(scope='session')
def default_run():
    return load_run_config()


@pytest.fixture(scope='session')
def default_cfg(default_run):
    return default_run.experiment


@pytest.fixture(scope='session')
def default_photons(default_cfg):
    """Heralded states of both sources on the default grid and jitter convention"""
    return herald_pair(default_cfg.source_a, default_cfg.source_b, default_cfg.grid_points,
                       default_cfg.duration_rule, default_cfg.jitter_convention)


@pytest.fixture
def pump():
    return PumpPulse(1064.0, 7.0, 0.7, 80.0)


@pytest.fixture
def mf_source(pump):
    return SourceSpec(
        name='MF',
        process='FWM',
        medium_length=20.0,
        pump=pump,
        signal_filter=FilterSpec('rectangular', 809.2, 150.0),
        idler_filter=FilterSpec('rectangular', 1553.3, 600.0),
        pairs_per_pulse=0.05,
        noise_photons_per_pulse=0.005,
    )


@pytest.fixture
def ppln_source(pump):
    return SourceSpec(
        name='PPLN/W',
        process='TWM',
        medium_length=2.0,
        pump=pump,
        signal_filter=FilterSpec('rectangular', 809.2, 500.0),
        idler_filter=FilterSpec('rectangular', 1553.3, 600.0),
        pairs_per_pulse=0.05,
        walkoff_rate=3.0,
    )


@pytest.fixture
def ideal_cfg(ppln_source, mf_source):
    """Lossless-ish experiment without darks or noise, for counting checks"""
    quiet = DetectorSpec(0.8)
    return ExperimentConfig(
        source_a=ppln_source,
        source_b=dataclasses.replace(mf_source, noise_photons_per_pulse=0.0),
        det_signal_a=quiet,
        det_signal_b=quiet,
        det_idler_a=quiet,
        det_idler_b=quiet,
        delays=(0.0,),
    )
