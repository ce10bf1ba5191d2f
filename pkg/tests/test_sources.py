import dataclasses
import logging
import math

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from processors.interference import gaussian_source, overlap
from processors.sources import (
    SpectralDensityMatrix,
    effective_duration,
    emission_jitter,
    extended_amplitude,
    herald_pair,
    heralded_state,
    jitter_rms,
    joint_spectral_amplitude,
    purity,
    schmidt_coefficients,
    shared_idler_grid,
    source_grids,
    walkoff_broadening,
)
from processors.spectral import FrequencyGrid, bandwidth_to_angular, coherence_time
from utils.errors import EmptyStateError, GridCoverageError, InvalidInputError


def test_walkoff_broadening(ppln_source, mf_source):
    assert walkoff_broadening(ppln_source) == 6.0
    assert walkoff_broadening(mf_source) == 0.0


def test_effective_duration_rules(ppln_source, mf_source):
    assert effective_duration(ppln_source, 'quadrature') == pytest.approx(math.sqrt(85.0))
    assert effective_duration(ppln_source, 'linear') == pytest.approx(13.0)
    assert effective_duration(mf_source, 'quadrature') == pytest.approx(7.0)
    assert effective_duration(mf_source, 'linear') == pytest.approx(7.0)
    with pytest.raises(InvalidInputError):
        effective_duration(mf_source, 'cubic')


def test_jitter_conventions(ppln_source):
    dt = effective_duration(ppln_source)
    assert jitter_rms(ppln_source, convention='none') == 0.0
    assert jitter_rms(ppln_source, convention='fwhm') == pytest.approx(dt / 2.35482, rel=1e-5)
    tau = coherence_time(ppln_source.idler_filter)
    sigma_w = ppln_source.idler_filter.angular_bandwidth / math.sqrt(12.0)
    assert jitter_rms(ppln_source, convention='matched') == pytest.approx(dt / (2 * tau * sigma_w))
    pulse, walkoff = 7.0 / (2.35482 * math.sqrt(2.0)), 6.0 / math.sqrt(12.0)
    assert jitter_rms(ppln_source, convention='emission') == pytest.approx(math.hypot(pulse, walkoff), rel=1e-5)
    assert jitter_rms(ppln_source, 'linear', 'emission') == pytest.approx(pulse + walkoff, rel=1e-5)
    with pytest.raises(InvalidInputError):
        jitter_rms(ppln_source, convention='sloppy')


@settings(max_examples=20, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(duration=st.floats(min_value=2.0, max_value=30.0))
def test_emission_jitter_quadrature_reproduces_variance(duration, mf_source):
    src = dataclasses.replace(mf_source, pump=dataclasses.replace(mf_source.pump, duration_fwhm=duration))
    times, weights = emission_jitter(src, convention='fwhm')
    assert weights.sum() == pytest.approx(1.0)
    assert np.dot(weights, times) == pytest.approx(0.0, abs=1e-9)
    assert math.sqrt(np.dot(weights, times ** 2)) == pytest.approx(duration / 2.35482, rel=1e-5)


def test_no_jitter_is_a_single_node(mf_source):
    times, weights = emission_jitter(mf_source, convention='none')
    assert list(times) == [0.0]
    assert list(weights) == [1.0]


def test_joint_spectral_amplitude_is_normalised_and_filtered(ppln_source):
    grid_s, grid_i = source_grids(ppln_source, 256)
    jsa = joint_spectral_amplitude(ppln_source, grid_s, grid_i)
    assert jsa.shape == (256, 256)
    assert np.sum(np.abs(jsa) ** 2) == pytest.approx(1.0)
    outside_s = np.abs(grid_s.offsets) > 0.5 * ppln_source.signal_filter.angular_bandwidth
    outside_i = np.abs(grid_i.offsets) > 0.5 * ppln_source.idler_filter.angular_bandwidth
    assert np.all(jsa[outside_s, :] == 0)
    assert np.all(jsa[:, outside_i] == 0)


def test_too_narrow_grid_is_rejected(ppln_source):
    grid_s, grid_i = source_grids(ppln_source, 256)
    small = FrequencyGrid(grid_i.center_angular_frequency, grid_i.span / 2, 256)
    with pytest.raises(GridCoverageError):
        joint_spectral_amplitude(ppln_source, grid_s, small)


@pytest.mark.parametrize('label', [0, 1])
def test_heralded_states_are_physical(default_photons, label):
    rho = default_photons[label].rho
    assert rho.hermiticity_error() <= 1e-12
    assert rho.trace == pytest.approx(1.0, abs=1e-12)
    assert rho.min_eigenvalue() >= -1e-10
    assert rho.marginal().sum() == pytest.approx(1.0)
    assert 0.0 < rho.purity <= 1.0 + 1e-12


def test_heralded_photon_carries_durations(default_photons, default_cfg):
    photon_a, photon_b = default_photons
    assert photon_a.effective_duration == pytest.approx(math.sqrt(85.0))
    assert photon_b.effective_duration == pytest.approx(7.0)
    assert photon_a.coherence_time == pytest.approx(13.4134, abs=1e-3)
    assert photon_a.rho.grid == photon_b.rho.grid


@pytest.mark.parametrize('convention', ['none', 'emission', 'matched', 'fwhm'])
def test_schmidt_purity_matches_density_matrix(ppln_source, mf_source, convention):
    idler_grid = shared_idler_grid(ppln_source, mf_source, 128)
    grids = source_grids(ppln_source, 128, idler_grid)
    photon = heralded_state(ppln_source, grids, convention=convention)
    lam = schmidt_coefficients(extended_amplitude(ppln_source, grids, convention=convention))
    assert lam.sum() == pytest.approx(1.0)
    assert abs(np.sum(lam ** 2) - photon.rho.purity) <= 1e-9


def test_emission_jitter_mixes_the_state(mf_source):
    pure = herald_pair(mf_source, mf_source, 256, convention='none')[0]
    mixed = herald_pair(mf_source, mf_source, 256, convention='matched')[0]
    assert mixed.rho.purity < pure.rho.purity


def _with_idler_bandwidth(src, bandwidth_pm):
    return dataclasses.replace(src, idler_filter=dataclasses.replace(src.idler_filter, bandwidth_fwhm=bandwidth_pm))


@pytest.mark.parametrize('source', ['ppln_source', 'mf_source'])
def test_narrower_idler_filter_never_lowers_purity(source, request):
    src = request.getfixturevalue(source)
    purities = []
    for bandwidth in (800.0, 600.0, 400.0, 200.0, 100.0):
        narrowed = _with_idler_bandwidth(src, bandwidth)
        purities.append(heralded_state(narrowed, source_grids(narrowed, 256)).rho.purity)
    assert np.all(np.diff(purities) >= -1e-9)
    assert purities[-1] > purities[0]


def test_mf_idler_marginal_fills_the_filter(mf_source, profile_fwhm):
    grids = source_grids(mf_source, 512)
    photon = heralded_state(mf_source, grids)
    width = profile_fwhm(grids[1].frequencies, photon.rho.marginal())
    assert width / bandwidth_to_angular(1.0, 1553.3) == pytest.approx(0.6, rel=0.05)


def test_purity_of_a_pure_state():
    grid = FrequencyGrid(1212.67, 10.0, 128)
    psi = np.exp(-grid.offsets ** 2)
    rho = SpectralDensityMatrix.from_amplitude(grid, psi)
    assert purity(rho.elements) == pytest.approx(1.0)


def test_zero_amplitude_is_an_empty_state():
    grid = FrequencyGrid(1212.67, 10.0, 128)
    with pytest.raises(EmptyStateError):
        SpectralDensityMatrix.from_amplitude(grid, np.zeros(128))


def test_density_matrix_shape_is_checked():
    grid = FrequencyGrid(1212.67, 10.0, 128)
    with pytest.raises(InvalidInputError):
        SpectralDensityMatrix(grid, np.eye(64))


def test_high_pair_probability_is_logged(mf_source, caplog):
    with caplog.at_level(logging.WARNING, logger='processors.sources'):
        dataclasses.replace(mf_source, pairs_per_pulse=0.2)
    assert 'operating regime' in caplog.text


@pytest.mark.parametrize('field, value', [('pairs_per_pulse', 0.0), ('medium_length', 0.0),
                                          ('walkoff_rate', -1.0), ('noise_photons_per_pulse', -0.1)])
def test_invalid_source_fields(mf_source, field, value):
    with pytest.raises(InvalidInputError):
        dataclasses.replace(mf_source, **{field: value})


def test_gaussian_overlap_converges_with_grid_size():
    src = gaussian_source(9.0, 8.0)
    coarse = herald_pair(src, src, 256)
    fine = herald_pair(src, src, 512)
    for delay in (0.0, 5.0, 15.0):
        assert overlap(*coarse, delay) == pytest.approx(overlap(*fine, delay), rel=1e-4)
