"""
Photon-pair source models: three-wave mixing in a PPLN waveguide and four-wave
mixing in a microstructured fiber.

A source is turned into a heralded idler photon in three steps:
  1. joint_spectral_amplitude  - pump envelope x phase matching x both filters
  2. emission_jitter           - incoherent spread of emission times (effective duration)
  3. heralded_state            - trace over the signal photon and the emission time
"""

import logging
import math
import os
import sys
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Tuple

import numpy as np
from numpy.polynomial.hermite_e import hermegauss

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
from processors.spectral import (
    FilterSpec,
    FrequencyGrid,
    PumpPulse,
    coherence_time,
    filter_amplitude,
    gaussian_envelope,
    require_span,
    spectral_rms,
)
from utils.config import (
    DEFAULT_DURATION_RULE,
    DEFAULT_GRID_POINTS,
    DEFAULT_JITTER_CONVENTION,
    DURATION_RULES,
    GAUSSIAN_FWHM_SIGMA,
    JITTER_CONVENTIONS,
    JITTER_QUADRATURE_NODES,
    MU_WARN_THRESHOLD,
)
from utils.errors import EmptyStateError, InvalidInputError

_logger = logging.getLogger(__name__)

Grids = Tuple[FrequencyGrid, FrequencyGrid]  # (signal grid, idler grid)


class Process(str, Enum):
    TWM = 'TWM'  # chi(2): one 532 nm pump photon -> pair
    FWM = 'FWM'  # chi(3): two 1064 nm pump photons -> pair


@dataclass(frozen=True)
class SourceSpec:
    """One heralded photon-pair source"""
    name: str
    process: Process
    medium_length: float        # cm
    pump: PumpPulse
    signal_filter: FilterSpec
    idler_filter: FilterSpec
    pairs_per_pulse: float      # mu
    walkoff_rate: float = 0.0   # ps/cm, pump-signal group-velocity mismatch
    noise_photons_per_pulse: float = 0.0  # Raman photons in the idler band

    def __post_init__(self):
        object.__setattr__(self, 'process', Process(self.process))
        if not self.medium_length > 0:
            raise InvalidInputError(f"{self.name}: medium_length must be positive")
        if self.walkoff_rate < 0:
            raise InvalidInputError(f"{self.name}: walkoff_rate must be non-negative")
        if not self.pairs_per_pulse > 0:
            raise InvalidInputError(f"{self.name}: pairs_per_pulse must be positive")
        if self.noise_photons_per_pulse < 0:
            raise InvalidInputError(f"{self.name}: noise_photons_per_pulse must be non-negative")
        if self.pairs_per_pulse > MU_WARN_THRESHOLD:
            _logger.warning("%s: %.3f pairs per pulse is above the %.2f operating regime",
                            self.name, self.pairs_per_pulse, MU_WARN_THRESHOLD)


@dataclass(frozen=True, eq=False)
class SpectralDensityMatrix:
    """Single-photon mixed state rho(w, w') on a frequency grid"""
    grid: FrequencyGrid
    elements: np.ndarray

    def __post_init__(self):
        n = self.grid.points
        if self.elements.shape != (n, n):
            raise InvalidInputError(f"density matrix must be {n}x{n}, got {self.elements.shape}")

    @classmethod
    def from_amplitude(cls, grid: FrequencyGrid, amplitude: np.ndarray) -> 'SpectralDensityMatrix':
        """Pure state |psi><psi| from a sampled spectral amplitude"""
        psi = np.asarray(amplitude, dtype=complex)
        norm = np.vdot(psi, psi).real
        if norm <= 0:
            raise EmptyStateError("amplitude has zero norm")
        return cls(grid, np.outer(psi, psi.conj()) / norm)

    @property
    def trace(self) -> float:
        return float(np.trace(self.elements).real)

    @property
    def purity(self) -> float:
        return purity(self.elements)

    def marginal(self) -> np.ndarray:
        """Spectral intensity: the diagonal of rho"""
        return np.diag(self.elements).real.copy()

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.elements - self.elements.conj().T)))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.elements).min())


@dataclass(frozen=True, eq=False)
class HeraldedPhoton:
    rho: SpectralDensityMatrix
    effective_duration: float  # ps
    coherence_time: float      # ps
    jitter_rms: float = 0.0    # ps, rms emission-time spread used for rho
    source: Optional[str] = field(default=None)


# ----------------------------------------------------------------------
# Durations
# ----------------------------------------------------------------------

def walkoff_broadening(src: SourceSpec) -> float:
    """Idler wavepacket broadening (ps) from pump-signal walk-off over the medium"""
    return src.walkoff_rate * src.medium_length


def _combine(pulse: float, walkoff: float, rule: str) -> float:
    if rule == 'quadrature':
        return math.hypot(pulse, walkoff)
    if rule == 'linear':
        return pulse + walkoff
    raise InvalidInputError(f"unknown duration rule '{rule}', expected one of {DURATION_RULES}")


def effective_duration(src: SourceSpec, rule: str = DEFAULT_DURATION_RULE) -> float:
    """Pulsed-regime effective duration: pump duration combined with walk-off broadening"""
    return _combine(src.pump.duration_fwhm, walkoff_broadening(src), rule)


def emission_time_rms(src: SourceSpec, rule: str = DEFAULT_DURATION_RULE) -> float:
    """
    RMS spread (ps) of the pair creation time.

    Both processes create pairs at a rate set by the square of the fundamental pump intensity
    (through the second-harmonic pump for TWM, directly for FWM), so the pulse contributes a
    Gaussian of rms duration_fwhm / (2.3548 * sqrt(2)). Walk-off spreads the idler uniformly
    over the walk-off time, rms walkoff / sqrt(12).
    """
    pulse = src.pump.duration_fwhm / (GAUSSIAN_FWHM_SIGMA * math.sqrt(2.0))
    walkoff = walkoff_broadening(src) / math.sqrt(12.0)
    return _combine(pulse, walkoff, rule)


def jitter_rms(src: SourceSpec, rule: str = DEFAULT_DURATION_RULE,
               convention: str = DEFAULT_JITTER_CONVENTION) -> float:
    """
    RMS emission-time spread (ps) that carries the effective duration into the state.

    'emission' uses the pair-creation time spread of emission_time_rms. 'matched' picks
    sigma = dt / (2 * dtau * sigma_w) so that the numerical overlap of two such photons
    reproduces the closed-form visibility (exactly for Gaussian filters, to second order
    for rectangular ones). 'fwhm' reads dt as the FWHM of a Gaussian. 'none' leaves the
    pure joint-spectrum state.
    """
    if convention not in JITTER_CONVENTIONS:
        raise InvalidInputError(f"unknown jitter convention '{convention}'")
    if convention == 'none':
        return 0.0
    if convention == 'emission':
        return emission_time_rms(src, rule)
    dt = effective_duration(src, rule)
    if convention == 'fwhm':
        return dt / GAUSSIAN_FWHM_SIGMA
    return dt / (2.0 * coherence_time(src.idler_filter) * spectral_rms(src.idler_filter))


def emission_jitter(src: SourceSpec, rule: str = DEFAULT_DURATION_RULE,
                    convention: str = DEFAULT_JITTER_CONVENTION) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Hermite nodes (ps) and weights (sum 1) of the emission-time distribution"""
    sigma = jitter_rms(src, rule, convention)
    if sigma == 0.0:
        return np.zeros(1), np.ones(1)
    nodes, weights = hermegauss(JITTER_QUADRATURE_NODES)
    return sigma * nodes, weights / weights.sum()


# ----------------------------------------------------------------------
# Grids
# ----------------------------------------------------------------------

def source_grids(src: SourceSpec, points: int = DEFAULT_GRID_POINTS,
                 idler_grid: Optional[FrequencyGrid] = None) -> Grids:
    """Signal and idler grids centred on the filters; the idler grid may be shared"""
    grid_s = FrequencyGrid.for_filters(src.signal_filter.angular_frequency, [src.signal_filter], points)
    if idler_grid is None:
        idler_grid = FrequencyGrid.for_filters(src.idler_filter.angular_frequency, [src.idler_filter], points)
    return grid_s, idler_grid


def shared_idler_grid(src_a: SourceSpec, src_b: SourceSpec,
                      points: int = DEFAULT_GRID_POINTS) -> FrequencyGrid:
    """One idler grid covering both idler filters, so the two photons can be overlapped"""
    filters = [src_a.idler_filter, src_b.idler_filter]
    return FrequencyGrid.for_filters(src_a.idler_filter.angular_frequency, filters, points)


# ----------------------------------------------------------------------
# Joint spectral amplitude
# ----------------------------------------------------------------------

def pump_envelope_width(src: SourceSpec) -> float:
    """FWHM (rad/ps) of |envelope|^2 along w_s + w_i"""
    width = src.pump.angular_bandwidth
    if src.process is Process.TWM:
        return width / math.sqrt(2.0)  # frequency-doubled pump
    return width * math.sqrt(2.0)      # self-convolution of the Gaussian pump


def joint_spectral_amplitude(src: SourceSpec, grid_s: FrequencyGrid, grid_i: FrequencyGrid) -> np.ndarray:
    """
    J(w_s, w_i) on grid_s x grid_i with sum |J|^2 == 1.

    The energy-conservation envelope is centred on the sum of the filter centres, i.e. the
    filters are assumed tuned onto the energy-matched line.
    """
    require_span(grid_s, [src.signal_filter.angular_bandwidth])
    require_span(grid_i, [src.idler_filter.angular_bandwidth])
    f_s = filter_amplitude(src.signal_filter, grid_s)
    f_i = filter_amplitude(src.idler_filter, grid_i)

    det_s = grid_s.frequencies - src.signal_filter.angular_frequency
    det_i = grid_i.frequencies - src.idler_filter.angular_frequency

    envelope_width = pump_envelope_width(src)
    pump_sum = 2.0 * src.pump.angular_frequency
    mismatch = pump_sum - (src.signal_filter.angular_frequency + src.idler_filter.angular_frequency)
    if abs(mismatch) > envelope_width:
        _logger.warning("%s: filters are %.3f rad/ps off energy matching, wider than the pump envelope",
                        src.name, mismatch)
    else:
        _logger.debug("%s: energy mismatch %.3f rad/ps absorbed by filter tuning", src.name, mismatch)

    envelope = gaussian_envelope(det_s[:, None] + det_i[None, :], envelope_width)
    # sinc(dk L / 2) with dk L = walkoff_rate * L * detuning; np.sinc includes the pi
    phase_matching = np.sinc(walkoff_broadening(src) * det_s / (2.0 * math.pi))

    jsa = envelope * (phase_matching * f_s)[:, None] * f_i[None, :]
    norm = math.sqrt(float(np.sum(np.abs(jsa) ** 2)))
    if norm == 0.0:
        raise EmptyStateError(f"{src.name}: filtered joint spectral amplitude is empty")
    return (jsa / norm).astype(complex)


# ----------------------------------------------------------------------
# Heralded state
# ----------------------------------------------------------------------

def _time_phases(times: np.ndarray, grid: FrequencyGrid) -> np.ndarray:
    return np.exp(1j * np.outer(times, grid.offsets))


def jitter_coherence(times: np.ndarray, weights: np.ndarray, grid: FrequencyGrid) -> np.ndarray:
    """C(w, w') = sum_k w_k exp(i (w - w') t_k), the dephasing kernel of the emission-time spread"""
    phases = _time_phases(times, grid)
    return phases.T @ (weights[:, None] * phases.conj())


def extended_amplitude(src: SourceSpec, grids: Grids, rule: str = DEFAULT_DURATION_RULE,
                       convention: str = DEFAULT_JITTER_CONVENTION) -> np.ndarray:
    """
    Amplitude over ((w_s, t_k), w_i) whose partial trace is the heralded state.
    Its Schmidt spectrum gives the heralded purity directly.
    """
    grid_s, grid_i = grids
    jsa = joint_spectral_amplitude(src, grid_s, grid_i)
    times, weights = emission_jitter(src, rule, convention)
    phases = _time_phases(times, grid_i)
    ext = np.sqrt(weights)[:, None, None] * jsa[None, :, :] * phases[:, None, :]
    return ext.reshape(len(times) * grid_s.points, grid_i.points)


def heralded_state(src: SourceSpec, grids: Grids, rule: str = DEFAULT_DURATION_RULE,
                   convention: str = DEFAULT_JITTER_CONVENTION) -> HeraldedPhoton:
    """Heralded idler photon: trace of J J* over the signal, dephased by the emission jitter"""
    grid_s, grid_i = grids
    jsa = joint_spectral_amplitude(src, grid_s, grid_i)
    rho = jsa.T @ jsa.conj()
    times, weights = emission_jitter(src, rule, convention)
    if len(times) > 1:
        rho = rho * jitter_coherence(times, weights, grid_i)
    rho = 0.5 * (rho + rho.conj().T)
    trace = np.trace(rho).real
    if trace <= 0:
        raise EmptyStateError(f"{src.name}: heralded state has zero trace")
    return HeraldedPhoton(
        rho=SpectralDensityMatrix(grid_i, rho / trace),
        effective_duration=effective_duration(src, rule),
        coherence_time=coherence_time(src.idler_filter),
        jitter_rms=jitter_rms(src, rule, convention),
        source=src.name,
    )


def herald_pair(src_a: SourceSpec, src_b: SourceSpec, points: int = DEFAULT_GRID_POINTS,
                rule: str = DEFAULT_DURATION_RULE,
                convention: str = DEFAULT_JITTER_CONVENTION) -> Tuple[HeraldedPhoton, HeraldedPhoton]:
    """Heralded photons of both sources on one shared idler grid"""
    idler_grid = shared_idler_grid(src_a, src_b, points)
    photon_a = heralded_state(src_a, source_grids(src_a, points, idler_grid), rule, convention)
    photon_b = heralded_state(src_b, source_grids(src_b, points, idler_grid), rule, convention)
    return photon_a, photon_b


def schmidt_coefficients(amplitude: np.ndarray) -> np.ndarray:
    """Schmidt coefficients lambda_k (squared singular values normalised to sum 1)"""
    singular = np.linalg.svd(amplitude, compute_uv=False)
    weights = singular ** 2
    total = weights.sum()
    if total <= 0:
        raise EmptyStateError("amplitude has zero norm")
    return weights / total


def purity(rho: np.ndarray) -> float:
    """Tr(rho^2)"""
    rho = np.asarray(rho)
    return float(np.sum(rho * rho.T).real)

