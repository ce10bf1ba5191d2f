"""
Spectral and temporal primitives: pump pulses, filter profiles, frequency grids
and bandwidth / coherence-time conversions.

All angular frequencies are in rad/ps, times in ps and wavelengths in nm.
Filter bandwidths are quoted in pm, as they are on the components.
"""

import logging
import math
import os
import sys
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

# Add parent directory to path for imports
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
from utils.config import (
    GAUSSIAN_FWHM_SIGMA,
    GAUSSIAN_TBP,
    GRID_SPAN_FACTOR,
    MIN_GRID_POINTS,
    MIN_TIME_BANDWIDTH_PRODUCT,
    PM_PER_NM,
    SPEED_OF_LIGHT_NM_PER_PS,
)
from utils.errors import GridCoverageError, InvalidInputError

_logger = logging.getLogger(__name__)


# ----------------------------------------------------------------------
# Unit conversions
# ----------------------------------------------------------------------

def wavelength_to_angular(wavelength_nm: float) -> float:
    """Angular frequency (rad/ps) of a vacuum wavelength (nm)"""
    if wavelength_nm <= 0:
        raise InvalidInputError(f"wavelength must be positive, got {wavelength_nm}")
    return 2.0 * math.pi * SPEED_OF_LIGHT_NM_PER_PS / wavelength_nm


def bandwidth_to_angular(bandwidth_nm: float, wavelength_nm: float) -> float:
    """Angular bandwidth (rad/ps) of a wavelength bandwidth (nm) around wavelength_nm"""
    if bandwidth_nm <= 0 or wavelength_nm <= 0:
        raise InvalidInputError("bandwidth and wavelength must be positive")
    return 2.0 * math.pi * SPEED_OF_LIGHT_NM_PER_PS * bandwidth_nm / wavelength_nm ** 2


def gaussian_envelope(offsets: np.ndarray, fwhm: float) -> np.ndarray:
    """Peak-1 amplitude whose squared modulus has full width `fwhm`"""
    return np.exp(-2.0 * math.log(2.0) * (np.asarray(offsets) / fwhm) ** 2)


# ----------------------------------------------------------------------
# Domain types
# ----------------------------------------------------------------------

class FilterShape(str, Enum):
    RECTANGULAR = 'rectangular'
    GAUSSIAN = 'gaussian'


@dataclass(frozen=True)
class PumpPulse:
    """Pulsed pump laser shared by both sources"""
    center_wavelength: float  # nm
    duration_fwhm: float      # ps
    bandwidth_fwhm: float     # nm
    repetition_rate: float    # MHz

    def __post_init__(self):
        for name in ('center_wavelength', 'duration_fwhm', 'bandwidth_fwhm', 'repetition_rate'):
            if not getattr(self, name) > 0:
                raise InvalidInputError(f"pump {name} must be strictly positive")
        tbp = self.time_bandwidth_product
        if tbp < MIN_TIME_BANDWIDTH_PRODUCT:
            raise InvalidInputError(
                f"pump time-bandwidth product {tbp:.3f} is below {MIN_TIME_BANDWIDTH_PRODUCT}"
            )

    @property
    def angular_frequency(self) -> float:
        return wavelength_to_angular(self.center_wavelength)

    @property
    def angular_bandwidth(self) -> float:
        return bandwidth_to_angular(self.bandwidth_fwhm, self.center_wavelength)

    @property
    def time_bandwidth_product(self) -> float:
        # Δν in THz times Δt in ps
        delta_nu = SPEED_OF_LIGHT_NM_PER_PS * self.bandwidth_fwhm / self.center_wavelength ** 2
        return delta_nu * self.duration_fwhm


@dataclass(frozen=True)
class FilterSpec:
    """Spectral filter with peak amplitude transmission 1"""
    shape: FilterShape
    center_wavelength: float  # nm
    bandwidth_fwhm: float     # pm

    def __post_init__(self):
        object.__setattr__(self, 'shape', FilterShape(self.shape))
        if not self.center_wavelength > 0:
            raise InvalidInputError("filter center_wavelength must be positive")
        if not self.bandwidth_fwhm > 0:
            raise InvalidInputError("filter bandwidth_fwhm must be positive")

    @property
    def angular_frequency(self) -> float:
        return wavelength_to_angular(self.center_wavelength)

    @property
    def angular_bandwidth(self) -> float:
        """FWHM of the intensity transmission in rad/ps"""
        return bandwidth_to_angular(self.bandwidth_fwhm / PM_PER_NM, self.center_wavelength)


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform angular-frequency grid; sample points//2 sits exactly on the centre"""
    center_angular_frequency: float  # rad/ps
    span: float                      # rad/ps
    points: int

    def __post_init__(self):
        if self.points < MIN_GRID_POINTS or self.points & (self.points - 1):
            raise InvalidInputError(
                f"grid points must be a power of two >= {MIN_GRID_POINTS}, got {self.points}"
            )
        if not self.span > 0:
            raise InvalidInputError("grid span must be positive")

    @classmethod
    def for_filters(cls, center: float, filters: Iterable[FilterSpec], points: int) -> 'FrequencyGrid':
        """Smallest grid around `center` whose span is GRID_SPAN_FACTOR times the widest filter"""
        filters = list(filters)
        widest = max(f.angular_bandwidth for f in filters)
        grid = cls(center, GRID_SPAN_FACTOR * widest, points)
        for f in filters:
            check_coverage(f, grid)
        return grid

    @property
    def step(self) -> float:
        return self.span / self.points

    @property
    def offsets(self) -> np.ndarray:
        """Detuning of every sample from the grid centre"""
        return (np.arange(self.points) - self.points // 2) * self.step

    @property
    def frequencies(self) -> np.ndarray:
        return self.center_angular_frequency + self.offsets

    @property
    def lower(self) -> float:
        return self.center_angular_frequency + self.offsets[0]

    @property
    def upper(self) -> float:
        return self.center_angular_frequency + self.offsets[-1]


# ----------------------------------------------------------------------
# Operations
# ----------------------------------------------------------------------

def check_coverage(filter: FilterSpec, grid: FrequencyGrid) -> None:
    """Raise GridCoverageError unless the filter passband lies inside the grid"""
    half = 0.5 * filter.angular_bandwidth
    center = filter.angular_frequency
    if center - half < grid.lower or center + half > grid.upper:
        raise GridCoverageError(
            f"{filter.bandwidth_fwhm} pm filter at {filter.center_wavelength} nm "
            f"is outside grid [{grid.lower:.4f}, {grid.upper:.4f}] rad/ps"
        )


def require_span(grid: FrequencyGrid, bandwidths: Sequence[float]) -> None:
    """Raise GridCoverageError if the grid spans less than GRID_SPAN_FACTOR x the widest band"""
    widest = max(bandwidths)
    if grid.span < GRID_SPAN_FACTOR * widest * (1.0 - 1e-12):
        raise GridCoverageError(
            f"grid span {grid.span:.4f} rad/ps is below {GRID_SPAN_FACTOR:g} x {widest:.4f} rad/ps"
        )


def coherence_time(filter: FilterSpec) -> float:
    """
    Coherence time (ps) set by a filter bandwidth.

    Rectangular filters use tau = lambda^2 / (c * dlambda); Gaussian filters use the
    transform-limited FWHM relation tau = 0.441 * lambda^2 / (c * dlambda).
    """
    if not filter.bandwidth_fwhm > 0:
        raise InvalidInputError("filter bandwidth must be positive")
    bandwidth_nm = filter.bandwidth_fwhm / PM_PER_NM
    tau = filter.center_wavelength ** 2 / (SPEED_OF_LIGHT_NM_PER_PS * bandwidth_nm)
    if filter.shape is FilterShape.GAUSSIAN:
        tau *= GAUSSIAN_TBP
    return tau


def filter_profile(filter: FilterSpec, offsets: np.ndarray) -> np.ndarray:
    """Amplitude transmission at angular detunings `offsets` from the filter centre"""
    offsets = np.asarray(offsets, dtype=float)
    width = filter.angular_bandwidth
    if filter.shape is FilterShape.RECTANGULAR:
        return (np.abs(offsets) <= 0.5 * width).astype(float)
    return gaussian_envelope(offsets, width)


def filter_amplitude(filter: FilterSpec, grid: FrequencyGrid) -> np.ndarray:
    """Filter amplitude sampled on the grid, peak value 1"""
    check_coverage(filter, grid)
    return filter_profile(filter, grid.frequencies - filter.angular_frequency)


def spectral_rms(filter: FilterSpec) -> float:
    """RMS width (rad/ps) of the intensity transmission |t(w)|^2"""
    width = filter.angular_bandwidth
    if filter.shape is FilterShape.RECTANGULAR:
        return width / math.sqrt(12.0)
    return width / GAUSSIAN_FWHM_SIGMA


def pump_spectral_amplitude(pump: PumpPulse, grid: FrequencyGrid) -> np.ndarray:
    """Gaussian pump amplitude with sum(|a|^2) * step == 1 on the grid"""
    width = pump.angular_bandwidth
    detuning = grid.frequencies - pump.angular_frequency
    if abs(pump.angular_frequency - grid.center_angular_frequency) + width > 0.5 * grid.span:
        raise GridCoverageError("pump spectrum is not inside the grid")
    amplitude = gaussian_envelope(detuning, pump.angular_bandwidth)
    norm = math.sqrt(float(np.sum(amplitude ** 2)) * grid.step)
    return amplitude / norm


def time_bandwidth_product(pump: PumpPulse) -> float:
    return pump.time_bandwidth_product
