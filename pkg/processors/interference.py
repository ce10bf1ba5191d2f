"""
Hong-Ou-Mandel interference between two heralded photons: the closed-form
visibility and the numerical density-matrix overlap behind it.
"""

import dataclasses
import logging
import math
import os
import sys
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Union

import numpy as np

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
from processors.sources import HeraldedPhoton, SourceSpec, SpectralDensityMatrix, effective_duration, herald_pair
from processors.spectral import FilterSpec, PumpPulse, coherence_time
from utils.config import (
    GAUSSIAN_TBP,
    PM_PER_NM,
    SPEED_OF_LIGHT_NM_PER_PS,
    DEFAULT_DELAY_POINTS,
    DEFAULT_DELAY_SPAN_PS,
    FAR_DELAY_FACTOR,
    PROBABILITY_SLACK,
)
from utils.errors import GridMismatchError, InsufficientBaselineError, InvalidInputError

_logger = logging.getLogger(__name__)

State = Union[SpectralDensityMatrix, HeraldedPhoton]


@dataclass(frozen=True, eq=False)
class HomScan:
    """Coincidence probability (or counts) versus relative delay"""
    delays: np.ndarray
    values: np.ndarray
    errors: Optional[np.ndarray] = None
    mode: str = 'probability'  # 'probability' or 'counts'
    coherence_time: Optional[float] = None  # ps, sets the far-delay baseline region

    def __post_init__(self):
        delays = np.atleast_1d(np.asarray(self.delays, dtype=float))
        values = np.atleast_1d(np.asarray(self.values, dtype=float))
        object.__setattr__(self, 'delays', delays)
        object.__setattr__(self, 'values', values)
        if self.errors is not None:
            object.__setattr__(self, 'errors', np.atleast_1d(np.asarray(self.errors, dtype=float)))
            if self.errors.shape != values.shape:
                raise InvalidInputError("errors must match values in length")
        if delays.shape != values.shape:
            raise InvalidInputError("delays and values must have the same length")
        if len(delays) > 1 and np.any(np.diff(delays) <= 0):
            raise InvalidInputError("delays must be strictly increasing")
        if self.mode not in ('probability', 'counts'):
            raise InvalidInputError(f"unknown scan mode '{self.mode}'")
        if self.mode == 'probability' and (
                values.min() < -1e-9 or values.max() > 1.0 + PROBABILITY_SLACK):
            raise InvalidInputError("coincidence probabilities must lie in [0, 1.05]")

    def __len__(self) -> int:
        return len(self.delays)

    def with_values(self, values, errors=None) -> 'HomScan':
        return dataclasses.replace(self, values=values, errors=errors)


# ----------------------------------------------------------------------
# Closed form
# ----------------------------------------------------------------------

def eq1_visibility(dt_a: float, dt_b: float, dtau: float) -> float:
    """V = 1 / sqrt(1 + dt_a^2 / (2 dtau^2) + dt_b^2 / (2 dtau^2))"""
    if not dtau > 0:
        raise InvalidInputError(f"coherence time must be positive, got {dtau}")
    if dt_a < 0 or dt_b < 0:
        raise InvalidInputError("effective durations must be non-negative")
    return 1.0 / math.sqrt(1.0 + (dt_a ** 2 + dt_b ** 2) / (2.0 * dtau ** 2))


def closed_form_visibility(src_a: SourceSpec, src_b: SourceSpec, rule: str,
                           idler_bandwidth: Optional[float] = None) -> float:
    """Closed-form visibility of two sources; optionally with another idler bandwidth (pm)"""
    idler = src_a.idler_filter
    if idler_bandwidth is not None:
        idler = dataclasses.replace(idler, bandwidth_fwhm=idler_bandwidth)
    return eq1_visibility(effective_duration(src_a, rule), effective_duration(src_b, rule),
                          coherence_time(idler))


def predict_narrowband(cfg, new_idler_bandwidth: float, rule: Optional[str] = None) -> float:
    """Closed-form visibility with the idler filters replaced by `new_idler_bandwidth` pm"""
    if not new_idler_bandwidth > 0:
        raise InvalidInputError("idler bandwidth must be positive")
    return closed_form_visibility(cfg.source_a, cfg.source_b, rule or cfg.duration_rule,
                                  idler_bandwidth=new_idler_bandwidth)


# ----------------------------------------------------------------------
# Numerical overlap
# ----------------------------------------------------------------------

def _density(state: State) -> SpectralDensityMatrix:
    return state.rho if isinstance(state, HeraldedPhoton) else state


def overlap(rho_a: State, rho_b: State, delay: float) -> float:
    """Tr(rho_a D rho_b D^dagger) with D = diag(exp(i w delay))"""
    a, b = _density(rho_a), _density(rho_b)
    if a.grid != b.grid:
        raise GridMismatchError("states are defined on different frequency grids")
    phase = np.exp(1j * a.grid.offsets * delay)
    shifted = b.elements * np.outer(phase, phase.conj())
    value = np.sum(a.elements * shifted.T)
    if abs(value.imag) > 1e-9:
        _logger.warning("overlap has imaginary part %.3e", value.imag)
    return float(min(max(value.real, 0.0), 1.0))


def split_probability(mandel_overlap: float, reflectivity: float = 0.5) -> float:
    """Probability that photons entering opposite ports leave by opposite ports"""
    transmissivity = 1.0 - reflectivity
    return reflectivity ** 2 + transmissivity ** 2 - 2.0 * reflectivity * transmissivity * mandel_overlap


def default_delays(span: float = DEFAULT_DELAY_SPAN_PS, points: int = DEFAULT_DELAY_POINTS) -> np.ndarray:
    return np.linspace(-span, span, points)


def with_far_delays(delays: Sequence[float], coherence: float) -> np.ndarray:
    """Add samples at +-5 and +-6 coherence times so a far-delay baseline exists"""
    far = FAR_DELAY_FACTOR * coherence
    extra = np.array([-far - coherence, -far, far, far + coherence])
    return np.unique(np.concatenate([np.asarray(delays, dtype=float), extra]))


def hom_dip(rho_a: State, rho_b: State, delays: Optional[Sequence[float]] = None) -> HomScan:
    """Normalised coincidence probability p(delay) = 1 - overlap"""
    delays = default_delays() if delays is None else np.asarray(delays, dtype=float)
    values = np.array([1.0 - overlap(rho_a, rho_b, d) for d in delays])
    tau = None
    if isinstance(rho_a, HeraldedPhoton) and isinstance(rho_b, HeraldedPhoton):
        tau = max(rho_a.coherence_time, rho_b.coherence_time)
    return HomScan(delays, values, mode='probability', coherence_time=tau)


def visibility_of(scan: HomScan, coherence_time: Optional[float] = None, fit=None) -> float:
    """
    Dip visibility (baseline - minimum) / baseline.

    With a fit the baseline is the fitted asymptote and the minimum the fitted dip bottom;
    otherwise the baseline is the mean of samples at |delay| >= 5 coherence times.
    """
    if fit is not None:
        return (fit.baseline - fit.baseline * (1.0 - fit.visibility)) / fit.baseline
    tau = coherence_time if coherence_time is not None else scan.coherence_time
    if tau is None:
        raise InsufficientBaselineError("no coherence time to place the far-delay baseline")
    far = np.abs(scan.delays) >= FAR_DELAY_FACTOR * tau
    if not np.any(far):
        raise InsufficientBaselineError(
            f"no samples beyond {FAR_DELAY_FACTOR * tau:.1f} ps to set the baseline"
        )
    baseline = float(np.mean(scan.values[far]))
    if baseline == 0.0:
        raise InsufficientBaselineError("far-delay baseline is zero")
    return (baseline - float(np.min(scan.values))) / baseline


# ----------------------------------------------------------------------
# Gaussian cross-check
# ----------------------------------------------------------------------

_GAUSSIAN_SIGNAL_NM = 809.2
_GAUSSIAN_IDLER_NM = 1553.3
_GAUSSIAN_PUMP_NM = 1064.0
_GAUSSIAN_PUMP_BANDWIDTH_NM = 3.0


def gaussian_source(coherence: float, duration: float, name: str = 'gaussian') -> SourceSpec:
    """
    FWM source with Gaussian filters and no walk-off: the idler coherence time is
    `coherence` and the effective duration is the pump duration `duration`.
    """
    idler_pm = GAUSSIAN_TBP * _GAUSSIAN_IDLER_NM ** 2 / (SPEED_OF_LIGHT_NM_PER_PS * coherence) * PM_PER_NM
    signal_pm = idler_pm * (_GAUSSIAN_SIGNAL_NM / _GAUSSIAN_IDLER_NM) ** 2
    pump = PumpPulse(_GAUSSIAN_PUMP_NM, duration, _GAUSSIAN_PUMP_BANDWIDTH_NM, 80.0)
    return SourceSpec(
        name=name,
        process='FWM',
        medium_length=1.0,
        pump=pump,
        signal_filter=FilterSpec('gaussian', _GAUSSIAN_SIGNAL_NM, signal_pm),
        idler_filter=FilterSpec('gaussian', _GAUSSIAN_IDLER_NM, idler_pm),
        pairs_per_pulse=0.01,
    )


def gaussian_sweep(coherence_times: Sequence[float] = (6.0, 9.0, 12.0),
                   durations: Sequence[float] = (4.0, 8.0, 12.0),
                   points: int = 256, convention: str = 'matched') -> List[Dict[str, float]]:
    """Numerical dip visibility against the closed form over a grid of Gaussian configurations"""
    rows = []
    for tau in coherence_times:
        for dt in durations:
            src = gaussian_source(tau, dt)
            photons = herald_pair(src, src, points, 'quadrature', convention)
            scan = hom_dip(*photons, delays=with_far_delays(default_delays(), tau))
            rows.append({
                'coherence_time': float(tau),
                'duration': float(dt),
                'numerical': visibility_of(scan),
                'closed_form': eq1_visibility(dt, dt, coherence_time(src.idler_filter)),
            })
            _logger.debug("gaussian tau=%.1f dt=%.1f: %s", tau, dt, rows[-1])
    return rows
