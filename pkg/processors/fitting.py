"""
Least-squares fit of the HOM dip model
    m(delay) = B * (1 - V * s((delay - delay0) / w))
with s a unit-FWHM sinc-squared or Gaussian lobe, so w is the dip FWHM.
"""

import logging
import math
import os
import sys
from dataclasses import asdict, dataclass, field
from typing import Dict, Optional

import numpy as np
from scipy.optimize import least_squares

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
from processors.interference import HomScan
from utils.config import (
    DIP_MODELS,
    FIT_MAX_ITERATIONS,
    FIT_REWEIGHT_ROUNDS,
    FIT_REWEIGHT_TOLERANCE,
    FIT_TOLERANCE,
    MIN_FIT_POINTS,
    SINC_FWHM_SCALE,
)
from utils.errors import DipEdgeError, FitError, InvalidInputError

_logger = logging.getLogger(__name__)

PARAMETERS = ('baseline', 'visibility', 'width_fwhm', 'center')


@dataclass
class DipFit:
    baseline: float
    visibility: float
    width_fwhm: float
    center: float
    residual_norm: float
    param_errors: Dict[str, float] = field(default_factory=dict)
    model: str = 'sinc_squared'
    initial_cost: float = float('nan')
    final_cost: float = float('nan')
    evaluations: int = 0

    def to_dict(self) -> Dict:
        return asdict(self)


# ----------------------------------------------------------------------
# Model
# ----------------------------------------------------------------------

def dip_shape(x: np.ndarray, model: str = 'sinc_squared') -> np.ndarray:
    """Unit-depth lobe with s(0) = 1 and s(+-1/2) = 1/2"""
    x = np.asarray(x, dtype=float)
    if model == 'sinc_squared':
        return np.sinc(SINC_FWHM_SCALE * x) ** 2
    if model == 'gaussian':
        return np.exp(-4.0 * math.log(2.0) * x ** 2)
    raise InvalidInputError(f"unknown dip model '{model}', expected one of {DIP_MODELS}")


def dip_model(delays: np.ndarray, baseline: float, visibility: float, width_fwhm: float,
              center: float, model: str = 'sinc_squared') -> np.ndarray:
    return baseline * (1.0 - visibility * dip_shape((np.asarray(delays) - center) / width_fwhm, model))


# ----------------------------------------------------------------------
# Numeric width
# ----------------------------------------------------------------------

def _outer_quartile_mean(scan: HomScan) -> float:
    distance = np.abs(scan.delays - np.median(scan.delays))
    cut = np.quantile(distance, 0.75)
    return float(np.mean(scan.values[distance >= cut]))


def fwhm_numeric(scan: HomScan, baseline: Optional[float] = None) -> float:
    """Full width at half dip depth, linearly interpolated between samples"""
    values = scan.values
    delays = scan.delays
    if baseline is None:
        # probability scans are normalised to a far-delay baseline of 1
        baseline = 1.0 if scan.mode == 'probability' else _outer_quartile_mean(scan)
    bottom_idx = int(np.argmin(values))
    depth = baseline - values[bottom_idx]
    if not depth > 1e-12 * max(abs(baseline), 1.0):
        raise DipEdgeError("scan shows no dip")
    if bottom_idx == 0 or bottom_idx == len(values) - 1:
        raise DipEdgeError("dip minimum lies on the scan edge")
    half = values[bottom_idx] + 0.5 * depth

    def crossing(step: int) -> float:
        i = bottom_idx
        while 0 <= i + step < len(values):
            j = i + step
            if values[j] >= half:
                frac = (half - values[i]) / (values[j] - values[i])
                return delays[i] + frac * (delays[j] - delays[i])
            i = j
        raise DipEdgeError("dip does not recover to half depth inside the scan")

    return float(crossing(+1) - crossing(-1))


def coherence_width(scan: HomScan, baseline: Optional[float] = None) -> float:
    """
    Dip width in coherence-time units: the numeric FWHM over the sinc-squared FWHM
    fraction. Two pure photons behind identical top-hat filters give the filter
    coherence time; jitter-broadened dips read close to dtau / V, the width the
    closed-form visibility implies.
    """
    return fwhm_numeric(scan, baseline) / SINC_FWHM_SCALE


# ----------------------------------------------------------------------
# Fit
# ----------------------------------------------------------------------

def _initial_guess(scan: HomScan) -> np.ndarray:
    baseline = _outer_quartile_mean(scan)
    if baseline == 0.0:
        baseline = float(np.max(scan.values)) or 1.0
    bottom = int(np.argmin(scan.values))
    visibility = 1.0 - scan.values[bottom] / baseline
    try:
        width = fwhm_numeric(scan, baseline)
    except DipEdgeError:
        width = 0.25 * float(scan.delays[-1] - scan.delays[0])
    return np.array([baseline, visibility, width, scan.delays[bottom]], dtype=float)


def fit_dip(scan: HomScan, model: str = 'sinc_squared',
            max_iterations: int = FIT_MAX_ITERATIONS) -> DipFit:
    """
    Levenberg-Marquardt fit (MINPACK, forward-difference Jacobian).

    Count scans (errors present) are fitted with Poisson weights taken from the model,
    sigma_k^2 = max(m(delay_k), 1), refitting until the parameters settle; the scan's
    own errors stay the reported error bars. Scans without errors are fitted unweighted
    and their parameter errors are scaled by the reduced chi-square.
    """
    if model not in DIP_MODELS:
        raise InvalidInputError(f"unknown dip model '{model}'")
    if len(scan) < MIN_FIT_POINTS:
        raise InvalidInputError(f"need at least {MIN_FIT_POINTS} scan points, got {len(scan)}")

    delays, values = scan.delays, scan.values
    weighted = scan.errors is not None
    sigma = np.ones_like(values)

    def residuals(theta: np.ndarray) -> np.ndarray:
        return (values - dip_model(delays, *theta, model=model)) / sigma

    start = _initial_guess(scan)
    n_params = len(start)
    theta = start
    evaluations = 0
    for _ in range(FIT_REWEIGHT_ROUNDS if weighted else 1):
        if weighted:
            sigma = poisson_sigma(dip_model(delays, *theta, model=model))
        result = least_squares(
            residuals, theta, method='lm',
            ftol=FIT_TOLERANCE, xtol=FIT_TOLERANCE, gtol=FIT_TOLERANCE,
            max_nfev=max_iterations * (n_params + 1),
        )
        evaluations += int(result.nfev)
        settled = np.allclose(result.x, theta, rtol=FIT_REWEIGHT_TOLERANCE, atol=FIT_REWEIGHT_TOLERANCE)
        theta = result.x
        if result.status == 0 or settled:
            break
    else:
        _logger.debug("Poisson weights still moving after %d rounds", FIT_REWEIGHT_ROUNDS)

    # both costs under the weights of the last accepted fit
    initial_cost = 0.5 * float(np.sum(residuals(start) ** 2))
    baseline, visibility, width, center = result.x
    errors = _parameter_errors(result.jac, result.cost, len(values) - n_params, not weighted)
    fit = DipFit(
        baseline=float(baseline),
        visibility=float(visibility),
        width_fwhm=float(abs(width)),
        center=float(center),
        residual_norm=float(np.sqrt(2.0 * result.cost)),
        param_errors=errors,
        model=model,
        initial_cost=initial_cost,
        final_cost=float(result.cost),
        evaluations=evaluations,
    )
    if result.status == 0:
        _logger.warning("dip fit stopped after %d evaluations without converging", result.nfev)
        raise FitError(f"fit did not converge within {max_iterations} iterations", best=fit)
    return fit


def poisson_sigma(expected: np.ndarray) -> np.ndarray:
    """Poisson standard deviation of the expected counts, floored at one count"""
    return np.sqrt(np.maximum(np.asarray(expected, dtype=float), 1.0))


def _parameter_errors(jac: np.ndarray, cost: float, dof: int, rescale: bool) -> Dict[str, float]:
    columns = np.linalg.norm(jac, axis=0)
    singular = columns <= 1e-10 * max(columns.max(), 1e-300)
    covariance = np.linalg.pinv(jac.T @ jac)
    if rescale and dof > 0:
        covariance = covariance * (2.0 * cost / dof)
    errors = {}
    for k, name in enumerate(PARAMETERS):
        if singular[k]:
            errors[name] = float('inf')
        else:
            errors[name] = float(math.sqrt(max(covariance[k, k], 0.0)))
    return errors
