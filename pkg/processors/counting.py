"""
Monte Carlo emulation of the four-fold coincidence experiment.

Each delay point is simulated from the exact per-pulse four-fold probability
(photon-number enumeration) and a Poisson draw over all pulses of the point;
simulate_pulses samples the same process pulse by pulse to validate it.
"""

import dataclasses
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.stats import binom, poisson
from tqdm import tqdm

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
from processors.fitting import DipFit, fit_dip
from processors.interference import HomScan, overlap, split_probability, visibility_of
from processors.sources import HeraldedPhoton, SourceSpec, herald_pair
from processors.spectral import coherence_time
from utils.config import (
    BACKGROUND_STREAM_OFFSET,
    CAR_STREAM_OFFSET,
    DEFAULT_DURATION_RULE,
    DEFAULT_GRID_POINTS,
    DEFAULT_JITTER_CONVENTION,
    GATE_WIDTH_NS,
    MAX_NOISE_PHOTONS,
    MAX_PAIRS_PER_PULSE,
    NS_PER_MICROSECOND,
    PHOTON_STATISTICS,
    PULSE_CHUNK,
    PULSES_PER_MHZ_SECOND,
    SECONDS_PER_MINUTE,
)
from utils.errors import CalibrationError, FitError, InvalidInputError, UndefinedCARError

_logger = logging.getLogger(__name__)

SOURCES = ('a', 'b')


# ----------------------------------------------------------------------
# Domain types
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class DetectorSpec:
    """
    End-to-end arm efficiency and dark-count probability per detection gate.

    A gated detector is armed for one gate per herald, so darks count per gate. A free-running
    (ungated) detector accumulates the same dark rate over a whole repetition period.
    """
    efficiency: float
    dark_prob_per_gate: float = 0.0
    gated: bool = True
    gate_width_ns: float = GATE_WIDTH_NS

    def __post_init__(self):
        if not 0.0 <= self.efficiency <= 1.0:
            raise InvalidInputError(f"efficiency {self.efficiency} outside [0, 1]")
        if not 0.0 <= self.dark_prob_per_gate < 1.0:
            raise InvalidInputError(f"dark probability {self.dark_prob_per_gate} outside [0, 1)")
        if not self.gate_width_ns > 0:
            raise InvalidInputError(f"gate width {self.gate_width_ns} ns must be positive")

    def dark_probability(self, repetition_rate_mhz: float) -> float:
        """Probability of a dark count inside one pulse's coincidence window"""
        if self.gated:
            return self.dark_prob_per_gate
        gates = max(NS_PER_MICROSECOND / repetition_rate_mhz / self.gate_width_ns, 1.0)
        return 1.0 - (1.0 - self.dark_prob_per_gate) ** gates


@dataclass(frozen=True)
class SourceRates:
    """Single-source characterisation: herald trigger and two-fold coincidence rates"""
    trigger_khz: float
    coincidence_khz: float
    pairs_per_pulse: float
    repetition_rate_mhz: float


@dataclass(frozen=True)
class ExperimentConfig:
    source_a: SourceSpec
    source_b: SourceSpec
    det_signal_a: DetectorSpec
    det_signal_b: DetectorSpec
    det_idler_a: DetectorSpec  # D1 after the splitter; efficiency is the a-arm idler efficiency
    det_idler_b: DetectorSpec  # D2 after the splitter; efficiency is the b-arm idler efficiency
    delays: Tuple[float, ...]
    splitter_reflectivity: float = 0.5
    acquisition_per_point: float = 56.0  # minutes
    rng_seed: int = 0
    background_minutes: float = 210.0
    car_acquisition: float = 60.0  # seconds
    photon_statistics: str = 'poisson'
    duration_rule: str = DEFAULT_DURATION_RULE
    jitter_convention: str = DEFAULT_JITTER_CONVENTION
    grid_points: int = DEFAULT_GRID_POINTS
    max_pairs: int = MAX_PAIRS_PER_PULSE
    max_noise: int = MAX_NOISE_PHOTONS

    def __post_init__(self):
        object.__setattr__(self, 'delays', tuple(float(d) for d in np.atleast_1d(self.delays)))
        if not self.delays:
            raise InvalidInputError("at least one delay is required")
        if not self.acquisition_per_point > 0:
            raise InvalidInputError("acquisition_per_point must be positive")
        if not 0.0 <= self.splitter_reflectivity <= 1.0:
            raise InvalidInputError("splitter_reflectivity must lie in [0, 1]")
        if self.photon_statistics not in PHOTON_STATISTICS:
            raise InvalidInputError(f"photon_statistics must be one of {PHOTON_STATISTICS}")
        if not 0 <= self.rng_seed < 2 ** 64:
            raise InvalidInputError("rng_seed must be an unsigned 64-bit integer")

    @property
    def repetition_rate(self) -> float:
        return self.source_a.pump.repetition_rate

    def dark(self, detector: DetectorSpec) -> float:
        """Dark-count probability of `detector` per pulse at this repetition rate"""
        return detector.dark_probability(self.repetition_rate)

    def arm(self, source: str) -> Tuple[SourceSpec, DetectorSpec, DetectorSpec]:
        if source == 'a':
            return self.source_a, self.det_signal_a, self.det_idler_a
        if source == 'b':
            return self.source_b, self.det_signal_b, self.det_idler_b
        raise InvalidInputError(f"unknown source '{source}', expected 'a' or 'b'")


@dataclass
class TallyResult:
    delays: np.ndarray
    raw_counts: np.ndarray
    background: np.ndarray
    net_counts: np.ndarray
    errors: np.ndarray
    overlaps: np.ndarray
    coherence_time: float
    trigger_rate_khz: Dict[str, float] = field(default_factory=dict)
    coincidence_rate_khz: Dict[str, float] = field(default_factory=dict)
    car: Dict[str, float] = field(default_factory=dict)
    background_rates: Dict[str, float] = field(default_factory=dict)  # counts/min per source
    net_fit: Optional[DipFit] = None
    raw_fit: Optional[DipFit] = None
    net_visibility: float = float('nan')
    raw_reduction: float = float('nan')

    @property
    def background_rate(self) -> float:
        return float(sum(self.background_rates.values()))

    def raw_scan(self) -> HomScan:
        return HomScan(self.delays, self.raw_counts, self.errors, mode='counts',
                       coherence_time=self.coherence_time)

    def net_scan(self) -> HomScan:
        return HomScan(self.delays, self.net_counts, self.errors, mode='counts',
                       coherence_time=self.coherence_time)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            'delay_ps': self.delays,
            'raw_counts': self.raw_counts.astype(int),
            'background': self.background,
            'net_counts': self.net_counts,
            'error': self.errors,
        })

    def summary(self) -> Dict:
        fit = self.net_fit.to_dict() if self.net_fit is not None else None
        return {
            'net_visibility': self.net_visibility,
            'raw_reduction': self.raw_reduction,
            'fit': fit,
            'car': dict(self.car),
            'trigger_rate_khz': dict(self.trigger_rate_khz),
            'coincidence_rate_khz': dict(self.coincidence_rate_khz),
            'background_rate_per_min': self.background_rate,
            'background_rates_per_min': dict(self.background_rates),
            'background_per_point': float(self.background[0]) if len(self.background) else 0.0,
        }


# ----------------------------------------------------------------------
# Calibration and bookkeeping
# ----------------------------------------------------------------------

def calibrate_efficiencies(rates: SourceRates, signal_dark: float = 0.0,
                           idler_dark: float = 0.0) -> Tuple[DetectorSpec, DetectorSpec]:
    """
    Signal-arm efficiency trigger / (rep * mu) and idler-arm conditional efficiency
    coincidence / trigger, returned as (signal detector, idler detector).
    """
    if not rates.trigger_khz > 0:
        raise CalibrationError("trigger rate must be positive")
    if not rates.repetition_rate_mhz > 0 or not rates.pairs_per_pulse > 0:
        raise CalibrationError("repetition rate and pairs per pulse must be positive")
    pair_rate_khz = rates.repetition_rate_mhz * 1e3 * rates.pairs_per_pulse
    eta_signal = rates.trigger_khz / pair_rate_khz
    eta_idler = rates.coincidence_khz / rates.trigger_khz
    for name, eta in (('signal', eta_signal), ('idler', eta_idler)):
        if not 0.0 <= eta <= 1.0:
            raise CalibrationError(f"{name} efficiency {eta:.4g} is not physical")
    return DetectorSpec(eta_signal, signal_dark), DetectorSpec(eta_idler, idler_dark)


def background_per_point(rate_per_min: float, minutes: float) -> float:
    """Background counts expected in one delay point"""
    return rate_per_min * minutes


def subtract_background(raw, background) -> Tuple[np.ndarray, np.ndarray]:
    """Net counts raw - background with Poisson error sqrt(raw); negative nets are kept"""
    raw = np.asarray(raw, dtype=float)
    if np.any(raw < 0) or np.any(np.asarray(background) < 0):
        raise InvalidInputError("counts must be non-negative")
    return raw - background, np.sqrt(raw)


def pulses_in(cfg: ExperimentConfig, minutes: float) -> float:
    return cfg.repetition_rate * PULSES_PER_MHZ_SECOND * minutes * SECONDS_PER_MINUTE


def point_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream for one simulated point, fixed by (seed, index)"""
    return np.random.default_rng(np.random.SeedSequence([seed, index]))


# ----------------------------------------------------------------------
# Per-pulse probabilities
# ----------------------------------------------------------------------

def photon_number_distribution(mu: float, statistics: str, max_n: int) -> np.ndarray:
    """P(n) for n = 0..max_n pairs in one pulse"""
    n = np.arange(max_n + 1)
    if statistics == 'poisson':
        return poisson.pmf(n, mu)
    if statistics == 'thermal':
        return mu ** n / (1.0 + mu) ** (n + 1)
    raise InvalidInputError(f"unknown photon statistics '{statistics}'")


def _idler_weights(cfg: ExperimentConfig, source: str, blocked: bool) -> Tuple[np.ndarray, np.ndarray]:
    """
    w[k] = P(herald fires and k pair idlers reach the splitter), k = 0..max_pairs,
    and q[r] = P(r noise photons reach the splitter), r = 0..max_noise.
    """
    src, det_s, det_i = cfg.arm(source)
    eta_i = 0.0 if blocked else det_i.efficiency
    n = np.arange(cfg.max_pairs + 1)
    p_n = photon_number_distribution(src.pairs_per_pulse, cfg.photon_statistics, cfg.max_pairs)
    herald = 1.0 - (1.0 - det_s.efficiency) ** n * (1.0 - cfg.dark(det_s))
    k = np.arange(cfg.max_pairs + 1)
    survivors = binom.pmf(k[None, :], n[:, None], eta_i)  # [n, k]
    weights = (p_n * herald) @ survivors
    noise = poisson.pmf(np.arange(cfg.max_noise + 1), src.noise_photons_per_pulse * eta_i)
    return weights, noise


def _both_fire(a_photons: int, b_photons: int, reflectivity: float, dark_1: float, dark_2: float) -> float:
    """P(D1 and D2 fire) when photons route independently; port-a photons reach D1 with prob T"""
    t = 1.0 - reflectivity
    silent_1 = (1.0 - dark_1) * reflectivity ** a_photons * t ** b_photons
    silent_2 = (1.0 - dark_2) * t ** a_photons * reflectivity ** b_photons
    silent_both = (1.0 - dark_1) * (1.0 - dark_2) if a_photons + b_photons == 0 else 0.0
    return 1.0 - silent_1 - silent_2 + silent_both


def _idler_fire(k_a: int, k_b: int, r_a: int, r_b: int, mandel_overlap: float,
                reflectivity: float, dark_1: float, dark_2: float) -> float:
    if k_a == 1 and k_b == 1:
        # one pair photon per port interferes; noise photons route independently
        t = 1.0 - reflectivity
        p_bunch = reflectivity * t * (1.0 + mandel_overlap)  # both to D1, and likewise both to D2
        d2_fires = 1.0 - (1.0 - dark_2) * t ** r_a * reflectivity ** r_b
        d1_fires = 1.0 - (1.0 - dark_1) * reflectivity ** r_a * t ** r_b
        return split_probability(mandel_overlap, reflectivity) + p_bunch * (d2_fires + d1_fires)
    return _both_fire(k_a + r_a, k_b + r_b, reflectivity, dark_1, dark_2)


def _check_overlap(mandel_overlap: float) -> float:
    if not -1e-9 <= mandel_overlap <= 1.0 + 1e-9:
        raise InvalidInputError(f"mandel overlap {mandel_overlap} outside [0, 1]")
    return min(max(mandel_overlap, 0.0), 1.0)


def fourfold_probability(cfg: ExperimentConfig, mandel_overlap: float, blocked: Sequence[str] = ()) -> float:
    """Probability per pulse that both heralds and both splitter detectors fire"""
    mandel_overlap = _check_overlap(mandel_overlap)
    w_a, q_a = _idler_weights(cfg, 'a', 'a' in blocked)
    w_b, q_b = _idler_weights(cfg, 'b', 'b' in blocked)
    dark_1 = cfg.dark(cfg.det_idler_a)
    dark_2 = cfg.dark(cfg.det_idler_b)
    total = 0.0
    for k_a, wa in enumerate(w_a):
        for k_b, wb in enumerate(w_b):
            if wa * wb == 0.0:
                continue
            for r_a, qa in enumerate(q_a):
                for r_b, qb in enumerate(q_b):
                    total += wa * wb * qa * qb * _idler_fire(
                        k_a, k_b, r_a, r_b, mandel_overlap, cfg.splitter_reflectivity, dark_1, dark_2)
    return total


def expected_fourfolds(cfg: ExperimentConfig, mandel_overlap: float, minutes: Optional[float] = None,
                       blocked: Sequence[str] = ()) -> float:
    minutes = cfg.acquisition_per_point if minutes is None else minutes
    return pulses_in(cfg, minutes) * fourfold_probability(cfg, mandel_overlap, blocked)


# ----------------------------------------------------------------------
# Simulation
# ----------------------------------------------------------------------

def simulate_point(cfg: ExperimentConfig, delay: float, mandel_overlap: float,
                   rng: Optional[np.random.Generator] = None) -> int:
    """
    Raw four-fold count of one delay point (aggregated-probability path). Without an
    explicit rng the delay must be one of cfg.delays, whose position picks the stream.
    """
    if rng is None:
        if delay not in cfg.delays:
            raise InvalidInputError(f"delay {delay:g} ps is not in the scan; pass an rng for off-scan delays")
        rng = point_rng(cfg.rng_seed, cfg.delays.index(delay))
    mean = expected_fourfolds(cfg, mandel_overlap)
    _logger.debug("delay %.2f ps: overlap %.4f, mean four-folds %.3f", delay, mandel_overlap, mean)
    return int(rng.poisson(mean))


def _sample_pairs(rng: np.random.Generator, mu: float, statistics: str, size: int, max_n: int) -> np.ndarray:
    if statistics == 'thermal':
        pairs = rng.geometric(1.0 / (1.0 + mu), size) - 1
    else:
        pairs = rng.poisson(mu, size)
    return np.minimum(pairs, max_n)


def simulate_pulses(cfg: ExperimentConfig, mandel_overlap: float, pulses: int,
                    rng: np.random.Generator, blocked: Sequence[str] = ()) -> int:
    """Four-fold count from pulse-by-pulse sampling of the same process"""
    mandel_overlap = _check_overlap(mandel_overlap)
    r = cfg.splitter_reflectivity
    t = 1.0 - r
    p_split = split_probability(mandel_overlap, r)
    p_bunch = r * t * (1.0 + mandel_overlap)
    count = 0
    remaining = int(pulses)
    while remaining > 0:
        size = min(remaining, PULSE_CHUNK)
        remaining -= size
        heralds, pair_idlers, noise = [], [], []
        for source in SOURCES:
            src, det_s, det_i = cfg.arm(source)
            eta_i = 0.0 if source in blocked else det_i.efficiency
            n = _sample_pairs(rng, src.pairs_per_pulse, cfg.photon_statistics, size, cfg.max_pairs)
            heralds.append((rng.binomial(n, det_s.efficiency) > 0)
                           | (rng.random(size) < cfg.dark(det_s)))
            pair_idlers.append(rng.binomial(n, eta_i))
            noise.append(np.minimum(rng.poisson(src.noise_photons_per_pulse * eta_i, size), cfg.max_noise))

        interfering = (pair_idlers[0] == 1) & (pair_idlers[1] == 1)
        from_a = pair_idlers[0] + noise[0] - interfering
        from_b = pair_idlers[1] + noise[1] - interfering
        a_to_1 = rng.binomial(from_a, t)
        b_to_1 = rng.binomial(from_b, r)
        at_1 = a_to_1 + b_to_1
        at_2 = (from_a - a_to_1) + (from_b - b_to_1)

        u = rng.random(size)
        split = interfering & (u < p_split)
        bunch_1 = interfering & (u >= p_split) & (u < p_split + p_bunch)
        bunch_2 = interfering & (u >= p_split + p_bunch)
        at_1 = at_1 + split + 2 * bunch_1
        at_2 = at_2 + split + 2 * bunch_2

        fire_1 = (at_1 > 0) | (rng.random(size) < cfg.dark(cfg.det_idler_a))
        fire_2 = (at_2 > 0) | (rng.random(size) < cfg.dark(cfg.det_idler_b))
        count += int(np.count_nonzero(heralds[0] & heralds[1] & fire_1 & fire_2))
    return count


def expected_background_rate(cfg: ExperimentConfig, source: Optional[str]) -> float:
    """Mean four-fold rate (counts/min) with every idler arm except `source` blocked"""
    blocked = [s for s in SOURCES if s != source]
    return fourfold_probability(cfg, 0.0, blocked) * pulses_in(cfg, 1.0)


def measure_background(cfg: ExperimentConfig, source: Optional[str],
                       rng: Optional[np.random.Generator] = None) -> float:
    """
    Background rate (counts/min) of `source` alone: the other idler arm is blocked and
    four-folds are counted over cfg.background_minutes. source=None blocks both arms.
    """
    if rng is None:
        index = BACKGROUND_STREAM_OFFSET + (SOURCES.index(source) if source in SOURCES else len(SOURCES))
        rng = point_rng(cfg.rng_seed, index)
    mean = expected_background_rate(cfg, source) * cfg.background_minutes
    return rng.poisson(mean) / cfg.background_minutes


def twofold_probabilities(cfg: ExperimentConfig, source: str) -> Tuple[float, float, float]:
    """Per-pulse (herald, idler, herald-and-idler) click probabilities of one source"""
    src, det_s, det_i = cfg.arm(source)
    n = np.arange(cfg.max_pairs + 1)
    p_n = photon_number_distribution(src.pairs_per_pulse, cfg.photon_statistics, cfg.max_pairs)
    s_silent = (1.0 - det_s.efficiency) ** n * (1.0 - cfg.dark(det_s))
    i_silent = ((1.0 - det_i.efficiency) ** n * math.exp(-src.noise_photons_per_pulse * det_i.efficiency)
                * (1.0 - cfg.dark(det_i)))
    herald = float(np.sum(p_n * (1.0 - s_silent)))
    idler = float(np.sum(p_n * (1.0 - i_silent)))
    both = float(np.sum(p_n * (1.0 - s_silent - i_silent + s_silent * i_silent)))
    return herald, idler, both


def car(cfg: ExperimentConfig, source: str, acquisition: Optional[float] = None,
        rng: Optional[np.random.Generator] = None) -> float:
    """
    Coincidence-to-accidental ratio: herald-idler coincidences in the same pulse over the
    mean of coincidences one pulse earlier and one pulse later.
    """
    seconds = cfg.car_acquisition if acquisition is None else acquisition
    if rng is None:
        rng = point_rng(cfg.rng_seed, CAR_STREAM_OFFSET + SOURCES.index(source))
    herald, idler, both = twofold_probabilities(cfg, source)
    pulses = cfg.repetition_rate * PULSES_PER_MHZ_SECOND * seconds
    coincidences = int(rng.poisson(pulses * both))
    accidentals = rng.poisson(pulses * herald * idler, size=2)
    if accidentals.sum() == 0:
        raise UndefinedCARError(
            f"no accidental coincidences for source {source} in {seconds:g} s",
            lower_bound=float(coincidences),
        )
    return coincidences / float(accidentals.mean())


def run_experiment(cfg: ExperimentConfig,
                   photons: Optional[Tuple[HeraldedPhoton, HeraldedPhoton]] = None,
                   overlaps: Optional[Sequence[float]] = None) -> TallyResult:
    """Simulate every delay point, subtract the measured background and fit the net dip"""
    if overlaps is None:
        if photons is None:
            photons = herald_pair(cfg.source_a, cfg.source_b, cfg.grid_points,
                                  cfg.duration_rule, cfg.jitter_convention)
        overlaps = [overlap(photons[0], photons[1], d) for d in cfg.delays]
    overlaps = np.asarray(overlaps, dtype=float)
    if overlaps.shape != (len(cfg.delays),):
        raise InvalidInputError("one overlap per delay is required")

    raw = np.array([
        simulate_point(cfg, delay, o, point_rng(cfg.rng_seed, k))
        for k, (delay, o) in enumerate(zip(cfg.delays, overlaps))
    ])
    background_rates = {s: measure_background(cfg, s) for s in SOURCES}
    per_point = background_per_point(sum(background_rates.values()), cfg.acquisition_per_point)
    net, errors = subtract_background(raw, per_point)

    tally = TallyResult(
        delays=np.array(cfg.delays),
        raw_counts=raw,
        background=np.full(len(raw), per_point),
        net_counts=net,
        errors=errors,
        overlaps=overlaps,
        coherence_time=coherence_time(cfg.source_a.idler_filter),
        background_rates=background_rates,
    )
    for source in SOURCES:
        herald, _, both = twofold_probabilities(cfg, source)
        tally.trigger_rate_khz[source] = herald * cfg.repetition_rate * 1e3
        tally.coincidence_rate_khz[source] = both * cfg.repetition_rate * 1e3
        try:
            tally.car[source] = car(cfg, source)
        except UndefinedCARError as exc:
            _logger.warning("%s; reporting lower bound %.1f", exc, exc.lower_bound)
            tally.car[source] = exc.lower_bound

    if len(raw) >= 6:
        tally.net_fit = _fit_or_best(tally.net_scan())
        tally.raw_fit = _fit_or_best(tally.raw_scan())
        if tally.net_fit is not None:
            tally.net_visibility = visibility_of(tally.net_scan(), fit=tally.net_fit)
        if tally.raw_fit is not None:
            tally.raw_reduction = raw_reduction(tally)
    return tally


def raw_reduction(tally: TallyResult) -> float:
    """Fractional depth of the raw dip relative to its fitted asymptote"""
    fit = tally.raw_fit if tally.raw_fit is not None else fit_dip(tally.raw_scan())
    return visibility_of(tally.raw_scan(), fit=fit)


def _fit_or_best(scan: HomScan) -> Optional[DipFit]:
    try:
        return fit_dip(scan)
    except FitError as exc:
        _logger.warning("%s; keeping the last parameters", exc)
        return exc.best


def with_overrides(cfg: ExperimentConfig, **changes) -> ExperimentConfig:
    return dataclasses.replace(cfg, **changes)


def replace_source(cfg: ExperimentConfig, source: str, **changes) -> ExperimentConfig:
    """Copy of cfg with fields of one SourceSpec replaced"""
    key = 'source_a' if source == 'a' else 'source_b'
    return dataclasses.replace(cfg, **{key: dataclasses.replace(getattr(cfg, key), **changes)})


def seeds_batch(cfg: ExperimentConfig, seeds: Sequence[int], photons=None,
                progress: bool = False) -> List[TallyResult]:
    """Repeat the experiment for several seeds, sharing the heralded states"""
    if photons is None:
        photons = herald_pair(cfg.source_a, cfg.source_b, cfg.grid_points,
                              cfg.duration_rule, cfg.jitter_convention)
    overlaps = [overlap(photons[0], photons[1], d) for d in cfg.delays]
    return [run_experiment(with_overrides(cfg, rng_seed=int(s)), overlaps=overlaps)
            for s in tqdm(seeds, desc="seeds", disable=not progress)]
