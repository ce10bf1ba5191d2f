"""
Run configuration: a JSON document merged over experiment_default.json and validated
field by field into an ExperimentConfig.

Every validation failure raises ConfigError naming the dotted field path and, where
it can be found, the line of that field in the user's file.
"""

import copy
import json
import os
import sys
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
from processors.counting import DetectorSpec, ExperimentConfig, SourceRates, calibrate_efficiencies
from processors.interference import default_delays
from processors.sources import SourceSpec
from processors.spectral import FilterSpec, PumpPulse
from utils.config import (
    DEFAULT_CONFIG_PATH,
    DURATION_RULES,
    JITTER_CONVENTIONS,
    MIN_GRID_POINTS,
    PHOTON_STATISTICS,
)
from utils.errors import ConfigError, HomError

SOURCE_KEYS = ('a', 'b')
OUTPUT_FORMATS = ('csv', 'json')


@dataclass
class RunConfig:
    experiment: ExperimentConfig
    rates: Dict[str, SourceRates]
    output_format: str = 'csv'
    out: Optional[str] = None
    path: Optional[str] = None
    document: Dict[str, Any] = field(default_factory=dict)

    @property
    def seed(self) -> int:
        return self.experiment.rng_seed

    @property
    def rule(self) -> str:
        return self.experiment.duration_rule


# ----------------------------------------------------------------------
# Loading
# ----------------------------------------------------------------------

def _read_json(path: str) -> Tuple[Dict[str, Any], str]:
    with open(path, 'r', encoding='utf-8') as f:
        text = f.read()
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON: {e.msg} (column {e.colno})", line=e.lineno) from e
    if not isinstance(document, dict):
        raise ConfigError("top level must be an object", line=1)
    return document, text


def deep_merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def load_run_config(path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """Load `path` (or only the defaults) and apply CLI overrides before validating"""
    defaults, _ = _read_json(DEFAULT_CONFIG_PATH)
    text = None
    document = defaults
    if path is not None:
        user, text = _read_json(path)
        document = deep_merge(defaults, user)
    if overrides:
        document = deep_merge(document, overrides)
    return build_run_config(document, text=text, path=path)


def line_of(text: Optional[str], dotted: str) -> Optional[int]:
    """Line of the last key of `dotted`, following the key chain through the text"""
    if not text:
        return None
    position = 0
    for key in dotted.split('.'):
        if key.isdigit():
            continue
        found = text.find(f'"{key}"', position)
        if found < 0:
            return None
        position = found
    return text.count('\n', 0, position) + 1


# ----------------------------------------------------------------------
# Validation
# ----------------------------------------------------------------------

class _Validator:
    def __init__(self, text: Optional[str]):
        self.text = text

    def fail(self, path: str, message: str):
        raise ConfigError(message, field=path, line=line_of(self.text, path))

    def section(self, document: Dict[str, Any], path: str) -> Dict[str, Any]:
        node = document
        for key in path.split('.'):
            if not isinstance(node, dict) or key not in node:
                self.fail(path, "missing section")
            node = node[key]
        if not isinstance(node, dict):
            self.fail(path, "must be an object")
        return node

    def number(self, node: Dict[str, Any], key: str, path: str, minimum: Optional[float] = None,
               strict: bool = False, maximum: Optional[float] = None) -> float:
        full = f"{path}.{key}"
        if key not in node:
            self.fail(full, "missing value")
        value = node[key]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.fail(full, f"expected a number, got {value!r}")
        if minimum is not None and (value <= minimum if strict else value < minimum):
            self.fail(full, f"must be {'>' if strict else '>='} {minimum}, got {value}")
        if maximum is not None and value > maximum:
            self.fail(full, f"must be <= {maximum}, got {value}")
        return float(value)

    def integer(self, node: Dict[str, Any], key: str, path: str, minimum: int = 0) -> int:
        full = f"{path}.{key}"
        value = node.get(key)
        if isinstance(value, bool) or not isinstance(value, int):
            self.fail(full, f"expected an integer, got {value!r}")
        if value < minimum:
            self.fail(full, f"must be >= {minimum}, got {value}")
        return value

    def flag(self, node: Dict[str, Any], key: str, path: str, default: bool) -> bool:
        value = node.get(key, default)
        if not isinstance(value, bool):
            self.fail(f"{path}.{key}", f"expected true or false, got {value!r}")
        return value

    def choice(self, node: Dict[str, Any], key: str, path: str, options) -> str:
        full = f"{path}.{key}" if path else key
        value = node.get(key)
        if value not in options:
            self.fail(full, f"expected one of {list(options)}, got {value!r}")
        return value


def _filter(v: _Validator, node: Dict[str, Any], path: str) -> FilterSpec:
    shape = v.choice(node, 'shape', path, ('rectangular', 'gaussian'))
    center = v.number(node, 'center_wavelength_nm', path, 0.0, strict=True)
    bandwidth = v.number(node, 'bandwidth_pm', path, 0.0, strict=True)
    return FilterSpec(shape, center, bandwidth)


def _delays(v: _Validator, scan: Dict[str, Any]) -> List[float]:
    if 'delays_ps' in scan:
        delays = scan['delays_ps']
        if not isinstance(delays, list) or not delays:
            v.fail('scan.delays_ps', "expected a non-empty list of delays")
        for i, d in enumerate(delays):
            if isinstance(d, bool) or not isinstance(d, (int, float)):
                v.fail(f'scan.delays_ps.{i}', f"expected a number, got {d!r}")
        if any(b <= a for a, b in zip(delays, delays[1:])):
            v.fail('scan.delays_ps', "delays must be strictly increasing")
        return [float(d) for d in delays]
    span = v.number(scan, 'span_ps', 'scan', 0.0, strict=True)
    points = v.integer(scan, 'points', 'scan', minimum=1)
    if points == 1:
        return [0.0]
    return list(default_delays(span, points))


def build_run_config(document: Dict[str, Any], text: Optional[str] = None,
                     path: Optional[str] = None) -> RunConfig:
    v = _Validator(text)
    seed = document.get('seed', 0)
    if seed is None:
        seed = 0
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0 or seed >= 2 ** 64:
        v.fail('seed', f"expected an unsigned 64-bit integer, got {seed!r}")
    rule = v.choice(document, 'duration_rule', '', DURATION_RULES)
    convention = v.choice(document, 'jitter_convention', '', JITTER_CONVENTIONS)

    p = v.section(document, 'pump')
    try:
        pump = PumpPulse(
            v.number(p, 'center_wavelength_nm', 'pump', 0.0, strict=True),
            v.number(p, 'duration_fwhm_ps', 'pump', 0.0, strict=True),
            v.number(p, 'bandwidth_fwhm_nm', 'pump', 0.0, strict=True),
            v.number(p, 'repetition_rate_mhz', 'pump', 0.0, strict=True),
        )
    except HomError as e:
        if isinstance(e, ConfigError):
            raise
        v.fail('pump', str(e))

    d = v.section(document, 'detectors')
    signal_dark = v.number(d, 'signal_dark_prob', 'detectors', 0.0, maximum=0.999999)
    idler_dark = v.number(d, 'idler_dark_prob', 'detectors', 0.0, maximum=0.999999)
    gated = v.flag(d, 'gated', 'detectors', True)
    gate_width = v.number(d, 'gate_width_ns', 'detectors', 0.0, strict=True)

    sources, detectors, rates = {}, {}, {}
    for key in SOURCE_KEYS:
        base = f'sources.{key}'
        s = v.section(document, base)
        rate_node = v.section(document, f'{base}.rates')
        mu = v.number(s, 'pairs_per_pulse', base, 0.0, strict=True, maximum=1.0)
        try:
            sources[key] = SourceSpec(
                name=str(s.get('name', key)),
                process=v.choice(s, 'process', base, ('TWM', 'FWM')),
                medium_length=v.number(s, 'medium_length_cm', base, 0.0, strict=True),
                pump=pump,
                signal_filter=_filter(v, v.section(document, f'{base}.signal_filter'), f'{base}.signal_filter'),
                idler_filter=_filter(v, v.section(document, f'{base}.idler_filter'), f'{base}.idler_filter'),
                pairs_per_pulse=mu,
                walkoff_rate=v.number(s, 'walkoff_ps_per_cm', base, 0.0),
                noise_photons_per_pulse=v.number(s, 'noise_photons_per_pulse', base, 0.0),
            )
            rates[key] = SourceRates(
                trigger_khz=v.number(rate_node, 'trigger_khz', f'{base}.rates', 0.0),
                coincidence_khz=v.number(rate_node, 'coincidence_khz', f'{base}.rates', 0.0),
                pairs_per_pulse=mu,
                repetition_rate_mhz=pump.repetition_rate,
            )
            signal, idler = calibrate_efficiencies(rates[key], signal_dark, idler_dark)
            detectors[key] = (signal, DetectorSpec(idler.efficiency, idler.dark_prob_per_gate, gated, gate_width))
        except ConfigError:
            raise
        except HomError as e:
            v.fail(base, str(e))

    scan = v.section(document, 'scan')
    grid = v.section(document, 'grid')
    points = v.integer(grid, 'points', 'grid', minimum=MIN_GRID_POINTS)
    if points & (points - 1):
        v.fail('grid.points', f"must be a power of two, got {points}")
    bs = v.section(document, 'beam_splitter')
    e = v.section(document, 'experiment')
    out = v.section(document, 'outputs')
    output_format = v.choice(out, 'format', 'outputs', OUTPUT_FORMATS)
    out_path = out.get('out')
    if out_path is not None and not isinstance(out_path, str):
        v.fail('outputs.out', "expected a path string or null")

    try:
        experiment = ExperimentConfig(
            source_a=sources['a'],
            source_b=sources['b'],
            det_signal_a=detectors['a'][0],
            det_signal_b=detectors['b'][0],
            det_idler_a=detectors['a'][1],
            det_idler_b=detectors['b'][1],
            delays=tuple(_delays(v, scan)),
            splitter_reflectivity=v.number(bs, 'reflectivity', 'beam_splitter', 0.0, maximum=1.0),
            acquisition_per_point=v.number(e, 'acquisition_minutes', 'experiment', 0.0, strict=True),
            rng_seed=seed,
            background_minutes=v.number(e, 'background_minutes', 'experiment', 0.0, strict=True),
            car_acquisition=v.number(e, 'car_acquisition_s', 'experiment', 0.0, strict=True),
            photon_statistics=v.choice(e, 'photon_statistics', 'experiment', PHOTON_STATISTICS),
            duration_rule=rule,
            jitter_convention=convention,
            grid_points=points,
        )
    except ConfigError:
        raise
    except HomError as exc:
        v.fail('experiment', str(exc))

    return RunConfig(experiment, rates, output_format, out_path, path, document)
