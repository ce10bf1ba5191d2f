import json

import pytest

from utils.config import DEFAULT_CONFIG_PATH
from utils.errors import ConfigError
from utils.run_config import deep_merge, line_of, load_run_config


def _write(tmp_path, document):
    path = tmp_path / 'run.json'
    text = document if isinstance(document, str) else json.dumps(document, indent=2)
    path.write_text(text, encoding='utf-8')
    return str(path)


def test_defaults_load(default_run):
    cfg = default_run.experiment
    assert default_run.seed == 0
    assert default_run.rule == 'quadrature'
    assert cfg.jitter_convention == 'emission'
    assert len(cfg.delays) == 41
    assert cfg.delays[20] == 0.0
    assert cfg.grid_points == 512
    assert cfg.acquisition_per_point == 56.0
    assert cfg.source_a.name == 'PPLN/W' and cfg.source_b.name == 'MF'
    assert set(default_run.rates) == {'a', 'b'}
    assert cfg.det_idler_a.gated and cfg.det_idler_b.gate_width_ns == 2.5
    assert default_run.output_format == 'csv'


def test_user_file_is_merged_over_defaults(tmp_path):
    path = _write(tmp_path, {'seed': 7, 'scan': {'delays_ps': [-10, 0, 10]}})
    run = load_run_config(path)
    assert run.seed == 7
    assert run.experiment.delays == (-10.0, 0.0, 10.0)
    assert run.experiment.source_b.pairs_per_pulse == 0.05


def test_overrides_win_over_the_file(tmp_path):
    path = _write(tmp_path, {'seed': 7})
    run = load_run_config(path, {'seed': 9, 'duration_rule': 'linear'})
    assert run.seed == 9
    assert run.rule == 'linear'


def test_missing_seed_means_zero(tmp_path):
    run = load_run_config(_write(tmp_path, {'seed': None}))
    assert run.seed == 0


def test_invalid_value_names_field_and_line(tmp_path):
    text = '{\n  "sources": {\n    "b": {\n      "pairs_per_pulse": -1\n    }\n  }\n}\n'
    with pytest.raises(ConfigError) as info:
        load_run_config(_write(tmp_path, text))
    assert info.value.field == 'sources.b.pairs_per_pulse'
    assert info.value.line == 4
    assert 'sources.b.pairs_per_pulse' in str(info.value)


def test_syntax_error_reports_line(tmp_path):
    with pytest.raises(ConfigError) as info:
        load_run_config(_write(tmp_path, '{\n  "seed": 1,\n}\n'))
    assert info.value.line == 3


@pytest.mark.parametrize('document, field', [
    ({'seed': -1}, 'seed'),
    ({'seed': True}, 'seed'),
    ({'seed': 2 ** 64}, 'seed'),
    ({'duration_rule': 'cubic'}, 'duration_rule'),
    ({'jitter_convention': 'wide'}, 'jitter_convention'),
    ({'grid': {'points': 300}}, 'grid.points'),
    ({'grid': {'points': 64}}, 'grid.points'),
    ({'scan': {'delays_ps': [0, 0, 1]}}, 'scan.delays_ps'),
    ({'scan': {'delays_ps': [0, 'x']}}, 'scan.delays_ps.1'),
    ({'experiment': {'acquisition_minutes': 0}}, 'experiment.acquisition_minutes'),
    ({'experiment': {'photon_statistics': 'laser'}}, 'experiment.photon_statistics'),
    ({'beam_splitter': {'reflectivity': 1.5}}, 'beam_splitter.reflectivity'),
    ({'sources': {'a': {'process': 'SHG'}}}, 'sources.a.process'),
    ({'sources': {'a': {'idler_filter': {'bandwidth_pm': 0}}}}, 'sources.a.idler_filter.bandwidth_pm'),
    ({'sources': {'a': {'rates': {'trigger_khz': 1e6}}}}, 'sources.a'),
    ({'pump': {'duration_fwhm_ps': 0.1}}, 'pump'),
    ({'outputs': {'format': 'xml'}}, 'outputs.format'),
    ({'detectors': {'gated': 'yes'}}, 'detectors.gated'),
    ({'detectors': {'gate_width_ns': 0}}, 'detectors.gate_width_ns'),
])
def test_invalid_documents(tmp_path, document, field):
    with pytest.raises(ConfigError) as info:
        load_run_config(_write(tmp_path, document))
    assert info.value.field == field


def test_missing_file_is_an_os_error(tmp_path):
    with pytest.raises(OSError):
        load_run_config(str(tmp_path / 'absent.json'))


def test_top_level_must_be_an_object(tmp_path):
    with pytest.raises(ConfigError):
        load_run_config(_write(tmp_path, '[1, 2]'))


def test_deep_merge_leaves_inputs_alone():
    base = {'a': {'b': 1, 'c': 2}}
    merged = deep_merge(base, {'a': {'b': 5}})
    assert merged == {'a': {'b': 5, 'c': 2}}
    assert base == {'a': {'b': 1, 'c': 2}}


def test_line_of_follows_the_key_chain():
    text = '{\n "b": 1,\n "sources": {\n  "b": {\n   "x": 2\n  }\n }\n}'
    assert line_of(text, 'sources.b.x') == 5
    assert line_of(text, 'missing') is None
    assert line_of(None, 'b') is None


def test_default_file_is_valid_json():
    with open(DEFAULT_CONFIG_PATH, encoding='utf-8') as f:
        assert 'sources' in json.load(f)
