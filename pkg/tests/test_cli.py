import argparse
import json
import os

import pytest

from main import EXIT_INPUT, EXIT_OK, main, parse_bandwidth, read_scan_csv
from utils.errors import CsvParseError

FAST = ['--grid-points', '128']


def _read(path):
    with open(path, encoding='utf-8') as f:
        return f.read()


@pytest.mark.parametrize('text, expected', [
    ('200pm', 200.0), ('200 pm', 200.0), ('200', 200.0), ('0.2nm', 200.0), ('1.5e2pm', 150.0),
])
def test_parse_bandwidth(text, expected):
    assert parse_bandwidth(text) == pytest.approx(expected)


@pytest.mark.parametrize('text', ['wide', '-5pm', '0pm', '200 GHz'])
def test_parse_bandwidth_rejects(text):
    with pytest.raises(argparse.ArgumentTypeError):
        parse_bandwidth(text)


# ----------------------------------------------------------------------
# predict
# ----------------------------------------------------------------------

def test_predict_json(tmp_path):
    out = tmp_path / 'predict.json'
    assert main(['predict', '--format', 'json', '--out', str(out)]) == EXIT_OK
    report = json.loads(_read(out))
    assert report['reference_prediction_bracketed'] is True
    assert report['coherence_time_ps'] == pytest.approx(13.4134, abs=1e-3)
    assert report['narrowband']['idler_bandwidth_pm'] == 200.0
    assert report['narrowband']['visibility']['quadrature'] >= 0.96
    assert report['visibility']['linear'] < report['visibility']['quadrature']


def test_predict_csv_goes_to_stdout(capsys):
    assert main(['predict', '--idler-bandwidth', '0.3nm']) == EXIT_OK
    out = capsys.readouterr().out
    assert 'rule,dt_a_ps,dt_b_ps,coherence_time_ps,visibility,narrowband_pm,narrowband_visibility' in out
    assert 'quadrature,' in out and 'linear,' in out
    assert ',300.0,' in out


# ----------------------------------------------------------------------
# scan and fit
# ----------------------------------------------------------------------

def test_scan_csv_and_fit(tmp_path):
    scan_csv = tmp_path / 'scan.csv'
    assert main(['scan', *FAST, '--out', str(scan_csv)]) == EXIT_OK
    lines = _read(scan_csv).splitlines()
    assert lines[0] == 'delay_ps,coincidence_probability'
    assert len(lines) == 42

    scan = read_scan_csv(str(scan_csv))
    assert scan.mode == 'probability'
    assert len(scan) == 41

    fit_json = tmp_path / 'fit.json'
    assert main(['fit', str(scan_csv), '--out', str(fit_json)]) == EXIT_OK
    fit = json.loads(_read(fit_json))
    assert fit['converged'] is True
    assert 0.6 < fit['visibility'] < 1.0
    assert 10.0 < fit['width_fwhm'] < 20.0


def test_scan_with_narrow_idler_filters(tmp_path):
    out = tmp_path / 'scan.json'
    assert main(['scan', *FAST, '--idler-bandwidth', '200pm', '--format', 'json', '--out', str(out)]) == EXIT_OK
    document = json.loads(_read(out))
    assert document['visibility'] > 0.9
    assert len(document['delay_ps']) == 41


# ----------------------------------------------------------------------
# montecarlo
# ----------------------------------------------------------------------

def test_montecarlo_is_byte_identical_for_a_seed(tmp_path):
    first, again, other = tmp_path / 'a.csv', tmp_path / 'b.csv', tmp_path / 'c.csv'
    assert main(['montecarlo', *FAST, '--seed', '3', '--out', str(first)]) == EXIT_OK
    assert main(['montecarlo', *FAST, '--seed', '3', '--out', str(again)]) == EXIT_OK
    assert main(['montecarlo', *FAST, '--seed', '4', '--out', str(other)]) == EXIT_OK
    assert _read(first) == _read(again)
    assert _read(first) != _read(other)
    assert _read(first).splitlines()[0] == 'delay_ps,raw_counts,background,net_counts,error'

    summary = json.loads(_read(tmp_path / 'a.json'))
    assert summary['seed'] == 3
    assert set(summary['car']) == {'a', 'b'}


def test_montecarlo_prints_the_reference_background(tmp_path, capsys):
    assert main(['montecarlo', *FAST, '--out', str(tmp_path / 'counts.csv')]) == EXIT_OK
    line = next(l for l in capsys.readouterr().out.splitlines() if l.strip().startswith('background'))
    assert 'reference 0.145 /min' in line


def test_montecarlo_output_can_be_fitted(tmp_path):
    data = tmp_path / 'counts.csv'
    fit_json = tmp_path / 'fit.json'
    assert main(['montecarlo', *FAST, '--out', str(data)]) == EXIT_OK
    assert read_scan_csv(str(data)).mode == 'counts'
    assert main(['fit', str(data), '--out', str(fit_json)]) in (0, 1)
    assert 'converged' in json.loads(_read(fit_json))


def test_archived_runs_show_in_history(tmp_path, capsys):
    db = tmp_path / 'runs.db'
    assert main(['montecarlo', *FAST, '--format', 'json', '--out', str(tmp_path / 'mc.json'),
                 '--db', str(db)]) == EXIT_OK
    capsys.readouterr()
    assert main(['history', '--db', str(db)]) == EXIT_OK
    out = capsys.readouterr().out
    assert '1 total' in out
    assert '#1' in out


# ----------------------------------------------------------------------
# Input errors
# ----------------------------------------------------------------------

def test_empty_csv(tmp_path, capsys):
    path = tmp_path / 'empty.csv'
    path.write_text('')
    assert main(['fit', str(path)]) == EXIT_INPUT
    assert 'row 1' in capsys.readouterr().err


def test_bad_csv_row_is_named(tmp_path, capsys):
    path = tmp_path / 'bad.csv'
    path.write_text('delay_ps,counts\n-10,40\n0,abc\n10,41\n')
    assert main(['fit', str(path)]) == EXIT_INPUT
    assert 'row 3' in capsys.readouterr().err


def test_csv_needs_increasing_delays(tmp_path):
    path = tmp_path / 'order.csv'
    path.write_text('delay_ps,counts\n0,40\n0,41\n')
    with pytest.raises(CsvParseError) as info:
        read_scan_csv(str(path))
    assert info.value.row == 3


def test_csv_needs_a_value_column(tmp_path):
    path = tmp_path / 'cols.csv'
    path.write_text('delay_ps,other\n0,1\n')
    with pytest.raises(CsvParseError):
        read_scan_csv(str(path))


def test_missing_input_file(tmp_path):
    assert main(['fit', str(tmp_path / 'absent.csv')]) == EXIT_INPUT


def test_missing_output_directory_leaves_nothing_behind(tmp_path):
    out = tmp_path / 'nowhere' / 'scan.csv'
    assert main(['montecarlo', *FAST, '--out', str(out)]) == EXIT_INPUT
    assert not os.path.exists(out.parent)
    assert os.listdir(tmp_path) == []


def test_bad_config_exits_with_input_code(tmp_path, capsys):
    config = tmp_path / 'bad.json'
    config.write_text('{\n  "grid": {"points": 300}\n}\n')
    assert main(['predict', '--config', str(config)]) == EXIT_INPUT
    err = capsys.readouterr().err
    assert 'grid.points' in err
    assert 'line 2' in err


def test_non_power_of_two_grid_flag():
    assert main(['scan', '--grid-points', '200']) == EXIT_INPUT


def test_scan_and_fit_plots(tmp_path):
    scan_csv, html = tmp_path / 'scan.csv', tmp_path / 'scan.html'
    assert main(['scan', *FAST, '--out', str(scan_csv), '--plot', str(html)]) == EXIT_OK
    assert 'plotly' in _read(html).lower()
    fit_html = tmp_path / 'fit.html'
    assert main(['fit', str(scan_csv), '--out', str(tmp_path / 'fit.json'), '--plot', str(fit_html)]) == EXIT_OK
    assert os.path.getsize(fit_html) > 0


@pytest.mark.slow
def test_reproduce_passes_on_the_default_config(tmp_path):
    out = tmp_path / 'report.json'
    assert main(['reproduce', '--format', 'json', '--out', str(out)]) == EXIT_OK
    rows = {row['criterion']: row for row in json.loads(_read(out))['criteria']}
    assert set(rows) == {
        'coherence_time', 'prediction_bracket', 'narrowband_visibility', 'walkoff_ppln',
        'background_bookkeeping', 'numerical_visibility', 'dip_width', 'density_matrix_a',
        'density_matrix_b', 'schmidt_purity', 'gaussian_agreement', 'net_visibility',
        'raw_reduction', 'car', 'deterministic',
    }
    report = json.loads(_read(out))['criteria']
    assert [row['criterion'] for row in report if not row['passed']] == []
    assert 15.0 <= rows['dip_width']['value'] <= 19.0
