"""
Command-line runner for the heralded-photon HOM simulator
Run `python main.py <command> --help` for the options of each command
"""

import argparse
import json
import logging
import math
import os
import re
import sys
import tempfile
from datetime import datetime
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from database.db_manager import RunArchive
from processors.counting import TallyResult, background_per_point, run_experiment, seeds_batch
from processors.fitting import coherence_width, fit_dip, fwhm_numeric
from processors.interference import (
    HomScan,
    eq1_visibility,
    gaussian_sweep,
    hom_dip,
    predict_narrowband,
    visibility_of,
    with_far_delays,
)
from processors.sources import (
    effective_duration,
    extended_amplitude,
    herald_pair,
    purity,
    schmidt_coefficients,
    shared_idler_grid,
    source_grids,
    walkoff_broadening,
)
from processors.spectral import coherence_time
from utils.config import (
    CRITERIA,
    DATABASE_PATH,
    DIP_MODELS,
    DURATION_RULES,
    JITTER_CONVENTIONS,
    MIN_GRID_POINTS,
    REFERENCE_BACKGROUND_RATE_PER_MIN,
    REFERENCE_NARROWBAND_PM,
    REFERENCE_VISIBILITY_PREDICTION,
    REPRODUCE_SEEDS,
)
from utils.errors import ConfigError, CsvParseError, DipEdgeError, FitError, HomError
from utils.plotting import dip_figure, write_figure
from utils.run_config import OUTPUT_FORMATS, RunConfig, load_run_config

_logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INPUT = 2


# ----------------------------------------------------------------------
# Output helpers
# ----------------------------------------------------------------------

def _banner(title: str) -> None:
    print(f"\n{'=' * 60}")
    print(f"{title} ({datetime.now():%Y-%m-%d %H:%M:%S})")
    print(f"{'=' * 60}")


def _sanitize(value: Any) -> Any:
    """JSON-safe copy: numpy scalars become floats, non-finite numbers become null"""
    if isinstance(value, dict):
        return {str(k): _sanitize(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_sanitize(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value) if math.isfinite(value) else None
    return value


def to_json(document: Dict[str, Any]) -> str:
    return json.dumps(_sanitize(document), sort_keys=True, indent=2) + '\n'


def to_csv(frame: pd.DataFrame) -> str:
    return frame.to_csv(index=False, lineterminator='\n')


def write_atomic(path: str, text: str) -> None:
    """Write through a temporary file in the target directory, then rename over `path`"""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix='.hom-', suffix='.tmp', dir=directory)
    try:
        with os.fdopen(fd, 'w', encoding='utf-8', newline='') as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


def _emit(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        write_atomic(out, text)
        print(f"✓ Wrote {out}")


def _sidecar(out: str, extension: str) -> str:
    root, _ = os.path.splitext(out)
    return root + extension


def _check_output_dir(*paths: Optional[str]) -> None:
    for path in paths:
        if path is None:
            continue
        directory = os.path.dirname(os.path.abspath(path))
        if not os.path.isdir(directory):
            raise FileNotFoundError(f"output directory does not exist: {directory}")


# ----------------------------------------------------------------------
# Argument handling
# ----------------------------------------------------------------------

def parse_bandwidth(text: str) -> float:
    """'200pm', '200 pm' or '200' in picometres; '0.2nm' in nanometres"""
    match = re.fullmatch(r'\s*([0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)\s*(pm|nm)?\s*', text)
    if not match:
        raise argparse.ArgumentTypeError(f"not a bandwidth: {text!r}")
    value = float(match.group(1)) * (1000.0 if match.group(2) == 'nm' else 1.0)
    if not value > 0:
        raise argparse.ArgumentTypeError("bandwidth must be positive")
    return value


def _overrides(args: argparse.Namespace, idler_filters: bool) -> Dict[str, Any]:
    overrides: Dict[str, Any] = {}
    if getattr(args, 'seed', None) is not None:
        overrides['seed'] = args.seed
    if getattr(args, 'rule', None) is not None:
        overrides['duration_rule'] = args.rule
    if getattr(args, 'jitter', None) is not None:
        overrides['jitter_convention'] = args.jitter
    if getattr(args, 'grid_points', None) is not None:
        overrides['grid'] = {'points': args.grid_points}
    if idler_filters and getattr(args, 'idler_bandwidth', None) is not None:
        overrides['sources'] = {
            key: {'idler_filter': {'bandwidth_pm': args.idler_bandwidth}} for key in ('a', 'b')
        }
    return overrides


def _load(args: argparse.Namespace, idler_filters: bool = True) -> RunConfig:
    run = load_run_config(args.config, _overrides(args, idler_filters))
    if getattr(args, 'format', None) is None:
        args.format = run.output_format
    if getattr(args, 'out', None) is None:
        args.out = run.out
    return run


# ----------------------------------------------------------------------
# predict
# ----------------------------------------------------------------------

def predict_report(run: RunConfig, narrowband_pm: float) -> Dict[str, Any]:
    cfg = run.experiment
    src_a, src_b = cfg.source_a, cfg.source_b
    tau = coherence_time(src_a.idler_filter)
    report: Dict[str, Any] = {
        'coherence_time_ps': tau,
        'walkoff_broadening_ps': {'a': walkoff_broadening(src_a), 'b': walkoff_broadening(src_b)},
        'effective_duration_ps': {},
        'visibility': {},
        'selected_rule': cfg.duration_rule,
        'narrowband': {'idler_bandwidth_pm': narrowband_pm, 'visibility': {}},
    }
    for rule in DURATION_RULES:
        dt_a, dt_b = effective_duration(src_a, rule), effective_duration(src_b, rule)
        report['effective_duration_ps'][rule] = {'a': dt_a, 'b': dt_b}
        report['visibility'][rule] = eq1_visibility(dt_a, dt_b, tau)
        report['narrowband']['visibility'][rule] = predict_narrowband(cfg, narrowband_pm, rule)
    low = min(report['visibility'].values())
    high = max(report['visibility'].values())
    report['reference_prediction'] = REFERENCE_VISIBILITY_PREDICTION
    report['reference_prediction_bracketed'] = low <= REFERENCE_VISIBILITY_PREDICTION <= high
    return report


def cmd_predict(args: argparse.Namespace) -> int:
    run = _load(args, idler_filters=False)
    narrowband = args.idler_bandwidth if args.idler_bandwidth is not None else REFERENCE_NARROWBAND_PM
    _check_output_dir(args.out)
    report = predict_report(run, narrowband)

    _banner("Closed-form prediction")
    print(f"  coherence time        {report['coherence_time_ps']:.3f} ps")
    for rule in DURATION_RULES:
        d = report['effective_duration_ps'][rule]
        print(f"  [{rule:>10}] dt_a = {d['a']:.3f} ps, dt_b = {d['b']:.3f} ps, "
              f"V = {report['visibility'][rule]:.4f}, "
              f"V({narrowband:g} pm) = {report['narrowband']['visibility'][rule]:.4f}")
    flag = 'yes' if report['reference_prediction_bracketed'] else 'no'
    print(f"  {REFERENCE_VISIBILITY_PREDICTION:.2f} bracketed by the two rules: {flag}")

    if args.format == 'csv':
        rows = [{'rule': rule,
                 'dt_a_ps': report['effective_duration_ps'][rule]['a'],
                 'dt_b_ps': report['effective_duration_ps'][rule]['b'],
                 'coherence_time_ps': report['coherence_time_ps'],
                 'visibility': report['visibility'][rule],
                 'narrowband_pm': narrowband,
                 'narrowband_visibility': report['narrowband']['visibility'][rule]}
                for rule in DURATION_RULES]
        text = to_csv(pd.DataFrame(rows))
    else:
        text = to_json(report)
    _emit(text, args.out)
    return EXIT_OK


# ----------------------------------------------------------------------
# scan
# ----------------------------------------------------------------------

def cmd_scan(args: argparse.Namespace) -> int:
    run = _load(args)
    cfg = run.experiment
    _check_output_dir(args.out, args.plot)

    _banner("Numerical HOM scan")
    print(f"\n[1/2] Building heralded states ({cfg.grid_points} points, {cfg.jitter_convention} jitter)...")
    photons = herald_pair(cfg.source_a, cfg.source_b, cfg.grid_points,
                          cfg.duration_rule, cfg.jitter_convention)
    for label, photon in zip(('a', 'b'), photons):
        print(f"  {label}: purity {photon.rho.purity:.4f}, jitter {photon.jitter_rms:.3f} ps")

    print(f"\n[2/2] Scanning {len(cfg.delays)} delays...")
    scan = hom_dip(*photons, delays=cfg.delays)
    far_scan = hom_dip(*photons, delays=with_far_delays(cfg.delays, scan.coherence_time))
    print(f"  visibility            {visibility_of(far_scan):.4f}")
    try:
        print(f"  dip FWHM              {fwhm_numeric(scan):.3f} ps")
        print(f"  coherence width       {coherence_width(scan):.3f} ps")
    except DipEdgeError as e:
        print(f"  dip FWHM              n/a ({e})")

    frame = pd.DataFrame({'delay_ps': scan.delays, 'coincidence_probability': scan.values})
    if args.format == 'json':
        text = to_json({'delay_ps': scan.delays, 'coincidence_probability': scan.values,
                        'visibility': visibility_of(far_scan)})
    else:
        text = to_csv(frame)
    _emit(text, args.out)
    if args.plot:
        write_figure(dip_figure(scan, title='Coincidence probability'), args.plot)
        print(f"✓ Wrote {args.plot}")
    return EXIT_OK


# ----------------------------------------------------------------------
# montecarlo
# ----------------------------------------------------------------------

def _print_tally(tally: TallyResult) -> None:
    print(f"  net visibility        {tally.net_visibility:.4f}")
    print(f"  raw reduction         {tally.raw_reduction:.4f}")
    if tally.net_fit is not None:
        print(f"  fitted FWHM           {tally.net_fit.width_fwhm:.3f} ps")
    print(f"  background            {tally.background_rate:.4f} /min "
          f"({tally.background[0]:.2f} per point, reference {REFERENCE_BACKGROUND_RATE_PER_MIN:.3f} /min)")
    for source in sorted(tally.car):
        print(f"  CAR {source}                 {tally.car[source]:.2f}")


def cmd_montecarlo(args: argparse.Namespace) -> int:
    run = _load(args)
    cfg = run.experiment
    summary_path = _sidecar(args.out, '.json') if args.out and args.format == 'csv' else None
    _check_output_dir(args.out, args.plot, args.db)

    _banner(f"Monte Carlo four-fold scan (seed {cfg.rng_seed})")
    tally = run_experiment(cfg)
    _print_tally(tally)

    summary = tally.summary()
    summary['seed'] = cfg.rng_seed
    summary['duration_rule'] = cfg.duration_rule
    summary['jitter_convention'] = cfg.jitter_convention
    if args.format == 'json':
        summary['points'] = tally.to_frame().to_dict(orient='list')
        _emit(to_json(summary), args.out)
    else:
        _emit(to_csv(tally.to_frame()), args.out)
        if summary_path is not None:
            _emit(to_json(summary), summary_path)
        else:
            sys.stdout.write(to_json(summary))

    if args.plot:
        write_figure(dip_figure(tally.net_scan(), tally.net_fit, title='Net four-fold counts'), args.plot)
        print(f"✓ Wrote {args.plot}")
    if args.db:
        archive = RunArchive(args.db)
        try:
            run_id = archive.add_run(tally, cfg, run.document)
            print(f"✓ Archived as run {run_id}")
        finally:
            archive.close()
    return EXIT_OK


# ----------------------------------------------------------------------
# fit
# ----------------------------------------------------------------------

VALUE_COLUMNS = (
    ('net_counts', 'counts'),
    ('coincidence_probability', 'probability'),
    ('counts', 'counts'),
    ('raw_counts', 'counts'),
)


def _numeric_column(frame: pd.DataFrame, column: str) -> np.ndarray:
    values = pd.to_numeric(frame[column].str.strip(), errors='coerce')
    bad = np.flatnonzero(values.isna().to_numpy())
    if len(bad):
        row = int(bad[0]) + 2  # header is row 1
        raise CsvParseError(f"column '{column}' holds {frame[column].iloc[bad[0]]!r}, not a number", row=row)
    return values.to_numpy(dtype=float)


def read_scan_csv(path: str) -> HomScan:
    """Scan CSV with a header row: delay_ps, one value column and an optional error column"""
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.EmptyDataError as e:
        raise CsvParseError("file is empty", row=1) from e
    except pd.errors.ParserError as e:
        match = re.search(r'line (\d+)', str(e))
        raise CsvParseError(str(e), row=int(match.group(1)) if match else None) from e

    frame.columns = [c.strip() for c in frame.columns]
    if 'delay_ps' not in frame.columns:
        raise CsvParseError("missing 'delay_ps' column", row=1)
    if frame.empty:
        raise CsvParseError("no data rows", row=2)
    for column, mode in VALUE_COLUMNS:
        if column in frame.columns:
            break
    else:
        names = ', '.join(c for c, _ in VALUE_COLUMNS)
        raise CsvParseError(f"need one of the value columns: {names}", row=1)

    delays = _numeric_column(frame, 'delay_ps')
    values = _numeric_column(frame, column)
    errors = _numeric_column(frame, 'error') if 'error' in frame.columns else None
    steps = np.flatnonzero(np.diff(delays) <= 0)
    if len(steps):
        raise CsvParseError("delays must be strictly increasing", row=int(steps[0]) + 3)
    try:
        return HomScan(delays, values, errors, mode=mode)
    except HomError as e:
        raise CsvParseError(str(e)) from e


def cmd_fit(args: argparse.Namespace) -> int:
    if args.format is None:
        args.format = 'json'
    _check_output_dir(args.out, args.plot)
    scan = read_scan_csv(args.input)

    _banner(f"Dip fit ({args.model})")
    try:
        fit = fit_dip(scan, model=args.model)
        status = EXIT_OK
    except FitError as e:
        print(f"✗ {e}")
        fit, status = e.best, EXIT_FAILED

    document = fit.to_dict()
    document['converged'] = status == EXIT_OK
    print(f"  baseline              {fit.baseline:.4f}")
    print(f"  visibility            {fit.visibility:.4f} +/- {fit.param_errors.get('visibility', float('nan')):.4f}")
    print(f"  FWHM                  {fit.width_fwhm:.3f} ps")
    print(f"  centre                {fit.center:.3f} ps")
    if args.format == 'csv':
        text = to_csv(pd.DataFrame([{k: v for k, v in document.items() if k != 'param_errors'}]))
    else:
        text = to_json(document)
    _emit(text, args.out)
    if args.plot:
        write_figure(dip_figure(scan, fit, title='Dip fit'), args.plot)
        print(f"✓ Wrote {args.plot}")
    return status


# ----------------------------------------------------------------------
# reproduce
# ----------------------------------------------------------------------

def _criterion(name: str, value: float, band=None, passed: Optional[bool] = None,
               note: str = '') -> Dict[str, Any]:
    band = CRITERIA.get(name) if band is None else band
    if passed is None:
        passed = band is not None and band[0] <= value <= band[1]
    return {'criterion': name, 'value': value, 'low': band[0] if band else None,
            'high': band[1] if band else None, 'passed': bool(passed), 'note': note}


def reproduce_rows(run: RunConfig, narrowband_pm: float, seeds: int,
                   progress: bool = True) -> List[Dict[str, Any]]:
    cfg = run.experiment
    rows = []
    report = predict_report(run, narrowband_pm)
    quad, lin = report['visibility']['quadrature'], report['visibility']['linear']

    print("\n[1/5] Closed form...")
    rows.append(_criterion('coherence_time', report['coherence_time_ps']))
    rows.append(_criterion('prediction_bracket', REFERENCE_VISIBILITY_PREDICTION, band=(lin, quad),
                           note=f"quadrature {quad:.4f}, linear {lin:.4f}"))
    rows.append(_criterion('narrowband_visibility',
                           report['narrowband']['visibility'][cfg.duration_rule],
                           note=f"{narrowband_pm:g} pm idler filters"))
    rows.append(_criterion('walkoff_ppln', report['walkoff_broadening_ps']['a']))
    bookkeeping = background_per_point(REFERENCE_BACKGROUND_RATE_PER_MIN, cfg.acquisition_per_point)
    rows.append(_criterion('background_bookkeeping', bookkeeping,
                           band=(8.12 - 1e-9, 8.12 + 1e-9), note="0.145/min over 56 min"))

    print("\n[2/5] Numerical dips...")
    photons = herald_pair(cfg.source_a, cfg.source_b, cfg.grid_points, cfg.duration_rule, cfg.jitter_convention)
    scan = hom_dip(*photons, delays=cfg.delays)
    far_scan = hom_dip(*photons, delays=with_far_delays(cfg.delays, scan.coherence_time))
    rows.append(_criterion('numerical_visibility', visibility_of(far_scan),
                           band=(quad - 0.06, quad + 0.01), note=f"{cfg.jitter_convention} jitter"))
    rows.append(_criterion('dip_width', coherence_width(scan),
                           note=f"FWHM {fwhm_numeric(scan):.2f} ps, {cfg.jitter_convention} jitter"))

    print("\n[3/5] Heralded-state checks...")
    for label, photon in zip(('a', 'b'), photons):
        rho = photon.rho
        ok = (rho.hermiticity_error() <= 1e-12 and abs(rho.trace - 1.0) <= 1e-12
              and rho.min_eigenvalue() >= -1e-10)
        rows.append(_criterion(f'density_matrix_{label}', rho.purity, band=(0.0, 1.0), passed=ok,
                               note="hermitian, unit trace, positive"))
    idler_grid = shared_idler_grid(cfg.source_a, cfg.source_b, MIN_GRID_POINTS)
    grids = source_grids(cfg.source_a, MIN_GRID_POINTS, idler_grid)
    ext = extended_amplitude(cfg.source_a, grids, cfg.duration_rule, cfg.jitter_convention)
    lam = schmidt_coefficients(ext)
    rho_small = ext.T @ ext.conj()
    rho_small = rho_small / np.trace(rho_small).real
    gap = abs(float(np.sum(lam ** 2)) - purity(rho_small))
    rows.append(_criterion('schmidt_purity', gap, band=(0.0, 1e-9), note="|sum lambda^2 - purity|"))

    print("\n[4/5] Gaussian cross-check...")
    sweep = gaussian_sweep(points=256)
    worst = max(abs(r['numerical'] - r['closed_form']) for r in sweep)
    rows.append(_criterion('gaussian_agreement', worst, band=(0.0, 0.03), note="3x3 sweep"))

    print(f"\n[5/5] Monte Carlo over {seeds} seeds...")
    tallies = seeds_batch(cfg, range(cfg.rng_seed, cfg.rng_seed + seeds), photons=photons, progress=progress)
    rows.append(_criterion('net_visibility', float(np.nanmean([t.net_visibility for t in tallies]))))
    rows.append(_criterion('raw_reduction', float(np.nanmean([t.raw_reduction for t in tallies]))))
    for source in ('a', 'b'):
        rows.append(_criterion('car', float(np.mean([t.car[source] for t in tallies])),
                               note=f"source {source} ({getattr(cfg, 'source_' + source).name})"))
    first, again = run_experiment(cfg, photons=photons), run_experiment(cfg, photons=photons)
    same = to_csv(first.to_frame()) == to_csv(again.to_frame())
    rows.append(_criterion('deterministic', float(same), band=(1.0, 1.0), note=f"seed {cfg.rng_seed}"))
    return rows


def cmd_reproduce(args: argparse.Namespace) -> int:
    run = _load(args, idler_filters=False)
    narrowband = args.idler_bandwidth if args.idler_bandwidth is not None else REFERENCE_NARROWBAND_PM
    _check_output_dir(args.out)

    _banner("Reproduction check")
    rows = reproduce_rows(run, narrowband, args.seeds, progress=not args.verbose)

    print(f"\n{'criterion':<24}{'value':>12}{'band':>24}  result")
    print('-' * 68)
    for row in rows:
        band = f"[{row['low']:.4g}, {row['high']:.4g}]" if row['low'] is not None else '-'
        print(f"{row['criterion']:<24}{row['value']:>12.4f}{band:>24}  "
              f"{'PASS' if row['passed'] else 'FAIL'}  {row['note']}")
    failed = [r['criterion'] for r in rows if not r['passed']]
    print(f"\n{'✓ All criteria passed' if not failed else '✗ Failed: ' + ', '.join(failed)}")

    if args.out is not None:
        text = to_csv(pd.DataFrame(rows)) if args.format == 'csv' else to_json({'criteria': rows})
        _emit(text, args.out)
    return EXIT_FAILED if failed else EXIT_OK


# ----------------------------------------------------------------------
# history
# ----------------------------------------------------------------------

def cmd_history(args: argparse.Namespace) -> int:
    archive = RunArchive(args.db)
    try:
        runs = archive.get_recent_runs(limit=args.limit)
        _banner(f"Archived runs ({archive.get_total_runs()} total)")
        if not runs:
            print("  no runs archived yet")
        for r in runs:
            print(f"  #{r.id:<4} {r.created_at:%Y-%m-%d %H:%M}  seed {r.seed:<6} "
                  f"V_net {r.net_visibility if r.net_visibility is not None else float('nan'):.4f}  "
                  f"raw {r.raw_reduction if r.raw_reduction is not None else float('nan'):.4f}  "
                  f"{r.duration_rule}/{r.jitter_convention}")
    finally:
        archive.close()
    return EXIT_OK


# ----------------------------------------------------------------------
# Entry point
# ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='hom', description="Heralded single-photon HOM interference simulator")
    sub = parser.add_subparsers(dest='command', required=True)

    def common(p: argparse.ArgumentParser, outputs: bool = True) -> None:
        p.add_argument('--config', help="JSON run configuration merged over experiment_default.json")
        p.add_argument('--seed', type=int, help="RNG seed (unsigned 64-bit)")
        p.add_argument('--rule', choices=DURATION_RULES, help="effective-duration rule")
        p.add_argument('--jitter', choices=JITTER_CONVENTIONS, help="emission-jitter convention")
        p.add_argument('--grid-points', type=int, help="frequency grid points (power of two)")
        p.add_argument('--verbose', '-v', action='store_true', help="debug logging")
        if outputs:
            p.add_argument('--out', help="output file (stdout when omitted)")
            p.add_argument('--format', choices=OUTPUT_FORMATS)

    p = sub.add_parser('predict', help="closed-form visibility")
    common(p)
    p.add_argument('--idler-bandwidth', type=parse_bandwidth, help="narrowband extrapolation, e.g. 200pm")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser('scan', help="numerical coincidence-probability dip")
    common(p)
    p.add_argument('--idler-bandwidth', type=parse_bandwidth, help="replace both idler filters, e.g. 200pm")
    p.add_argument('--plot', help="write an HTML plot")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser('montecarlo', help="simulated four-fold counts with background and CAR")
    common(p)
    p.add_argument('--idler-bandwidth', type=parse_bandwidth, help="replace both idler filters, e.g. 200pm")
    p.add_argument('--plot', help="write an HTML plot")
    p.add_argument('--db', nargs='?', const=DATABASE_PATH, help="archive the run in a SQLite file")
    p.set_defaults(func=cmd_montecarlo)

    p = sub.add_parser('fit', help="fit a dip model to a scan CSV")
    p.add_argument('input', help="CSV with delay_ps and a value column")
    p.add_argument('--model', choices=DIP_MODELS, default='sinc_squared')
    p.add_argument('--out')
    p.add_argument('--format', choices=OUTPUT_FORMATS)
    p.add_argument('--plot', help="write an HTML plot")
    p.add_argument('--verbose', '-v', action='store_true')
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser('reproduce', help="check the reference figures and acceptance bands")
    common(p)
    p.add_argument('--idler-bandwidth', type=parse_bandwidth, help="narrowband extrapolation, e.g. 200pm")
    p.add_argument('--seeds', type=int, default=REPRODUCE_SEEDS, help="Monte Carlo seeds to average")
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser('history', help="list archived Monte Carlo runs")
    p.add_argument('--db', default=DATABASE_PATH)
    p.add_argument('--limit', type=int, default=10)
    p.add_argument('--verbose', '-v', action='store_true')
    p.set_defaults(func=cmd_history)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format='%(asctime)s %(levelname)s %(name)s: %(message)s',
    )
    try:
        return args.func(args)
    except (ConfigError, CsvParseError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except FitError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAILED
    except HomError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
