import numpy as np
import pytest

from database.db_manager import RunArchive
from processors.counting import TallyResult, run_experiment, with_overrides


@pytest.fixture
def archive(tmp_path):
    db = RunArchive(str(tmp_path / 'runs.db'))
    yield db
    db.close()


def _tally(net_visibility=float('nan')):
    delays = np.array([-10.0, 0.0, 10.0])
    raw = np.array([12, 4, 11])
    background = np.full(3, 1.5)
    return TallyResult(
        delays=delays,
        raw_counts=raw,
        background=background,
        net_counts=raw - background,
        errors=np.sqrt(raw),
        overlaps=np.array([0.0, 0.8, 0.0]),
        coherence_time=13.4,
        car={'a': 19.0, 'b': float('inf')},
        background_rates={'a': 0.01, 'b': 0.02},
        net_visibility=net_visibility,
    )


def test_empty_archive(archive):
    assert archive.get_total_runs() == 0
    assert archive.get_recent_runs() == []


def test_run_and_points_are_stored(archive, default_cfg):
    run_id = archive.add_run(_tally(0.8), default_cfg, {'seed': 0})
    assert archive.get_total_runs() == 1
    run = archive.get_recent_runs()[0]
    assert run.id == run_id
    assert run.seed_value == default_cfg.rng_seed
    assert run.duration_rule == 'quadrature'
    assert run.net_visibility == pytest.approx(0.8)
    assert run.background_rate == pytest.approx(0.03)
    assert run.config_json == '{"seed": 0}'
    points = archive.get_points(run_id)
    assert [p.delay_ps for p in points] == [-10.0, 0.0, 10.0]
    assert [p.raw_counts for p in points] == [12, 4, 11]
    assert points[1].net_counts == pytest.approx(2.5)


def test_non_finite_figures_are_stored_as_null(archive, default_cfg):
    archive.add_run(_tally(), default_cfg)
    run = archive.get_recent_runs()[0]
    assert run.net_visibility is None
    assert run.car_a == pytest.approx(19.0)
    assert run.car_b is None
    assert run.fit_width_ps is None
    assert run.config_json is None


def test_recent_runs_come_newest_first(archive, default_cfg):
    ids = [archive.add_run(_tally(0.5), default_cfg) for _ in range(3)]
    recent = archive.get_recent_runs(limit=2)
    assert [r.id for r in recent] == ids[::-1][:2]


def test_simulated_run_is_archived(archive, default_cfg, default_photons):
    tally = run_experiment(default_cfg, photons=default_photons)
    run_id = archive.add_run(tally, default_cfg)
    assert len(archive.get_points(run_id)) == len(default_cfg.delays)
    assert archive.get_recent_runs()[0].fit_width_ps == pytest.approx(tally.net_fit.width_fwhm)


def test_largest_seed_round_trips(archive, default_cfg):
    seed = 2 ** 64 - 1
    archive.add_run(_tally(0.8), with_overrides(default_cfg, rng_seed=seed))
    run = archive.get_recent_runs()[0]
    assert run.seed == '18446744073709551615'
    assert run.seed_value == seed
