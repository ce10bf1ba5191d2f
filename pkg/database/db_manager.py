"""
Database manager for archiving Monte Carlo runs and their delay points
"""

from sqlalchemy import create_engine, Column, Integer, String, DateTime, Text, Float, ForeignKey
from sqlalchemy.orm import declarative_base, sessionmaker
from datetime import datetime
import json
import math
import os
import sys

# Add parent directory to path for imports
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
from utils.config import DATABASE_PATH

Base = declarative_base()


def _finite(value):
    """NaN and infinities are stored as NULL"""
    if value is None:
        return None
    value = float(value)
    return value if math.isfinite(value) else None


class ExperimentRun(Base):
    """One simulated delay scan with its summary figures"""
    __tablename__ = 'runs'

    id = Column(Integer, primary_key=True)
    created_at = Column(DateTime, default=datetime.now)
    seed = Column(String(20), nullable=False)  # decimal text, unsigned 64-bit
    duration_rule = Column(String(20))        # quadrature, linear
    jitter_convention = Column(String(20))    # emission, matched, fwhm, none
    acquisition_minutes = Column(Float)
    net_visibility = Column(Float)
    raw_reduction = Column(Float)
    fit_width_ps = Column(Float)
    background_rate = Column(Float)           # counts per minute, both sources
    car_a = Column(Float)
    car_b = Column(Float)
    config_json = Column(Text)                # JSON string of the run configuration

    @property
    def seed_value(self):
        return int(self.seed)


class DelayPoint(Base):
    """Counts recorded at one delay of a run"""
    __tablename__ = 'points'

    id = Column(Integer, primary_key=True)
    run_id = Column(Integer, ForeignKey('runs.id'), nullable=False)
    delay_ps = Column(Float, nullable=False)
    raw_counts = Column(Integer)
    background = Column(Float)
    net_counts = Column(Float)
    error = Column(Float)


class RunArchive:
    """Manages the run archive"""

    def __init__(self, db_path=None):
        """Initialize database connection"""
        if db_path is None:
            db_path = DATABASE_PATH

        self.engine = create_engine(f'sqlite:///{db_path}')
        Base.metadata.create_all(self.engine)
        Session = sessionmaker(bind=self.engine)
        self.session = Session()

    def add_run(self, tally, cfg, document=None):
        """Store a TallyResult and its points; returns the run id"""
        try:
            run = ExperimentRun(
                seed=str(int(cfg.rng_seed)),
                duration_rule=cfg.duration_rule,
                jitter_convention=cfg.jitter_convention,
                acquisition_minutes=cfg.acquisition_per_point,
                net_visibility=_finite(tally.net_visibility),
                raw_reduction=_finite(tally.raw_reduction),
                fit_width_ps=_finite(tally.net_fit.width_fwhm) if tally.net_fit else None,
                background_rate=_finite(tally.background_rate),
                car_a=_finite(tally.car.get('a')),
                car_b=_finite(tally.car.get('b')),
                config_json=json.dumps(document, sort_keys=True) if document is not None else None
            )
            self.session.add(run)
            self.session.flush()
            for k, delay in enumerate(tally.delays):
                self.session.add(DelayPoint(
                    run_id=run.id,
                    delay_ps=float(delay),
                    raw_counts=int(tally.raw_counts[k]),
                    background=float(tally.background[k]),
                    net_counts=float(tally.net_counts[k]),
                    error=float(tally.errors[k])
                ))
            self.session.commit()
            return run.id
        except Exception:
            self.session.rollback()
            raise

    def get_recent_runs(self, limit=10):
        """Most recent runs first"""
        return self.session.query(ExperimentRun).order_by(
            ExperimentRun.created_at.desc(), ExperimentRun.id.desc()
        ).limit(limit).all()

    def get_points(self, run_id):
        """Delay points of one run, ordered by delay"""
        return self.session.query(DelayPoint).filter(
            DelayPoint.run_id == run_id
        ).order_by(DelayPoint.delay_ps).all()

    def get_total_runs(self):
        """Get total number of runs in database"""
        return self.session.query(ExperimentRun).count()

    def close(self):
        """Close database session"""
        self.session.close()
        self.engine.dispose()
