"""
MetricsRecord model: one MetricsRow of a persisted run.
"""

from sqlalchemy import ForeignKey
from sqlalchemy.orm import relationship, validates

from app.extensions import db
from app.models.base_model import BaseModel


class MetricsRecord(BaseModel):
    """
    Bias, SD, MSE and coverage of one method in one (scenario, n) cell.

    Attributes:
        run_id (str): ID of the owning SimulationRun
        position (int): row order within the run's table
        scenario (str), n (int), method (str): the cell
        replicates (int): successful replicates
        bias, sd, mse (float): summaries, None when the cell did not run
        coverage (float): interval coverage in [0, 1], or None
        failures (int): failed replicates
        note (str): positivity marker, substitution or failure flag
    """

    __tablename__ = 'metrics_records'

    run_id = db.Column(db.String(36), ForeignKey('simulation_runs.id'), nullable=False)
    position = db.Column(db.Integer, nullable=False, default=0)
    scenario = db.Column(db.String(50), nullable=False)
    n = db.Column(db.Integer, nullable=False)
    method = db.Column(db.String(50), nullable=False)
    replicates = db.Column(db.Integer, nullable=False, default=0)
    bias = db.Column(db.Float, nullable=True)
    sd = db.Column(db.Float, nullable=True)
    mse = db.Column(db.Float, nullable=True)
    coverage = db.Column(db.Float, nullable=True)
    failures = db.Column(db.Integer, nullable=False, default=0)
    note = db.Column(db.String(200), nullable=False, default="")

    run = relationship('SimulationRun', back_populates='metrics')

    @validates('scenario', 'method')
    def validate_label(self, key, value):
        self.validate_string_length(value, key.capitalize(), 50)
        return value

    @validates('n')
    def validate_n(self, key, value):
        self.validate_number_range(value, "Sample size", min_value=1)
        return int(value)

    @validates('replicates', 'failures')
    def validate_count(self, key, value):
        self.validate_number_range(value, key.capitalize(), min_value=0)
        return int(value)

    @validates('coverage')
    def validate_coverage(self, key, value):
        self.validate_number_range(value, "Coverage", 0.0, 1.0, required=False)
        return value

    @validates('bias', 'sd', 'mse')
    def validate_summary(self, key, value):
        self.validate_number_range(value, key.upper(), required=False)
        return value

    @classmethod
    def from_row(cls, row, position=0):
        """Build a record from a MetricsRow."""
        return cls(position=position, **row.to_dict())

    def to_dict(self):
        return {
            'scenario': self.scenario,
            'n': self.n,
            'method': self.method,
            'replicates': self.replicates,
            'bias': self.bias,
            'sd': self.sd,
            'mse': self.mse,
            'coverage': self.coverage,
            'failures': self.failures,
            'note': self.note,
        }
