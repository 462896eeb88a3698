"""
SimulationRun model: one executed RunConfig with its manifest.
"""

from sqlalchemy.orm import relationship, validates

from app.extensions import db
from app.models.base_model import BaseModel


class SimulationRun(BaseModel):
    """
    A persisted simulation run.

    Attributes:
        id (str): Unique identifier (inherited from BaseModel)
        master_seed (int): root seed of the run
        delta (float): exposure shift
        config (dict): RunConfig echo
        manifest (dict): versions, wall time, failure counts and truths
        output_path (str): where the table was written, if anywhere
        wall_time (float): seconds spent running
        metrics: Relationship to MetricsRecord (one-to-many)
    """

    __tablename__ = 'simulation_runs'

    master_seed = db.Column(db.Integer, nullable=False)
    delta = db.Column(db.Float, nullable=False)
    config = db.Column(db.JSON, nullable=False)
    manifest = db.Column(db.JSON, nullable=False, default=dict)
    output_path = db.Column(db.String(500), nullable=True)
    wall_time = db.Column(db.Float, nullable=False, default=0.0)

    metrics = relationship('MetricsRecord', back_populates='run', cascade='all, delete-orphan',
                           order_by='MetricsRecord.position')

    @validates('master_seed')
    def validate_master_seed(self, key, value):
        if isinstance(value, bool) or not isinstance(value, int) or value < 0:
            raise ValueError("Master seed must be a non-negative integer.")
        return value

    @validates('delta')
    def validate_delta(self, key, value):
        self.validate_number_range(value, "Delta")
        return float(value)

    @validates('wall_time')
    def validate_wall_time(self, key, value):
        self.validate_number_range(value, "Wall time", min_value=0)
        return float(value)

    @validates('output_path')
    def validate_output_path(self, key, value):
        self.validate_string_length(value, "Output path", 500, required=False)
        return value

    def to_dict(self, include_metrics=False):
        data = {
            'id': self.id,
            'master_seed': self.master_seed,
            'delta': self.delta,
            'config': self.config,
            'manifest': self.manifest,
            'output_path': self.output_path,
            'wall_time': self.wall_time,
            'created_at': self.created_at.isoformat() if self.created_at else None,
        }
        if include_metrics:
            data['metrics'] = [record.to_dict() for record in self.metrics]
        return data
