"""
Run repository for the simulation run registry.
"""

from app.models.simulation_run import SimulationRun
from app.persistence.repository import SQLAlchemyRepository


class RunRepository(SQLAlchemyRepository):
    """
    Repository for SimulationRun entity, listed oldest first.
    """

    def __init__(self):
        """Initialize RunRepository with SimulationRun model."""
        super().__init__(SimulationRun, order_by=SimulationRun.created_at)

    def get_runs_by_seed(self, master_seed):
        """
        Retrieve all runs started from a master seed.

        Args:
            master_seed (int): The run's master seed

        Returns:
            list: List of SimulationRun instances
        """
        return self.filter_by(master_seed=master_seed)
