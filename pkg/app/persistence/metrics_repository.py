"""
Metrics repository for the rows of persisted runs.
"""

from app.models.metrics_record import MetricsRecord
from app.persistence.repository import SQLAlchemyRepository


class MetricsRepository(SQLAlchemyRepository):
    """
    Repository for MetricsRecord entity with table-specific query methods.
    """

    def __init__(self):
        """Initialize MetricsRepository with MetricsRecord model."""
        super().__init__(MetricsRecord, order_by=MetricsRecord.position)

    def get_metrics_by_run(self, run_id):
        """
        Retrieve a run's rows in table order.

        Args:
            run_id (str): The run's ID

        Returns:
            list: List of MetricsRecord instances
        """
        return self.filter_by(run_id=run_id)

    def get_metrics_by_scenario(self, scenario, n=None):
        """
        Retrieve rows for a scenario across runs, optionally for one sample size.

        Args:
            scenario (str): Scenario name
            n (int, optional): Sample size

        Returns:
            list: List of MetricsRecord instances
        """
        query = self.model.query.filter_by(scenario=scenario)
        if n is not None:
            query = query.filter_by(n=n)
        return query.order_by(self.model.run_id, self.model.position).all()
