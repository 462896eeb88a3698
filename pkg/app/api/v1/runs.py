"""
Simulation run API endpoints.
Starts runs from a JSON configuration and serves the run registry.
"""

from flask_restx import Namespace, Resource, fields, reqparse

from app.services import facade

api = Namespace('runs', description='Simulation runs')

run_model = api.model('RunConfig', {
    'run': fields.Raw(required=True, description='scenarios, sample_sizes, replicates, methods, delta, master_seed, bootstrap, ...'),
    'crossfit': fields.Raw(description='Default options for dml_crossfit (r, q, folds, ...)'),
    'methods': fields.Raw(description='Method name -> learner options'),
    'scenario_params': fields.Raw(description='Scenario name -> parameter overrides'),
})


list_parser = reqparse.RequestParser()
list_parser.add_argument('seed', type=int, default=None, location='args', help='Only runs with this master seed')


def run_summary(run):
    return {
        'id': run.id,
        'master_seed': run.master_seed,
        'delta': run.delta,
        'output_path': run.output_path,
        'wall_time': run.wall_time,
        'created_at': run.created_at.isoformat() if run.created_at else None,
    }


@api.route('/')
class RunList(Resource):
    @api.expect(run_model, validate=True)
    @api.response(201, 'Run completed and recorded')
    @api.response(400, 'Invalid configuration')
    def post(self):
        """Run a simulation study and record its table."""
        try:
            result, run = facade.run_simulation(api.payload)
        except ValueError as e:
            return {'error': str(e)}, 400
        return run.to_dict(include_metrics=True), 201

    @api.expect(list_parser)
    @api.response(200, 'List of runs retrieved successfully')
    def get(self):
        """Retrieve recorded runs, oldest first."""
        seed = list_parser.parse_args()['seed']
        runs = facade.get_all_runs() if seed is None else facade.get_runs_by_seed(seed)
        return [run_summary(run) for run in runs], 200


@api.route('/<run_id>')
@api.param('run_id', 'The run unique identifier')
class RunResource(Resource):
    @api.response(200, 'Run details retrieved successfully')
    @api.response(404, 'Run not found')
    def get(self, run_id):
        """Get a run with its configuration, manifest and rows."""
        run = facade.get_run(run_id)
        if not run:
            return {'error': 'Run not found'}, 404
        return run.to_dict(include_metrics=True), 200

    @api.response(200, 'Run deleted successfully')
    @api.response(404, 'Run not found')
    def delete(self, run_id):
        """Delete a run and its rows."""
        if not facade.delete_run(run_id):
            return {'error': 'Run not found'}, 404
        return {'message': 'Run deleted successfully'}, 200


@api.route('/<run_id>/metrics')
@api.param('run_id', 'The run unique identifier')
class RunMetrics(Resource):
    @api.response(200, 'Rows retrieved successfully')
    @api.response(404, 'Run not found')
    def get(self, run_id):
        """Get a run's table rows in order."""
        metrics = facade.get_run_metrics(run_id)
        if metrics is None:
            return {'error': 'Run not found'}, 404
        return [record.to_dict() for record in metrics], 200
