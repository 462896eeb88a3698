"""
Scenario API endpoints.
Lists the simulation scenarios and computes their oracle effects.
"""

from flask_restx import Namespace, Resource, reqparse

from app.services import facade

api = Namespace('scenarios', description='Simulation scenarios and true effects')

truth_parser = reqparse.RequestParser()
truth_parser.add_argument('delta', type=float, default=1.0, location='args', help='Exposure shift')
truth_parser.add_argument('oracle_n', type=int, default=None, location='args', help='Monte Carlo oracle size')
truth_parser.add_argument('mode', type=str, default='shift', location='args', help='shift, derivative or ols_slope')
truth_parser.add_argument('seed', type=int, default=0, location='args', help='Oracle seed')

history_parser = reqparse.RequestParser()
history_parser.add_argument('n', type=int, default=None, location='args', help='Only rows for this sample size')


@api.route('/')
class ScenarioList(Resource):
    @api.response(200, 'List of scenarios retrieved successfully')
    def get(self):
        """Retrieve every scenario with its default parameters."""
        return facade.list_scenarios(), 200


@api.route('/<name>')
@api.param('name', 'The scenario name')
class ScenarioResource(Resource):
    @api.response(200, 'Scenario retrieved successfully')
    @api.response(404, 'Scenario not found')
    def get(self, name):
        """Get a scenario's default parameters."""
        scenario = facade.get_scenario(name)
        if not scenario:
            return {'error': 'Scenario not found'}, 404
        return scenario, 200


@api.route('/<name>/true-effect')
@api.param('name', 'The scenario name')
class TrueEffectResource(Resource):
    @api.expect(truth_parser)
    @api.response(200, 'True effect computed successfully')
    @api.response(400, 'Invalid parameters')
    @api.response(404, 'Scenario not found')
    def get(self, name):
        """Compute the scenario's oracle effect."""
        if not facade.get_scenario(name):
            return {'error': 'Scenario not found'}, 404
        args = truth_parser.parse_args()
        try:
            truth = facade.run_true_effect(name, args['delta'], args['oracle_n'],
                                           args['mode'], args['seed'])
        except ValueError as e:
            return {'error': str(e)}, 400
        return truth.to_dict(), 200


@api.route('/<name>/metrics')
@api.param('name', 'The scenario name')
class ScenarioMetrics(Resource):
    @api.expect(history_parser)
    @api.response(200, 'Recorded rows retrieved successfully')
    @api.response(404, 'Scenario not found')
    def get(self, name):
        """Get every recorded row for the scenario across runs."""
        if not facade.get_scenario(name):
            return {'error': 'Scenario not found'}, 404
        n = history_parser.parse_args()['n']
        return [record.to_dict() | {'run_id': record.run_id}
                for record in facade.get_scenario_metrics(name, n)], 200
