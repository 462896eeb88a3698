"""
Estimate API endpoints.
Estimates a shift effect on rows posted by the client.
"""

from flask_restx import Namespace, Resource, fields

from app.services import facade
from app.services.ingest import ColumnMap

api = Namespace('estimates', description='Shift-effect estimates on external data')

estimate_model = api.model('EstimateRequest', {
    'rows': fields.List(fields.Raw, required=True, description='Row mappings with y, x, s1, s2 and covariates'),
    'method': fields.String(required=True, description='Method name'),
    'delta': fields.Float(required=True, description='Exposure shift'),
    'bootstrap': fields.Integer(default=0, description='Bootstrap resamples, 0 for the analytic interval'),
    'seed': fields.Integer(default=0, description='Root seed'),
    'options': fields.Raw(description='Method options'),
    'covariates': fields.List(fields.String, description='Covariate columns; all extra columns by default'),
    'normalize': fields.Boolean(default=False, description='z-score quantitative columns'),
})


@api.route('/')
class EstimateList(Resource):
    @api.expect(estimate_model, validate=True)
    @api.response(200, 'Estimate computed successfully')
    @api.response(400, 'Invalid data or options')
    def post(self):
        """Estimate the shift effect on the posted rows."""
        payload = api.payload
        covariates = payload.get('covariates')
        columns = ColumnMap(covariates=tuple(covariates) if covariates is not None else None)
        try:
            estimate = facade.run_estimate(
                payload['rows'], payload['method'], payload['delta'],
                bootstrap=payload.get('bootstrap') or 0,
                seed=payload.get('seed') or 0,
                options=payload.get('options'),
                columns=columns,
                normalize=bool(payload.get('normalize')),
            )
        except ValueError as e:
            return {'error': str(e)}, 400
        return estimate.to_dict(), 200


@api.route('/methods')
class MethodList(Resource):
    @api.response(200, 'List of methods retrieved successfully')
    def get(self):
        """Retrieve every estimation method and its options."""
        return facade.list_methods(), 200
