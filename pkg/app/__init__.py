import logging

from flask import Flask
from flask_cors import CORS
from flask_restx import Api

from app.api.v1.estimates import api as estimates_ns
from app.api.v1.runs import api as runs_ns
from app.api.v1.scenarios import api as scenarios_ns
from app.extensions import db


def create_app(config_class="config.DevelopmentConfig"):
    app = Flask(__name__)
    app.config.from_object(config_class)

    level = logging.getLevelName(str(app.config.get('LOG_LEVEL', 'INFO')).upper())
    # app.logger is the 'app' logger: module loggers under app.* share its level and handler
    app.logger.setLevel(level)

    # Enable CORS for all routes
    CORS(app)

    db.init_app(app)

    # Register PRAGMA hook after db.init_app
    from sqlalchemy import event
    from sqlalchemy.engine import Engine

    @event.listens_for(Engine, "connect")
    def set_sqlite_pragma(dbapi_connection, connection_record):
        try:
            cursor = dbapi_connection.cursor()
            cursor.execute("PRAGMA foreign_keys=ON")
            cursor.close()
        except Exception:
            pass

    api = Api(app, version='1.0', title='Spatial Shift API',
              description='Doubly robust shift-effect estimation under spatial confounding',
              doc='/api/v1/doc')

    api.add_namespace(scenarios_ns, path='/api/v1/scenarios')
    api.add_namespace(runs_ns, path='/api/v1/runs')
    api.add_namespace(estimates_ns, path='/api/v1/estimates')

    # CLI commands
    from app import commands
    commands.init_app(app)

    with app.app_context():
        db.create_all()

    return app
