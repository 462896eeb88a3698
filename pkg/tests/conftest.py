import numpy as np
import pytest

from app import create_app
from app.estimation.dgp import ScenarioSpec, generate
from app.extensions import db
from config import TestingConfig


@pytest.fixture
def app():
    app = create_app(TestingConfig)
    yield app
    with app.app_context():
        db.session.remove()
        db.drop_all()


@pytest.fixture
def client(app):
    return app.test_client()


@pytest.fixture
def runner(app):
    return app.test_cli_runner()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def linear_data():
    return generate(ScenarioSpec.named("linear"), 400, np.random.default_rng(7))


@pytest.fixture
def simple_data():
    return generate(ScenarioSpec.named("simple"), 400, np.random.default_rng(11))


@pytest.fixture
def small_joint():
    """Joint smoother settings small enough for fast unit tests."""
    from app.estimation.learners import LearnerConfig
    return LearnerConfig(kind="rbf_joint", k=60)
