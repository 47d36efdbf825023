import pytest

from config import Config


@pytest.fixture
def app(tmp_path):
    from app import create_app

    class TestConfig(Config):
        TESTING = True
        CHECKS_FILE = str(tmp_path / 'checks.json')
        RESULTS_FOLDER = str(tmp_path / 'results')

    return create_app(TestConfig)


@pytest.fixture
def client(app):
    return app.test_client()
