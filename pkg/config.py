import os


class Config:
    """Base configuration"""
    SECRET_KEY = os.getenv('SECRET_KEY', 'default_secret_key')
    DEBUG = False
    SQLALCHEMY_TRACK_MODIFICATIONS = False
    LOG_LEVEL = os.getenv('LOG_LEVEL', 'INFO')
    RESULTS_DIR = os.getenv('RESULTS_DIR', 'results')
    DEFAULT_WORKERS = int(os.getenv('WORKERS', '0')) or None  # None defers to the run configuration
    BOOTSTRAP_RESAMPLES = int(os.getenv('BOOTSTRAP_RESAMPLES', '120'))
    ORACLE_SAMPLE_SIZE = int(os.getenv('ORACLE_SAMPLE_SIZE', '1000000'))


class DevelopmentConfig(Config):
    """Development configuration with SQLite"""
    DEBUG = True
    LOG_LEVEL = os.getenv('LOG_LEVEL', 'DEBUG')
    SQLALCHEMY_DATABASE_URI = os.getenv(
        'DATABASE_URL',
        'sqlite:///spatial_shift_dev.db'
    )


class TestingConfig(Config):
    """Testing configuration"""
    TESTING = True
    SQLALCHEMY_DATABASE_URI = 'sqlite:///:memory:'
    BOOTSTRAP_RESAMPLES = 20
    ORACLE_SAMPLE_SIZE = 100_000


class ProductionConfig(Config):
    """Production configuration"""
    SQLALCHEMY_DATABASE_URI = os.getenv(
        'DATABASE_URL',
        'sqlite:///spatial_shift.db'
    )


config = {
    'development': DevelopmentConfig,
    'testing': TestingConfig,
    'production': ProductionConfig,
    'default': DevelopmentConfig
}
