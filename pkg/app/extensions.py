"""
Flask extensions initialization.
Extensions are initialized here to avoid circular imports.
"""

from flask_sqlalchemy import SQLAlchemy

db = SQLAlchemy()
