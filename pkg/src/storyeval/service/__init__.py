"""HTTP evaluation service: frontend app, record store, backend protocol, mock."""

from .app import create_app
from .mock_backend import create_mock_backend

__all__ = ["create_app", "create_mock_backend"]
