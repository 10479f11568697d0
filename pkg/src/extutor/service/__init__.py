"""HTTP service exposing tutoring sessions over a JSON wire API."""
from .app import create_app
from .storage import EventLogStore

__all__ = ["create_app", "EventLogStore"]
