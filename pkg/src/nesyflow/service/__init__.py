from .store import SessionStore
from .app import create_app

__all__ = ["SessionStore", "create_app"]
