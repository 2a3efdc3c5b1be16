"""HTTP face of the toolkit: pydantic schemas, handlers, FastAPI app."""

from .app import app

__all__ = ["app"]
