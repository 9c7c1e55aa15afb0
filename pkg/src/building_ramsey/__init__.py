"""Desk-scale verification lab for density Ramsey phenomena on trees and buildings."""

__version__ = "0.1.0"

from .errors import ConsistencyError, InputError

__all__ = ["ConsistencyError", "InputError", "__version__"]
