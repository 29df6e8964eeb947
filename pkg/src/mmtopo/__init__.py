"""Multi-material topology optimization with recursive interpolation domains."""

from .backend import NUMBA_ENABLED, backend_name

__version__ = "0.1.0"

__all__ = ["NUMBA_ENABLED", "backend_name", "__version__"]
