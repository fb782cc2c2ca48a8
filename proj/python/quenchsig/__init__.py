"""Quench dynamics and topology diagnostics of two-band chains."""

from ._core import *  # noqa: F401,F403
from ._core import Boundary, ConfigError, Error, GaplessError, NumericalError

__all__ = [name for name in dir() if not name.startswith("_")]
