"""Relative motion of two charges in a 2D harmonic trap with a magnetic field."""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401
