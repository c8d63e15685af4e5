"""Closed-form double-zero / cusp / degenerate-point detection and simulation
probes for conductance-based neurons with an M-current."""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401
