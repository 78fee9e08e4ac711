"""Mixed-frequency time-series forecasting toolkit (C++ core)."""

from ._mfcast import *  # noqa: F401,F403
from ._mfcast import __version__  # noqa: F401
