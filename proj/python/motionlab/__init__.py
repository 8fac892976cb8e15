"""Graph-attention human motion prediction (C++ core)."""

from ._core import *  # noqa: F401,F403
from ._core import MotionlabError, Predictor, __version__  # noqa: F401
