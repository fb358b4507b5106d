"""Reference governors with preview information for discrete-time LTI systems."""

from ._prgov import *  # noqa: F401,F403
from ._prgov import __all__, __version__  # noqa: F401
