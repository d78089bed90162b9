"""Scene-based noise augmentation for speech datasets."""

from ._scenenoise import *  # noqa: F401,F403
from ._scenenoise import Error, ParseError, InvalidArgument, SourceOutsideRoom  # noqa: F401

__version__ = "0.1.0"
