"""Python access to the empathd simulation core."""

from ._empathd import *  # noqa: F401,F403
from ._empathd import (  # noqa: F401
    ConfigError,
    Error,
    EstimationError,
    FormatError,
    GeometryError,
    ProtocolError,
)
