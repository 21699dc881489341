"""Funnel feedback simulation and chi certificates."""

from ._core import *  # noqa: F401,F403
from ._core import (
    CertificationFailure,
    ConfigError,
    DomainError,
    FunnelBoundaryError,
    InvalidBoxError,
)

__version__ = "0.1.0"
