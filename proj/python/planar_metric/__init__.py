"""Plane-metric ranging from calibrated cameras.

Angles are radians unless a name says otherwise; distances are meters and
image coordinates are pixels with v increasing upward.
"""

from ._core import *  # noqa: F401,F403
from ._core import PlanarError, deg, to_deg  # noqa: F401

__all__ = [name for name in dir() if not name.startswith("_")]
