"""Python access to the mwqed core: lattice, rates, dynamics, poles and fits."""

from ._mwqed import *  # noqa: F401,F403
from ._mwqed import PhysicsError, ConvergenceError  # noqa: F401

__version__ = "0.1.0"
