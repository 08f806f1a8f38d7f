"""Exception types shared across the package."""

from __future__ import annotations


class HysteresisLabError(Exception):
    """Base class for all package errors."""


class SchemaError(HysteresisLabError):
    """A configuration file or argument set violates the expected schema."""


class SimulationError(HysteresisLabError):
    """A solver failed: non-convergence, degeneracy, or an invalid regime."""


class CutoffUnsafeError(SimulationError):
    """The Fock-space tail criterion was violated during a run."""
