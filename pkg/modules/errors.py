"""
Exception hierarchy shared by the belief, world, planning and harness modules.
"""


class RoverError(Exception):
    """Base class for all rover planning errors."""


class ConfigError(RoverError, ValueError):
    """Inconsistent world, network, trial or benchmark configuration."""


class InvalidDistributionError(RoverError, ValueError):
    """A probability vector or CPT row is negative or not normalized."""


class OutOfBoundsError(RoverError, IndexError):
    """A pose, cell or observation lies outside the grid."""


class IllegalActionError(RoverError, ValueError):
    """The requested move is off-grid or blocked by an obstacle."""


class NoLegalActionError(RoverError, RuntimeError):
    """No action fits the remaining budget; the mission is over."""


class TreeConsistencyError(RoverError, RuntimeError):
    """Search-tree statistics violate N >= n_i."""
