"""Exception types raised across the package."""


class ConfigError(ValueError):
    """Invalid parameters or configuration."""


class ConnectivityError(RuntimeError):
    """No connected sample was produced within the retry cap."""


class WarmupTimeout(RuntimeError):
    """Initial walks did not cover the graph within the warmup cap."""


class BoundNotReached(RuntimeError):
    """A bound evaluation did not reach its target within the step cap."""
