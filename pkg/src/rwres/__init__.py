"""Self-regulating random walks: simulator, control policies and theory."""
__version__ = "0.1.0"
