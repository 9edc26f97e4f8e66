"""Semi-classical phase-space wave packet propagation."""

__version__ = "0.1.0"
