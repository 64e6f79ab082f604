"""Agent-based DC micro-grid simulator with demand-side management policies."""

__version__ = "0.1.0"
