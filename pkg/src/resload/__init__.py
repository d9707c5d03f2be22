"""Agent-based simulation of residential human activity and electric load curves."""

__version__ = "0.1.0"
