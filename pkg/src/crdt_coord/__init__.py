"""Observation-driven multi-agent coordination over CRDT shared state."""

__version__ = "0.1.0"
