"""Deterministic discrete-event simulation of relay-connected replicas."""

from .core import Handle, Simulator
from .latency import LatencyModel, sample_latency
from .network import Counters, FaultPlan, Network, Partition, SimChannel
from .trace import SimTrace, TraceRecord, first_difference
from .world import RELAY, ConfigError, SimNode, SimWorld

__all__ = [
    "RELAY",
    "ConfigError",
    "Counters",
    "FaultPlan",
    "Handle",
    "LatencyModel",
    "Network",
    "Partition",
    "SimChannel",
    "SimNode",
    "SimTrace",
    "SimWorld",
    "Simulator",
    "TraceRecord",
    "first_difference",
    "sample_latency",
]
