"""Agent state machine, wire messages and the federation driver."""

from dfl.protocol.agent import Agent
from dfl.protocol.aggregation import compute_delta, next_epsilon
from dfl.protocol.federation import Federation, RoundReport
from dfl.protocol.state import AgentMode, AgentState, HandshakeError, PartitionUnavailableError

__all__ = [
    "Agent",
    "AgentMode",
    "AgentState",
    "Federation",
    "HandshakeError",
    "PartitionUnavailableError",
    "RoundReport",
    "compute_delta",
    "next_epsilon",
]
