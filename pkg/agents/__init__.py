"""
Agents Package
Distributed execution: state messages, transports, agent runtime and coordinator
"""
from agents.messages import MessageKind, StateMessage
from agents.transport import InProcessBus, UdpMulticastBus, open_bus
from agents.runtime import Agent, RunConfig, Roster, RosterEntry, default_roster
from agents.coordinator import Coordinator

__all__ = [
    'MessageKind',
    'StateMessage',
    'InProcessBus',
    'UdpMulticastBus',
    'open_bus',
    'Agent',
    'RunConfig',
    'Roster',
    'RosterEntry',
    'default_roster',
    'Coordinator'
]
