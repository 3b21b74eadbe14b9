"""MQTT 3.1.1 specifics: wire codec, simulated brokers, mappers, adapters."""

from .broker import (BROKER_NAMES, BrokerCore, BrokerState, MutantId,
                     SimulatedBackend, sim_step, simulate_action,
                     simulated_endpoint)
from .extract import StateSpaceLimitError, extract_reference_model
from .mappers import (MAPPERS, SIMPLE, TWO_CLIENTS_RETAINED_WILL, get_mapper,
                      mapper_simple, mapper_two_clients_retained_will)
from .adapter import SUGGESTED_TIMEOUTS_MS, TcpBackend, packet_label
from .server import BrokerServer, serve

__all__ = [
    "BROKER_NAMES", "BrokerCore", "BrokerState", "MutantId",
    "SimulatedBackend", "sim_step", "simulate_action", "simulated_endpoint",
    "StateSpaceLimitError", "extract_reference_model",
    "MAPPERS", "SIMPLE", "TWO_CLIENTS_RETAINED_WILL", "get_mapper",
    "mapper_simple", "mapper_two_clients_retained_will",
    "SUGGESTED_TIMEOUTS_MS", "TcpBackend", "packet_label",
    "BrokerServer", "serve",
]
