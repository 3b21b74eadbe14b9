"""System-under-learning endpoints and the mapper framework.

An endpoint exposes exactly two operations to the learner: reset() and
step(abstract_input) -> abstract_output, with at most one query in flight.
A mapper turns each abstract input into a concrete per-client protocol
action and folds the concrete per-client responses back into a single
abstract output symbol.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass

from .automata import AlphabetError, MealyMachine

EMPTY_OUTPUT = "Empty"
CLIENT_SEPARATOR = " | "
MESSAGE_SEPARATOR = "__"


class TransportError(RuntimeError):
    """Backend communication failed (distinct from protocol quiescence)."""


class SULEndpoint(ABC):
    """Behavioral contract of a system under learning.

    Implementations must be deterministic: identical reset+input sequences
    yield identical outputs.  Violations surface as nondeterminism errors
    in the learner's query cache.
    """

    name: str = "sul"

    @property
    @abstractmethod
    def alphabet(self) -> tuple[str, ...]:
        """The abstract input alphabet accepted by step()."""

    @abstractmethod
    def reset(self) -> None:
        """Restore the SUL to its initial state."""

    @abstractmethod
    def step(self, symbol: str) -> str:
        """Execute one abstract input and return the abstract output."""

    def close(self) -> None:
        """Release transport resources (no-op for in-process backends)."""


def run_query(endpoint: SULEndpoint, seq: Iterable[str]) -> tuple[str, ...]:
    """Reset the endpoint, execute `seq`, return the output sequence."""
    endpoint.reset()
    return tuple(endpoint.step(sym) for sym in seq)


def abstract_output(per_client_messages: Sequence[Sequence[str]]) -> str:
    """Fold per-client message labels into one abstract output symbol.

    Each client's messages are sorted ascending by byte order (arrival
    order carries no information after network reordering) and joined with
    "__"; a client with no messages contributes "Empty".  Client tokens are
    joined in client order with " | ".
    """
    tokens = []
    for messages in per_client_messages:
        if messages:
            tokens.append(MESSAGE_SEPARATOR.join(sorted(messages)))
        else:
            tokens.append(EMPTY_OUTPUT)
    return CLIENT_SEPARATOR.join(tokens)


# ---------------------------------------------------------------------------
# Concrete actions and mappers


@dataclass(frozen=True)
class Will:
    """A will message registered at connect time."""

    topic: str
    payload: str
    retain: bool = False


@dataclass(frozen=True)
class ConcreteAction:
    """One client-level protocol action produced by concretization."""

    kind: str  # connect | disconnect | tcp_close | subscribe | unsubscribe | publish
    client: int
    topic: str | None = None
    payload: str | None = None
    retain: bool = False
    will: Will | None = None


def connect(client: int, will: Will | None = None) -> ConcreteAction:
    return ConcreteAction("connect", client, will=will)


def disconnect(client: int) -> ConcreteAction:
    return ConcreteAction("disconnect", client)


def tcp_close(client: int) -> ConcreteAction:
    return ConcreteAction("tcp_close", client)


def subscribe(client: int, topic: str) -> ConcreteAction:
    return ConcreteAction("subscribe", client, topic=topic)


def unsubscribe(client: int, topic: str) -> ConcreteAction:
    return ConcreteAction("unsubscribe", client, topic=topic)


def publish(client: int, topic: str, payload: str, retain: bool = False) -> ConcreteAction:
    return ConcreteAction("publish", client, topic=topic, payload=payload,
                          retain=retain)


@dataclass(frozen=True)
class Mapper:
    """A static abstraction: input alphabet plus its concretization table."""

    name: str
    client_count: int
    actions: Mapping[str, ConcreteAction]
    inputs: tuple[str, ...]

    def concretize(self, symbol: str) -> ConcreteAction:
        try:
            return self.actions[symbol]
        except KeyError:
            raise AlphabetError(f"unknown abstract input {symbol!r}") from None


def make_mapper(name: str, client_count: int,
                actions: Sequence[tuple[str, ConcreteAction]]) -> Mapper:
    for _, action in actions:
        if not 0 <= action.client < client_count:
            raise ValueError(f"client index {action.client} out of range")
    return Mapper(name=name, client_count=client_count,
                  actions=dict(actions),
                  inputs=tuple(sym for sym, _ in actions))


@dataclass
class MapperConfig:
    """Runtime mapper settings; the timeout applies to TCP backends only."""

    mapper_name: str
    receive_timeout_ms: int = 100
    client_count: int = 1

    def __post_init__(self):
        if self.receive_timeout_ms <= 0:
            raise ValueError("receive_timeout_ms must be positive")
        if self.client_count < 1:
            raise ValueError("client_count must be at least 1")


class Backend(ABC):
    """Concrete executor behind a mapper: a simulated broker or TCP clients."""

    @abstractmethod
    def reset(self) -> None: ...

    @abstractmethod
    def apply(self, action: ConcreteAction) -> list[list[str]]:
        """Execute the action; return received message labels per client."""

    def close(self) -> None: ...


class MapperEndpoint(SULEndpoint):
    """SUL endpoint gluing a mapper onto a backend."""

    def __init__(self, backend: Backend, mapper: Mapper, name: str | None = None):
        self._backend = backend
        self.mapper = mapper
        self.name = name or mapper.name

    @property
    def alphabet(self) -> tuple[str, ...]:
        return self.mapper.inputs

    def reset(self) -> None:
        self._backend.reset()

    def step(self, symbol: str) -> str:
        action = self.mapper.concretize(symbol)
        return abstract_output(self._backend.apply(action))

    def close(self) -> None:
        self._backend.close()


class MachineSUL(SULEndpoint):
    """Endpoint backed by an in-memory Mealy machine (testing, replays)."""

    def __init__(self, machine: MealyMachine, name: str = "machine"):
        self._machine = machine
        self._state = machine.initial
        self.name = name

    @property
    def alphabet(self) -> tuple[str, ...]:
        return self._machine.inputs

    def reset(self) -> None:
        self._state = self._machine.initial

    def step(self, symbol: str) -> str:
        self._state, out = self._machine.step(self._state, symbol)
        return out
