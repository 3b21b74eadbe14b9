"""In-process MQTT broker: conformant reference plus seeded bug mutants.

The broker core is protocol-level and transport-free; it is shared by the
simulated backend (clients addressed by index) and the loopback TCP server
(clients addressed by id).  Sessions are clean-session only, QoS is fixed
at 0 and topic matching is exact-string, which keeps the reachable state
space small and finite.

Each mutant reproduces one real-world bug:
  IGNORE_SECOND_CONNECT            second CONNECT is silently ignored
                                   instead of closing the connection
  NO_RETAINED_RESEND_ON_RESUBSCRIBE  retained messages are not re-sent when
                                   an existing subscription is repeated
  DROP_EMPTY_RETAINED              an empty retained publish is a no-op, so
                                   retained messages cannot be deleted
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from ..sul import Backend, ConcreteAction, Will, Mapper

# events emitted by the broker core, addressed as (client_key, event)
EV_CONNACK = "connack"
EV_SUBACK = "suback"
EV_UNSUBACK = "unsuback"
EV_PUBLISH = "publish"  # ("publish", topic, payload)
EV_CLOSED = "closed"

LABEL_CONNACK = "C_Ack"
LABEL_SUBACK = "S_Ack"
LABEL_UNSUBACK = "U_Ack"
LABEL_CLOSED = "ConnectionClosed"


class MutantId(enum.Enum):
    NONE = "reference"
    IGNORE_SECOND_CONNECT = "hbmqtt-bug"
    NO_RETAINED_RESEND_ON_RESUBSCRIBE = "retained-will-bug"
    DROP_EMPTY_RETAINED = "empty-retained-bug"


BROKER_NAMES = {mutant.value: mutant for mutant in MutantId}


def event_label(event: tuple) -> str:
    """Abstract message label for a broker event, as a client observes it."""
    kind = event[0]
    if kind == EV_CONNACK:
        return LABEL_CONNACK
    if kind == EV_SUBACK:
        return LABEL_SUBACK
    if kind == EV_UNSUBACK:
        return LABEL_UNSUBACK
    if kind == EV_PUBLISH:
        return f"Pub({event[1]},{event[2]})"
    if kind == EV_CLOSED:
        return LABEL_CLOSED
    raise ValueError(f"unknown event {event!r}")


@dataclass
class Session:
    """State of one connected client; closed sessions are dropped entirely
    (clean-session semantics: nothing survives the connection)."""

    subscriptions: set[str] = field(default_factory=set)
    will: Will | None = None


class BrokerCore:
    """Broker state machine over opaque client keys.

    Every method returns a list of (client_key, event) pairs describing
    what each client receives; the caller owns delivery.  All methods are
    total: commands on clients without a session produce a "closed" event
    rather than an error.
    """

    def __init__(self, mutant: MutantId = MutantId.NONE):
        self.mutant = mutant
        self.sessions: dict = {}  # key -> Session, connected clients only
        self.retained: dict[str, str] = {}

    def clone(self) -> "BrokerCore":
        other = BrokerCore(self.mutant)
        other.sessions = {
            key: Session(set(sess.subscriptions), sess.will)
            for key, sess in self.sessions.items()
        }
        other.retained = dict(self.retained)
        return other

    def freeze(self):
        """Hashable snapshot for state-space exploration."""
        return (
            tuple(sorted(
                (key, tuple(sorted(sess.subscriptions)), sess.will)
                for key, sess in self.sessions.items()
            )),
            tuple(sorted(self.retained.items())),
        )

    def reset_state(self) -> None:
        self.sessions.clear()
        self.retained.clear()

    def is_connected(self, key) -> bool:
        return key in self.sessions

    # -- commands ----------------------------------------------------------

    def connect(self, key, will: Will | None = None,
                clean_session: bool = True) -> list:
        if key in self.sessions:
            if self.mutant is MutantId.IGNORE_SECOND_CONNECT:
                # bug: the second CONNECT is ignored and state is kept
                return []
            # [MQTT-3.1.0-2] a second CONNECT is a protocol violation: the
            # connection is closed, which counts as an abrupt disconnect,
            # so a stored will message fires before the session is dropped
            return [(key, (EV_CLOSED,))] + self._drop_session(key, abrupt=True)
        self.sessions[key] = Session(will=will)
        return [(key, (EV_CONNACK, 0))]

    def subscribe(self, key, topic: str) -> list:
        sess = self.sessions.get(key)
        if sess is None:
            return [(key, (EV_CLOSED,))]
        already = topic in sess.subscriptions
        sess.subscriptions.add(topic)
        events = [(key, (EV_SUBACK,))]
        if already and self.mutant is MutantId.NO_RETAINED_RESEND_ON_RESUBSCRIBE:
            # bug: retained messages are not re-sent to an existing
            # subscription, violating [MQTT-3.8.4-3]
            return events
        payload = self.retained.get(topic)
        if payload is not None:
            # retained-store delivery; the trailing flag keeps the wire
            # retain bit set for it [MQTT-3.3.1-8]
            events.append((key, (EV_PUBLISH, topic, payload, True)))
        return events

    def unsubscribe(self, key, topic: str) -> list:
        sess = self.sessions.get(key)
        if sess is None:
            return [(key, (EV_CLOSED,))]
        sess.subscriptions.discard(topic)
        return [(key, (EV_UNSUBACK,))]

    def publish(self, key, topic: str, payload: str, retain: bool) -> list:
        if key not in self.sessions:
            return [(key, (EV_CLOSED,))]
        return self._apply_publish(topic, payload, retain)

    def disconnect(self, key) -> list:
        """Graceful DISCONNECT: the will is discarded unpublished."""
        sess = self.sessions.get(key)
        if sess is None:
            return [(key, (EV_CLOSED,))]
        sess.will = None
        self._drop_session(key, abrupt=False)
        return []

    def tcp_close(self, key) -> list:
        """Abrupt connection loss: a stored will message is published."""
        if key not in self.sessions:
            return []
        return self._drop_session(key, abrupt=True)

    # -- internals ---------------------------------------------------------

    def _drop_session(self, key, abrupt: bool) -> list:
        sess = self.sessions.pop(key)
        if abrupt and sess.will is not None:
            return self._apply_publish(sess.will.topic, sess.will.payload,
                                       sess.will.retain)
        return []

    def _apply_publish(self, topic: str, payload: str, retain: bool) -> list:
        if retain:
            if payload == "":
                # [MQTT-3.3.1-10] an empty retained publish deletes the
                # retained message; nothing is forwarded
                if self.mutant is not MutantId.DROP_EMPTY_RETAINED:
                    self.retained.pop(topic, None)
                # bug variant: the deletion attempt is a complete no-op
                return []
            self.retained[topic] = payload
        return [(key, (EV_PUBLISH, topic, payload))
                for key, sess in self.sessions.items()
                if topic in sess.subscriptions]


def simulate_action(core: BrokerCore, action: ConcreteAction,
                    client_count: int) -> list[list[str]]:
    """Execute one concrete client action against the broker core.

    Returns the message labels each client (by index) observes.  Commands
    from a client with no open connection fail locally with a single
    ConnectionClosed label, mirroring what a real client sees from a dead
    socket; connect actions (re)open the connection first.
    """
    if not 0 <= action.client < client_count:
        raise ValueError(f"client index {action.client} out of range")
    messages: list[list[str]] = [[] for _ in range(client_count)]
    key = action.client
    kind = action.kind
    if kind == "connect":
        events = core.connect(key, will=action.will)
    elif core.is_connected(key):
        if kind == "subscribe":
            events = core.subscribe(key, action.topic)
        elif kind == "unsubscribe":
            events = core.unsubscribe(key, action.topic)
        elif kind == "publish":
            events = core.publish(key, action.topic, action.payload,
                                  action.retain)
        elif kind == "disconnect":
            events = core.disconnect(key)
        elif kind == "tcp_close":
            events = core.tcp_close(key)
        else:
            raise ValueError(f"unknown action kind {kind!r}")
    else:
        if kind not in ("subscribe", "unsubscribe", "publish", "disconnect",
                        "tcp_close"):
            raise ValueError(f"unknown action kind {kind!r}")
        messages[key].append(LABEL_CLOSED)
        return messages
    for target, event in events:
        messages[target].append(event_label(event))
    return messages


@dataclass(frozen=True)
class BrokerState:
    """Pure-value view of a simulated broker (used by sim_step)."""

    core: BrokerCore
    client_count: int

    @classmethod
    def initial(cls, mutant: MutantId, client_count: int) -> "BrokerState":
        return cls(BrokerCore(mutant), client_count)

    def freeze(self):
        return (self.core.mutant, self.client_count, self.core.freeze())


def sim_step(state: BrokerState, action: ConcreteAction) -> tuple[BrokerState, list[list[str]]]:
    """Pure transition: returns the successor state and per-client labels."""
    core = state.core.clone()
    messages = simulate_action(core, action, state.client_count)
    return BrokerState(core, state.client_count), messages


class SimulatedBackend(Backend):
    """Mapper backend driving an in-process broker (synchronous, no timeouts)."""

    def __init__(self, mutant: MutantId = MutantId.NONE, client_count: int = 1):
        self.mutant = mutant
        self.client_count = client_count
        self._core = BrokerCore(mutant)

    def reset(self) -> None:
        self._core = BrokerCore(self.mutant)

    def apply(self, action: ConcreteAction) -> list[list[str]]:
        return simulate_action(self._core, action, self.client_count)


def simulated_endpoint(mutant: MutantId, mapper: Mapper, name: str | None = None):
    """SUL endpoint for a simulated broker under the given mapper."""
    from ..sul import MapperEndpoint

    backend = SimulatedBackend(mutant, mapper.client_count)
    return MapperEndpoint(backend, mapper,
                          name=name or f"sim:{mutant.value}/{mapper.name}")
