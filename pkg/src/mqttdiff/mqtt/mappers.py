"""The abstract input alphabets used for learning MQTT brokers.

Both mappers use fixed concrete values (topics and payloads), so the
abstraction is static throughout an experiment.  The alphabet order is the
order cross-checking explores inputs in, chosen so that the canonical
counterexamples come out as the first trace reaching their fail-state.
"""

from __future__ import annotations

from ..sul import (Mapper, Will, connect, disconnect, make_mapper, publish,
                   subscribe, tcp_close, unsubscribe)

SIMPLE = "simple"
TWO_CLIENTS_RETAINED_WILL = "two-client-retained-will"


def mapper_simple() -> Mapper:
    """One client, seven inputs: basic connect/subscribe/publish lifecycle
    on topic "t" with payload "m"."""
    return make_mapper(SIMPLE, client_count=1, actions=[
        ("Connect", connect(0)),
        ("Disconnect", disconnect(0)),
        ("TcpClose", tcp_close(0)),
        ("Subscribe", subscribe(0, "t")),
        ("Unsubscribe", unsubscribe(0, "t")),
        ("Publish", publish(0, "t", "m")),
        ("PublishRetained", publish(0, "t", "m", retain=True)),
    ])


def mapper_two_clients_retained_will() -> Mapper:
    """Two clients, nine inputs around a retained will message.

    Client 2 connects with the retained will "bye" on topic "c2_will" and
    may drop its connection without a DISCONNECT, publishing the will;
    client 1 subscribes to that topic.  Client 2 can also publish the same
    retained message directly and delete it with an empty retained publish.
    """
    will = Will("c2_will", "bye", retain=True)
    return make_mapper(TWO_CLIENTS_RETAINED_WILL, client_count=2, actions=[
        ("Connect1", connect(0)),
        ("TcpClose2", tcp_close(1)),
        ("ConnectWill2", connect(1, will=will)),
        ("Subscribe1", subscribe(0, "c2_will")),
        ("Unsubscribe1", unsubscribe(0, "c2_will")),
        ("Disconnect1", disconnect(0)),
        ("Disconnect2", disconnect(1)),
        ("PublishRetained2", publish(1, "c2_will", "bye", retain=True)),
        ("DeleteRetained2", publish(1, "c2_will", "", retain=True)),
    ])


MAPPERS = {
    SIMPLE: mapper_simple,
    TWO_CLIENTS_RETAINED_WILL: mapper_two_clients_retained_will,
}


def get_mapper(name: str) -> Mapper:
    try:
        factory = MAPPERS[name]
    except KeyError:
        raise ValueError(f"unknown mapper {name!r}; "
                         f"choose from {sorted(MAPPERS)}") from None
    return factory()
