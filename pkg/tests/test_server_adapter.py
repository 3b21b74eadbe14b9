"""Loopback wire path: serve + TCP adapter against the simulated backend."""

import random
import socket

import pytest

from mqttdiff.sul import MapperEndpoint, TransportError, run_query
from mqttdiff.mqtt import (MutantId, SimulatedBackend, TcpBackend,
                           mapper_simple, mapper_two_clients_retained_will,
                           serve)
from mqttdiff.mqtt.adapter import RESET_MAGIC, RESET_REPLY

TIMEOUT_MS = 60


@pytest.fixture(scope="module")
def reference_server():
    server = serve(MutantId.NONE)
    yield server
    server.close()


def wire_endpoint(server, mapper, timeout_ms=TIMEOUT_MS, admin_reset=True):
    backend = TcpBackend(server.host, server.port, mapper.client_count,
                         timeout_ms=timeout_ms, admin_reset=admin_reset)
    return MapperEndpoint(backend, mapper, name="tcp")


def sim_endpoint(mutant, mapper):
    return MapperEndpoint(SimulatedBackend(mutant, mapper.client_count), mapper)


def test_connect_over_the_wire(reference_server):
    endpoint = wire_endpoint(reference_server, mapper_simple())
    try:
        endpoint.reset()
        assert endpoint.step("Connect") == "C_Ack"
    finally:
        endpoint.close()


def test_broker_initiated_close_is_observed(reference_server):
    endpoint = wire_endpoint(reference_server, mapper_simple())
    try:
        endpoint.reset()
        assert endpoint.step("Connect") == "C_Ack"
        assert endpoint.step("Connect") == "ConnectionClosed"
        # the connection is gone: further commands fail locally
        assert endpoint.step("Subscribe") == "ConnectionClosed"
    finally:
        endpoint.close()


def test_quiescence_maps_to_empty(reference_server):
    endpoint = wire_endpoint(reference_server, mapper_simple())
    try:
        endpoint.reset()
        endpoint.step("Connect")
        assert endpoint.step("Publish") == "Empty"  # no subscriber, no reply
    finally:
        endpoint.close()


def test_two_clients_with_independent_sessions_and_will_delivery():
    mapper = mapper_two_clients_retained_will()
    with serve(MutantId.NONE) as server:
        endpoint = wire_endpoint(server, mapper)
        try:
            endpoint.reset()
            outs = [endpoint.step(sym) for sym in
                    ("Connect1", "ConnectWill2", "TcpClose2",
                     "Subscribe1", "Subscribe1")]
            assert outs == [
                "C_Ack | Empty",
                "Empty | C_Ack",
                "Empty | Empty",
                "Pub(c2_will,bye)__S_Ack | Empty",
                "Pub(c2_will,bye)__S_Ack | Empty",
            ]
        finally:
            endpoint.close()


def test_live_will_forwarding_to_the_other_client():
    mapper = mapper_two_clients_retained_will()
    with serve(MutantId.NONE) as server:
        endpoint = wire_endpoint(server, mapper)
        try:
            endpoint.reset()
            endpoint.step("Connect1")
            endpoint.step("Subscribe1")
            endpoint.step("ConnectWill2")
            assert endpoint.step("TcpClose2") == "Pub(c2_will,bye) | Empty"
        finally:
            endpoint.close()


@pytest.mark.parametrize("mutant", list(MutantId), ids=lambda m: m.value)
def test_wire_path_is_observationally_equivalent_to_simulation(mutant):
    mapper = mapper_two_clients_retained_will()
    rng = random.Random(hash(mutant.value) & 0xFFFF)
    with serve(mutant) as server:
        wire = wire_endpoint(server, mapper)
        sim = sim_endpoint(mutant, mapper)
        try:
            for _ in range(10):
                seq = [rng.choice(mapper.inputs)
                       for _ in range(rng.randint(1, 7))]
                assert run_query(sim, seq) == run_query(wire, seq), seq
        finally:
            wire.close()


def test_admin_reset_clears_retained_state(reference_server):
    endpoint = wire_endpoint(reference_server, mapper_simple())
    try:
        endpoint.reset()
        endpoint.step("Connect")
        endpoint.step("PublishRetained")
        endpoint.reset()
        endpoint.step("Connect")
        assert endpoint.step("Subscribe") == "S_Ack"  # no retained delivery
    finally:
        endpoint.close()


def test_without_admin_reset_retained_state_survives():
    with serve(MutantId.NONE) as server:
        endpoint = wire_endpoint(server, mapper_simple(), admin_reset=False)
        try:
            endpoint.reset()
            endpoint.step("Connect")
            endpoint.step("PublishRetained")
            endpoint.reset()
            endpoint.step("Connect")
            out = endpoint.step("Subscribe")
            assert sorted(out.split("__")) == ["Pub(t,m)", "S_Ack"]
        finally:
            endpoint.close()


def test_malformed_bytes_close_the_connection(reference_server):
    # complete packet with the reserved type 15: decode fails, server hangs up
    with socket.create_connection((reference_server.host,
                                   reference_server.port), timeout=2) as sock:
        sock.sendall(b"\xf0\x00")
        sock.settimeout(2)
        assert sock.recv(64) == b""


def test_reset_magic_is_not_valid_mqtt():
    from mqttdiff.mqtt.codec import DecodeError, decode
    with pytest.raises(DecodeError):
        decode(RESET_MAGIC)


def test_admin_reset_roundtrip(reference_server):
    with socket.create_connection((reference_server.host,
                                   reference_server.port), timeout=2) as sock:
        sock.sendall(RESET_MAGIC)
        sock.settimeout(2)
        assert sock.recv(16) == RESET_REPLY


def test_suggested_real_broker_timeouts():
    from mqttdiff.mqtt import SUGGESTED_TIMEOUTS_MS
    assert SUGGESTED_TIMEOUTS_MS == {
        "activemq": 300,
        "emqttd": 25,
        "hbmqtt": 100,
        "mosquitto": 100,
        "vernemq": 300,
    }


def test_connect_to_closed_port_is_a_transport_error():
    probe = socket.socket()
    probe.bind(("127.0.0.1", 0))
    port = probe.getsockname()[1]
    probe.close()
    backend = TcpBackend("127.0.0.1", port, 1, timeout_ms=50, admin_reset=False)
    endpoint = MapperEndpoint(backend, mapper_simple())
    endpoint.reset()
    with pytest.raises(TransportError):
        endpoint.step("Connect")
