"""TCP client backend: drives a broker over real sockets.

Connections are opened lazily by connect actions so that a command on a
client without an open connection fails locally with ConnectionClosed,
exactly like the simulated backend.  Message collection waits up to the
configured receive timeout for a client's first message; each received
message refreshes a short drain window (timeout/4) so multi-message
responses arrive intact without doubling the quiescent-step latency.

Reset closes all connections and picks a fresh client-id suffix.  Against
the in-repo loopback server it additionally issues an out-of-band state
reset (see server.RESET_MAGIC); plain MQTT has no way to restore a broker
whose retained-message deletion is broken, which is exactly one of the
seeded bugs.
"""

from __future__ import annotations

import socket
import time

from ..sul import Backend, ConcreteAction, TransportError
from . import codec
from .broker import LABEL_CLOSED, LABEL_CONNACK, LABEL_SUBACK, LABEL_UNSUBACK

RESET_MAGIC = b"\x00RESET\n"
RESET_REPLY = b"OK\n"

CONNECT_TIMEOUT_S = 2.0

# receive-timeout starting points for well-known real brokers (milliseconds);
# found experimentally, neither optimal nor a quality statement
SUGGESTED_TIMEOUTS_MS = {
    "activemq": 300,
    "emqttd": 25,
    "hbmqtt": 100,
    "mosquitto": 100,
    "vernemq": 300,
}


def packet_label(packet: codec.MqttPacket) -> str:
    """Abstract message label for a received packet."""
    if isinstance(packet, codec.Connack):
        return LABEL_CONNACK if packet.return_code == 0 else \
            f"C_Refused({packet.return_code})"
    if isinstance(packet, codec.Suback):
        return LABEL_SUBACK
    if isinstance(packet, codec.Unsuback):
        return LABEL_UNSUBACK
    if isinstance(packet, codec.Publish):
        try:
            payload = packet.payload.decode("utf-8")
        except UnicodeDecodeError:
            payload = packet.payload.hex()
        return f"Pub({packet.topic},{payload})"
    return f"Unexpected({type(packet).__name__})"


class TcpBackend(Backend):
    """Mapper backend over TCP client connections."""

    def __init__(self, host: str, port: int, client_count: int,
                 timeout_ms: int = 100, admin_reset: bool = True):
        if timeout_ms <= 0:
            raise ValueError("timeout_ms must be positive")
        self.host = host
        self.port = port
        self.client_count = client_count
        self.admin_reset = admin_reset
        self._timeout = timeout_ms / 1000.0
        self._drain = self._timeout / 4.0
        self._conns: list[socket.socket | None] = [None] * client_count
        self._buffers: list[bytes] = [b""] * client_count
        self._suffix = 0
        self._packet_id = 0

    # -- SUL plumbing -------------------------------------------------------

    def reset(self) -> None:
        for client in range(self.client_count):
            self._drop(client)
        self._suffix += 1
        if self.admin_reset:
            self._send_admin_reset()

    def close(self) -> None:
        for client in range(self.client_count):
            self._drop(client)

    def apply(self, action: ConcreteAction) -> list[list[str]]:
        messages: list[list[str]] = [[] for _ in range(self.client_count)]
        client = action.client
        kind = action.kind
        if kind == "connect":
            if self._conns[client] is None:
                self._open(client)
            will = action.will
            packet = codec.Connect(
                client_id=f"c{client}-{self._suffix}",
                clean_session=True,
                will_topic=will.topic if will else None,
                will_payload=will.payload.encode("utf-8") if will else b"",
                will_retain=will.retain if will else False,
            )
            if not self._send(client, packet):
                messages[client].append(LABEL_CLOSED)
                return messages
        elif self._conns[client] is None:
            # no open connection: the command fails at the client
            messages[client].append(LABEL_CLOSED)
            return messages
        elif kind == "subscribe":
            if not self._send(client, codec.Subscribe(self._next_id(), action.topic)):
                messages[client].append(LABEL_CLOSED)
                return messages
        elif kind == "unsubscribe":
            if not self._send(client, codec.Unsubscribe(self._next_id(), action.topic)):
                messages[client].append(LABEL_CLOSED)
                return messages
        elif kind == "publish":
            packet = codec.Publish(action.topic, action.payload.encode("utf-8"),
                                   retain=action.retain)
            if not self._send(client, packet):
                messages[client].append(LABEL_CLOSED)
                return messages
        elif kind == "disconnect":
            self._send(client, codec.Disconnect())
            self._drop(client)
        elif kind == "tcp_close":
            self._drop(client)
        else:
            raise ValueError(f"unknown action kind {kind!r}")
        for c in range(self.client_count):
            if self._conns[c] is not None:
                self._collect(c, messages[c])
        return messages

    # -- sockets ------------------------------------------------------------

    def _open(self, client: int) -> None:
        try:
            sock = socket.create_connection((self.host, self.port),
                                            timeout=CONNECT_TIMEOUT_S)
        except OSError as exc:
            raise TransportError(
                f"cannot connect to {self.host}:{self.port}: {exc}") from exc
        sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        self._conns[client] = sock
        self._buffers[client] = b""

    def _drop(self, client: int) -> None:
        sock = self._conns[client]
        if sock is not None:
            try:
                sock.close()
            except OSError:
                pass
            self._conns[client] = None
            self._buffers[client] = b""

    def _send(self, client: int, packet: codec.MqttPacket) -> bool:
        """False when the broker already closed this connection."""
        sock = self._conns[client]
        try:
            sock.sendall(codec.encode(packet))
            return True
        except (BrokenPipeError, ConnectionResetError):
            self._drop(client)
            return False
        except OSError as exc:
            self._drop(client)
            raise TransportError(f"send failed: {exc}") from exc

    def _next_id(self) -> int:
        self._packet_id = self._packet_id % 0xFFFF + 1
        return self._packet_id

    def _collect(self, client: int, out: list[str]) -> None:
        """Read labels until the receive window closes or the peer hangs up."""
        sock = self._conns[client]
        buffer = self._buffers[client]
        deadline = time.monotonic() + self._timeout
        while True:
            while True:
                try:
                    packet, consumed = codec.decode(buffer)
                except codec.TruncatedPacket:
                    break
                except codec.DecodeError as exc:
                    raise TransportError(f"undecodable broker bytes: {exc}") from exc
                buffer = buffer[consumed:]
                out.append(packet_label(packet))
                deadline = time.monotonic() + self._drain
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                break
            sock.settimeout(remaining)
            try:
                chunk = sock.recv(4096)
            except socket.timeout:
                break
            except ConnectionResetError:
                chunk = b""
            except OSError as exc:
                raise TransportError(f"receive failed: {exc}") from exc
            if not chunk:  # peer closed the connection
                out.append(LABEL_CLOSED)
                self._drop(client)
                return
            buffer += chunk
        self._buffers[client] = buffer

    def _send_admin_reset(self) -> None:
        try:
            with socket.create_connection((self.host, self.port),
                                          timeout=CONNECT_TIMEOUT_S) as sock:
                sock.sendall(RESET_MAGIC)
                sock.settimeout(CONNECT_TIMEOUT_S)
                reply = b""
                while not reply.endswith(RESET_REPLY):
                    chunk = sock.recv(16)
                    if not chunk:
                        raise TransportError("broker reset: connection closed")
                    reply += chunk
        except OSError as exc:
            raise TransportError(f"broker reset failed: {exc}") from exc
