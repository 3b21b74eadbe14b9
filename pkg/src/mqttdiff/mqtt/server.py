"""Loopback TCP front-end for the simulated brokers.

One session per connection; packets are decoded, applied to the shared
broker core under a lock, and the resulting events are written back to the
affected connections, so observable behavior is a linearization of client
commands.  The wire path (serve + TcpBackend) is observationally
equivalent to driving the simulated backend directly.

A connection whose first byte is 0x00 (never a valid MQTT packet type) is
an out-of-band control channel: the RESET_MAGIC line restores the broker
to its initial state and force-closes all client connections.  The TCP
adapter uses this between learning queries; MQTT itself cannot clear
retained state on the broker whose empty-retained handling is broken.
"""

from __future__ import annotations

import socket
import threading

from ..sul import Will
from . import codec
from .adapter import RESET_MAGIC, RESET_REPLY
from .broker import (BrokerCore, EV_CLOSED, EV_CONNACK, EV_PUBLISH,
                     EV_SUBACK, EV_UNSUBACK, MutantId)


class BrokerServer:
    """Handle of a running loopback broker; close() shuts it down."""

    def __init__(self, mutant: MutantId = MutantId.NONE, port: int = 0,
                 host: str = "127.0.0.1"):
        self.mutant = mutant
        self._broker = BrokerCore(mutant)
        self._lock = threading.Lock()
        self._conns: dict[str, socket.socket] = {}  # client id -> socket
        self._open_socks: set[socket.socket] = set()
        self._listener = socket.create_server((host, port))
        self.host, self.port = self._listener.getsockname()[:2]
        self._closing = False
        self._accept_thread = threading.Thread(target=self._accept_loop,
                                               daemon=True,
                                               name=f"mqtt-serve-{self.port}")
        self._accept_thread.start()

    # -- lifecycle -----------------------------------------------------------

    def close(self) -> None:
        self._closing = True
        try:
            self._listener.close()
        except OSError:
            pass
        with self._lock:
            for sock in list(self._open_socks):
                self._close_sock(sock)
        self._accept_thread.join(timeout=2.0)

    def __enter__(self) -> "BrokerServer":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def _accept_loop(self) -> None:
        while not self._closing:
            try:
                sock, _addr = self._listener.accept()
            except OSError:
                return
            sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            with self._lock:
                self._open_socks.add(sock)
            threading.Thread(target=self._handle, args=(sock,),
                             daemon=True).start()

    # -- per-connection handling ----------------------------------------------

    def _handle(self, sock: socket.socket) -> None:
        buffer = b""
        key: str | None = None
        try:
            while True:
                if buffer[:1] == b"\x00":
                    if self._handle_admin(sock, buffer):
                        return
                while buffer:
                    try:
                        packet, consumed = codec.decode(buffer)
                    except codec.TruncatedPacket:
                        break
                    except codec.DecodeError:
                        return  # malformed client: drop the connection
                    buffer = buffer[consumed:]
                    key, keep = self._dispatch(sock, key, packet)
                    if not keep:
                        return
                try:
                    chunk = sock.recv(4096)
                except OSError:
                    return
                if not chunk:
                    return
                buffer += chunk
        finally:
            self._connection_lost(sock, key)

    def _handle_admin(self, sock: socket.socket, buffer: bytes) -> bool:
        """True when the connection was consumed as a control channel."""
        while len(buffer) < len(RESET_MAGIC):
            if not RESET_MAGIC.startswith(buffer):
                return True  # malformed control request: drop
            try:
                chunk = sock.recv(64)
            except OSError:
                return True
            if not chunk:
                return True
            buffer += chunk
        if not buffer.startswith(RESET_MAGIC):
            return True
        with self._lock:
            self._broker.reset_state()
            for other in list(self._conns.values()):
                self._close_sock(other)
            self._conns.clear()
        try:
            sock.sendall(RESET_REPLY)
        except OSError:
            pass
        return True

    def _dispatch(self, sock: socket.socket, key: str | None,
                  packet: codec.MqttPacket) -> tuple[str | None, bool]:
        """Apply one packet; returns (client key, keep connection)."""
        with self._lock:
            if isinstance(packet, codec.Connect):
                if key is None:
                    key = packet.client_id
                    if key in self._conns:
                        # client-id takeover is outside the tested scope;
                        # refuse the new connection
                        return key, False
                    self._conns[key] = sock
                will = None
                if packet.will_topic is not None:
                    will = Will(packet.will_topic,
                                packet.will_payload.decode("utf-8"),
                                packet.will_retain)
                events = self._broker.connect(key, will=will)
            elif key is None:
                # [MQTT-3.1.0-1] the first packet must be CONNECT
                return None, False
            elif isinstance(packet, codec.Subscribe):
                events = self._broker.subscribe(key, packet.topic_filter)
                events = self._with_packet_id(events, packet.packet_id)
            elif isinstance(packet, codec.Unsubscribe):
                events = self._broker.unsubscribe(key, packet.topic_filter)
                events = self._with_packet_id(events, packet.packet_id)
            elif isinstance(packet, codec.Publish):
                events = self._broker.publish(
                    key, packet.topic, packet.payload.decode("utf-8"),
                    packet.retain)
            elif isinstance(packet, codec.Disconnect):
                self._broker.disconnect(key)
                self._unregister(key, sock)
                return key, False
            else:
                return key, False  # client-to-broker only handles the above
            keep = self._deliver(events, key, sock)
        return key, keep

    def _with_packet_id(self, events: list, packet_id: int) -> list:
        return [(target, event + (packet_id,))
                if event[0] in (EV_SUBACK, EV_UNSUBACK) else (target, event)
                for target, event in events]

    def _deliver(self, events: list, requester: str,
                 requester_sock: socket.socket) -> bool:
        """Write event packets to their target connections (lock held).

        Returns False when the requester's connection was closed.
        """
        keep = True
        for target, event in events:
            target_sock = (requester_sock if target == requester
                           else self._conns.get(target))
            if target_sock is None:
                continue
            kind = event[0]
            if kind == EV_CLOSED:
                self._unregister(target, target_sock)
                if target == requester:
                    keep = False
                else:
                    self._close_sock(target_sock)
                continue
            if kind == EV_CONNACK:
                packet = codec.Connack(event[1])
            elif kind == EV_SUBACK:
                packet = codec.Suback(event[-1])
            elif kind == EV_UNSUBACK:
                packet = codec.Unsuback(event[-1])
            elif kind == EV_PUBLISH:
                # retained-store deliveries keep the retain flag set
                # [MQTT-3.3.1-8]; live forwards clear it [MQTT-3.3.1-9]
                packet = codec.Publish(event[1], event[2].encode("utf-8"),
                                       retain=bool(len(event) > 3 and event[3]))
            else:
                continue
            try:
                target_sock.sendall(codec.encode(packet))
            except OSError:
                pass
        return keep

    def _connection_lost(self, sock: socket.socket, key: str | None) -> None:
        """EOF or error on a connection: abrupt close, the will may fire."""
        with self._lock:
            if key is not None and self._conns.get(key) is sock:
                del self._conns[key]
                events = self._broker.tcp_close(key)
                self._deliver(events, key, sock)
            self._open_socks.discard(sock)
        self._close_sock(sock)

    def _unregister(self, key: str, sock: socket.socket) -> None:
        if self._conns.get(key) is sock:
            del self._conns[key]

    @staticmethod
    def _close_sock(sock: socket.socket) -> None:
        try:
            sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        try:
            sock.close()
        except OSError:
            pass


def serve(mutant: MutantId, port: int = 0, host: str = "127.0.0.1") -> BrokerServer:
    """Start a loopback broker; returns the running handle."""
    return BrokerServer(mutant, port=port, host=host)
