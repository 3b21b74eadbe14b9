"""MQTT 3.1.1 wire codec for the packet subset used here.

Fixed header: 4-bit packet type, 4-bit flags, then the remaining length as
a variable-byte integer (1-4 bytes, 7 data bits per byte, continuation bit
0x80).  Strings and packet identifiers are big-endian 16-bit length/value.
QoS is fixed at 0 throughout: SUBSCRIBE requests QoS 0 and PUBLISH packets
carry no packet identifier.
"""

from __future__ import annotations

from dataclasses import dataclass

MAX_REMAINING_LENGTH = 268_435_455

PROTOCOL_NAME = "MQTT"
PROTOCOL_LEVEL = 4

TYPE_CONNECT = 1
TYPE_CONNACK = 2
TYPE_PUBLISH = 3
TYPE_SUBSCRIBE = 8
TYPE_SUBACK = 9
TYPE_UNSUBSCRIBE = 10
TYPE_UNSUBACK = 11
TYPE_DISCONNECT = 14


class DecodeError(ValueError):
    """Malformed packet; `field` names the offending part."""

    def __init__(self, message: str, field: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class TruncatedPacket(DecodeError):
    """The buffer ends before the packet does (wait for more bytes)."""

    def __init__(self, field: str = "body"):
        super().__init__("packet truncated", field)


@dataclass(frozen=True)
class Connect:
    client_id: str
    clean_session: bool = True
    will_topic: str | None = None
    will_payload: bytes = b""
    will_retain: bool = False
    keep_alive: int = 0


@dataclass(frozen=True)
class Connack:
    return_code: int
    session_present: bool = False


@dataclass(frozen=True)
class Subscribe:
    packet_id: int
    topic_filter: str
    qos: int = 0


@dataclass(frozen=True)
class Suback:
    packet_id: int
    return_code: int = 0  # granted QoS 0, or 0x80 for failure


@dataclass(frozen=True)
class Unsubscribe:
    packet_id: int
    topic_filter: str


@dataclass(frozen=True)
class Unsuback:
    packet_id: int


@dataclass(frozen=True)
class Publish:
    topic: str
    payload: bytes = b""
    retain: bool = False
    qos: int = 0
    dup: bool = False


@dataclass(frozen=True)
class Disconnect:
    pass


MqttPacket = (Connect | Connack | Subscribe | Suback | Unsubscribe
              | Unsuback | Publish | Disconnect)


def encode_remaining_length(value: int) -> bytes:
    """Variable-byte integer: 7 data bits per byte, 0x80 continues."""
    if not 0 <= value <= MAX_REMAINING_LENGTH:
        raise ValueError(f"remaining length {value} out of range")
    out = bytearray()
    while True:
        value, digit = divmod(value, 128)
        if value:
            out.append(digit | 0x80)
        else:
            out.append(digit)
            return bytes(out)


def decode_remaining_length(data: bytes, pos: int) -> tuple[int, int]:
    """Returns (value, next position); at most 4 encoded bytes are legal."""
    value = 0
    for k in range(4):
        if pos + k >= len(data):
            raise TruncatedPacket("remaining length")
        byte = data[pos + k]
        value |= (byte & 0x7F) << (7 * k)
        if not byte & 0x80:
            return value, pos + k + 1
    raise DecodeError("more than 4 length bytes", "remaining length")


def _encode_u16(value: int) -> bytes:
    if not 0 <= value <= 0xFFFF:
        raise ValueError(f"16-bit value {value} out of range")
    return value.to_bytes(2, "big")


def _encode_str(text: str) -> bytes:
    raw = text.encode("utf-8")
    return _encode_u16(len(raw)) + raw


class _Reader:
    """Cursor over a packet body; running past the end is a decode error."""

    def __init__(self, data: bytes, field: str = "body"):
        self.data = data
        self.pos = 0
        self.field = field

    def take(self, n: int, field: str) -> bytes:
        if self.pos + n > len(self.data):
            raise DecodeError("field runs past remaining length", field)
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def u8(self, field: str) -> int:
        return self.take(1, field)[0]

    def u16(self, field: str) -> int:
        return int.from_bytes(self.take(2, field), "big")

    def string(self, field: str) -> str:
        length = self.u16(field)
        raw = self.take(length, field)
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError:
            raise DecodeError("invalid UTF-8", field) from None

    def remainder(self) -> bytes:
        chunk = self.data[self.pos:]
        self.pos = len(self.data)
        return chunk

    def expect_end(self) -> None:
        if self.pos != len(self.data):
            raise DecodeError("trailing bytes after packet body", self.field)


def encode(packet: MqttPacket) -> bytes:
    """Serialize a packet; inverse of decode for every valid packet."""
    if isinstance(packet, Connect):
        if not packet.client_id:
            raise ValueError("client id must be non-empty")
        flags = 0x02 if packet.clean_session else 0x00
        body = _encode_str(PROTOCOL_NAME) + bytes([PROTOCOL_LEVEL])
        payload = _encode_str(packet.client_id)
        if packet.will_topic is not None:
            flags |= 0x04  # will flag, will QoS 0
            if packet.will_retain:
                flags |= 0x20
            payload += _encode_str(packet.will_topic)
            payload += _encode_u16(len(packet.will_payload)) + packet.will_payload
        body += bytes([flags]) + _encode_u16(packet.keep_alive) + payload
        return _fixed_header(TYPE_CONNECT, 0, body)
    if isinstance(packet, Connack):
        body = bytes([1 if packet.session_present else 0, packet.return_code])
        return _fixed_header(TYPE_CONNACK, 0, body)
    if isinstance(packet, Subscribe):
        if packet.qos != 0:
            raise ValueError("only QoS 0 subscriptions are supported")
        body = _encode_u16(packet.packet_id) + _encode_str(packet.topic_filter)
        body += bytes([0])
        return _fixed_header(TYPE_SUBSCRIBE, 0x02, body)
    if isinstance(packet, Suback):
        body = _encode_u16(packet.packet_id) + bytes([packet.return_code])
        return _fixed_header(TYPE_SUBACK, 0, body)
    if isinstance(packet, Unsubscribe):
        body = _encode_u16(packet.packet_id) + _encode_str(packet.topic_filter)
        return _fixed_header(TYPE_UNSUBSCRIBE, 0x02, body)
    if isinstance(packet, Unsuback):
        return _fixed_header(TYPE_UNSUBACK, 0, _encode_u16(packet.packet_id))
    if isinstance(packet, Publish):
        if packet.qos != 0:
            raise ValueError("only QoS 0 publishes are supported")
        if not packet.topic:
            raise ValueError("publish topic must be non-empty")
        flags = (0x08 if packet.dup else 0) | (0x01 if packet.retain else 0)
        body = _encode_str(packet.topic) + packet.payload
        return _fixed_header(TYPE_PUBLISH, flags, body)
    if isinstance(packet, Disconnect):
        return _fixed_header(TYPE_DISCONNECT, 0, b"")
    raise TypeError(f"not an MQTT packet: {packet!r}")


def _fixed_header(packet_type: int, flags: int, body: bytes) -> bytes:
    if len(body) > MAX_REMAINING_LENGTH:
        raise ValueError("packet body too large")
    return (bytes([(packet_type << 4) | flags])
            + encode_remaining_length(len(body)) + body)


def decode(data: bytes, pos: int = 0) -> tuple[MqttPacket, int]:
    """Decode one packet starting at `pos`; returns (packet, bytes consumed).

    Raises TruncatedPacket when the buffer ends mid-packet (stream callers
    wait for more bytes) and DecodeError for malformed content.
    """
    if pos >= len(data):
        raise TruncatedPacket("fixed header")
    first = data[pos]
    packet_type = first >> 4
    flags = first & 0x0F
    length, body_start = decode_remaining_length(data, pos + 1)
    if body_start + length > len(data):
        raise TruncatedPacket()
    body = data[body_start:body_start + length]
    consumed = body_start + length - pos
    reader = _Reader(body)

    # [MQTT-2.2.2-1] reserved flag bits must be zero for these types
    if packet_type in (TYPE_CONNECT, TYPE_CONNACK, TYPE_SUBACK, TYPE_UNSUBACK,
                       TYPE_DISCONNECT) and flags != 0:
        raise DecodeError(f"flags must be 0, got {flags}", "fixed header")

    if packet_type == TYPE_CONNECT:
        name = reader.string("protocol name")
        if name != PROTOCOL_NAME:
            raise DecodeError(f"expected {PROTOCOL_NAME!r}, got {name!r}",
                              "protocol name")
        level = reader.u8("protocol level")
        if level != PROTOCOL_LEVEL:
            raise DecodeError(f"unsupported level {level}", "protocol level")
        connect_flags = reader.u8("connect flags")
        keep_alive = reader.u16("keep alive")
        client_id = reader.string("client id")
        will_topic = None
        will_payload = b""
        will_retain = False
        if connect_flags & 0x04:
            will_topic = reader.string("will topic")
            will_payload = reader.take(reader.u16("will payload"), "will payload")
            will_retain = bool(connect_flags & 0x20)
        if connect_flags & 0xC0:
            raise DecodeError("username/password not supported", "connect flags")
        reader.expect_end()
        packet: MqttPacket = Connect(client_id, bool(connect_flags & 0x02),
                                     will_topic, will_payload, will_retain,
                                     keep_alive)
    elif packet_type == TYPE_CONNACK:
        ack_flags = reader.u8("connack flags")
        rc = reader.u8("return code")
        reader.expect_end()
        packet = Connack(rc, session_present=bool(ack_flags & 0x01))
    elif packet_type == TYPE_SUBSCRIBE:
        if flags != 0x02:
            raise DecodeError(f"flags must be 2, got {flags}", "fixed header")
        packet_id = reader.u16("packet id")
        topic = reader.string("topic filter")
        qos = reader.u8("requested qos")
        if qos != 0:
            raise DecodeError(f"only QoS 0 supported, got {qos}", "requested qos")
        reader.expect_end()
        packet = Subscribe(packet_id, topic)
    elif packet_type == TYPE_SUBACK:
        packet_id = reader.u16("packet id")
        rc = reader.u8("return code")
        reader.expect_end()
        packet = Suback(packet_id, rc)
    elif packet_type == TYPE_UNSUBSCRIBE:
        if flags != 0x02:
            raise DecodeError(f"flags must be 2, got {flags}", "fixed header")
        packet_id = reader.u16("packet id")
        topic = reader.string("topic filter")
        reader.expect_end()
        packet = Unsubscribe(packet_id, topic)
    elif packet_type == TYPE_UNSUBACK:
        packet_id = reader.u16("packet id")
        reader.expect_end()
        packet = Unsuback(packet_id)
    elif packet_type == TYPE_PUBLISH:
        qos = (flags >> 1) & 0x03
        if qos != 0:
            raise DecodeError(f"only QoS 0 supported, got {qos}", "qos")
        topic = reader.string("topic")
        packet = Publish(topic, reader.remainder(), retain=bool(flags & 0x01),
                         dup=bool(flags & 0x08))
    elif packet_type == TYPE_DISCONNECT:
        reader.expect_end()
        packet = Disconnect()
    else:
        raise DecodeError(f"unsupported packet type {packet_type}",
                          "fixed header")
    return packet, consumed
