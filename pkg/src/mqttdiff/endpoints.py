"""Target URI resolution: sim:<broker> (in-process) or tcp://host:port."""

from __future__ import annotations

from urllib.parse import urlsplit

from .mqtt import BROKER_NAMES, SimulatedBackend, TcpBackend
from .sul import Mapper, MapperConfig, MapperEndpoint, SULEndpoint


def open_endpoint(uri: str, mapper: Mapper, timeout_ms: int = 100,
                  admin_reset: bool = True) -> SULEndpoint:
    """Open a SUL endpoint for `uri` under the given mapper.

    `admin_reset` applies to TCP targets only: it enables the in-repo
    loopback server's out-of-band state reset between queries and must be
    disabled when targeting a real broker.
    """
    config = MapperConfig(mapper.name, receive_timeout_ms=timeout_ms,
                          client_count=mapper.client_count)
    if uri.startswith("sim:"):
        name = uri[len("sim:"):]
        try:
            mutant = BROKER_NAMES[name]
        except KeyError:
            raise ValueError(f"unknown simulated broker {name!r}; "
                             f"choose from {sorted(BROKER_NAMES)}") from None
        backend = SimulatedBackend(mutant, config.client_count)
        return MapperEndpoint(backend, mapper, name=f"{uri}/{mapper.name}")
    if uri.startswith("tcp://"):
        parts = urlsplit(uri)
        if not parts.hostname or parts.port is None:
            raise ValueError(f"target {uri!r} must be tcp://host:port")
        backend = TcpBackend(parts.hostname, parts.port, config.client_count,
                             timeout_ms=config.receive_timeout_ms,
                             admin_reset=admin_reset)
        return MapperEndpoint(backend, mapper, name=f"{uri}/{mapper.name}")
    raise ValueError(f"unknown target scheme in {uri!r}; "
                     "expected sim:<broker> or tcp://host:port")
