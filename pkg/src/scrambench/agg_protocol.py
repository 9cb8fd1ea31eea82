"""Newline-delimited JSON wire protocol for the aggregation servers.

One TCP connection carries a sequence of JSON objects, one per line:

    client -> HELLO   {protocol_version, computation_id, modulus}
    server -> ACK                                   (or ERROR {code})
    client -> SUBMIT  {cohort, session_token, slots: [decimal strings]}
    server -> ACK                                   (or ERROR {code})
    ...                                             (any number of SUBMITs)
    client -> SEAL    {cohort}
    server -> PARTIAL {cohort, n, slots: [decimal strings], server_index}

Slot values are decimal strings: field elements exceed 2^53 and must survive
JSON readers that parse numbers as doubles.  The modulus travels in every
HELLO so a misconfigured client fails fast with ``ModulusMismatch``.

The same per-connection handler backs two transports: a threading TCP server
for deployment and an in-process loopback for tests and the demo pipeline,
so both exercise the identical message path.
"""

from __future__ import annotations

import json
import logging
import socket
import socketserver
import threading
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .secure_agg import (
    MODULUS,
    AggregationError,
    AggregationServerState,
    MalformedSubmission,
    ModulusMismatch,
    PartialSum,
    ShareBundle,
)

log = logging.getLogger(__name__)

PROTOCOL_VERSION = 1

MSG_HELLO = "HELLO"
MSG_SUBMIT = "SUBMIT"
MSG_ACK = "ACK"
MSG_SEAL = "SEAL"
MSG_PARTIAL = "PARTIAL"
MSG_ERROR = "ERROR"


class ProtocolError(AggregationError):
    code = "ProtocolError"


class RemoteError(AggregationError):
    """An ERROR frame came back; ``code`` carries the server's error code."""

    def __init__(self, code: str, detail: str = ""):
        self.code = code
        super().__init__(f"{code}: {detail}" if detail else code)


# ---------------------------------------------------------------------------
# Framing
# ---------------------------------------------------------------------------

def encode_frame(message: dict) -> bytes:
    return json.dumps(message, separators=(",", ":"), sort_keys=True).encode("utf-8") + b"\n"


def decode_frame(line: bytes) -> dict:
    try:
        message = json.loads(line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ProtocolError(f"bad frame: {exc}") from None
    if not isinstance(message, dict) or "type" not in message:
        raise ProtocolError("frame is not an object with a 'type' field")
    return message


# ---------------------------------------------------------------------------
# Server side
# ---------------------------------------------------------------------------

class ServerSession:
    """Per-connection protocol state machine over an AggregationServerState."""

    def __init__(self, state: AggregationServerState):
        self.state = state
        self.greeted = False

    def handle_line(self, line: bytes) -> bytes:
        try:
            message = decode_frame(line)
            return encode_frame(self._dispatch(message))
        except AggregationError as exc:
            return encode_frame({"type": MSG_ERROR, "code": exc.code, "detail": str(exc)})

    def _dispatch(self, message: dict) -> dict:
        mtype = message["type"]
        if mtype == MSG_HELLO:
            if int(message.get("protocol_version", -1)) != PROTOCOL_VERSION:
                raise ProtocolError(f"unsupported protocol_version {message.get('protocol_version')!r}")
            if str(message.get("computation_id")) != self.state.computation_id:
                raise ProtocolError(f"server runs computation {self.state.computation_id!r}")
            if int(message.get("modulus", 0)) != self.state.modulus:
                raise ModulusMismatch("client and server moduli differ")
            self.greeted = True
            return {"type": MSG_ACK}
        if not self.greeted:
            raise ProtocolError("first message must be HELLO")
        if mtype == MSG_SUBMIT:
            bundle = ShareBundle(
                computation_id=self.state.computation_id,
                cohort=str(message.get("cohort", "")),
                session_token=str(message.get("session_token", "")),
                server_index=self.state.server_index,
                modulus=self.state.modulus,
                slots=_parse_slots(message.get("slots")),
            )
            self.state.submit(bundle)
            return {"type": MSG_ACK}
        if mtype == MSG_SEAL:
            partial = self.state.seal(str(message.get("cohort", "")))
            return {
                "type": MSG_PARTIAL,
                "cohort": partial.cohort,
                "n": partial.n,
                "server_index": partial.server_index,
                "slots": [str(s) for s in partial.slots],
            }
        raise ProtocolError(f"unknown message type {mtype!r}")


def _parse_slots(raw) -> Tuple[int, ...]:
    if not isinstance(raw, list):
        raise MalformedSubmission("slots must be a list of decimal strings")
    try:
        return tuple(int(s) for s in raw)
    except (TypeError, ValueError):
        raise MalformedSubmission("slots must be decimal strings") from None


class AggregationTCPServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, address: Tuple[str, int], state: AggregationServerState):
        self.state = state
        super().__init__(address, _TCPHandler)


class _TCPHandler(socketserver.StreamRequestHandler):
    def handle(self) -> None:
        session = ServerSession(self.server.state)
        log.debug("connection from %s", self.client_address)
        while True:
            line = self.rfile.readline()
            if not line:
                return
            line = line.strip()
            if not line:
                continue
            self.wfile.write(session.handle_line(line))
            self.wfile.flush()


def serve_aggregation(state: AggregationServerState, host: str, port: int) -> AggregationTCPServer:
    """Bind and return the server; caller decides blocking vs thread."""
    server = AggregationTCPServer((host, port), state)
    log.info("aggregation server %d listening on %s:%d", state.server_index, *server.server_address)
    return server


# ---------------------------------------------------------------------------
# Client side
# ---------------------------------------------------------------------------

class AggregationClient:
    """Blocking client for one server connection."""

    def __init__(self, host: str, port: int, computation_id: str, modulus: int = MODULUS):
        self.computation_id = computation_id
        self.modulus = modulus
        self._sock = socket.create_connection((host, port))
        self._rfile = self._sock.makefile("rb")
        self._hello()

    def _roundtrip(self, message: dict) -> dict:
        self._sock.sendall(encode_frame(message))
        line = self._rfile.readline()
        if not line:
            raise ProtocolError("server closed the connection")
        reply = decode_frame(line.strip())
        if reply["type"] == MSG_ERROR:
            raise RemoteError(str(reply.get("code", "unknown")), str(reply.get("detail", "")))
        return reply

    def _hello(self) -> None:
        self._roundtrip({
            "type": MSG_HELLO,
            "protocol_version": PROTOCOL_VERSION,
            "computation_id": self.computation_id,
            "modulus": str(self.modulus),
        })

    def submit(self, bundle: ShareBundle) -> None:
        self._roundtrip({
            "type": MSG_SUBMIT,
            "cohort": bundle.cohort,
            "session_token": bundle.session_token,
            "slots": [str(s) for s in bundle.slots],
        })

    def seal(self, cohort: str) -> PartialSum:
        reply = self._roundtrip({"type": MSG_SEAL, "cohort": cohort})
        if reply["type"] != MSG_PARTIAL:
            raise ProtocolError(f"expected PARTIAL, got {reply['type']}")
        return PartialSum(
            computation_id=self.computation_id,
            cohort=str(reply["cohort"]),
            server_index=int(reply["server_index"]),
            modulus=self.modulus,
            n=int(reply["n"]),
            slots=_parse_slots(reply["slots"]),
        )

    def close(self) -> None:
        try:
            self._rfile.close()
        finally:
            self._sock.close()

    def __enter__(self) -> "AggregationClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


# ---------------------------------------------------------------------------
# Loopback transport
# ---------------------------------------------------------------------------

class LoopbackTransport:
    """In-process stand-in for M server connections.

    Frames are encoded, dispatched, and decoded exactly as over TCP, so the
    demo pipeline and tests cover the real message path without sockets.
    """

    def __init__(self, computation_id: str, num_servers: int, modulus: int = MODULUS):
        self.computation_id = computation_id
        self.num_servers = num_servers
        self.states = [AggregationServerState(i + 1, computation_id, modulus) for i in range(num_servers)]
        self._sessions = [ServerSession(state) for state in self.states]
        for session, state in zip(self._sessions, self.states):
            self._roundtrip(session, {
                "type": MSG_HELLO,
                "protocol_version": PROTOCOL_VERSION,
                "computation_id": computation_id,
                "modulus": str(state.modulus),
            })

    @staticmethod
    def _roundtrip(session: ServerSession, message: dict) -> dict:
        reply = decode_frame(session.handle_line(encode_frame(message)).strip())
        if reply["type"] == MSG_ERROR:
            raise RemoteError(str(reply.get("code", "unknown")), str(reply.get("detail", "")))
        return reply

    def submit(self, bundles: Sequence[ShareBundle]) -> None:
        """Deliver one participant session's bundles, one per server."""
        if len(bundles) != self.num_servers:
            raise MalformedSubmission(f"need {self.num_servers} bundles, got {len(bundles)}")
        for bundle in bundles:
            session = self._sessions[bundle.server_index - 1]
            self._roundtrip(session, {
                "type": MSG_SUBMIT,
                "cohort": bundle.cohort,
                "session_token": bundle.session_token,
                "slots": [str(s) for s in bundle.slots],
            })

    def seal(self, cohort: str) -> List[PartialSum]:
        partials = []
        for session, state in zip(self._sessions, self.states):
            reply = self._roundtrip(session, {"type": MSG_SEAL, "cohort": cohort})
            partials.append(PartialSum(
                computation_id=self.computation_id,
                cohort=str(reply["cohort"]),
                server_index=int(reply["server_index"]),
                modulus=state.modulus,
                n=int(reply["n"]),
                slots=_parse_slots(reply["slots"]),
            ))
        return partials
