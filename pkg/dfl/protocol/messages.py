"""Wire records exchanged by agents.

Binary layout: one kind byte, big-endian unsigned integers, 8-byte big-endian
floats. Membership records that carry structured data (announcement, table,
handoff) use a kind byte followed by canonical JSON.
"""

from __future__ import annotations
from dataclasses import dataclass, field
from enum import IntEnum
import json
import struct
from typing import Any, Optional, Union

import numpy as np
from numpy.typing import NDArray

MEMBERSHIP_TOPIC = "membership"

_FLOAT = np.dtype(">f8")
_VECTOR_HEADER = struct.Struct(">BIIII")  # kind, agent, round, partition, length
_FETCH = struct.Struct(">BIII")  # kind, requester, round, partition
_SYNC_HEADER = struct.Struct(">BIIII")  # kind, origin, partition, round, contributions
_CONTRIBUTION = struct.Struct(">II")  # submitter, length
_VALUES_FLAG = struct.Struct(">BI")  # has values, length
_OFFER = struct.Struct(">BIq")  # kind, agent, storage bytes (-1 = unlimited)
_AGENT_ONLY = struct.Struct(">BI")


def partition_topic(partition: int) -> str:
    return f"partition-{partition}"


class CodecError(ValueError):
    pass


class MessageKind(IntEnum):
    ANNOUNCE = 1
    JOIN_OFFER = 2
    TABLE = 3
    TABLE_REQUEST = 4
    UPDATE = 5
    REPLY = 6
    FETCH = 7
    SYNC = 8
    HANDOFF = 9

    @property
    def label(self) -> str:
        return self.name.lower().replace("_", "-")


def _floats(values: NDArray[np.float64]) -> bytes:
    return np.asarray(values, dtype=np.float64).astype(_FLOAT).tobytes()


def _read_floats(data: bytes, offset: int, count: int) -> tuple[NDArray[np.float64], int]:
    end = offset + count * 8
    if end > len(data):
        raise CodecError(f"truncated vector: need {count * 8} bytes at offset {offset}")
    values = np.frombuffer(data, dtype=_FLOAT, count=count, offset=offset).astype(np.float64)
    return values, end


def vector_to_bytes(values: NDArray[np.float64]) -> bytes:
    """Raw big-endian float64 encoding, used for blob-store uploads."""
    return _floats(values)


def vector_from_bytes(data: bytes) -> NDArray[np.float64]:
    if len(data) % 8:
        raise CodecError(f"vector blob length {len(data)} is not a multiple of 8")
    return _read_floats(data, 0, len(data) // 8)[0]


def _json_body(kind: MessageKind, body: dict[str, Any]) -> bytes:
    return bytes([kind]) + json.dumps(body, sort_keys=True, separators=(",", ":")).encode("utf-8")


@dataclass(frozen=True)
class UpdateMessage:
    sender: int
    round: int
    partition_id: int
    delta: NDArray[np.float64]

    kind = MessageKind.UPDATE

    @property
    def vector_bytes(self) -> int:
        return 8 * len(self.delta)

    def encode(self) -> bytes:
        header = _VECTOR_HEADER.pack(self.kind, self.sender, self.round, self.partition_id, len(self.delta))
        return header + _floats(self.delta)


@dataclass(frozen=True)
class ReplyMessage:
    responder: int
    round: int
    partition_id: int
    values: NDArray[np.float64]

    kind = MessageKind.REPLY

    @property
    def vector_bytes(self) -> int:
        return 8 * len(self.values)

    def encode(self) -> bytes:
        header = _VECTOR_HEADER.pack(self.kind, self.responder, self.round, self.partition_id, len(self.values))
        return header + _floats(self.values)


@dataclass(frozen=True)
class FetchRequest:
    requester: int
    round: int
    partition_id: int

    kind = MessageKind.FETCH
    vector_bytes = 0

    def encode(self) -> bytes:
        return _FETCH.pack(self.kind, self.requester, self.round, self.partition_id)


@dataclass(frozen=True)
class ReplicaSyncMessage:
    origin: int
    partition_id: int
    round: int
    contributions: tuple[tuple[int, NDArray[np.float64]], ...]
    values: Optional[NDArray[np.float64]] = None  # origin's w_k before aggregation

    kind = MessageKind.SYNC
    vector_bytes = 0

    def __post_init__(self) -> None:
        submitters = [s for s, _ in self.contributions]
        if len(set(submitters)) != len(submitters):
            raise CodecError("duplicate submitter in replica sync contributions")

    def encode(self) -> bytes:
        parts = [_SYNC_HEADER.pack(self.kind, self.origin, self.partition_id, self.round, len(self.contributions))]
        for submitter, delta in self.contributions:
            parts.append(_CONTRIBUTION.pack(submitter, len(delta)))
            parts.append(_floats(delta))
        if self.values is None:
            parts.append(_VALUES_FLAG.pack(0, 0))
        else:
            parts.append(_VALUES_FLAG.pack(1, len(self.values)))
            parts.append(_floats(self.values))
        return b"".join(parts)


@dataclass(frozen=True)
class JoinOffer:
    agent: int
    storage: Optional[int] = None  # bytes; None = unlimited

    kind = MessageKind.JOIN_OFFER
    vector_bytes = 0

    def encode(self) -> bytes:
        return _OFFER.pack(self.kind, self.agent, -1 if self.storage is None else self.storage)


@dataclass(frozen=True)
class TableRequest:
    agent: int

    kind = MessageKind.TABLE_REQUEST
    vector_bytes = 0

    def encode(self) -> bytes:
        return _AGENT_ONLY.pack(self.kind, self.agent)


@dataclass(frozen=True)
class Announce:
    initiator: int
    model: dict[str, Any]  # ModelSpec.model_dump(mode="json")
    k: int
    pi: int
    rho: int
    optimizer: str = "sgd"

    kind = MessageKind.ANNOUNCE
    vector_bytes = 0

    def encode(self) -> bytes:
        return _json_body(self.kind, {
            "initiator": self.initiator,
            "model": self.model,
            "K": self.k,
            "pi": self.pi,
            "rho": self.rho,
            "optimizer": self.optimizer,
        })


@dataclass(frozen=True)
class HandoffMessage:
    leaver: int
    reassignments: tuple[tuple[int, int, int], ...] = ()  # (partition, from, to)
    blobs: dict[int, str] = field(default_factory=dict)  # partition -> blob digest

    kind = MessageKind.HANDOFF
    vector_bytes = 0

    def as_dict(self) -> dict[str, Any]:
        return {
            "leaver": self.leaver,
            "reassignments": [list(r) for r in self.reassignments],
            "blobs": {str(k): v for k, v in self.blobs.items()},
        }

    def encode(self) -> bytes:
        return _json_body(self.kind, self.as_dict())


@dataclass(frozen=True)
class TableMessage:
    """Partition table broadcast, also the answer to a ``TableRequest``.

    ``handoffs`` lists the departures the sender has applied so far, so an
    agent that was offline when a handoff was broadcast can replay it.
    """

    table: str  # PartitionTable.to_canonical()
    roster: tuple[int, ...]
    handoffs: tuple[HandoffMessage, ...] = ()

    kind = MessageKind.TABLE
    vector_bytes = 0

    def encode(self) -> bytes:
        return _json_body(self.kind, {
            "table": self.table,
            "roster": list(self.roster),
            "handoffs": [h.as_dict() for h in self.handoffs],
        })


Message = Union[
    Announce, JoinOffer, TableMessage, TableRequest, UpdateMessage,
    ReplyMessage, FetchRequest, ReplicaSyncMessage, HandoffMessage,
]


def _unpack(fmt: struct.Struct, data: bytes, offset: int = 0) -> tuple:
    if len(data) < offset + fmt.size:
        raise CodecError(f"truncated message: need {fmt.size} bytes at offset {offset}")
    return fmt.unpack_from(data, offset)


def _decode_json(data: bytes) -> dict[str, Any]:
    try:
        return json.loads(data[1:].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CodecError(f"malformed JSON body: {e}") from e


def decode(data: bytes) -> Message:
    if not data:
        raise CodecError("empty message")
    try:
        kind = MessageKind(data[0])
    except ValueError:
        raise CodecError(f"unknown message kind {data[0]}") from None

    try:
        if kind in (MessageKind.UPDATE, MessageKind.REPLY):
            _, agent, round_index, partition, length = _unpack(_VECTOR_HEADER, data)
            values, end = _read_floats(data, _VECTOR_HEADER.size, length)
            if end != len(data):
                raise CodecError(f"{len(data) - end} trailing bytes")
            if kind is MessageKind.UPDATE:
                return UpdateMessage(sender=agent, round=round_index, partition_id=partition, delta=values)
            return ReplyMessage(responder=agent, round=round_index, partition_id=partition, values=values)

        if kind is MessageKind.FETCH:
            _, requester, round_index, partition = _unpack(_FETCH, data)
            return FetchRequest(requester=requester, round=round_index, partition_id=partition)

        if kind is MessageKind.SYNC:
            _, origin, partition, round_index, count = _unpack(_SYNC_HEADER, data)
            offset = _SYNC_HEADER.size
            contributions = []
            for _ in range(count):
                submitter, length = _unpack(_CONTRIBUTION, data, offset)
                delta, offset = _read_floats(data, offset + _CONTRIBUTION.size, length)
                contributions.append((submitter, delta))
            has_values, length = _unpack(_VALUES_FLAG, data, offset)
            values = None
            offset += _VALUES_FLAG.size
            if has_values:
                values, offset = _read_floats(data, offset, length)
            return ReplicaSyncMessage(
                origin=origin, partition_id=partition, round=round_index,
                contributions=tuple(contributions), values=values,
            )

        if kind is MessageKind.JOIN_OFFER:
            _, agent, storage = _unpack(_OFFER, data)
            return JoinOffer(agent=agent, storage=None if storage < 0 else storage)

        if kind is MessageKind.TABLE_REQUEST:
            _, agent = _unpack(_AGENT_ONLY, data)
            return TableRequest(agent=agent)

        body = _decode_json(data)
        if kind is MessageKind.ANNOUNCE:
            return Announce(
                initiator=int(body["initiator"]), model=body["model"],
                k=int(body["K"]), pi=int(body["pi"]), rho=int(body["rho"]), optimizer=body["optimizer"],
            )
        if kind is MessageKind.TABLE:
            return TableMessage(
                table=body["table"],
                roster=tuple(int(a) for a in body["roster"]),
                handoffs=tuple(_handoff_from_body(h) for h in body.get("handoffs", ())),
            )
        return _handoff_from_body(body)
    except CodecError:
        raise
    except (KeyError, TypeError, ValueError, AttributeError) as e:
        raise CodecError(f"malformed {kind.label} message: {e}") from e


def _handoff_from_body(body: dict[str, Any]) -> HandoffMessage:
    reassignments = tuple(tuple(int(x) for x in r) for r in body["reassignments"])
    if any(len(r) != 3 for r in reassignments):
        raise CodecError("handoff reassignment must be (partition, from, to)")
    return HandoffMessage(
        leaver=int(body["leaver"]),
        reassignments=reassignments,
        blobs={int(k): str(v) for k, v in body["blobs"].items()},
    )
