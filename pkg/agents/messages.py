"""
State Messages
JSON datagrams exchanged by the agents of a distributed run

Features:
- One logical message per (sender, kind, tick, section), split into parts below the datagram limit
- State maps split along symbol prefixes (one object's parameters stay together when they fit)
- Reassembly with last-sequence-wins per sender
"""
import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Mapping, Optional, Tuple

from config import MAX_DATAGRAM
from models.values import from_wire, to_wire
from utils.logger import setup_logger

logger = setup_logger(__name__)


class MessageKind(Enum):
    """Purpose of a state message"""
    JOIN = "join"                   # agent announces itself with its hosted instances
    HEARTBEAT = "heartbeat"
    TICK = "tick"                   # coordinator: σ_j and tentative σ_j+1, runnable instances
    CONTRIBUTION = "contribution"   # agent: effects of its instances for one tick
    FINISH = "finish"               # coordinator: final valuation, close monitors
    VERDICTS = "verdicts"           # agent: verdicts and instance summaries
    RESET = "reset"


class MessageError(Exception):
    """Raised for datagrams that are not valid state messages"""


@dataclass
class StateMessage:
    """
    One datagram.

    Attributes:
        sender: Agent id of the sender
        kind: MessageKind value
        tick: Tick the message belongs to
        seq: Sender sequence number, shared by all parts of one logical message
        section: Name of the state map carried (e.g. current, next)
        state: Symbol -> wire-encoded value
        body: Kind-specific payload (contributions, verdicts, instance lists)
        to: Recipient agent id (None for everyone)
        part: Index of this part
        parts: Number of parts of the logical message
    """
    sender: str
    kind: str
    tick: int
    seq: int = 0
    section: str = ""
    state: Dict[str, Any] = field(default_factory=dict)
    body: Dict[str, Any] = field(default_factory=dict)
    to: Optional[str] = None
    part: int = 0
    parts: int = 1

    def to_dict(self) -> Dict[str, Any]:
        return {
            'sender': self.sender,
            'kind': self.kind,
            'tick': self.tick,
            'seq': self.seq,
            'section': self.section,
            'state': self.state,
            'body': self.body,
            'to': self.to,
            'part': self.part,
            'parts': self.parts,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'StateMessage':
        try:
            return cls(
                sender=str(data['sender']),
                kind=str(data['kind']),
                tick=int(data['tick']),
                seq=int(data.get('seq', 0)),
                section=str(data.get('section', '')),
                state=dict(data.get('state') or {}),
                body=dict(data.get('body') or {}),
                to=data.get('to'),
                part=int(data.get('part', 0)),
                parts=int(data.get('parts', 1))
            )
        except (KeyError, TypeError, ValueError) as e:
            raise MessageError(f"malformed state message: {e}") from e

    def encode(self) -> bytes:
        return json.dumps(self.to_dict(), separators=(",", ":"), ensure_ascii=False).encode("utf-8")

    @classmethod
    def decode(cls, data: bytes) -> 'StateMessage':
        try:
            payload = json.loads(data.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as e:
            raise MessageError(f"datagram is not JSON: {e}") from e
        if not isinstance(payload, dict):
            raise MessageError("datagram is not a JSON object")
        return cls.from_dict(payload)

    def is_for(self, agent_id: str) -> bool:
        return self.to is None or self.to == agent_id

    def values(self) -> Dict[str, Any]:
        """Decoded state map"""
        return {symbol: from_wire(value) for symbol, value in self.state.items()}


def encode_state(valuation: Mapping[str, Any]) -> Dict[str, Any]:
    return {symbol: to_wire(value) for symbol, value in valuation.items()}


# ════════════════════════════════════════════════════════
# SPLITTING
# ════════════════════════════════════════════════════════

def symbol_prefix(symbol: str) -> str:
    """Owner part of a symbol: coll.r[2].pos -> coll.r[2]"""
    if "." not in symbol:
        return symbol
    return symbol.rsplit(".", 1)[0]


def _size(message: StateMessage) -> int:
    return len(message.encode())


def split_message(message: StateMessage, limit: int = MAX_DATAGRAM) -> List[StateMessage]:
    """
    Parts of a logical message, each encoding to at most limit bytes.

    Symbols sharing a prefix are kept in one part when they fit together.
    Raises MessageError when a single symbol (or the body) exceeds the limit.
    """
    if _size(message) <= limit:
        return [message]

    empty = StateMessage(message.sender, message.kind, message.tick, message.seq, message.section,
                         {}, message.body, message.to, 0, 1)
    # part counters are at most a few digits wider than in the template
    overhead = _size(empty) + 16
    if overhead > limit:
        raise MessageError(f"message body of {message.kind} exceeds {limit} bytes")

    groups: Dict[str, List[Tuple[str, Any]]] = {}
    for symbol, value in message.state.items():
        groups.setdefault(symbol_prefix(symbol), []).append((symbol, value))

    def entry_size(symbol: str, value: Any) -> int:
        return len(json.dumps({symbol: value}, separators=(",", ":"), ensure_ascii=False).encode("utf-8"))

    chunks: List[Dict[str, Any]] = []
    current: Dict[str, Any] = {}
    used = overhead
    for items in groups.values():
        group_size = sum(entry_size(s, v) for s, v in items)
        if used + group_size > limit and current:
            chunks.append(current)
            current, used = {}, overhead
        for symbol, value in items:
            size = entry_size(symbol, value)
            if overhead + size > limit:
                raise MessageError(f"symbol {symbol} alone exceeds {limit} bytes")
            if used + size > limit and current:
                chunks.append(current)
                current, used = {}, overhead
            current[symbol] = value
            used += size
    if current or not chunks:
        chunks.append(current)

    parts = len(chunks)
    return [
        StateMessage(message.sender, message.kind, message.tick, message.seq, message.section,
                     chunk, message.body if k == 0 else {}, message.to, k, parts)
        for k, chunk in enumerate(chunks)
    ]


# ════════════════════════════════════════════════════════
# REASSEMBLY
# ════════════════════════════════════════════════════════

class Assembler:
    """
    Joins the parts of logical messages.

    Parts are keyed by (sender, kind, section, seq). A message whose sequence
    is not newer than the last completed one of the same sender, kind and
    section is stale and dropped, together with older unfinished parts.
    """

    def __init__(self):
        self._partial: Dict[Tuple[str, str, str, int], Dict[int, StateMessage]] = {}
        self._latest: Dict[Tuple[str, str, str], int] = {}

    def add(self, part: StateMessage) -> Optional[StateMessage]:
        stream = (part.sender, part.kind, part.section)
        latest = self._latest.get(stream)
        if latest is not None and part.seq <= latest:
            return None
        key = stream + (part.seq,)
        pieces = self._partial.setdefault(key, {})
        pieces[part.part] = part
        if len(pieces) < part.parts:
            return None
        self._latest[stream] = part.seq
        for stale in [k for k in self._partial if k[:3] == stream and k[3] <= part.seq]:
            del self._partial[stale]
        ordered = [pieces[k] for k in range(part.parts)]
        merged = StateMessage(part.sender, part.kind, part.tick, part.seq, part.section,
                              {}, ordered[0].body, part.to, 0, 1)
        for piece in ordered:
            merged.state.update(piece.state)
        return merged

    def reset(self):
        self._partial.clear()
        self._latest.clear()
