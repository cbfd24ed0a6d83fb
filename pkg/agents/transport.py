"""
Transports
Delivery of state messages between agents

Features:
- InProcessBus: deterministic queues, every datagram passes through JSON encoding
- UdpMulticastBus: plain JSON datagrams on a multicast group (loopback at desk scale)
- Seeded datagram loss on both, for eventual-consistency checks
"""
import random
import selectors
import socket
import struct
from collections import deque
from typing import Deque, Dict, List, Optional

import config
from agents.messages import Assembler, MessageError, StateMessage, split_message
from utils.logger import setup_logger

logger = setup_logger(__name__)


class TransportError(Exception):
    """Raised when an endpoint cannot be opened or used"""


class Endpoint:
    """
    One agent's attachment to a transport.

    Subclasses implement _transmit() and _receive_raw(); splitting, loss,
    decoding and reassembly are shared.
    """

    def __init__(self, agent_id: str, loss: float = 0.0, seed: int = 0, limit: int = config.MAX_DATAGRAM):
        if not 0.0 <= loss < 1.0:
            raise ValueError("loss must be in [0, 1)")
        self.agent_id = agent_id
        self.loss = loss
        self.limit = limit
        # str seeds are hashed deterministically
        self._rng = random.Random(f"{seed}:{agent_id}")
        self._assembler = Assembler()
        self._seq = 0
        self.sent = 0
        self.dropped = 0
        self.malformed = 0

    def next_seq(self) -> int:
        self._seq += 1
        return self._seq

    def send(self, message: StateMessage):
        """Send a logical message (assigns a fresh sequence number)"""
        message.sender = self.agent_id
        message.seq = self.next_seq()
        for part in split_message(message, self.limit):
            self.sent += 1
            if self.loss and self._rng.random() < self.loss:
                self.dropped += 1
                continue
            self._transmit(part.encode())

    def receive(self) -> List[StateMessage]:
        """Complete messages addressed to this agent, in arrival order"""
        result = []
        for data in self._receive_raw():
            try:
                part = StateMessage.decode(data)
            except MessageError as e:
                self.malformed += 1
                logger.warning(f"{self.agent_id}: dropped datagram: {e}")
                continue
            if part.sender == self.agent_id or not part.is_for(self.agent_id):
                continue
            message = self._assembler.add(part)
            if message is not None:
                result.append(message)
        return result

    def wait(self, timeout: float):
        """Block until data may be available or the timeout passes"""

    def reset(self):
        self._assembler.reset()

    def close(self):
        pass

    def _transmit(self, data: bytes):
        raise NotImplementedError

    def _receive_raw(self) -> List[bytes]:
        raise NotImplementedError


# ════════════════════════════════════════════════════════
# IN-PROCESS
# ════════════════════════════════════════════════════════

class InProcessBus:
    """
    Broadcast bus inside one process.

    Args:
        loss: Probability of dropping a datagram
        seed: Seed of the loss generators
    """

    def __init__(self, loss: float = 0.0, seed: int = 0):
        self.loss = loss
        self.seed = seed
        self.queues: Dict[str, Deque[bytes]] = {}
        logger.info(f"InProcessBus initialized (loss {loss:.0%}, seed {seed})")

    def endpoint(self, agent_id: str) -> "InProcessEndpoint":
        if agent_id in self.queues:
            raise TransportError(f"endpoint {agent_id} already attached")
        self.queues[agent_id] = deque()
        return InProcessEndpoint(self, agent_id)

    def deliver(self, sender: str, data: bytes):
        for agent_id, queue in self.queues.items():
            if agent_id != sender:
                queue.append(data)

    def detach(self, agent_id: str):
        self.queues.pop(agent_id, None)


class InProcessEndpoint(Endpoint):

    def __init__(self, bus: InProcessBus, agent_id: str):
        super().__init__(agent_id, bus.loss, bus.seed)
        self.bus = bus

    def _transmit(self, data: bytes):
        self.bus.deliver(self.agent_id, data)

    def _receive_raw(self) -> List[bytes]:
        queue = self.bus.queues.get(self.agent_id)
        if not queue:
            return []
        items = list(queue)
        queue.clear()
        return items

    def close(self):
        self.bus.detach(self.agent_id)


# ════════════════════════════════════════════════════════
# UDP MULTICAST
# ════════════════════════════════════════════════════════

class UdpMulticastBus:
    """
    Multicast group shared by all endpoints of a run.

    Args:
        group: Multicast address (SCSL_MCAST_ADDR)
        port: UDP port (SCSL_MCAST_PORT)
        loss: Probability of dropping an outgoing datagram
        seed: Seed of the loss generators
        interface: Local interface address used for sending and joining
    """

    def __init__(self, group: str = config.MCAST_ADDR, port: int = config.MCAST_PORT,
                 loss: float = 0.0, seed: int = 0, interface: str = "127.0.0.1"):
        self.group = group
        self.port = port
        self.loss = loss
        self.seed = seed
        self.interface = interface
        logger.info(f"UdpMulticastBus initialized ({group}:{port}, loss {loss:.0%})")

    def endpoint(self, agent_id: str) -> "UdpEndpoint":
        return UdpEndpoint(self, agent_id)


class UdpEndpoint(Endpoint):

    def __init__(self, bus: UdpMulticastBus, agent_id: str):
        super().__init__(agent_id, bus.loss, bus.seed)
        self.bus = bus
        try:
            self.sock = self._open()
        except OSError as e:
            logger.error(f"Failed to open multicast endpoint for {agent_id}: {e}")
            raise TransportError(f"cannot join {bus.group}:{bus.port}: {e}") from e
        self.selector = selectors.DefaultSelector()
        self.selector.register(self.sock, selectors.EVENT_READ)

    def _open(self) -> socket.socket:
        bus = self.bus
        sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM, socket.IPPROTO_UDP)
        try:
            sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
            if hasattr(socket, "SO_REUSEPORT"):
                sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEPORT, 1)
            sock.bind(("", bus.port))
            membership = struct.pack("4s4s", socket.inet_aton(bus.group), socket.inet_aton(bus.interface))
            sock.setsockopt(socket.IPPROTO_IP, socket.IP_ADD_MEMBERSHIP, membership)
            sock.setsockopt(socket.IPPROTO_IP, socket.IP_MULTICAST_IF, socket.inet_aton(bus.interface))
            sock.setsockopt(socket.IPPROTO_IP, socket.IP_MULTICAST_TTL, 1)
            sock.setsockopt(socket.IPPROTO_IP, socket.IP_MULTICAST_LOOP, 1)
            sock.setblocking(False)
        except OSError:
            sock.close()
            raise
        return sock

    def _transmit(self, data: bytes):
        try:
            self.sock.sendto(data, (self.bus.group, self.bus.port))
        except OSError as e:
            raise TransportError(f"{self.agent_id}: send failed: {e}") from e

    def _receive_raw(self) -> List[bytes]:
        items = []
        while True:
            try:
                data, _ = self.sock.recvfrom(65507)
            except BlockingIOError:
                break
            except OSError as e:
                logger.error(f"{self.agent_id}: receive failed: {e}")
                break
            items.append(data)
        return items

    def wait(self, timeout: float):
        self.selector.select(timeout)

    def close(self):
        try:
            self.selector.close()
            self.sock.close()
        except Exception as e:
            logger.error(f"Failed to close endpoint {self.agent_id}: {e}")


def open_bus(mode: str, loss: float = 0.0, seed: int = 0, group: Optional[str] = None,
             port: Optional[int] = None):
    """Bus for a transport mode (inproc or udp)"""
    if mode == "inproc":
        return InProcessBus(loss, seed)
    if mode == "udp":
        return UdpMulticastBus(group or config.MCAST_ADDR, port or config.MCAST_PORT, loss, seed)
    raise ValueError(f"unknown transport mode '{mode}'")
