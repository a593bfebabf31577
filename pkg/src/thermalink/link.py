"""Framing and half-duplex sessions over the thermal modem.

Frame layout (bits, MSB first)::

    preamble 1010 | length (8) | payload (length bits, <= 64) | CRC-8 (8)

The CRC covers length and payload; polynomial 0x07, init 0x00, no
reflection, no final XOR.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field, replace

from .channel import ChannelConfig, Direction, NoLink, link_profile
from .modem import (PingResponse, SymbolTiming, ThermalPing, as_bits, demodulate, detect_ping,
                    modulate, send_ping)
from .node import DEFAULT_DT_S, NodeThermalParams, WorkloadSchedule, preset
from .pipeline import simulate
from .sensing import AMBIENT_SENSOR, NoiseModel, SensorSpec

PREAMBLE = "1010"
LENGTH_BITS = 8
CRC_BITS = 8
MAX_PAYLOAD_BITS = 64
HEADER_BITS = len(PREAMBLE) + LENGTH_BITS
OVERHEAD_BITS = HEADER_BITS + CRC_BITS
CRC_POLY = 0x07


class FrameError(ValueError):
    pass


class CrcMismatch(FrameError):
    pass


class BadPreamble(FrameError):
    pass


class Truncated(FrameError):
    pass


class BadLength(FrameError):
    pass


class LinkLost(Exception):
    """Calibration or frame delivery failed after all retries."""


def crc8(bits: str) -> int:
    crc = 0
    for b in as_bits(bits):
        top = (crc >> 7) ^ (b == "1")
        crc = (crc << 1) & 0xFF
        if top:
            crc ^= CRC_POLY
    return crc


def encode_frame(payload: str) -> str:
    payload = as_bits(payload)
    if len(payload) > MAX_PAYLOAD_BITS:
        raise ValueError(f"payload of {len(payload)} bits exceeds {MAX_PAYLOAD_BITS}")
    body = format(len(payload), "08b") + payload
    return PREAMBLE + body + format(crc8(body), "08b")


def frame_length(payload_bits: int) -> int:
    return OVERHEAD_BITS + payload_bits


def decode_header(bits: str) -> int:
    """Payload length announced by a frame header."""
    if len(bits) < len(PREAMBLE):
        raise Truncated("frame shorter than preamble")
    if bits[: len(PREAMBLE)] != PREAMBLE:
        raise BadPreamble(f"preamble {bits[:len(PREAMBLE)]!r}")
    if len(bits) < HEADER_BITS:
        raise Truncated("frame shorter than header")
    n = int(bits[len(PREAMBLE):HEADER_BITS], 2)
    if n > MAX_PAYLOAD_BITS:
        raise BadLength(f"announced payload of {n} bits")
    return n


def decode_frame(bits: str) -> str:
    bits = as_bits(bits)
    n = decode_header(bits)
    end = HEADER_BITS + n + CRC_BITS
    if len(bits) < end:
        raise Truncated(f"need {end} bits, have {len(bits)}")
    body = bits[len(PREAMBLE):HEADER_BITS + n]
    if int(bits[HEADER_BITS + n:end], 2) != crc8(body):
        raise CrcMismatch("CRC-8 check failed")
    return bits[HEADER_BITS:HEADER_BITS + n]


class SessionState(str, enum.Enum):
    DISCOVER = "discover"
    CALIBRATE = "calibrate"
    IDLE = "idle"
    TRANSMIT = "transmit"
    RECEIVE = "receive"
    DONE = "done"
    FAILED = "failed"


@dataclass(frozen=True)
class Endpoint:
    name: str
    params: NodeThermalParams = field(default_factory=preset)
    noise: NoiseModel | None = None
    sensor: SensorSpec = AMBIENT_SENSOR

    @property
    def idle_C(self) -> float:
        return self.params.idle_temp_C


@dataclass(frozen=True)
class LinkConfig:
    turnaround_guard_s: float | None = None
    max_retries: int = 2
    chunk_bits: int = MAX_PAYLOAD_BITS
    ping: ThermalPing = field(default_factory=ThermalPing)
    dt_s: float = DEFAULT_DT_S

    def __post_init__(self):
        if not 0 <= self.chunk_bits <= MAX_PAYLOAD_BITS:
            raise ValueError("chunk_bits must be in [0, 64]")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")


@dataclass(frozen=True)
class Event:
    endpoint: str
    kind: str
    start_s: float
    end_s: float


@dataclass
class SessionReport:
    delivered: str
    bits: int
    duration_s: float
    retries: int
    timing: SymbolTiming
    ping: PingResponse
    symbols_sent: int = 0
    raw_bit_errors: int = 0
    events: list[Event] = field(default_factory=list)
    states: list[tuple[float, str, SessionState]] = field(default_factory=list)

    @property
    def effective_bits_per_hour(self) -> float:
        return self.bits / self.duration_s * 3600.0 if self.duration_s > 0 else 0.0

    @property
    def raw_ber(self) -> float:
        return self.raw_bit_errors / self.symbols_sent if self.symbols_sent else 0.0

    def to_dict(self) -> dict:
        return {
            "delivered": self.delivered,
            "bits": self.bits,
            "duration_s": self.duration_s,
            "retries": self.retries,
            "effective_bits_per_hour": self.effective_bits_per_hour,
            "timing": self.timing.to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _chunks(message: str, size: int) -> list[str]:
    if not message:
        return [""]
    if size == 0:
        raise ValueError("chunk_bits must be positive for a non-empty message")
    return [message[i:i + size] for i in range(0, len(message), size)]


def run_session(a: Endpoint, b: Endpoint, channel: ChannelConfig, message: str,
                direction: Direction | str = Direction.A_TO_B, link: LinkConfig | None = None,
                t_offset_s: float = 0.0) -> tuple[str, SessionReport]:
    """Discover, calibrate, then deliver ``message`` in one direction."""
    link = link or LinkConfig()
    direction = Direction(direction)
    message = as_bits(message)
    tx, rx = (a, b) if direction is Direction.A_TO_B else (b, a)
    cfg = replace(channel, direction=direction)
    profile = link_profile(cfg)
    ping = link.ping
    states: list[tuple[float, str, SessionState]] = []
    events: list[Event] = []

    def mark(t, who, st):
        states.append((t_offset_s + t, who.name, st))

    def run(sched: WorkloadSchedule):
        return simulate(tx.params, profile, sched, rx_idle_C=rx.idle_C, dt_s=link.dt_s,
                        noise=rx.noise, sensor=rx.sensor).reading

    mark(0.0, tx, SessionState.DISCOVER)
    mark(0.0, rx, SessionState.RECEIVE)
    sched = send_ping(ping)
    events.append(Event(tx.name, "ping", t_offset_s, t_offset_s + ping.pulse_s))
    resp = detect_ping(run(sched), ping)
    if resp is None:
        mark(ping.duration_s, tx, SessionState.FAILED)
        raise NoLink(f"no ping response over {cfg.layout.value} at {cfg.distance_cm} cm")
    mark(ping.duration_s, rx, SessionState.CALIBRATE)
    timing = resp.timing
    guard = link.turnaround_guard_s if link.turnaround_guard_s is not None else timing.settle_s
    if guard < timing.settle_s:
        raise ValueError("turnaround_guard_s must cover the negotiated settle time")

    delivered = []
    retries = 0
    symbols = 0
    errors = 0
    for chunk in _chunks(message, link.chunk_bits):
        frame = encode_frame(chunk)
        attempts = 0
        while True:
            t0 = sched.duration_s
            mark(t0, tx, SessionState.TRANSMIT)
            sched = sched + modulate(frame, timing)
            events.append(Event(tx.name, "frame", t_offset_s + t0, t_offset_s + sched.duration_s))
            reading = run(sched)
            symbols += len(frame)
            got = demodulate(reading, timing, t0, len(frame))
            errors += sum(x != y for x, y in zip(got, frame))
            try:
                n = decode_header(got)
                need = frame_length(n)
                if need > len(frame):
                    raise FrameError  # receiver would wait for slots that never arrive
                payload = decode_frame(got[:need])
            except FrameError:
                attempts += 1
                if attempts > link.max_retries:
                    mark(sched.duration_s, tx, SessionState.FAILED)
                    raise LinkLost(f"frame undeliverable after {link.max_retries} retries") from None
                retries += 1
                # receiver NACKs with a reverse ping after the turnaround guard
                nack_start = sched.duration_s + guard
                events.append(Event(rx.name, "nack", t_offset_s + nack_start,
                                    t_offset_s + nack_start + ping.pulse_s))
                sched = sched.idle_padded(guard + ping.pulse_s + ping.quiet_s)
                continue
            delivered.append(payload)
            mark(sched.duration_s, tx, SessionState.IDLE)
            break
    mark(sched.duration_s, tx, SessionState.DONE)
    mark(sched.duration_s, rx, SessionState.DONE)
    out = "".join(delivered)
    report = SessionReport(out, len(out), sched.duration_s, retries, timing, resp,
                           symbols, errors, events, states)
    return out, report


def exchange(a: Endpoint, b: Endpoint, channel: ChannelConfig, message_ab: str, message_ba: str,
             link: LinkConfig | None = None) -> tuple[SessionReport, SessionReport]:
    """A sends, then after a turnaround guard B replies."""
    link = link or LinkConfig()
    _, first = run_session(a, b, channel, message_ab, Direction.A_TO_B, link)
    guard = link.turnaround_guard_s if link.turnaround_guard_s is not None else first.timing.settle_s
    _, second = run_session(a, b, channel, message_ba, Direction.B_TO_A, link,
                            t_offset_s=first.duration_s + guard)
    return first, second


def transmit_intervals_overlap(events: list[Event]) -> bool:
    """True if two different endpoints transmit at the same instant."""
    ev = sorted(events, key=lambda e: e.start_s)
    for i, e in enumerate(ev):
        for f in ev[i + 1:]:
            if f.start_s >= e.end_s:
                break
            if f.endpoint != e.endpoint:
                return True
    return False
