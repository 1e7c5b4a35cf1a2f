#!/usr/bin/env python3
"""Remote-ID broadcast payloads and the broadcast schedule.

Three payload formats were flown:
    M1  2 raw bytes, e.g. FF 31 for "FF1" (hex pair + one ASCII byte)
    M2  the id as a 3-character ASCII string
    M3  "<id> is the UAV ID number that is being used to identify this UAV"
"""
import logging
import re
import string
from dataclasses import dataclass
from enum import Enum
from typing import List, Sequence

import config
from errors import IdNotEncodable, MalformedPayload

log = logging.getLogger(__name__)

M3_SUFFIX = " is the UAV ID number that is being used to identify this UAV"
MAX_ID_LENGTH = 16
_M1_ID = re.compile(r'^[0-9A-F]{2}[!-~]$')
_GAP_TOLERANCE_S = 1e-9


class MessageFormat(str, Enum):
    M1 = 'M1'
    M2 = 'M2'
    M3 = 'M3'


@dataclass(frozen=True)
class UavId:
    id: str

    def __post_init__(self):
        if not self.id:
            raise ValueError("UAV id is empty")
        if len(self.id) > MAX_ID_LENGTH:
            raise ValueError(f"UAV id longer than {MAX_ID_LENGTH} characters: {self.id!r}")
        # the M3 sentence is split on the first space, so ids carry none
        if any(ch not in string.printable or ch in string.whitespace for ch in self.id):
            raise ValueError(f"UAV id must be printable ASCII without whitespace: {self.id!r}")

    def __str__(self):
        return self.id


@dataclass(frozen=True)
class RemoteIdMessage:
    format: MessageFormat
    payload: bytes
    uav_id: UavId

    def hex(self):
        return self.payload.hex(' ').upper()


@dataclass(frozen=True)
class BroadcastSchedule:
    interval_s: float = config.MESSAGE_INTERVAL_S
    window_size: int = config.WINDOW_SIZE

    def __post_init__(self):
        if self.interval_s < config.MESSAGE_INTERVAL_S:
            raise ValueError(
                f"interval {self.interval_s} s below the {config.MESSAGE_INTERVAL_S} s module minimum")
        if self.window_size < 1:
            raise ValueError("window_size must be >= 1")

    @property
    def dwell_requirement_s(self):
        """Time the UAV must hold still to fill one averaging window."""
        return self.interval_s * self.window_size


@dataclass(frozen=True)
class ScheduleCheck:
    ok: bool
    violations: List[int]  # index of the later timestamp of each short gap


def encode(uav_id: UavId, fmt) -> RemoteIdMessage:
    fmt = MessageFormat(fmt)
    text = uav_id.id
    if fmt is MessageFormat.M1:
        if not _M1_ID.match(text):
            raise IdNotEncodable(
                f"M1 needs an id of two upper-case hex digits plus one ASCII character, got {text!r}")
        payload = bytes([int(text[:2], 16), ord(text[2])])
    elif fmt is MessageFormat.M2:
        if len(text) != 3:
            raise IdNotEncodable(f"M2 carries exactly 3 characters, got {text!r}")
        payload = text.encode('ascii')
    else:
        payload = (text + M3_SUFFIX).encode('ascii')
    return RemoteIdMessage(format=fmt, payload=payload, uav_id=uav_id)


def decode(payload: bytes, fmt) -> UavId:
    fmt = MessageFormat(fmt)
    try:
        if fmt is MessageFormat.M1:
            if len(payload) != 2:
                raise MalformedPayload(f"M1 payload must be 2 bytes, got {len(payload)}")
            text = f"{payload[0]:02X}" + bytes(payload[1:]).decode('ascii')
        elif fmt is MessageFormat.M2:
            if len(payload) != 3:
                raise MalformedPayload(f"M2 payload must be 3 bytes, got {len(payload)}")
            text = bytes(payload).decode('ascii')
        else:
            sentence = bytes(payload).decode('ascii')
            text, sep, rest = sentence.partition(' ')
            if not sep or ' ' + rest != M3_SUFFIX:
                raise MalformedPayload(f"not an M3 sentence: {sentence!r}")
        return UavId(text)
    except (UnicodeDecodeError, ValueError) as exc:
        if isinstance(exc, MalformedPayload):
            raise
        raise MalformedPayload(str(exc)) from exc


def frame_size(message: RemoteIdMessage, overhead_bytes=config.FRAME_OVERHEAD_BYTES) -> int:
    """On-air size for airtime accounting; the overhead never enters the payload."""
    return len(message.payload) + overhead_bytes


def validate_schedule(timestamps_s: Sequence[float],
                      interval_s=config.MESSAGE_INTERVAL_S) -> ScheduleCheck:
    stamps = sorted(timestamps_s)
    violations = [i for i in range(1, len(stamps))
                  if stamps[i] - stamps[i - 1] < interval_s - _GAP_TOLERANCE_S]
    if violations:
        log.warning("%d broadcast gaps shorter than %.1f s", len(violations), interval_s)
    return ScheduleCheck(ok=not violations, violations=violations)
