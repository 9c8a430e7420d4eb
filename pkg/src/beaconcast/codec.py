"""Position-report codec for the SSID field of Wi-Fi beacon frames.

An SSID can carry up to 32 bytes and is received by ordinary scans without
association, which makes it a free broadcast payload. The codec packs a
position report into a fixed 23-byte little-endian body, appends a CRC-8
integrity byte and base64-encodes the 24 bytes into exactly 32 printable
characters, so the SSID stays a valid network name for any firmware.

Wire format of the body (little-endian, 23 bytes):

    offset  size  field
    0       4     drone_id        uint32
    4       4     latitude        int32, 1e-7 degree
    8       4     longitude       int32, 1e-7 degree
    12      2     altitude        int16, decimeters above mission datum
    14      2     velocity_east   int16, cm/s
    16      2     velocity_north  int16, cm/s
    18      2     velocity_up     int16, cm/s
    20      2     timestamp_ms    uint16, milliseconds modulo 65536
    22      1     sequence        uint8, wrapping counter

Byte 23 is CRC-8 over bytes 0..22 (polynomial 0x07, init 0x00, no
reflection, no final xor).
"""

from __future__ import annotations

import base64
import string
import struct
from dataclasses import dataclass

from .errors import (
    CrcMismatchError,
    EncodingError,
    PayloadAlphabetError,
    PayloadLengthError,
)

_BODY = struct.Struct("<IiihhhhHB")
assert _BODY.size == 23

SSID_LENGTH = 32
_B64_ALPHABET = frozenset(string.ascii_uppercase + string.ascii_lowercase
                          + string.digits + "+/")

_LAT_LIMIT = 900_000_000    # 90 degrees in 1e-7 steps
_LON_LIMIT = 1_800_000_000  # 180 degrees in 1e-7 steps


def _build_crc_table(poly: int) -> tuple[int, ...]:
    table = []
    for byte in range(256):
        reg = byte
        for _ in range(8):
            reg = ((reg << 1) ^ poly) & 0xFF if reg & 0x80 else (reg << 1) & 0xFF
        table.append(reg)
    return tuple(table)


_CRC_TABLE = _build_crc_table(0x07)


def crc8(data: bytes) -> int:
    """CRC-8 with polynomial 0x07 and init 0x00 (table-driven)."""
    reg = 0
    for byte in data:
        reg = _CRC_TABLE[reg ^ byte]
    return reg


@dataclass(frozen=True)
class PositionReport:
    """One UAV position/velocity message, all fields integer fixed-point."""

    drone_id: int
    latitude: int        # 1e-7 degree, range +-90 degrees
    longitude: int       # 1e-7 degree, range +-180 degrees
    altitude: int = 0    # decimeters relative to the mission datum
    velocity_east: int = 0    # cm/s
    velocity_north: int = 0   # cm/s
    velocity_up: int = 0      # cm/s
    timestamp_ms: int = 0     # milliseconds modulo 65536
    sequence: int = 0         # wrapping message counter

    def __post_init__(self) -> None:
        checks = (
            ("drone_id", self.drone_id, 0, 0xFFFFFFFF),
            ("latitude", self.latitude, -_LAT_LIMIT, _LAT_LIMIT),
            ("longitude", self.longitude, -_LON_LIMIT, _LON_LIMIT),
            ("altitude", self.altitude, -32768, 32767),
            ("velocity_east", self.velocity_east, -32768, 32767),
            ("velocity_north", self.velocity_north, -32768, 32767),
            ("velocity_up", self.velocity_up, -32768, 32767),
            ("timestamp_ms", self.timestamp_ms, 0, 0xFFFF),
            ("sequence", self.sequence, 0, 0xFF),
        )
        for name, value, lo, hi in checks:
            if int(value) != value:
                raise EncodingError(f"{name} must be an integer")
            if not lo <= value <= hi:
                raise EncodingError(f"{name}={value} outside [{lo}, {hi}]")


@dataclass(frozen=True)
class BeaconPayload:
    """A 32-character SSID string carrying one encoded position report."""

    ssid_text: str

    def __post_init__(self) -> None:
        if len(self.ssid_text) != SSID_LENGTH:
            raise PayloadLengthError(
                f"SSID payload must be {SSID_LENGTH} characters, "
                f"got {len(self.ssid_text)}")
        bad = set(self.ssid_text) - _B64_ALPHABET
        if bad:
            raise PayloadAlphabetError(
                f"SSID payload contains non-base64 characters: {sorted(bad)!r}")


def encode(report: PositionReport) -> BeaconPayload:
    """Pack a report into its 32-character SSID payload.

    24 bytes (23-byte body plus CRC-8) map to exactly 32 base64 characters
    with no padding.
    """
    body = _BODY.pack(report.drone_id, report.latitude, report.longitude,
                      report.altitude, report.velocity_east,
                      report.velocity_north, report.velocity_up,
                      report.timestamp_ms, report.sequence)
    raw = body + bytes([crc8(body)])
    return BeaconPayload(base64.b64encode(raw).decode("ascii"))


def decode(payload: BeaconPayload | str) -> PositionReport:
    """Recover the report from an SSID payload, verifying the CRC.

    Accepts either a validated :class:`BeaconPayload` or a raw string.
    Raises :class:`PayloadLengthError` or :class:`PayloadAlphabetError` for
    SSIDs that cannot be ours (ordinary network names), and
    :class:`CrcMismatchError` for well-formed but corrupted payloads.
    """
    if isinstance(payload, str):
        payload = BeaconPayload(payload)
    raw = base64.b64decode(payload.ssid_text, validate=True)
    body, crc = raw[:-1], raw[-1]
    if crc8(body) != crc:
        raise CrcMismatchError("SSID payload failed its integrity check")
    fields = _BODY.unpack(body)
    return PositionReport(*fields)
