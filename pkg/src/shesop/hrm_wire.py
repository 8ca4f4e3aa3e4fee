"""Bit-exact codec for BLE GATT Heart Rate Measurement payloads (0x2A37).

This is the notification format chest straps such as the Polar H7 emit:

    byte 0        flags
                    bit 0    HR value format (0 = uint8, 1 = uint16 LE)
                    bits 1-2 sensor contact status
                    bit 3    energy expended field present
                    bit 4    RR intervals present
                    bits 5-7 reserved (preserved verbatim)
    byte 1(+2)    heart rate, bpm
    optional      energy expended, uint16 LE, kJ
    optional      RR intervals, uint16 LE each, unit 1/1024 s, oldest first

RR fields consume every remaining octet, so a trailing odd octet is a
malformed payload.  Payloads longer than one default-MTU notification
(23 octets) still decode, but are counted when the caller supplies a
``DecodeDiagnostics``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field, replace
from enum import Enum

MAX_NOTIFICATION_LEN = 23

_FLAG_HR_16BIT = 0x01
_FLAG_CONTACT_MASK = 0x06
_FLAG_ENERGY = 0x08
_FLAG_RR = 0x10
_FLAG_RESERVED_MASK = 0xE0


class WireError(Exception):
    """Base class for codec failures."""


class Truncated(WireError):
    """Payload ends in the middle of a declared field."""


class TrailingBytes(WireError):
    """Payload has a leftover octet that is not a whole RR field."""


class InvariantViolation(WireError):
    """Packet fields contradict their own flags."""


class SensorContact(Enum):
    NOT_SUPPORTED = "not_supported"
    SUPPORTED_NO_CONTACT = "supported_no_contact"
    SUPPORTED_CONTACT = "supported_contact"


# 2-bit wire patterns; 0b01 is reserved by the characteristic definition
# and is mapped to NOT_SUPPORTED on decode.
_CONTACT_FROM_BITS = {
    0b00: SensorContact.NOT_SUPPORTED,
    0b01: SensorContact.NOT_SUPPORTED,
    0b10: SensorContact.SUPPORTED_NO_CONTACT,
    0b11: SensorContact.SUPPORTED_CONTACT,
}
_CONTACT_TO_BITS = {
    SensorContact.NOT_SUPPORTED: 0b00,
    SensorContact.SUPPORTED_NO_CONTACT: 0b10,
    SensorContact.SUPPORTED_CONTACT: 0b11,
}


@dataclass(frozen=True)
class HrmFlags:
    """Decoded flags byte; ``reserved_bits`` keeps bits 5-7 verbatim."""

    hr_16bit: bool = False
    sensor_contact: SensorContact = SensorContact.NOT_SUPPORTED
    energy_present: bool = False
    rr_present: bool = False
    reserved_bits: int = 0

    def to_byte(self) -> int:
        b = 0
        if self.hr_16bit:
            b |= _FLAG_HR_16BIT
        b |= _CONTACT_TO_BITS[self.sensor_contact] << 1
        if self.energy_present:
            b |= _FLAG_ENERGY
        if self.rr_present:
            b |= _FLAG_RR
        b |= (self.reserved_bits & 0x07) << 5
        return b

    @classmethod
    def from_byte(cls, b: int) -> "HrmFlags":
        return cls(
            hr_16bit=bool(b & _FLAG_HR_16BIT),
            sensor_contact=_CONTACT_FROM_BITS[(b & _FLAG_CONTACT_MASK) >> 1],
            energy_present=bool(b & _FLAG_ENERGY),
            rr_present=bool(b & _FLAG_RR),
            reserved_bits=(b & _FLAG_RESERVED_MASK) >> 5,
        )


@dataclass(frozen=True)
class HrmPacket:
    """One decoded heart-rate measurement notification.

    ``rr_raw`` values are in 1/1024-second units, oldest beat first.
    """

    flags: HrmFlags = field(default_factory=HrmFlags)
    heart_rate: int = 0
    energy_expended: int | None = None
    rr_raw: tuple[int, ...] = ()

    def validate(self) -> None:
        """Raise InvariantViolation unless flags and fields agree."""
        if self.flags.energy_present != (self.energy_expended is not None):
            raise InvariantViolation("energy flag and energy field disagree")
        if self.flags.rr_present != bool(self.rr_raw):
            raise InvariantViolation("rr flag and rr list disagree")
        if not 0 <= self.heart_rate <= 0xFFFF:
            raise InvariantViolation(f"heart rate {self.heart_rate} out of uint16 range")
        if not self.flags.hr_16bit and self.heart_rate > 0xFF:
            raise InvariantViolation("8-bit format cannot hold heart rate > 255")
        if self.energy_expended is not None and not 0 <= self.energy_expended <= 0xFFFF:
            raise InvariantViolation("energy expended out of uint16 range")
        for rr in self.rr_raw:
            if not 0 <= rr <= 0xFFFF:
                raise InvariantViolation(f"rr value {rr} out of uint16 range")

    def rr_ms(self) -> list[float]:
        return [rr_raw_to_ms(v) for v in self.rr_raw]


@dataclass
class DecodeDiagnostics:
    """Optional per-caller counters; decode itself stays stateless."""

    packets: int = 0
    oversize_packets: int = 0


def decode_packet(data: bytes, diagnostics: DecodeDiagnostics | None = None) -> HrmPacket:
    """Decode one Heart Rate Measurement payload.

    Raises Truncated when the buffer ends mid-field and TrailingBytes when
    a single odd octet is left over after the declared fields.
    """
    if len(data) < 1:
        raise Truncated("empty payload")
    flags = HrmFlags.from_byte(data[0])
    offset = 1

    if flags.hr_16bit:
        if len(data) < offset + 2:
            raise Truncated("payload ends inside 16-bit heart rate")
        heart_rate = struct.unpack_from("<H", data, offset)[0]
        offset += 2
    else:
        if len(data) < offset + 1:
            raise Truncated("payload ends before heart rate")
        heart_rate = data[offset]
        offset += 1

    energy = None
    if flags.energy_present:
        if len(data) < offset + 2:
            raise Truncated("payload ends inside energy expended")
        energy = struct.unpack_from("<H", data, offset)[0]
        offset += 2

    rr_raw: tuple[int, ...] = ()
    remaining = len(data) - offset
    if flags.rr_present:
        if remaining < 2:
            raise Truncated("rr flag set but no whole rr field follows")
        if remaining % 2:
            raise TrailingBytes(f"{remaining} octets cannot hold whole rr fields")
        rr_raw = struct.unpack_from(f"<{remaining // 2}H", data, offset)
    elif remaining:
        raise TrailingBytes(f"{remaining} unexpected octets after declared fields")

    if diagnostics is not None:
        diagnostics.packets += 1
        if len(data) > MAX_NOTIFICATION_LEN:
            diagnostics.oversize_packets += 1

    return HrmPacket(flags=flags, heart_rate=heart_rate, energy_expended=energy, rr_raw=rr_raw)


def encode_packet(packet: HrmPacket) -> bytes:
    """Encode a packet; selects the 16-bit HR form automatically when needed.

    decode_packet(encode_packet(p)) == p for every valid packet, except that
    an 8-bit flag is upgraded in the output when heart_rate > 255.
    """
    flags = packet.flags
    if packet.heart_rate > 0xFF and not flags.hr_16bit:
        flags = replace(flags, hr_16bit=True)
        packet = replace(packet, flags=flags)
    packet.validate()

    out = bytearray([flags.to_byte()])
    if flags.hr_16bit:
        out += struct.pack("<H", packet.heart_rate)
    else:
        out.append(packet.heart_rate)
    if packet.energy_expended is not None:
        out += struct.pack("<H", packet.energy_expended)
    for rr in packet.rr_raw:
        out += struct.pack("<H", rr)
    return bytes(out)


def rr_raw_to_ms(raw: int) -> float:
    """Convert a 1/1024-second RR value to milliseconds (1024 -> 1000.0)."""
    if not 0 <= raw <= 0xFFFF:
        raise InvariantViolation(f"rr value {raw} out of uint16 range")
    return raw * 1000.0 / 1024.0


def ms_to_rr_raw(ms: float) -> int:
    """Inverse of rr_raw_to_ms with round-to-nearest quantization."""
    raw = round(ms * 1024.0 / 1000.0)
    return min(max(raw, 0), 0xFFFF)
