"""Walk through the heart-rate measurement wire codec on a few payloads.

The payload layout is the standard BLE Heart Rate Measurement notification a
Polar-style chest strap sends: one flags byte, the bpm value, then optional
energy and RR-interval fields (RR in 1/1024-second steps).
"""

from shesop.hrm_wire import (
    HrmFlags,
    HrmPacket,
    Truncated,
    decode_packet,
    encode_packet,
    rr_raw_to_ms,
)


def show(label, data):
    packet = decode_packet(data)
    rr = ", ".join(f"{v} (= {rr_raw_to_ms(v):.1f} ms)" for v in packet.rr_raw) or "-"
    print(f"{label:26s} {data.hex(' '):28s} hr={packet.heart_rate:<4d} rr: {rr}")
    assert encode_packet(packet) == data
    return packet


print("decoding real-shaped payloads (re-encoding is byte-identical):\n")
show("plain 8-bit hr", bytes([0x00, 0x3C]))
show("one beat", bytes([0x10, 0x3C, 0x00, 0x04]))
show("batched beats", bytes([0x10, 0x41, 0x33, 0x03, 0x34, 0x03]))
show("16-bit hr (tachycardia)", bytes([0x01, 0x90, 0x01]))
show("energy + contact", bytes([0x0E, 0x48, 0x96, 0x00]))

print("\nthe encoder picks the minimal hr width and upgrades when needed:")
packet = HrmPacket(flags=HrmFlags(), heart_rate=300)
encoded = encode_packet(packet)
print(f"  hr=300 with 8-bit flags -> {encoded.hex(' ')} (flag bit 0 set: {bool(encoded[0] & 1)})")

print("\nmalformed payloads raise typed errors instead of crashing:")
try:
    decode_packet(bytes([0x10, 0x3C, 0x00]))
except Truncated as e:
    print(f"  [0x10 0x3C 0x00] -> Truncated: {e}")
