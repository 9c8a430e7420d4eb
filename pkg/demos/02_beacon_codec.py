"""
Position reports inside beacon SSIDs
====================================

Packs a position report into the 32-character network-name field of a
Wi-Fi beacon and shows that any single corrupted character is caught by
the checksum.
"""

from beaconcast import CrcMismatchError, PositionReport, decode, encode

# A report: fixed-point degrees (1e-7 deg), meters, cm/s, wrapping
# timestamp and sequence counter. 23 bytes packed plus a CRC-8, base64
# encoded to exactly 32 SSID characters.
report = PositionReport(
    drone_id=42,
    latitude=453_123_456,      # 45.3123456 degrees north
    longitude=-96_654_321,     # 9.6654321 degrees west
    altitude=120,
    velocity_east=-150,
    velocity_north=220,
    velocity_up=5,
    timestamp_ms=51_000,
    sequence=7,
)
payload = encode(report)
print(f"SSID: {payload.ssid_text}")

# Decoding restores every field exactly.
restored = decode(payload)
print(f"round trip exact: {restored == report}")

# Corrupt one character, as a flaky receiver might: the CRC rejects it.
ssid = payload.ssid_text
corrupted = ssid[:10] + ("B" if ssid[10] != "B" else "C") + ssid[11:]
try:
    decode(corrupted)
except CrcMismatchError as exc:
    print(f"single-character corruption detected: {exc}")

# The all-zero report is the degenerate landmark: 23 zero bytes have a
# zero checksum, and base64 of zeros is all 'A'.
print(f"zero report SSID: {encode(PositionReport(0, 0, 0)).ssid_text}")
