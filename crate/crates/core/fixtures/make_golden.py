#!/usr/bin/env python3
"""Writes protocol_golden.bin from a byte layout built with struct.pack.

File format: repeated records of [u16 LE length][datagram bytes].
"""
import struct

HELLO, SNAPSHOT, VEHICLE_INPUT, RIDER_INPUT, BYE = 1, 2, 3, 4, 5
ABOVE, BETWEEN, BELOW = 1, 2, 3
PRESTART, RUNNING, ENDED = 1, 2, 3


def header(msg_type, client_id, tick):
    return b"CVIL" + struct.pack("<BBBI", 1, msg_type, client_id, tick)


def snapshot(client_id, tick, veh, cyc, hand, phase):
    assert len(veh) == 5 and len(cyc) == 9
    return header(SNAPSHOT, client_id, tick) + struct.pack("<14d", *veh, *cyc) + bytes([hand, phase])


messages = [
    header(HELLO, 1, 0) + bytes([1]),
    snapshot(0, 7, [0.0] * 5, [0.0] * 9, BETWEEN, PRESTART),
    snapshot(
        0,
        1234,
        [12.5, -3.25, 0.5, 1.25, -0.0625],
        [17.5, -3.0, 0.25, 1.25, 0.1, 0.0666, 6.116, 125.0, 62.5],
        ABOVE,
        RUNNING,
    ),
    header(VEHICLE_INPUT, 1, 42) + struct.pack("<2d", 0.5, -0.125),
    header(RIDER_INPUT, 2, 43) + struct.pack("<5d", 100.0, 0.25, 0.5, 0.0666, -0.1222) + bytes([BELOW]),
    header(BYE, 3, 0),
]

expected_sizes = [12, 125, 125, 27, 52, 11]
assert [len(m) for m in messages] == expected_sizes

with open("protocol_golden.bin", "wb") as f:
    for m in messages:
        f.write(struct.pack("<H", len(m)))
        f.write(m)
