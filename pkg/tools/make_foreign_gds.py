#!/usr/bin/env python3
"""Generate tests/data/foreign_boundary.gds with an unrelated GDSII writer.

The byte layout below follows gdspy's serializer (GdsLibrary.write_gds,
Cell.to_gds, PolygonSet.to_gds, _eight_byte_real), so the fixture exercises
the reader against records framed by an independent implementation: real
timestamps in BGNLIB/BGNSTR, gdspy's excess-64 float encoding, and BOUNDARY
elements packed in its single-struct style.
"""

from __future__ import annotations

import datetime
import struct
from pathlib import Path

import numpy

OUT = Path(__file__).resolve().parent.parent / "tests" / "data" / "foreign_boundary.gds"

UNIT = 1e-6
PRECISION = 1e-9
STAMP = datetime.datetime(2025, 11, 5, 12, 0, 0)

POLYGONS = {
    "foreign_rect": [
        (1, 0, [(0.0, -0.25), (42.0, -0.25), (42.0, 0.25), (0.0, 0.25)]),
    ],
    "foreign_tri": [
        (47, 0, [(0.0, 0.0), (10.0, 0.0), (5.0, 8.0)]),
        (1, 0, [(-3.0, -3.0), (3.0, -3.0), (3.0, 3.0), (-3.0, 3.0)]),
    ],
}


def eight_byte_real(value):
    # gdspy _eight_byte_real, verbatim
    if value == 0:
        return b"\x00\x00\x00\x00\x00\x00\x00\x00"
    if value < 0:
        byte1 = 0x80
        value = -value
    else:
        byte1 = 0x00
    fexp = numpy.log2(value) / 4
    exponent = int(numpy.ceil(fexp))
    if fexp == exponent:
        exponent += 1
    mantissa = int(value * 16.0 ** (14 - exponent))
    byte1 += exponent + 64
    byte2 = mantissa // 281474976710656
    short3 = (mantissa % 281474976710656) // 4294967296
    long4 = mantissa % 4294967296
    return struct.pack(">HHL", byte1 * 256 + byte2, short3, long4)


def polygon_to_gds(layer, datatype, points, multiplier):
    # gdspy PolygonSet.to_gds, small-polygon branch
    data = [
        struct.pack(
            ">4Hh2Hh2H",
            4,
            0x0800,
            6,
            0x0D02,
            layer,
            6,
            0x0E02,
            datatype,
            12 + 8 * len(points),
            0x1003,
        )
    ]
    xy = numpy.round(numpy.array(points) * multiplier).astype(">i4")
    data.append(xy.tobytes())
    data.append(xy[0].tobytes())
    data.append(struct.pack(">2H", 4, 0x1100))
    return b"".join(data)


def cell_to_gds(name, polygons, multiplier, now):
    # gdspy Cell.to_gds framing
    if len(name) % 2 != 0:
        name = name + "\0"
    out = [
        struct.pack(
            ">2H12h2H",
            28,
            0x0502,
            now.year, now.month, now.day, now.hour, now.minute, now.second,
            now.year, now.month, now.day, now.hour, now.minute, now.second,
            4 + len(name),
            0x0606,
        ),
        name.encode("ascii"),
    ]
    for layer, datatype, pts in polygons:
        out.append(polygon_to_gds(layer, datatype, pts, multiplier))
    out.append(struct.pack(">2H", 4, 0x0700))
    return b"".join(out)


def main():
    now = STAMP
    libname = "foreignlib"
    name = libname if len(libname) % 2 == 0 else libname + "\0"
    out = [
        struct.pack(
            ">5H12h2H",
            6,
            0x0002,
            0x0258,
            28,
            0x0102,
            now.year, now.month, now.day, now.hour, now.minute, now.second,
            now.year, now.month, now.day, now.hour, now.minute, now.second,
            4 + len(name),
            0x0206,
        ),
        name.encode("ascii"),
        struct.pack(">2H", 20, 0x0305),
        eight_byte_real(PRECISION / UNIT),
        eight_byte_real(PRECISION),
    ]
    for cname, polys in POLYGONS.items():
        out.append(cell_to_gds(cname, polys, UNIT / PRECISION, now))
    out.append(struct.pack(">2H", 4, 0x0400))
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_bytes(b"".join(out))
    print(f"wrote {OUT} ({OUT.stat().st_size} bytes)")


if __name__ == "__main__":
    main()
