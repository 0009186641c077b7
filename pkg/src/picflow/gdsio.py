"""Minimal GDSII stream reader/writer for planar photonic layouts.

Supports the record subset the layout engine needs: BOUNDARY polygons, PATH
routes, and SREF placements with rotation/reflection. All records use 4-byte
big-endian headers; UNITS is fixed at 1e-3 user units and 1e-9 m database
units, i.e. coordinates snap to a 1 nm grid. Emission is canonical — a fixed
zero timestamp, structures sorted by name, elements in stored order — so
``emit(read(emit(x)))`` is byte-identical to ``emit(x)``.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

USER_UNIT = 1e-3  # user units per database unit
DB_UNIT_M = 1e-9  # database unit in metres (1 nm grid)
_DB_PER_UM = 1000  # database units per micrometre
_INT32_MAX = 2**31 - 1

# record type bytes (type << 8 | data format)
_HEADER = 0x0002
_BGNLIB = 0x0102
_LIBNAME = 0x0206
_UNITS = 0x0305
_ENDLIB = 0x0400
_BGNSTR = 0x0502
_STRNAME = 0x0606
_ENDSTR = 0x0700
_BOUNDARY = 0x0800
_PATH = 0x0900
_SREF = 0x0A00
_LAYER = 0x0D02
_DATATYPE = 0x0E02
_WIDTH = 0x0F03
_XY = 0x1003
_ENDEL = 0x1100
_SNAME = 0x1206
_STRANS = 0x1A01
_MAG = 0x1B05
_ANGLE = 0x1C05

_GDS_VERSION = 600
_ZERO_TIME = (0,) * 12


class MalformedRecord(ValueError):
    """The byte stream violates the GDSII record grammar."""

    def __init__(self, message: str, offset: int, record_type: int | None = None):
        self.offset = offset
        self.record_type = record_type
        tag = f" record 0x{record_type:04X}" if record_type is not None else ""
        super().__init__(f"offset {offset}:{tag} {message}")


class CoordinateOverflow(ValueError):
    """A coordinate exceeds the signed 32-bit database-unit range."""


@dataclass(frozen=True)
class Boundary:
    layer: int
    datatype: int
    xy: tuple[tuple[float, float], ...]  # micrometres, closed implicitly


@dataclass(frozen=True)
class GdsPath:
    layer: int
    datatype: int
    width: float  # micrometres
    xy: tuple[tuple[float, float], ...]


@dataclass(frozen=True)
class Sref:
    structure: str
    origin: tuple[float, float]
    angle: float = 0.0  # degrees counter-clockwise
    reflect: bool = False  # mirror across x axis before rotation


@dataclass(frozen=True)
class Structure:
    name: str
    boundaries: tuple[Boundary, ...] = ()
    paths: tuple[GdsPath, ...] = ()
    srefs: tuple[Sref, ...] = ()


@dataclass(frozen=True)
class Library:
    name: str
    structures: tuple[Structure, ...] = ()

    def structure(self, name: str) -> Structure:
        for s in self.structures:
            if s.name == name:
                return s
        raise KeyError(name)


# ---------------------------------------------------------------------------
# 8-byte excess-64 floating point


def _to_real8(value: float) -> bytes:
    if value == 0:
        return b"\x00" * 8
    sign = 0x80 if value < 0 else 0
    mant = abs(value)
    exp = 64
    while mant >= 1:
        mant /= 16
        exp += 1
    while mant < 1 / 16:
        mant *= 16
        exp -= 1
    bits = int(mant * (1 << 56))
    return struct.pack(">BB", sign | exp, 0)[:1] + int.to_bytes(bits, 7, "big")


def _from_real8(raw: bytes) -> float:
    if raw == b"\x00" * 8:
        return 0.0
    sign = -1.0 if raw[0] & 0x80 else 1.0
    exp = (raw[0] & 0x7F) - 64
    mant = int.from_bytes(raw[1:], "big") / (1 << 56)
    return sign * mant * 16.0**exp


# ---------------------------------------------------------------------------
# emission


def _to_db(um: float) -> int:
    v = round(um * _DB_PER_UM)
    if abs(v) > _INT32_MAX:
        raise CoordinateOverflow(f"{um} um exceeds 32-bit database-unit range")
    return v


def _rec(rtype: int, payload: bytes = b"") -> bytes:
    return struct.pack(">HH", len(payload) + 4, rtype) + payload


def _str_payload(text: str) -> bytes:
    raw = text.encode("ascii")
    return raw + b"\x00" if len(raw) % 2 else raw


def _xy_payload(xy) -> bytes:
    return b"".join(struct.pack(">ii", _to_db(x), _to_db(y)) for x, y in xy)


def emit_gdsii(lib: Library) -> bytes:
    """Serialize the library; canonical bytes for a given structural value."""
    out = [
        _rec(_HEADER, struct.pack(">h", _GDS_VERSION)),
        _rec(_BGNLIB, struct.pack(">12h", *_ZERO_TIME)),
        _rec(_LIBNAME, _str_payload(lib.name)),
        _rec(_UNITS, _to_real8(USER_UNIT) + _to_real8(DB_UNIT_M)),
    ]
    for s in sorted(lib.structures, key=lambda s: s.name):
        out.append(_rec(_BGNSTR, struct.pack(">12h", *_ZERO_TIME)))
        out.append(_rec(_STRNAME, _str_payload(s.name)))
        for b in s.boundaries:
            pts = list(b.xy)
            if pts[0] != pts[-1]:
                pts.append(pts[0])  # GDSII boundaries repeat the first vertex
            out += [
                _rec(_BOUNDARY),
                _rec(_LAYER, struct.pack(">h", b.layer)),
                _rec(_DATATYPE, struct.pack(">h", b.datatype)),
                _rec(_XY, _xy_payload(pts)),
                _rec(_ENDEL),
            ]
        for p in s.paths:
            out += [
                _rec(_PATH),
                _rec(_LAYER, struct.pack(">h", p.layer)),
                _rec(_DATATYPE, struct.pack(">h", p.datatype)),
                _rec(_WIDTH, struct.pack(">i", _to_db(p.width))),
                _rec(_XY, _xy_payload(p.xy)),
                _rec(_ENDEL),
            ]
        for r in s.srefs:
            out += [_rec(_SREF), _rec(_SNAME, _str_payload(r.structure))]
            if r.reflect or r.angle != 0.0:
                out.append(_rec(_STRANS, struct.pack(">H", 0x8000 if r.reflect else 0)))
                if r.angle != 0.0:
                    out.append(_rec(_ANGLE, _to_real8(r.angle)))
            out += [_rec(_XY, _xy_payload([r.origin])), _rec(_ENDEL)]
        out.append(_rec(_ENDSTR))
    out.append(_rec(_ENDLIB))
    return b"".join(out)


# ---------------------------------------------------------------------------
# parsing


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def next(self) -> tuple[int, bytes, int]:
        off = self.pos
        if off >= len(self.data):
            raise MalformedRecord("unexpected end of stream", off)
        if off + 4 > len(self.data):
            raise MalformedRecord("truncated record header", off)
        size, rtype = struct.unpack(">HH", self.data[off : off + 4])
        if size < 4 or size % 2:
            raise MalformedRecord(f"invalid record length {size}", off, rtype)
        if off + size > len(self.data):
            raise MalformedRecord("record extends past end of stream", off, rtype)
        self.pos = off + size
        return rtype, self.data[off + 4 : off + size], off


def _parse_string(payload: bytes) -> str:
    return payload.rstrip(b"\x00").decode("ascii")


def _parse_xy(payload: bytes, offset: int) -> tuple[tuple[float, float], ...]:
    if len(payload) % 8:
        raise MalformedRecord("XY payload not a multiple of 8 bytes", offset, _XY)
    pts = []
    for i in range(0, len(payload), 8):
        x, y = struct.unpack(">ii", payload[i : i + 8])
        pts.append((x / _DB_PER_UM, y / _DB_PER_UM))
    return tuple(pts)


def _parse_element(first: int, r: _Reader, off0: int):
    layer = datatype = 0
    width = 0.0
    xy: tuple[tuple[float, float], ...] = ()
    sname = ""
    angle = 0.0
    reflect = False
    while True:
        rtype, payload, off = r.next()
        if rtype == _ENDEL:
            break
        if rtype == _LAYER:
            (layer,) = struct.unpack(">h", payload)
        elif rtype == _DATATYPE:
            (datatype,) = struct.unpack(">h", payload)
        elif rtype == _WIDTH:
            (w,) = struct.unpack(">i", payload)
            width = w / _DB_PER_UM
        elif rtype == _XY:
            xy = _parse_xy(payload, off)
        elif rtype == _SNAME:
            sname = _parse_string(payload)
        elif rtype == _STRANS:
            (bits,) = struct.unpack(">H", payload)
            reflect = bool(bits & 0x8000)
        elif rtype == _ANGLE:
            angle = _from_real8(payload)
        elif rtype == _MAG:
            mag = _from_real8(payload)
            if abs(mag - 1.0) > 1e-12:
                raise MalformedRecord("magnification other than 1 unsupported", off, rtype)
        else:
            raise MalformedRecord("unexpected record inside element", off, rtype)
    if first == _BOUNDARY:
        if len(xy) < 4:
            raise MalformedRecord("boundary needs >= 4 points", off0, _BOUNDARY)
        pts = xy[:-1] if xy[0] == xy[-1] else xy
        return Boundary(layer, datatype, pts)
    if first == _PATH:
        if len(xy) < 2:
            raise MalformedRecord("path needs >= 2 points", off0, _PATH)
        return GdsPath(layer, datatype, width, xy)
    if first == _SREF:
        if not sname or len(xy) != 1:
            raise MalformedRecord("SREF needs SNAME and one XY point", off0, _SREF)
        return Sref(sname, xy[0], angle, reflect)
    raise MalformedRecord("unknown element", off0, first)


def read_gdsii(data: bytes) -> Library:
    """Parse a GDSII stream into the structural model used by the emitter."""
    r = _Reader(data)
    rtype, payload, off = r.next()
    if rtype != _HEADER:
        raise MalformedRecord("stream must start with HEADER", off, rtype)
    rtype, _, off = r.next()
    if rtype != _BGNLIB:
        raise MalformedRecord("expected BGNLIB", off, rtype)
    rtype, payload, off = r.next()
    if rtype != _LIBNAME:
        raise MalformedRecord("expected LIBNAME", off, rtype)
    libname = _parse_string(payload)
    rtype, payload, off = r.next()
    if rtype != _UNITS:
        raise MalformedRecord("expected UNITS", off, rtype)
    user, db = _from_real8(payload[:8]), _from_real8(payload[8:])
    if not (math.isclose(user, USER_UNIT) and math.isclose(db, DB_UNIT_M)):
        raise MalformedRecord(
            f"unsupported units (user={user}, db={db} m)", off, _UNITS
        )

    structures: list[Structure] = []
    while True:
        rtype, payload, off = r.next()
        if rtype == _ENDLIB:
            break
        if rtype != _BGNSTR:
            raise MalformedRecord("expected BGNSTR or ENDLIB", off, rtype)
        rtype, payload, off = r.next()
        if rtype != _STRNAME:
            raise MalformedRecord("expected STRNAME", off, rtype)
        name = _parse_string(payload)
        boundaries: list[Boundary] = []
        paths: list[GdsPath] = []
        srefs: list[Sref] = []
        while True:
            rtype, payload, off = r.next()
            if rtype == _ENDSTR:
                break
            if rtype in (_BOUNDARY, _PATH, _SREF):
                el = _parse_element(rtype, r, off)
                if isinstance(el, Boundary):
                    boundaries.append(el)
                elif isinstance(el, GdsPath):
                    paths.append(el)
                else:
                    srefs.append(el)
            else:
                raise MalformedRecord("unexpected record inside structure", off, rtype)
        structures.append(Structure(name, tuple(boundaries), tuple(paths), tuple(srefs)))
    return Library(libname, tuple(structures))


def transform_point(pt: tuple[float, float], ref: Sref) -> tuple[float, float]:
    """Apply an SREF's reflection, rotation, and translation to a point."""
    x, y = pt
    if ref.reflect:
        y = -y
    a = math.radians(ref.angle)
    c, s = math.cos(a), math.sin(a)
    return (ref.origin[0] + x * c - y * s, ref.origin[1] + x * s + y * c)
