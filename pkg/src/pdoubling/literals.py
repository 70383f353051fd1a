"""Parsers for the body, lattice and witness literals used on the command line.

    body     := ball:R | box:w1,w2,... | cross:R | sum(body,body)
    lattice  := lattice:Zn | lattice:A2 | lattice:D4 | lattice:E8 | lattice:matrix[a,b;c,d]
    witness  := gauss:s | autocorr:body | cms:seed=..,J=..,scale=.. | latdir:lattice,R=..
"""
from __future__ import annotations

import re
from fractions import Fraction

from .geometry import Ball, Box, ConvexBody, CrossPolytope, GeometryError, minkowski_sum
from .lattices import Lattice, LatticeError, catalog_entry

_NUM = re.compile(r"[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?(/\d+)?")


class ParseError(ValueError):
    def __init__(self, message: str, text: str, pos: int):
        self.text, self.pos = text, pos
        super().__init__(f"{message} at position {pos}\n  {text}\n  {' ' * pos}^")


class _Cursor:
    def __init__(self, text: str):
        self.text = text.strip()
        self.pos = 0

    def error(self, msg):
        raise ParseError(msg, self.text, self.pos)

    def peek(self, s: str) -> bool:
        return self.text.startswith(s, self.pos)

    def take(self, s: str):
        if not self.peek(s):
            self.error(f"expected {s!r}")
        self.pos += len(s)

    def number(self) -> Fraction:
        m = _NUM.match(self.text, self.pos)
        if not m:
            self.error("expected a number")
        self.pos = m.end()
        return Fraction(m.group(0))

    def word(self) -> str:
        m = re.compile(r"[A-Za-z_][A-Za-z_0-9]*").match(self.text, self.pos)
        if not m:
            self.error("expected a name")
        self.pos = m.end()
        return m.group(0)

    def starts_number(self) -> bool:
        return _NUM.match(self.text, self.pos) is not None

    def done(self):
        if self.pos != len(self.text):
            self.error("unexpected trailing input")


def _body(cur: _Cursor, dim: int | None) -> ConvexBody:
    start = cur.pos
    try:
        if cur.peek("sum("):
            cur.take("sum(")
            a = _body(cur, dim)
            cur.take(",")
            b = _body(cur, dim)
            cur.take(")")
            return minkowski_sum(a, b)
        kind = cur.word()
        cur.take(":")
        if kind == "box":
            ws = [cur.number()]
            while cur.peek(",") and _NUM.match(cur.text, cur.pos + 1):
                cur.take(",")
                ws.append(cur.number())
            if len(ws) == 1 and dim is not None and dim > 1:
                ws = ws * dim
            if dim is not None and len(ws) != dim:
                cur.pos = start
                cur.error(f"box has {len(ws)} half-widths but dimension is {dim}")
            return Box(tuple(ws))
        if kind in ("ball", "cross"):
            r = cur.number()
            if dim is None:
                cur.pos = start
                cur.error(f"{kind} needs a dimension (--dim)")
            return Ball(dim, r) if kind == "ball" else CrossPolytope(dim, r)
        cur.pos = start
        cur.error(f"unknown body kind {kind!r}")
    except GeometryError as exc:
        raise ParseError(str(exc), cur.text, start) from exc


def parse_body(text: str, dim: int | None = None) -> ConvexBody:
    cur = _Cursor(text)
    b = _body(cur, dim)
    cur.done()
    return b


def _lattice(cur: _Cursor, dim: int | None) -> Lattice:
    if cur.peek("lattice:"):
        cur.take("lattice:")
    start = cur.pos
    if cur.peek("matrix["):
        cur.take("matrix[")
        rows = [[cur.number()]]
        while not cur.peek("]"):
            if cur.peek(","):
                cur.take(",")
                rows[-1].append(cur.number())
            elif cur.peek(";"):
                cur.take(";")
                rows.append([cur.number()])
            else:
                cur.error("expected ',', ';' or ']'")
        cur.take("]")
        try:
            return Lattice(tuple(tuple(r) for r in rows))
        except LatticeError as exc:
            raise ParseError(str(exc), cur.text, start) from exc
    name = cur.word()
    try:
        entry = catalog_entry(name, dim)
    except LatticeError as exc:
        raise ParseError(str(exc), cur.text, start) from exc
    if dim is not None and entry.lattice.dim != dim:
        raise ParseError(f"{name} has dimension {entry.lattice.dim}, expected {dim}", cur.text, start)
    return entry.lattice


def parse_lattice(text: str, dim: int | None = None) -> Lattice:
    cur = _Cursor(text)
    lat = _lattice(cur, dim)
    cur.done()
    return lat


def _kv(cur: _Cursor) -> dict:
    out = {}
    while True:
        key = cur.word()
        cur.take("=")
        out[key] = cur.number()
        if not cur.peek(","):
            return out
        cur.take(",")


def parse_witness(text: str, dim: int, default_scale: float = 1.0):
    """Parse a witness literal into a WitnessFunction."""
    from .witness import Autocorrelation, Gaussian, LatticeDirichlet, sample_double_pd

    cur = _Cursor(text)
    start = cur.pos
    kind = cur.word()
    cur.take(":")
    if kind == "gauss":
        f = Gaussian(dim, float(cur.number()))
    elif kind == "autocorr":
        f = Autocorrelation(_body(cur, dim))
    elif kind == "cms":
        kv = _kv(cur)
        f = sample_double_pd(dim, int(kv.get("J", 4)), float(kv.get("scale", default_scale)), int(kv.get("seed", 0)))
    elif kind == "latdir":
        lat = _lattice(cur, dim)
        cur.take(",")
        kv = _kv(cur)
        if "R" not in kv:
            cur.error("latdir needs R=")
        f = LatticeDirichlet(lat, float(kv["R"]))
    else:
        cur.pos = start
        cur.error(f"unknown witness kind {kind!r}")
    cur.done()
    return f
