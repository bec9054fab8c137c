"""Text formats: XYZ, the crystal cell format, and token JSONL.

Crystal files look like::

    # optional comments
    lattice
    5.0 0.0 0.0
    0.0 5.0 0.0
    0.0 0.0 5.0
    atoms
    Na 0.0 0.0 0.0
    Cl 0.5 0.5 0.5

Lattice rows are Cartesian vectors in angstrom; atom coordinates are
fractional in ``[0, 1)``.
"""
from __future__ import annotations

import itertools
import json
import math

import numpy as np

from . import elements
from .errors import InvalidInput, ParseError
from .geometry import Frame, GridSpec, Site
from .tokenizer import KINDS, Token, TokenSequence

SCHEMA = "octok/1"


def _floats(parts, lineno):
    try:
        # Mathematica-style exponents ("1.5*^-05") appear in some XYZ dumps
        vals = [float(p.replace("*^", "e")) for p in parts]
    except ValueError:
        raise ParseError(f"expected numbers, got {' '.join(parts)!r}", lineno) from None
    if not all(math.isfinite(v) for v in vals):
        raise ParseError("non-finite coordinate", lineno)
    return vals


def _site(parts, lineno) -> Site:
    if len(parts) < 4:
        raise ParseError("expected 'symbol x y z'", lineno)
    try:
        tid = elements.type_id(parts[0])
    except InvalidInput as exc:
        raise ParseError(str(exc), lineno) from None
    return Site(tid, tuple(_floats(parts[1:4], lineno)))


def parse_xyz_frames(text: str, limit: int | None = None) -> list[Frame]:
    """Every ``count / comment / atoms`` block of an XYZ file, as consecutive frames.

    ``limit`` stops after that many blocks, ignoring whatever trails them.
    """
    lines = text.splitlines()
    frames = []
    i = 0
    while i < len(lines) and (limit is None or len(frames) < limit):
        if not lines[i].strip():
            i += 1
            continue
        try:
            n = int(lines[i].split()[0])
        except ValueError:
            raise ParseError(f"expected atom count, got {lines[i]!r}", i + 1) from None
        if n < 0:
            raise ParseError("negative atom count", i + 1)
        if i + 2 + n > len(lines):
            raise ParseError(f"block declares {n} atoms but file ends early", len(lines))
        sites = tuple(_site(lines[j].split(), j + 1) for j in range(i + 2, i + 2 + n))
        frames.append(Frame(sites, len(frames)))
        i += 2 + n
    if not frames:
        raise ParseError("no XYZ blocks found", 1)
    return frames


def parse_xyz(text: str) -> Frame:
    return parse_xyz_frames(text, limit=1)[0]


def write_xyz(frames: list[Frame]) -> str:
    out = []
    for fr in frames:
        out.append(str(len(fr.sites)))
        out.append(f"frame={fr.frame_index}")
        for s in fr.sites:
            x, y, z = s.pos
            out.append(f"{elements.symbol(s.type_id)} {x:.6f} {y:.6f} {z:.6f}")
    return "\n".join(out) + "\n"


def lattice_frames(lattice, species: list[int], fractional) -> tuple[Frame, Frame]:
    """Lattice-vertex frame (8 corners) and Cartesian atom frame for a unit cell."""
    M = np.asarray(lattice, dtype=float)
    if M.shape != (3, 3):
        raise InvalidInput("lattice must be 3x3")
    if abs(np.linalg.det(M)) < 1e-9:
        raise InvalidInput("singular lattice matrix")
    frac = np.asarray(fractional, dtype=float).reshape(-1, 3)
    if ((frac < 0) | (frac >= 1)).any():
        raise InvalidInput("fractional coordinates must lie in [0, 1)")
    corners = np.array(list(itertools.product((0, 1), repeat=3)), dtype=float) @ M
    lat = Frame(tuple(Site(elements.LAT, tuple(map(float, c))) for c in corners), 0)
    cart = frac @ M
    atoms = Frame(tuple(Site(t, tuple(map(float, p))) for t, p in zip(species, cart)), 1)
    return lat, atoms


def parse_crystal(text: str) -> tuple[Frame, Frame]:
    section = None
    rows, species, frac = [], [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key = line.lower()
        if key in ("lattice", "atoms"):
            section = key
            continue
        parts = line.split()
        if section == "lattice":
            if len(parts) != 3 or len(rows) == 3:
                raise ParseError("lattice section takes exactly three 3-component rows", lineno)
            rows.append(_floats(parts, lineno))
        elif section == "atoms":
            s = _site(parts, lineno)
            species.append(s.type_id)
            frac.append(s.pos)
        else:
            raise ParseError("content before 'lattice' section", lineno)
    if len(rows) != 3:
        raise ParseError("missing or incomplete lattice section")
    if not species:
        raise ParseError("no atoms in crystal file")
    return lattice_frames(rows, species, frac)


def _f(v: float) -> str:
    return f"{v:.6f}"


def _vec(v) -> str:
    return "[" + ",".join(_f(x) for x in v) + "]"


def dumps_jsonl(seq: TokenSequence, extra_header: dict | None = None) -> str:
    """Token JSONL: one header object, then one object per token, fixed key order."""
    sp = seq.spec
    header = (f'{{"schema":"{SCHEMA}","L":{sp.L},"c0":{_f(sp.c0)},"c_leaf":{_f(sp.c_leaf)},'
              f'"c_r":{_f(sp.c_r)},"origin":{_vec(sp.origin)},"mntp":{"true" if seq.mntp else "false"}')
    for k, v in (extra_header or {}).items():
        header += f",{json.dumps(k)}:{json.dumps(v)}"
    lines = [header + "}"]
    for t in seq.tokens:
        lines.append(f'{{"k":"{t.kind}","t":{t.t},"e":[{t.e[0]},{t.e[1]},{t.e[2]}],'
                     f'"l":{t.l},"f":{t.f},"c":{_vec(t.c)}}}')
    return "\n".join(lines) + "\n"


def loads_jsonl(text: str) -> tuple[TokenSequence, dict]:
    """Parse token JSONL; returns the sequence and the raw header dict."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ParseError("empty token file", 1)
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise ParseError(f"bad header: {exc.msg}", 1) from None
    if header.get("schema") != SCHEMA:
        raise ParseError(f"unsupported schema {header.get('schema')!r}", 1)
    try:
        spec = GridSpec(origin=tuple(float(v) for v in header["origin"]), L=int(header["L"]),
                        c_leaf=float(header["c_leaf"]), c_r=float(header["c_r"]))
        mntp = bool(header["mntp"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad header: {exc}", 1) from None
    if abs(spec.c0 - float(header.get("c0", spec.c0))) > 1e-5 * spec.c0:
        raise ParseError("header c0 disagrees with c_leaf * 2**(L-1)", 1)
    toks = []
    for lineno, ln in enumerate(lines[1:], 2):
        try:
            d = json.loads(ln)
            kind = d["k"]
            if kind not in KINDS:
                raise ValueError(f"unknown kind {kind!r}")
            toks.append(Token(kind, int(d["t"]), tuple(int(v) for v in d["e"]), int(d["l"]),
                              int(d["f"]), tuple(float(v) for v in d["c"])))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad token: {exc}", lineno) from None
    return TokenSequence(spec, tuple(toks), mntp), header
