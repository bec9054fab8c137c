"""Octree token sequences: serialization, MNTP expansion, decoding and stats.

A frame becomes, level by level, one subtree-code token per occupied non-leaf
cell (ascending Morton order) followed by one atom token per occupied leaf.
Frames are concatenated between a single BOS and EOS.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

from . import elements
from .errors import AlreadyExpanded, InvalidCode, InvalidInput, LeafCollision, MalformedSequence
from .geometry import (Cell, Frame, GridSpec, Site, Vec3, dequantize_offset, leaf_index_of,
                       quantize_offset)
from .octree import (child_codes, iter_subtree_codes, morton_decode, morton_encode, octree_from_codes,
                     unchecked_decode)

BOS = "B"
EOS = "E"
CODE = "C"
ATOM = "A"
MASK = "M"
KINDS = (BOS, EOS, CODE, ATOM, MASK)
KIND_NAMES = {BOS: "bos", EOS: "eos", CODE: "code", ATOM: "atom", MASK: "mask"}


class Token(NamedTuple):
    kind: str
    t: int
    e: Cell
    l: int
    f: int
    c: Vec3


@dataclass(frozen=True)
class TokenSequence:
    spec: GridSpec
    tokens: tuple[Token, ...]
    mntp: bool = False

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))

    def __len__(self):
        return len(self.tokens)

    @property
    def content(self) -> list[Token]:
        return [t for t in self.tokens if t.kind not in (BOS, EOS)]


def code_center(spec: GridSpec, level: int, code: int) -> Vec3:
    x, y, z = unchecked_decode(code)
    h = spec.cell_length(level)
    o = spec.origin
    return (o[0] + (x + 0.5) * h, o[1] + (y + 0.5) * h, o[2] + (z + 0.5) * h)


def _leaf_codes(spec: GridSpec, frame: Frame) -> dict[int, int]:
    leaf_level = spec.L - 1
    by_leaf: dict[int, int] = {}
    for i, s in enumerate(frame.sites):
        if not elements.is_site_type(s.type_id):
            raise InvalidInput(f"site {i} has type id {s.type_id} outside the site vocabulary")
        leaf = leaf_index_of(spec, s.pos)
        code = morton_encode(leaf, leaf_level)
        if code in by_leaf:
            raise LeafCollision(by_leaf[code], i, leaf)
        by_leaf[code] = i
    return by_leaf


def serialize_frame(spec: GridSpec, frame: Frame) -> list[Token]:
    """Content tokens of one frame: no specials, no mask twins."""
    if not frame.sites:
        raise InvalidInput("cannot tokenize an empty frame")
    by_leaf = _leaf_codes(spec, frame)
    tree = octree_from_codes(spec, sorted(by_leaf))
    d = spec.default_offset
    f = frame.frame_index
    out: list[Token] = []
    for level in range(spec.L - 1):
        for parent, mask in iter_subtree_codes(tree.levels[level + 1]):
            out.append(Token(CODE, mask, d, level, f, code_center(spec, level, parent)))
    leaf_level = spec.L - 1
    for code in tree.levels[leaf_level]:
        site = frame.sites[by_leaf[code]]
        e = quantize_offset(spec, site.pos, morton_decode(code, leaf_level))
        out.append(Token(ATOM, site.type_id, e, leaf_level, f, tuple(site.pos)))
    return out


def mask_twin(spec: GridSpec, tok: Token) -> Token:
    """The [MASK] placeholder announcing ``tok``'s position before its content."""
    if tok.kind == ATOM:
        leaf = leaf_index_of(spec, tok.c)
        c = code_center(spec, spec.L - 1, morton_encode(leaf, spec.L - 1))
    else:
        c = tok.c
    return Token(MASK, elements.MASK, spec.default_offset, tok.l, tok.f, c)


def mntp_expand(tokens: Sequence[Token], spec: GridSpec) -> list[Token]:
    out: list[Token] = []
    for tok in tokens:
        if tok.kind == MASK:
            raise AlreadyExpanded("input already contains mask tokens")
        if tok.kind in (CODE, ATOM):
            out.append(mask_twin(spec, tok))
        out.append(tok)
    return out


def special(spec: GridSpec, kind: str, frame_index: int) -> Token:
    tid = elements.BOS if kind == BOS else elements.EOS
    h = spec.c0 / 2
    c = (spec.origin[0] + h, spec.origin[1] + h, spec.origin[2] + h)
    return Token(kind, tid, spec.default_offset, 0, frame_index, c)


def serialize(spec: GridSpec, frames: Sequence[Frame], mntp: bool = False,
              with_specials: bool = True) -> TokenSequence:
    body: list[Token] = []
    last = None
    for fr in frames:
        if last is not None and fr.frame_index <= last:
            raise InvalidInput("frame indices must be strictly increasing")
        last = fr.frame_index
        body.extend(serialize_frame(spec, fr))
    if mntp:
        body = mntp_expand(body, spec)
    if with_specials:
        first = frames[0].frame_index if frames else 0
        final = frames[-1].frame_index if frames else 0
        body = [special(spec, BOS, first), *body, special(spec, EOS, final)]
    return TokenSequence(spec, tuple(body), mntp)


class WalkEntry(NamedTuple):
    """A content token placed in the tree: its cell and the code that opened it."""
    index: int
    token: Token
    level: int
    cell: int
    parent_code: int


def walk(seq: TokenSequence) -> list[tuple[int, list[WalkEntry]]]:
    """Replay breadth-first decoding; returns ``(frame_index, entries)`` per frame.

    Validates structure (kinds, levels, frames, mask pairing) and raises
    :class:`MalformedSequence` at the first offending token.
    """
    toks = seq.tokens
    spec = seq.spec
    n = len(toks)
    start, end = 0, n
    if n and toks[0].kind == BOS:
        start = 1
    if end > start and toks[-1].kind == EOS:
        end -= 1
    for i in range(start, end):
        if toks[i].kind in (BOS, EOS):
            raise MalformedSequence("special token inside sequence body", i)
        if toks[i].kind == MASK and not seq.mntp:
            raise MalformedSequence("mask token in a sequence without MNTP", i)
    tol = 1e-6 * spec.c0 + 1e-6

    frames = []
    pos = start
    last_f = None
    while pos < end:
        f = toks[pos].f
        if last_f is not None and f <= last_f:
            raise MalformedSequence(f"frame index {f} after frame {last_f}", pos)
        last_f = f
        entries: list[WalkEntry] = []

        def take(level: int, cell: int, kind: str) -> int:
            nonlocal pos
            if seq.mntp:
                if pos >= end:
                    raise MalformedSequence("sequence ended before frontier was exhausted", pos)
                m = toks[pos]
                if m.kind != MASK or m.l != level or m.f != f:
                    raise MalformedSequence(f"expected mask at level {level}, frame {f}", pos)
                cc = code_center(spec, level, cell)
                if any(abs(m.c[a] - cc[a]) > tol for a in range(3)):
                    raise MalformedSequence("mask position does not match its cell center", pos)
                pos += 1
            if pos >= end:
                raise MalformedSequence("sequence ended before frontier was exhausted", pos)
            tok = toks[pos]
            if tok.kind != kind or tok.l != level or tok.f != f:
                raise MalformedSequence(
                    f"expected {KIND_NAMES[kind]} token at level {level}, frame {f}; "
                    f"got {KIND_NAMES.get(tok.kind, tok.kind)} at level {tok.l}, frame {tok.f}", pos)
            pos += 1
            return pos - 1

        frontier = [(0, 0)]
        for level in range(spec.L - 1):
            nxt = []
            for cell, ctx in frontier:
                i = take(level, cell, CODE)
                tok = toks[i]
                if not 1 <= tok.t <= 255:
                    raise InvalidCode(f"token {i}: subtree code {tok.t} outside 1..255")
                entries.append(WalkEntry(i, tok, level, cell, ctx))
                nxt.extend((ch, tok.t) for ch in child_codes(cell, tok.t))
            frontier = nxt
        leaf_level = spec.L - 1
        for cell, ctx in frontier:
            i = take(leaf_level, cell, ATOM)
            entries.append(WalkEntry(i, toks[i], leaf_level, cell, ctx))
        frames.append((f, entries))
    return frames


def decode(seq: TokenSequence) -> list[Frame]:
    spec = seq.spec
    leaf_level = spec.L - 1
    out = []
    for f, entries in walk(seq):
        sites = []
        for ent in entries:
            if ent.level != leaf_level:
                continue
            try:
                pos = dequantize_offset(spec, morton_decode(ent.cell, leaf_level), ent.token.e)
            except InvalidInput as exc:
                raise MalformedSequence(str(exc), ent.index) from None
            sites.append(Site(ent.token.t, pos))
        out.append(Frame(tuple(sites), f))
    return out


@dataclass
class StatsReport:
    L: int
    n_frames: int
    kinds: dict[str, int]
    per_level: dict[int, int]
    content_total: int
    code_count: int
    atom_count: int
    mask_count: int
    bound: int
    bound_ok: bool
    dense_equivalent: int
    ratio: float
    naive_octree_equivalent: int
    lsc_reduction: float
    per_frame: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["per_level"] = {str(k): v for k, v in sorted(self.per_level.items())}
        return d


def token_stats(seq: TokenSequence) -> StatsReport:
    """Counts and compression ratios; specials are excluded from every total.

    ``content_total`` counts code, atom and mask tokens. ``dense_equivalent`` is
    the number of leaf cells of a uniform grid, once per frame.
    """
    L = seq.spec.L
    kinds = {KIND_NAMES[k]: 0 for k in KINDS}
    per_level: dict[int, int] = {}
    frames: dict[int, list[int]] = {}
    for tok in seq.tokens:
        kinds[KIND_NAMES[tok.kind]] += 1
        if tok.kind in (CODE, ATOM):
            per_level[tok.l] = per_level.get(tok.l, 0) + 1
            fc = frames.setdefault(tok.f, [0, 0])
            fc[0 if tok.kind == CODE else 1] += 1
    n_code, n_atom, n_mask = kinds["code"], kinds["atom"], kinds["mask"]
    content = n_code + n_atom + n_mask
    per_frame = [{"frame": f, "code": c, "atom": a, "bound": a * (L - 1), "bound_ok": c <= a * (L - 1)}
                 for f, (c, a) in sorted(frames.items())]
    dense = (1 << (3 * (L - 1))) * max(len(frames), 1)
    naive = 8 * n_code + n_atom
    return StatsReport(
        L=L,
        n_frames=len(frames),
        kinds=kinds,
        per_level=per_level,
        content_total=content,
        code_count=n_code,
        atom_count=n_atom,
        mask_count=n_mask,
        bound=n_atom * (L - 1),
        bound_ok=all(p["bound_ok"] for p in per_frame),
        dense_equivalent=dense,
        ratio=dense / max(content, 1),
        naive_octree_equivalent=naive,
        lsc_reduction=naive / max(n_code + n_atom, 1),
        per_frame=per_frame,
    )


def max_site_error(original: Sequence[Frame], decoded: Sequence[Frame], spec: GridSpec,
                   decoded_spec: GridSpec | None = None) -> float:
    """Largest per-axis coordinate error after matching sites by leaf cell.

    ``spec`` places the original sites; ``decoded_spec`` (default ``spec``) the
    decoded ones, which matters when the grid went through a lossy text form.
    Raises :class:`InvalidInput` if counts, frames or types disagree.
    """
    decoded_spec = decoded_spec or spec
    if len(original) != len(decoded):
        raise InvalidInput(f"frame count {len(decoded)} != {len(original)}")
    worst = 0.0
    for a, b in zip(original, decoded):
        if a.frame_index != b.frame_index or len(a.sites) != len(b.sites):
            raise InvalidInput(f"frame {a.frame_index}: site count mismatch")
        leaf_of = {leaf_index_of(decoded_spec, s.pos): s for s in b.sites}
        for s in a.sites:
            t = leaf_of.get(leaf_index_of(spec, s.pos))
            if t is None or t.type_id != s.type_id:
                raise InvalidInput(f"frame {a.frame_index}: site {s} not recovered")
            worst = max(worst, max(abs(s.pos[k] - t.pos[k]) for k in range(3)))
    return worst
