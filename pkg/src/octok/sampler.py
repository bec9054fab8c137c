"""Count-based stand-in generator over octree token sequences.

Subtree codes are modelled per ``(level, parent_code)`` context, where
``parent_code`` is the subtree code that opened the cell (0 for the root).
Atom types are modelled per frame; in-cell offsets are uniform. All counts
get Laplace smoothing ``alpha`` so every valid token has non-zero mass.
"""
from __future__ import annotations

import json
import math
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import elements
from .errors import InvalidInput, ParseError
from .geometry import GridSpec
from .octree import child_codes, unchecked_decode
from .tokenizer import ATOM, BOS, CODE, EOS, MASK, Token, TokenSequence, code_center, special, walk

MODEL_SCHEMA = "octok-model/1"
SITE_TYPES = np.array([t for t in range(elements.VOCAB_SIZE) if elements.is_site_type(t)])
GREEDY_T = 1e-6


@dataclass
class CodeModel:
    L: int
    c_leaf: float
    c_r: float
    alpha: float = 1.0
    frames: tuple[int, ...] = (0,)
    code_counts: dict[tuple[int, int], np.ndarray] = field(default_factory=dict)
    type_counts: dict[int, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if not self.alpha > 0:
            raise InvalidInput("alpha must be positive")

    def spec(self, origin=(0.0, 0.0, 0.0)) -> GridSpec:
        return GridSpec(origin=tuple(origin), L=self.L, c_leaf=self.c_leaf, c_r=self.c_r)

    def code_probs(self, level: int, parent: int) -> np.ndarray:
        """Length-256 distribution; index 0 always has probability 0."""
        p = np.full(256, self.alpha)
        counts = self.code_counts.get((level, parent))
        if counts is not None:
            p = p + counts
        p[0] = 0.0
        return p / p.sum()

    def type_probs(self, frame: int) -> np.ndarray:
        """Distribution over :data:`SITE_TYPES`."""
        p = np.full(len(SITE_TYPES), self.alpha)
        counts = self.type_counts.get(frame)
        if counts is not None:
            p = p + counts[SITE_TYPES]
        return p / p.sum()

    def to_json(self) -> str:
        codes = [{"level": l, "parent": p, "counts": [[int(i), int(c[i])] for i in np.flatnonzero(c)]}
                 for (l, p), c in sorted(self.code_counts.items())]
        types = [{"frame": f, "counts": [[int(i), int(c[i])] for i in np.flatnonzero(c)]}
                 for f, c in sorted(self.type_counts.items())]
        doc = {"schema": MODEL_SCHEMA, "L": self.L, "c_leaf": self.c_leaf, "c_r": self.c_r,
               "alpha": self.alpha, "frames": list(self.frames), "codes": codes, "types": types}
        return json.dumps(doc, separators=(",", ":"), sort_keys=False) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "CodeModel":
        try:
            doc = json.loads(text)
            if doc.get("schema") != MODEL_SCHEMA:
                raise ParseError(f"unsupported model schema {doc.get('schema')!r}")
            code_counts = {}
            for ent in doc["codes"]:
                c = np.zeros(256, dtype=np.int64)
                for i, n in ent["counts"]:
                    c[i] = n
                code_counts[(int(ent["level"]), int(ent["parent"]))] = c
            type_counts = {}
            for ent in doc["types"]:
                c = np.zeros(elements.VOCAB_SIZE, dtype=np.int64)
                for i, n in ent["counts"]:
                    c[i] = n
                type_counts[int(ent["frame"])] = c
            return cls(L=int(doc["L"]), c_leaf=float(doc["c_leaf"]), c_r=float(doc["c_r"]),
                       alpha=float(doc["alpha"]), frames=tuple(doc["frames"]),
                       code_counts=code_counts, type_counts=type_counts)
        except (json.JSONDecodeError, KeyError, TypeError, ValueError, IndexError) as exc:
            raise ParseError(f"bad model file: {exc}") from None


def fit(corpus: Sequence[TokenSequence], alpha: float = 1.0, L: int = 6,
        c_leaf: float = 0.24, c_r: float = 0.01) -> CodeModel:
    """Accumulate counts. ``L``/``c_leaf``/``c_r`` only matter for an empty corpus."""
    frames = None
    if corpus:
        sp = corpus[0].spec
        L, c_leaf, c_r = sp.L, sp.c_leaf, sp.c_r
    model = CodeModel(L=L, c_leaf=c_leaf, c_r=c_r, alpha=alpha)
    for k, seq in enumerate(corpus):
        sp = seq.spec
        if (sp.L, sp.c_leaf, sp.c_r) != (L, c_leaf, c_r):
            raise InvalidInput(f"corpus item {k}: grid (L={sp.L}) differs from first item (L={L})")
        walked = walk(seq)
        layout = tuple(f for f, _ in walked)
        if frames is None:
            frames = layout
        elif layout != frames:
            raise InvalidInput(f"corpus item {k}: frame layout {layout} differs from {frames}")
        for f, entries in walked:
            for ent in entries:
                if ent.token.kind == CODE:
                    key = (ent.level, ent.parent_code)
                    if key not in model.code_counts:
                        model.code_counts[key] = np.zeros(256, dtype=np.int64)
                    model.code_counts[key][ent.token.t] += 1
                else:
                    if f not in model.type_counts:
                        model.type_counts[f] = np.zeros(elements.VOCAB_SIZE, dtype=np.int64)
                    model.type_counts[f][ent.token.t] += 1
    if frames:
        model.frames = frames
    return model


class Drawer:
    """Tempered categorical draws with per-distribution CDF caching.

    ``temperature`` at or below ``GREEDY_T`` means argmax with the lowest
    index winning ties.
    """

    def __init__(self, temperature: float):
        if temperature < 0 or not math.isfinite(temperature):
            raise InvalidInput("temperature must be a non-negative finite number")
        self.T = temperature
        self.greedy = temperature <= GREEDY_T
        self._cdf: dict = {}

    def cdf(self, key, probs_fn):
        cdf = self._cdf.get(key)
        if cdf is None:
            p = probs_fn()
            if self.greedy:
                cdf = int(np.argmax(p))
            else:
                logp = np.full(len(p), -np.inf)
                nz = p > 0
                logp[nz] = np.log(p[nz]) / self.T
                w = np.exp(logp - logp.max())
                cdf = np.cumsum(w / w.sum()).tolist()
            self._cdf[key] = cdf
        return cdf

    def pick(self, key, probs_fn, u: float) -> int:
        """Inverse-CDF draw for a uniform ``u`` in [0, 1)."""
        cdf = self.cdf(key, probs_fn)
        if self.greedy:
            return cdf
        i = bisect_right(cdf, u * cdf[-1])
        # zero-probability entries have flat CDF steps and are never selected
        return min(i, len(cdf) - 1)


def sample(model: CodeModel, seed, temperature: float = 1.0, spec: GridSpec | None = None,
           mntp: bool = True) -> TokenSequence:
    """Generate one sequence by walking the octree frontier.

    Each step first fixes the next cell from the decoded frontier (the mask
    twin), then draws its content; the pair is emitted together.
    """
    spec = spec or model.spec()
    if spec.L != model.L:
        raise InvalidInput(f"grid depth {spec.L} differs from model depth {model.L}")
    rng = np.random.default_rng(seed)
    drawer = Drawer(temperature)
    d = spec.default_offset
    leaf_level = spec.L - 1
    n_p, c_r, c_leaf, o = spec.n_p, spec.c_r, spec.c_leaf, spec.origin
    toks: list[Token] = [special(spec, BOS, model.frames[0])]

    for f in model.frames:
        frontier = [(0, 0)]
        for level in range(leaf_level):
            us = rng.random(len(frontier)).tolist()
            nxt = []
            for (cell, ctx), u in zip(frontier, us):
                c = code_center(spec, level, cell)
                code = drawer.pick(("c", level, ctx), lambda: model.code_probs(level, ctx), u)
                if mntp:
                    toks.append(Token(MASK, elements.MASK, d, level, f, c))
                toks.append(Token(CODE, code, d, level, f, c))
                nxt.extend((ch, code) for ch in child_codes(cell, code))
            frontier = nxt
        us = rng.random(len(frontier)).tolist()
        offsets = rng.integers(0, n_p, (len(frontier), 3)).tolist()
        for (cell, _), u, e in zip(frontier, us, offsets):
            x, y, z = unchecked_decode(cell)
            tid = int(SITE_TYPES[drawer.pick(("t", f), lambda: model.type_probs(f), u)])
            pos = (o[0] + x * c_leaf + (e[0] + 0.5) * c_r,
                   o[1] + y * c_leaf + (e[1] + 0.5) * c_r,
                   o[2] + z * c_leaf + (e[2] + 0.5) * c_r)
            if mntp:
                toks.append(Token(MASK, elements.MASK, d, leaf_level, f, code_center(spec, leaf_level, cell)))
            toks.append(Token(ATOM, tid, tuple(e), leaf_level, f, pos))
    toks.append(special(spec, EOS, model.frames[-1]))
    return TokenSequence(spec, tuple(toks), mntp)


@dataclass
class SampleScore:
    total_logprob: float
    per_token: list[float]
    kinds: list[str] = field(default_factory=list)


def score(model: CodeModel, seq: TokenSequence) -> SampleScore:
    """Cumulative log-probability of every code and atom token (masks carry none)."""
    if seq.spec.L != model.L:
        raise InvalidInput(f"sequence depth {seq.spec.L} differs from model depth {model.L}")
    type_index = {int(t): i for i, t in enumerate(SITE_TYPES)}
    offset_lp = -3 * math.log(seq.spec.n_p)
    cache: dict = {}
    per, kinds = [], []
    for f, entries in walk(seq):
        for ent in entries:
            tok = ent.token
            if tok.kind == CODE:
                key = ("c", ent.level, ent.parent_code)
                if key not in cache:
                    with np.errstate(divide="ignore"):  # code 0 has no mass
                        cache[key] = np.log(model.code_probs(ent.level, ent.parent_code))
                per.append(float(cache[key][tok.t]))
            else:
                key = ("t", f)
                if key not in cache:
                    cache[key] = np.log(model.type_probs(f))
                if tok.t not in type_index:
                    raise InvalidInput(f"token {ent.index}: type {tok.t} is not a site type")
                per.append(float(cache[key][type_index[tok.t]]) + offset_lp)
            kinds.append(tok.kind)
    return SampleScore(float(math.fsum(per)), per, kinds)


def rank(samples: Sequence[TokenSequence], model: CodeModel, r: int = 1) -> list[tuple[TokenSequence, SampleScore]]:
    """Top ``r`` samples by cumulative log-probability; ties broken by serialized bytes."""
    from .formats import dumps_jsonl

    if r < 1:
        raise InvalidInput("r must be >= 1")
    scored = [(s, score(model, s)) for s in samples]
    scored.sort(key=lambda x: (-x[1].total_logprob, dumps_jsonl(x[0]).encode()))
    return scored[:r]
