"""Command-line entry point: ``octok <command> ...``.

Exit status is 0 on success and 1 on any error; diagnostics go to stderr.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import elements, formats, sampler, voxelpack
from .errors import InvalidInput, OctokError
from .geometry import DEFAULT_LEAF, DEFAULT_MAX_L, DEFAULT_RESOLUTION, GridConfig, random_rotation
from .tokenizer import TokenSequence, decode, max_site_error, serialize, token_stats

FORMATS = ("xyz", "crystal", "voxgrid")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(1)


def atomic_write(path, data: bytes | str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, str):
        data = data.encode()
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_frames(path, fmt: str):
    """Frames (and voxel dim for grids) from an input file."""
    if fmt == "voxgrid":
        kind, arr = voxelpack.read_grid_file(Path(path).read_bytes())
        grid = voxelpack.unpack(arr) if kind == voxelpack.KIND_PACKED else arr
        return [voxelpack.grid_to_frame(grid, elements.OCC)], grid.shape[0]
    text = Path(path).read_text()
    if fmt == "xyz":
        return formats.parse_xyz_frames(text), None
    if fmt == "crystal":
        return list(formats.parse_crystal(text)), None
    raise InvalidInput(f"unknown format {fmt!r}")


def tokenize_file(path, fmt: str, args) -> tuple[TokenSequence, dict, list]:
    frames, dim = load_frames(path, fmt)
    if fmt == "voxgrid":
        spec = voxelpack.grid_spec_for(dim)
        extra = {"source": fmt, "grid_dim": dim}
    else:
        if args.rotate:
            frames = random_rotation(frames, args.seed)
        cfg = GridConfig(c_leaf=args.leaf, c_r=args.res, margin=args.margin, L=args.L, max_L=args.max_L)
        spec = cfg.fit(frames)
        extra = {"source": fmt}
    seq = serialize(spec, frames, mntp=args.mntp)
    return seq, extra, frames


def cmd_tokenize(args):
    seq, extra, _ = tokenize_file(args.inp, args.format, args)
    atomic_write(args.out, formats.dumps_jsonl(seq, extra))


def cmd_detokenize(args):
    seq, header = formats.loads_jsonl(Path(args.inp).read_text())
    frames = decode(seq)
    if header.get("source") == "voxgrid":
        D = int(header.get("grid_dim", seq.spec.leaves_per_axis))
        if len(frames) != 1:
            raise InvalidInput("voxel token files hold exactly one frame")
        atomic_write(args.out, voxelpack.write_raw(voxelpack.frame_to_grid(frames[0], seq.spec, D)))
    else:
        atomic_write(args.out, formats.write_xyz(frames))


def _inputs(path) -> list[Path]:
    p = Path(path)
    if p.is_dir():
        return sorted(q for q in p.iterdir() if q.is_file() and not q.name.startswith("."))
    return [p]


def cmd_verify(args):
    worst = 0.0
    files = _inputs(args.inp)
    c_r = args.res
    for path in files:
        seq, extra, frames = tokenize_file(path, args.format, args)
        # decode from the written form, not the in-memory tokens
        back, _ = formats.loads_jsonl(formats.dumps_jsonl(seq, extra))
        decoded = decode(back)
        if args.format == "voxgrid":
            c_r = seq.spec.c_r
            err = 0.0 if decoded[0].sites and _same_voxels(frames[0], decoded[0], back) else np.inf
        else:
            err = max_site_error(frames, decoded, seq.spec, back.spec)
        worst = max(worst, err)
    ok = worst <= c_r
    report = {"files": len(files), "max_error": worst, "c_r": c_r, "ok": ok}
    print(json.dumps(report))
    return 0 if ok else 1


def _same_voxels(a, b, seq) -> bool:
    D = seq.spec.leaves_per_axis
    return np.array_equal(voxelpack.frame_to_grid(a, seq.spec, D), voxelpack.frame_to_grid(b, seq.spec, D))


def cmd_stats(args):
    seq, _ = formats.loads_jsonl(Path(args.inp).read_text())
    text = json.dumps(token_stats(seq).to_dict(), indent=2) + "\n"
    if args.out:
        atomic_write(args.out, text)
    else:
        sys.stdout.write(text)


def cmd_fit(args):
    files = sorted(Path(args.corpus).glob("*.jsonl"))
    if not files:
        raise InvalidInput(f"no .jsonl token files in {args.corpus}")
    corpus = [formats.loads_jsonl(f.read_text())[0] for f in files]
    model = sampler.fit(corpus, alpha=args.alpha)
    atomic_write(args.out, model.to_json())


def cmd_sample(args):
    model = sampler.CodeModel.from_json(Path(args.model).read_text())
    if args.n < 1:
        raise InvalidInput("--n must be >= 1")
    seeds = np.random.SeedSequence(args.seed).spawn(args.n)
    draws = [sampler.sample(model, s, temperature=args.temperature, mntp=not args.no_mntp) for s in seeds]
    top = sampler.rank(draws, model, min(args.top_r, len(draws)))
    out = Path(args.out)
    summary = []
    for i, (seq, sc) in enumerate(top):
        name = f"sample_{i:03d}.jsonl"
        atomic_write(out / name, formats.dumps_jsonl(seq))
        summary.append({"file": name, "total_logprob": round(sc.total_logprob, 6),
                        "tokens": len(seq.content)})
    atomic_write(out / "scores.json", json.dumps(summary, indent=2) + "\n")


def cmd_pack(args):
    kind, arr = voxelpack.read_grid_file(Path(args.inp).read_bytes())
    if kind != voxelpack.KIND_RAW:
        raise InvalidInput("pack expects a raw grid file")
    atomic_write(args.out, voxelpack.write_packed(voxelpack.pack(arr)))


def cmd_unpack(args):
    kind, arr = voxelpack.read_grid_file(Path(args.inp).read_bytes())
    if kind != voxelpack.KIND_PACKED:
        raise InvalidInput("unpack expects a packed grid file")
    atomic_write(args.out, voxelpack.write_raw(voxelpack.unpack(arr)))


def _grid_flags(p):
    depth = p.add_mutually_exclusive_group()
    depth.add_argument("--L", type=int, default=None, help="fixed tree depth (e.g. 6 for QM9-sized molecules)")
    depth.add_argument("--auto-L", dest="L", action="store_const", const=None,
                       help="smallest depth that fits each sample (default)")
    p.add_argument("--leaf", type=float, default=DEFAULT_LEAF, help="leaf cell length in angstrom")
    p.add_argument("--res", type=float, default=DEFAULT_RESOLUTION, help="in-cell offset resolution")
    p.add_argument("--margin", type=float, default=None, help="slack around the structure (default leaf/2)")
    p.add_argument("--max-L", type=int, default=DEFAULT_MAX_L)
    p.add_argument("--mntp", action="store_true", help="insert mask twins")
    p.add_argument("--rotate", action="store_true", help="apply a seeded random rotation first")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="octok", description="Octree tokenization of sparse 3D structures.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("tokenize", help="structure file -> token JSONL")
    t.add_argument("--in", dest="inp", required=True)
    t.add_argument("--format", choices=FORMATS, required=True)
    t.add_argument("--out", required=True)
    _grid_flags(t)
    t.set_defaults(func=cmd_tokenize)

    d = sub.add_parser("detokenize", help="token JSONL -> XYZ or voxel grid file")
    d.add_argument("--in", dest="inp", required=True)
    d.add_argument("--out", required=True)
    d.set_defaults(func=cmd_detokenize)

    v = sub.add_parser("verify", help="round-trip a file or directory and report max error")
    v.add_argument("--in", dest="inp", required=True)
    v.add_argument("--format", choices=FORMATS, required=True)
    _grid_flags(v)
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("stats", help="token counts and compression ratios")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_stats)

    f = sub.add_parser("fit", help="fit a count model on a directory of token files")
    f.add_argument("--corpus", required=True)
    f.add_argument("--out", required=True)
    f.add_argument("--alpha", type=float, default=1.0)
    f.set_defaults(func=cmd_fit)

    g = sub.add_parser("sample", help="draw sequences from a count model and keep the top r")
    g.add_argument("--model", required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--temperature", type=float, default=1.0)
    g.add_argument("--top-r", type=int, default=1)
    g.add_argument("--no-mntp", action="store_true")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_sample)

    for name, fn, help_ in (("pack", cmd_pack, "raw grid -> 8-channel packed grid"),
                            ("unpack", cmd_unpack, "packed grid -> raw grid")):
        q = sub.add_parser(name, help=help_)
        q.add_argument("--in", dest="inp", required=True)
        q.add_argument("--out", required=True)
        q.set_defaults(func=fn)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args) or 0
    except (OctokError, OSError) as exc:
        print(f"octok {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
