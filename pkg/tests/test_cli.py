import json
import subprocess
import sys

import numpy as np
import pytest

from octok.cli import main
from octok.formats import loads_jsonl, parse_xyz_frames
from octok.synthetic import random_structure
from octok.voxelpack import pack, read_grid_file, write_raw

WATER = "3\nwater\nO 0.0 0.0 0.0\nH 0.757 0.586 0.0\nH -0.757 0.586 0.0\n"
CRYSTAL = "lattice\n4.2 0 0\n0 4.2 0\n0 0 4.2\natoms\nMg 0 0 0\nO 0.5 0.5 0.5\n"


def write_xyz_file(path, frame):
    lines = [str(len(frame.sites)), "synthetic"]
    sym = {1: "H", 6: "C", 7: "N", 8: "O", 9: "F"}
    lines += [f"{sym[s.type_id]} {s.pos[0]!r} {s.pos[1]!r} {s.pos[2]!r}" for s in frame.sites]
    path.write_text("\n".join(lines) + "\n")


@pytest.fixture
def corpus_dir(tmp_path):
    rng = np.random.default_rng(5)
    d = tmp_path / "xyz"
    d.mkdir()
    for i in range(12):
        write_xyz_file(d / f"s{i:02d}.xyz", random_structure(rng, int(rng.integers(1, 40)),
                                                            float(rng.uniform(1, 20))))
    return d


def test_tokenize_detokenize_xyz(tmp_path, capsys):
    src = tmp_path / "w.xyz"
    src.write_text(WATER)
    out = tmp_path / "w.jsonl"
    assert main(["tokenize", "--in", str(src), "--format", "xyz", "--out", str(out), "--mntp"]) == 0
    seq, header = loads_jsonl(out.read_text())
    assert header["mntp"] and seq.mntp
    back = tmp_path / "w2.xyz"
    assert main(["detokenize", "--in", str(out), "--out", str(back)]) == 0
    frames = parse_xyz_frames(back.read_text())
    assert sorted(frames[0].types()) == [1, 1, 8]


def test_tokenize_fixed_depth_and_rotation(tmp_path):
    src = tmp_path / "w.xyz"
    src.write_text(WATER)
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    args = ["tokenize", "--in", str(src), "--format", "xyz", "--L", "6", "--rotate", "--seed", "4"]
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert loads_jsonl(a.read_text())[0].spec.L == 6


def test_verify_corpus(corpus_dir, capsys):
    assert main(["verify", "--in", str(corpus_dir), "--format", "xyz"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["ok"] and rep["files"] == 12 and rep["max_error"] <= 0.01


def test_verify_crystal(tmp_path, capsys):
    src = tmp_path / "c.txt"
    src.write_text(CRYSTAL)
    assert main(["verify", "--in", str(src), "--format", "crystal", "--mntp", "--rotate"]) == 0
    assert json.loads(capsys.readouterr().out)["max_error"] <= 0.01


def test_stats_mntp(tmp_path, capsys):
    src = tmp_path / "c.txt"
    src.write_text(CRYSTAL)
    out = tmp_path / "c.jsonl"
    main(["tokenize", "--in", str(src), "--format", "crystal", "--out", str(out), "--mntp"])
    capsys.readouterr()
    assert main(["stats", "--in", str(out)]) == 0
    st = json.loads(capsys.readouterr().out)
    assert st["content_total"] % 2 == 0
    assert st["mask_count"] == st["code_count"] + st["atom_count"]
    assert st["n_frames"] == 2 and st["bound_ok"]
    assert [p["frame"] for p in st["per_frame"]] == [0, 1]


def test_voxgrid_round_trip(tmp_path, rng):
    g = rng.random((16, 16, 16)) < 0.05
    src = tmp_path / "g.raw"
    src.write_bytes(write_raw(g))
    tok, back = tmp_path / "g.jsonl", tmp_path / "g2.raw"
    assert main(["tokenize", "--in", str(src), "--format", "voxgrid", "--out", str(tok)]) == 0
    assert main(["detokenize", "--in", str(tok), "--out", str(back)]) == 0
    np.testing.assert_array_equal(read_grid_file(back.read_bytes())[1], g)
    assert main(["verify", "--in", str(src), "--format", "voxgrid"]) == 0


def test_pack_unpack(tmp_path, rng):
    g = rng.random((16, 16, 16)) < 0.3
    src, packed, back = tmp_path / "g.raw", tmp_path / "p.raw", tmp_path / "b.raw"
    src.write_bytes(write_raw(g))
    assert main(["pack", "--in", str(src), "--out", str(packed)]) == 0
    kind, p = read_grid_file(packed.read_bytes())
    np.testing.assert_array_equal(p, pack(g))
    assert main(["unpack", "--in", str(packed), "--out", str(back)]) == 0
    assert back.read_bytes() == src.read_bytes()
    assert main(["pack", "--in", str(packed), "--out", str(back)]) == 1


def test_fit_and_sample(tmp_path, corpus_dir, capsys):
    toks = tmp_path / "toks"
    toks.mkdir()
    for f in sorted(corpus_dir.iterdir()):
        main(["tokenize", "--in", str(f), "--format", "xyz", "--L", "8", "--mntp",
              "--out", str(toks / (f.stem + ".jsonl"))])
    model = tmp_path / "model.json"
    assert main(["fit", "--corpus", str(toks), "--out", str(model), "--alpha", "0.01"]) == 0
    doc = json.loads(model.read_text())
    assert doc["schema"] == "octok-model/1" and doc["L"] == 8

    outs = []
    for run in ("a", "b"):
        d = tmp_path / run
        assert main(["sample", "--model", str(model), "--n", "5", "--seed", "9", "--top-r", "1",
                     "--out", str(d)]) == 0
        files = sorted(p.name for p in d.iterdir())
        assert files == ["sample_000.jsonl", "scores.json"]
        outs.append((d / "sample_000.jsonl").read_bytes())
        back = tmp_path / f"{run}.xyz"
        assert main(["detokenize", "--in", str(d / "sample_000.jsonl"), "--out", str(back)]) == 0
    assert outs[0] == outs[1]

    d = tmp_path / "c"
    main(["sample", "--model", str(model), "--n", "4", "--seed", "1", "--top-r", "3", "--out", str(d)])
    scores = json.loads((d / "scores.json").read_text())
    lps = [s["total_logprob"] for s in scores]
    assert len(lps) == 3 and lps == sorted(lps, reverse=True)


def test_errors_exit_1(tmp_path, capsys):
    src = tmp_path / "bad.xyz"
    src.write_text("2\nc\nH 0 0 0\n")
    assert main(["tokenize", "--in", str(src), "--format", "xyz", "--out", str(tmp_path / "o")]) == 1
    assert "ParseError" in capsys.readouterr().err
    crowded = tmp_path / "crowded.xyz"
    crowded.write_text("3\nc\nH 0 0 0\nH 0.01 0 0\nC 2 2 2\n")
    assert main(["tokenize", "--in", str(crowded), "--format", "xyz", "--out", str(tmp_path / "o")]) == 1
    assert "LeafCollision" in capsys.readouterr().err
    assert main(["stats", "--in", str(tmp_path / "missing.jsonl")]) == 1
    assert not (tmp_path / "o").exists()


def test_module_entry_point_exit_codes(tmp_path):
    src = tmp_path / "w.xyz"
    src.write_text(WATER)
    ok = subprocess.run([sys.executable, "-m", "octok", "verify", "--in", str(src), "--format", "xyz"],
                        capture_output=True, text=True)
    assert ok.returncode == 0 and json.loads(ok.stdout)["ok"]
    bad = subprocess.run([sys.executable, "-m", "octok", "verify", "--format", "nope"],
                         capture_output=True, text=True)
    assert bad.returncode == 1 and bad.stderr
