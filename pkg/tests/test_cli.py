import json
import random
import subprocess
import sys

import numpy as np
import pytest

from betarep import cli
from betarep.dataio import read_detections, read_odgt, read_pair_records, write_detections, write_odgt
from betarep.core import PairedBoxes, boxes_to_beta
from betarep.geometry import BBox
from betarep.nms import Detection

import fixtures
from test_eval import planted_bank


def run(argv, capsys):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def det(l, t, r, b, score, id=None):
    box = BBox(l, t, r, b)
    return Detection(boxes_to_beta(PairedBoxes(box, box), counter=None), score, id)


@pytest.fixture
def odgt(tmp_path):
    p = tmp_path / "a.odgt"
    lines = [
        {"ID": "x", "gtboxes": [{"tag": "person", "fbox": [0, 0, 40, 100], "vbox": [0, 0, 40, 100]}]},
        {"ID": "y", "gtboxes": [{"tag": "person", "fbox": [5, 5, 50, 120], "vbox": [5, 5, 20, 120], "extra": {"ignore": 1}}]},
    ]
    p.write_text("".join(json.dumps(l) + "\n" for l in lines))
    return p


def test_convert(odgt, tmp_path, capsys):
    out = tmp_path / "c.jsonl"
    code, _, err = run(["convert", odgt, "--out", out], capsys)
    assert code == 0
    recs = [json.loads(l) for l in out.read_text().splitlines()]
    assert recs[0]["image"] == "x"
    np.testing.assert_allclose(recs[0]["beta"][4:], [1.5] * 4, atol=1e-9)
    assert recs[1]["ignore"] is True
    summary = json.loads(err)
    assert summary["persons"] == 2 and summary["axes"] == 4
    assert summary["config"]["grid"]["resolution"] == 128


def test_convert_empty(tmp_path, capsys):
    src = tmp_path / "e.odgt"
    src.write_text("")
    code, out, _ = run(["convert", src], capsys)
    assert code == 0 and out == ""


def test_convert_malformed(tmp_path, capsys):
    src = tmp_path / "m.odgt"
    src.write_text('{"ID": "a", "gtboxes": []}\n{oops\n')
    code, _, err = run(["convert", src], capsys)
    assert code == 1
    assert "line 2" in err


def test_missing_file_exit_1(tmp_path, capsys):
    code, _, err = run(["convert", tmp_path / "nope.odgt"], capsys)
    assert code == 1 and "error" in err


def write_dets(path, items):
    write_detections(path, items)
    return path


def test_nms_duplicate_pair(tmp_path, capsys):
    src = write_dets(tmp_path / "d.jsonl", [("a", det(0, 0, 40, 100, 0.9, 1)), ("a", det(1, 0, 41, 100, 0.8, 2))])
    out = tmp_path / "o.jsonl"
    code, _, err = run(["nms", src, "--out", out], capsys)
    assert code == 0
    kept = read_detections(out)
    assert [d.id for _, d in kept] == [1]
    rep = json.loads(err)
    assert rep["kept"] == 1 and rep["input"] == 2 and rep["nms"]["strategy"] == "beta"
    assert {"seconds_total", "seconds_mean", "seconds_max"} <= set(rep)


@pytest.mark.parametrize("name,strategy", [("fiou-0.5", "fiou"), ("viou-0.35", "viou"), ("fiou-viou-0.5-0.35", "fiou_viou"), ("soft", "soft"), ("beta-6", "beta"), ("beta-7", "beta")])
def test_nms_presets(tmp_path, capsys, name, strategy):
    src = write_dets(tmp_path / "d.jsonl", [("a", det(0, 0, 40, 100, 0.9, 1))])
    code, _, err = run(["nms", src, "--preset", name, "--out", tmp_path / "o.jsonl"], capsys)
    assert code == 0
    assert json.loads(err)["nms"]["strategy"] == strategy


def test_nms_usage_errors(tmp_path, capsys):
    src = write_dets(tmp_path / "d.jsonl", [("a", det(0, 0, 40, 100, 0.9, 1))])
    assert run(["nms", src, "--strategy", "median"], capsys)[0] == 1
    assert run(["nms", src, "--preset", "beta-8"], capsys)[0] == 1
    assert run(["nms", src, "--preset", "soft", "--strategy", "beta"], capsys)[0] == 1
    assert run(["nms", src, "--kl-threshold", "-1"], capsys)[0] == 1
    assert run(["nms", src, "--grid", "4"], capsys)[0] == 1
    assert run(["nms", src, "--threads", "0"], capsys)[0] == 1
    assert run(["bogus"], capsys)[0] == 1


def crowd_items():
    from betarep.synth import SynthConfig, synth_detections, synth_scenes

    items = []
    for s in synth_scenes(SynthConfig(seed=6, n_scenes=6, overlap=0.7)):
        items += [(s.image_id, d) for d in synth_detections(s, 6, seed=2)]
    # exact score ties between distinct boxes
    items.append(("tie", det(0, 0, 40, 100, 0.5)))
    items.append(("tie", det(2, 0, 42, 100, 0.5)))
    return items


@pytest.mark.parametrize("strategy", ["beta", "fiou", "soft"])
def test_nms_shuffle_and_thread_invariance(tmp_path, capsys, strategy):
    items = crowd_items()
    outs = []
    for k, threads in enumerate([1, 4, 8]):
        shuffled = items.copy()
        random.Random(k).shuffle(shuffled)
        # drop ids so tie-breaking must come from the parameters
        if k == 2:
            shuffled = [(i, Detection(d.pedestrian, d.score, None)) for i, d in shuffled]
        src = write_dets(tmp_path / f"in{k}.jsonl", shuffled)
        out = tmp_path / f"out{k}.jsonl"
        assert run(["nms", src, "--strategy", strategy, "--threads", threads, "--out", out], capsys)[0] == 0
        outs.append([(i, d.score, d.pedestrian.as_array().tolist()) for i, d in read_detections(out)])
    assert outs[0] == outs[1] == outs[2]


def test_eval_fixture(tmp_path, capsys):
    ann = tmp_path / "g.odgt"
    write_odgt(ann, fixtures.SCENES)
    dets = write_dets(tmp_path / "d.jsonl", fixtures.detections())
    code, out, _ = run(["eval", dets, ann], capsys)
    assert code == 0
    rep = json.loads(out)
    assert rep["AP"] == pytest.approx(fixtures.AP, abs=1e-15)
    assert rep["MR-2"] == pytest.approx(fixtures.MR, rel=1e-14)
    assert "config" in rep


def test_eval_perfect_and_empty(tmp_path, capsys):
    ann = tmp_path / "g.odgt"
    write_odgt(ann, fixtures.SCENES)
    perfect = [(s.image_id, Detection(boxes_to_beta(p.paired, counter=None), 0.9, k)) for s in fixtures.SCENES for k, p in enumerate(s.persons)]
    rep = json.loads(run(["eval", write_dets(tmp_path / "p.jsonl", perfect), ann], capsys)[1])
    assert (rep["AP"], rep["MR-2"]) == (1.0, 0.0)
    rep = json.loads(run(["eval", write_dets(tmp_path / "e.jsonl", []), ann], capsys)[1])
    assert (rep["AP"], rep["MR-2"]) == (0.0, 1.0)


def test_eval_without_ground_truth(tmp_path, capsys):
    ann = tmp_path / "g.odgt"
    ann.write_text('{"ID": "a", "gtboxes": []}\n')
    code, _, err = run(["eval", write_dets(tmp_path / "e.jsonl", []), ann], capsys)
    assert code == 1 and "ground truth" in err


def test_compare_planted(tmp_path, capsys):
    scenes, c = planted_bank()
    ann = tmp_path / "b.odgt"
    write_odgt(ann, scenes)
    out = tmp_path / "pairs.csv"
    code, stdout, _ = run(["compare", ann, "--kl-threshold", 6, "--kl-threshold", 7, "--out", out], capsys)
    assert code == 0
    summary = json.loads(stdout)
    assert summary["pairs"] == c["SPLIT"] + c["TWIN"] + c["BRUSH"]
    assert summary["fiou_failed"] == c["SPLIT"] + c["TWIN"]
    assert summary["kl_failed"] == {"6.0": c["TWIN"], "7.0": c["TWIN"]}
    assert len(read_pair_records(out)) == summary["pairs"]


def test_compare_empty(tmp_path, capsys):
    ann = tmp_path / "e.odgt"
    ann.write_text("")
    code, out, err = run(["compare", ann], capsys)
    assert code == 0
    assert out == "image,idx_a,idx_b,fiou,viou,symkl\n"
    assert json.loads(err)["pairs"] == 0


def read_pgm(path):
    data = path.read_bytes()
    header, _, rest = data.partition(b"\n255\n")
    magic, dims = header.split(b"\n")
    w, h = map(int, dims.split())
    assert magic == b"P5"
    return np.frombuffer(rest, dtype=np.uint8).reshape(h, w)


def test_render_mask(tmp_path, capsys):
    prefix = tmp_path / "u"
    code, out, _ = run(["render-mask", "--beta", 0, 0, 10, 20, 1, 1, 1, 1, "--out", prefix], capsys)
    assert code == 0
    img = read_pgm(tmp_path / "u.pgm")
    assert img.shape == (7, 7) and (img == 255).all()
    csv = np.loadtxt(tmp_path / "u.csv", delimiter=",")
    assert csv.sum() == pytest.approx(1.0, abs=1e-12)

    prefix = tmp_path / "c"
    run(["render-mask", "--beta", 0, 0, 10, 20, 1.5, 1.5, 1.5, 1.5, "--height", 9, "--width", 5, "--out", prefix], capsys)
    img = read_pgm(tmp_path / "c.pgm")
    assert img.shape == (9, 5)
    assert np.unravel_index(img.argmax(), img.shape) == (4, 2)
    assert np.loadtxt(tmp_path / "c.csv", delimiter=",").sum() == pytest.approx(1.0, abs=1e-12)


def test_render_mask_invalid(tmp_path, capsys):
    assert run(["render-mask", "--beta", 0, 0, 0, 20, 1, 1, 1, 1, "--out", tmp_path / "x"], capsys)[0] == 1
    assert run(["render-mask", "--beta", 0, 0, 1, 1, 1, 1, 1, 1, "--height", 0, "--out", tmp_path / "x"], capsys)[0] == 1


def test_synth_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a.odgt", tmp_path / "b.odgt"
    for p in (a, b):
        assert run(["synth", "--seed", 3, "--scenes", 12, "--overlap", 0.6, "--out", p], capsys)[0] == 0
    assert a.read_bytes() == b.read_bytes()
    assert len(read_odgt(a)) == 12


def test_synth_infeasible(capsys):
    assert run(["synth", "--overlap", 1.0], capsys)[0] == 1
    assert run(["synth", "--persons", 3, 2], capsys)[0] == 1


def test_config_file_and_env(tmp_path, capsys, monkeypatch, odgt):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"grid": {"resolution": 64}, "nms": {"kl_threshold": 6.0}, "threads": 2}))
    monkeypatch.setenv("BETAREP_CONFIG", str(cfg))
    _, _, err = run(["convert", odgt], capsys)
    eff = json.loads(err)["config"]
    assert eff["grid"]["resolution"] == 64 and eff["threads"] == 2 and eff["nms"]["kl_threshold"] == 6.0
    # flags win over the file
    _, _, err = run(["convert", odgt, "--grid", 32, "--threads", 1], capsys)
    eff = json.loads(err)["config"]
    assert eff["grid"]["resolution"] == 32 and eff["threads"] == 1

    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"grid": {"cells": 64}}))
    code, _, err = run(["convert", odgt, "--config", bad], capsys)
    assert code == 1 and "cells" in err
    bad.write_text("{")
    assert run(["convert", odgt, "--config", bad], capsys)[0] == 1


def test_internal_error_exit_2(odgt, capsys, monkeypatch):
    def boom(*a, **k):
        raise RuntimeError("broken invariant")

    monkeypatch.setattr(cli, "boxes_to_beta", boom)
    code, _, err = run(["convert", odgt], capsys)
    assert code == 2 and "broken invariant" in err


def test_console_script(tmp_path):
    r = subprocess.run([sys.executable, "-m", "betarep.cli", "synth", "--scenes", "2"], capture_output=True, text=True)
    assert r.returncode == 0
    assert len(r.stdout.splitlines()) == 2
