import json
import math
import os

import numpy as np
import pytest

from linkfold import sampling
from linkfold.chart import arm_embed
from linkfold.cli import dumps, main, parse_input


def write(tmp_path, name, doc):
    path = tmp_path / name
    path.write_text(doc if isinstance(doc, str) else json.dumps(doc))
    return str(path)


@pytest.fixture
def arm_doc():
    arm = sampling.random_arm(np.random.default_rng(0), 5)
    return {"kind": "arm", "vertices": arm_embed(arm).tolist()}


@pytest.fixture
def cycle_doc():
    pts = sampling.random_simple_polygon(np.random.default_rng(1), 6)
    return {"kind": "cycle", "vertices": pts.tolist()}


def run(capsys, argv):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_straighten_output_document(tmp_path, capsys, arm_doc):
    code, out, err = run(capsys, ["straighten", write(tmp_path, "a.json", arm_doc)])
    assert code == 0 and err == ""
    doc = json.loads(out)
    assert doc["kind"] == "arm" and doc["mode"] == "linkage" and doc["termination"] == "converged"
    times = [f["t"] for f in doc["frames"]]
    assert times == sorted(set(times))
    final = np.array(doc["frames"][-1]["vertices"])
    assert np.allclose(final[:, 1], 0, atol=1e-3)
    assert doc["metadata"]["options"]["step"] == 0.5


def test_output_frames_parse_as_inputs(tmp_path, capsys, cycle_doc):
    code, out, _ = run(capsys, ["convexify", write(tmp_path, "c.json", cycle_doc), "--step", "8", "--frames", "10"])
    assert code == 0
    doc = json.loads(out)
    for frame in doc["frames"]:
        parsed = parse_input(json.dumps({"kind": doc["kind"], "vertices": frame["vertices"]}))
        assert parsed["kind"] == "cycle"


def test_floats_carry_17_digits():
    text = dumps({"x": [1 / 3, 2.0, 1e-20], "n": 3, "ok": True, "none": None, "bad": math.nan})
    assert "0.33333333333333331" in text and "2.0" in text and "9.9999999999999995e-21" in text
    back = json.loads(text)
    assert back["x"][0] == 1 / 3 and back["n"] == 3 and back["ok"] is True and back["bad"] is None


def test_config_convexify_reaches_unit_perimeter(tmp_path, capsys, cycle_doc):
    code, out, _ = run(capsys, ["convexify", write(tmp_path, "c.json", cycle_doc), "--mode", "config",
                                "--grad-tol", "1e-4", "--frames", "50"])
    assert code == 0
    pts = np.array(json.loads(out)["frames"][-1]["vertices"])
    assert np.hypot(*(np.roll(pts, -1, 0) - pts).T).sum() == pytest.approx(1.0, abs=1e-3)


def test_project_cocircular_reports_radius(tmp_path, capsys):
    path = write(tmp_path, "t.json", {"kind": "cycle", "chart": {"lengths": [3, 4, 5], "theta": [math.pi / 2]}})
    code, out, _ = run(capsys, ["project", "cocircular", path])
    assert code == 0
    assert json.loads(out)["metadata"]["circumradius"] == pytest.approx(2.5, abs=1e-12)


def test_project_straight(tmp_path, capsys, arm_doc):
    code, out, _ = run(capsys, ["project", "straight", write(tmp_path, "a.json", arm_doc)])
    pts = np.array(json.loads(out)["frames"][0]["vertices"])
    assert code == 0 and np.allclose(pts[:, 1], 0)


def test_refold_command(tmp_path, capsys):
    rng = np.random.default_rng(19)
    m = int(rng.integers(4, 6))
    a = sampling.random_arm(rng, m)
    b = sampling.random_arm(rng, m, lengths=a.rho)
    p0 = write(tmp_path, "a.json", {"kind": "arm", "vertices": arm_embed(a).tolist()})
    p1 = write(tmp_path, "b.json", {"kind": "arm", "vertices": arm_embed(b).tolist()})
    code, out, _ = run(capsys, ["refold", p0, p1, "--samples", "8", "--svg", str(tmp_path / "svg")])
    doc = json.loads(out)
    assert code == 0 and doc["metadata"]["n0"] >= 1 and doc["metadata"]["all_frames_valid"]
    assert np.allclose(doc["frames"][0]["vertices"], arm_embed(a), atol=1e-12)
    assert len(os.listdir(tmp_path / "svg")) == len(doc["frames"])


@pytest.mark.parametrize(
    "text, message",
    [
        ('{"kind": "arm",\n "vertices": [[0, 0], [1, 0]\n', "line 3"),
        ('[1, 2]', "top level"),
        ('{"kind": "tri", "vertices": [[0, 0], [1, 0]]}', "field 'kind'"),
        ('{"kind": "arm"}', "exactly one"),
        ('{"kind": "arm", "vertices": [[0, 0], [1, "x"]]}', "vertices[1][1]"),
        ('{"kind": "arm", "vertices": [[0, 0], [1, 0]], "colour": 1}', "unknown field"),
        ('{"kind": "arm", "vertices": [[0, 0], [2, 0], [1, 1], [1, -1]]}', "not self-avoiding"),
        ('{"kind": "cycle", "vertices": [[0, 0], [1, 1], [1, 0], [0, 1]]}', "not self-avoiding"),
        ('{"kind": "cycle", "chart": {"lengths": [1, 1, 5], "theta": [0.1]}}', "infeasible lengths"),
        ('{"kind": "cycle", "vertices": [[0, 0], [0, 1], [1, 1], [1, 0]]}', "counterclockwise"),
        ('{"kind": "arm", "vertices": [[0, 0], [1, 0]], "seed": 1.5}', "seed"),
    ],
)
def test_validation_errors_exit_1(tmp_path, capsys, text, message):
    code, out, err = run(capsys, ["straighten", write(tmp_path, "bad.json", text)])
    assert code == 1 and out == ""
    assert message in err


def test_missing_file_and_wrong_kind(tmp_path, capsys, cycle_doc):
    code, _, err = run(capsys, ["straighten", str(tmp_path / "nope.json")])
    assert code == 1 and "nope.json" in err
    code, _, err = run(capsys, ["straighten", write(tmp_path, "c.json", cycle_doc)])
    assert code == 1 and "arm" in err


def test_non_convergence_exit_2(tmp_path, capsys, arm_doc):
    code, out, _ = run(capsys, ["straighten", write(tmp_path, "a.json", arm_doc), "--t-max", "0.01"])
    assert code == 2
    assert json.loads(out)["termination"] == "t_max_reached"


def test_unwritable_svg_directory(tmp_path, capsys, arm_doc):
    blocker = write(tmp_path, "blocker", "x")
    code, _, err = run(capsys, ["straighten", write(tmp_path, "a.json", arm_doc), "--svg", blocker])
    assert code == 1 and "SVG" in err


def test_logging_goes_to_stderr(tmp_path, capsys, monkeypatch, arm_doc):
    monkeypatch.setenv("LINKFOLD_LOG", "debug")
    code, out, err = run(capsys, ["straighten", write(tmp_path, "a.json", arm_doc)])
    assert code == 0 and "converged" in err
    json.loads(out)
    monkeypatch.setenv("LINKFOLD_LOG", "off")
    _, _, err = run(capsys, ["straighten", write(tmp_path, "a.json", arm_doc)])
    assert err == ""


def test_verify_subset_counts(capsys, monkeypatch):
    from linkfold import verify

    monkeypatch.setattr(verify, "CHECKS", [c for c in verify.CHECKS if c[0] in ("triangle-calculus", "max-area")])
    code, out, _ = run(capsys, ["verify", "--seed", "4"])
    doc = json.loads(out)
    assert code == 0 and doc["passed"] == 2 and doc["failed"] == 0 and doc["seed"] == 4
