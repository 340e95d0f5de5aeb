import json
import math
import subprocess
import sys

import numpy as np
import pytest

from switchyield.bounds import gamma_markov, gamma_star
from switchyield.cli import main
from switchyield.gibbs_maps import complete_thermalization, gs3_inf_from_params
from switchyield.thermo import PhotoisomerInstance, ThermalSystem, gibbs_state


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_bounds_json(capsys):
    code, out, _ = run(capsys, "bounds", "--delta", "1", "--w", "3", "--q", "0.5", "--format", "json")
    assert code == 0
    d = json.loads(out)
    assert d["gamma_star"] == pytest.approx(0.659046, abs=1e-6)
    assert d["gamma_embed"] is None


def test_bounds_infinite_level(capsys):
    code, out, _ = run(capsys, "bounds", "--delta", "1", "--w", "inf", "--q", "1", "--format", "json")
    d = json.loads(out)
    assert code == 0 and d["gamma_star"] == 1.0 and d["w"] == "inf"


def test_bounds_text(capsys):
    code, out, _ = run(capsys, "bounds", "--delta", "1", "--w", "3", "--q", "0.5")
    assert code == 0 and "gamma_markov" in out


@pytest.mark.parametrize("argv", [
    ["bounds", "--delta", "1", "--w", "3", "--q", "1.5"],
    ["bounds", "--delta", "2", "--w", "1", "--q", "0.5"],
    ["bounds", "--delta", "1", "--w", "abc", "--q", "0.5"],
    ["nonsense"],
])
def test_usage_errors(capsys, argv):
    with pytest.raises(SystemExit) as exc:
        code = main(argv)
        raise SystemExit(code)
    assert exc.value.code == 2


SWEEP = ["sweep", "--delta-min", "0.1", "--delta-max", "6", "--steps", "60", "--q", "0,0.4,0.7,1.0", "--w", "inf"]


def test_sweep_csv(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    code, _, _ = run(capsys, *SWEEP, "--out", str(out))
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "delta,q,w,gamma_star,gamma_markov,gamma_embed,gamma_th"
    assert len(lines) == 241
    for line in lines[1:]:
        _, _, w, gs, gm, ge, gt = line.split(",")
        assert w == "inf"
        gs, gm, ge, gt = map(float, (gs, gm, ge, gt))
        assert gt <= ge + 1e-6 <= gm + 2e-6 <= gs + 3e-6


def test_sweep_byte_stable(tmp_path, capsys, monkeypatch):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run(capsys, *SWEEP, "--out", str(a))
    monkeypatch.setenv("SWITCHYIELD_WORKERS", "3")
    run(capsys, *SWEEP, "--out", str(b))
    assert a.read_bytes() == b.read_bytes()


def test_sweep_finite_w_leaves_embed_empty(capsys):
    code, out, _ = run(capsys, "sweep", "--delta-min", "0.5", "--delta-max", "1", "--steps", "2",
                       "--q", "0,1", "--w", "3")
    rows = out.splitlines()
    assert code == 0 and len(rows) == 1 + 2 * 2
    assert all(r.split(",")[5] == "" for r in rows[1:])


def test_sweep_errors(tmp_path, capsys):
    code, _, _ = run(capsys, "sweep", "--delta-min", "0.5", "--delta-max", "1", "--steps", "2",
                     "--q", "0", "--w", "3", "--outputs", "gamma_embed")
    assert code == 2
    code, _, _ = run(capsys, "sweep", "--delta-min", "0.5", "--delta-max", "1", "--steps", "2",
                     "--q", "0", "--w", "3", "--out", str(tmp_path / "missing" / "x.csv"))
    assert code == 3


def write(path, doc):
    path.write_text(json.dumps(doc))
    return str(path)


def test_check_embeddable(tmp_path, capsys):
    s = ThermalSystem((0.0, 1.0, 3.0))
    ident = write(tmp_path / "id.json", {"energies": [0, 1, 3], "matrix": np.eye(3).tolist()})
    code, out, _ = run(capsys, "check-embeddable", ident)
    assert code == 0 and json.loads(out)["verdict"] == "EMBEDDABLE"

    full = write(tmp_path / "full.json", complete_thermalization(s).to_dict())
    code, out, _ = run(capsys, "check-embeddable", full)
    assert code == 1 and json.loads(out)["reason"] == "zero eigenvalue"

    small = write(tmp_path / "c.json", gs3_inf_from_params(0.3, 0.001, 0.5, 1.0).to_dict())
    code, out, _ = run(capsys, "check-embeddable", small)
    assert code == 1 and json.loads(out)["clause"] == "c"

    cyc = 0.1 * np.eye(3) + 0.9 * np.eye(3)[[1, 2, 0]]
    und = write(tmp_path / "u.json", {"energies": [0, 0, 0], "matrix": cyc.tolist()})
    code, _, _ = run(capsys, "check-embeddable", und)
    assert code == 4


def test_check_embeddable_bad_files(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(capsys, "check-embeddable", str(bad))[0] == 2
    wrong = write(tmp_path / "w.json", {"energies": [0, 1, 3], "matrix": [[0.5, 0.5, 0], [0.5, 0.5, 0], [0, 0, 1]]})
    assert run(capsys, "check-embeddable", wrong)[0] == 2
    assert run(capsys, "check-embeddable", str(tmp_path / "none.json"))[0] == 3


def test_check_ctm(tmp_path, capsys):
    inst = PhotoisomerInstance(1.0, 3.0, 0.5)
    start = write(tmp_path / "p0.json", {"energies": [0, 1, 3], "populations": inst.initial_state.tolist()})
    code, out, _ = run(capsys, "check-ctm", "--initial", start, "--target", start)
    assert code == 0 and json.loads(out)["witness"] == []

    gibbs = write(tmp_path / "g.json", {"energies": [0, 1, 3], "populations": gibbs_state(inst.system).tolist()})
    code, out, _ = run(capsys, "check-ctm", "--initial", start, "--target", gibbs)
    assert code == 0 and json.loads(out)["witness"]

    gs = gamma_star(inst)
    star = write(tmp_path / "s.json", {"energies": [0, 1, 3], "populations": [1 - gs, gs, 0.0]})
    code, _, err = run(capsys, "check-ctm", "--initial", start, "--target", star, "--yield-level", "1")
    assert code == 1 and "not found at resolution" in err

    gm = gamma_markov(inst) - 0.01
    near = write(tmp_path / "m.json", {"energies": [0, 1, 3], "populations": [1 - gm, gm, 0.0]})
    code, out, _ = run(capsys, "check-ctm", "--initial", start, "--target", near, "--yield-level", "1")
    assert code == 0
    assert all(set(s) == {"pair", "lambda"} for s in json.loads(out)["witness"])


def test_check_ctm_mismatched_energies(tmp_path, capsys):
    a = write(tmp_path / "a.json", {"energies": [0, 1, 3], "populations": [1, 0, 0]})
    b = write(tmp_path / "b.json", {"energies": [0, 1, 4], "populations": [1, 0, 0]})
    assert run(capsys, "check-ctm", "--initial", a, "--target", b)[0] == 2


def test_verify_suite(capsys):
    code, out, _ = run(capsys, "verify", "gs3")
    assert code == 0 and "criterion 1" in out and "PASS" in out
    assert run(capsys, "verify", "bogus")[0] == 2


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "switchyield", "bounds", "--delta", "1", "--w", "inf",
                          "--q", "0", "--format", "json"], capture_output=True, text=True)
    assert res.returncode == 0
    assert json.loads(res.stdout)["gamma_markov"] == pytest.approx(math.exp(-1) / (1 + math.exp(-1)))
