import csv
import io
import json

import pytest

from sp2index.cli import main, run_bott_trials


def _run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_index_mathieu_elliptic(capsys):
    code, out, _ = _run(capsys, "index", "--builtin", "mathieu", "--omega2", "2.25", "--eps", "0", "--m", "2")
    d = json.loads(out)
    assert code == 0 and d["i1"] == 1 and d["i2"] == 3 and d["stability"] == "Elliptic"


def test_index_constant_hyperbolic(capsys):
    code, out, _ = _run(capsys, "index", "--builtin", "constant-S", "--entries", "1,0,0,-1", "--T", "1")
    d = json.loads(out)
    assert code == 0 and d["i1"] == 0 and d["stability"] == "HyperbolicPositive"


def test_index_integer_omega_refused(capsys):
    code, out, err = _run(capsys, "index", "--builtin", "mathieu", "--omega2", "1", "--eps", "0", "--m", "1")
    assert code == 2
    assert "iterate 2" in err and "3.14159" in err
    assert json.loads(out)["i2"] is None


def test_index_schedule_file(tmp_path, capsys):
    sched = tmp_path / "s.json"
    sched.write_text(json.dumps({"breaks": [0.0, 0.5, 1.0], "mats": [[[2, 0], [0, 2]], [[1, 0], [0, 1]]]}))
    code, out, _ = _run(capsys, "index", "--schedule", str(sched))
    assert code == 0 and json.loads(out)["i1"] == 1  # rotation by 1.5 rad
    sched.write_text("{\"breaks\": [0, 1]}")
    assert _run(capsys, "index", "--schedule", str(sched))[0] == 1


def test_index_malformed_input(capsys):
    assert _run(capsys, "index", "--builtin", "constant-S", "--entries", "1,2")[0] == 1
    assert _run(capsys, "index", "--builtin", "constant-S", "--entries", "1,2,0,1")[0] == 1  # not symmetric
    assert _run(capsys, "index")[0] == 1
    assert _run(capsys, "nosuchcommand")[0] == 1


def test_scan_rows_and_order(tmp_path, capsys):
    code, _, err = _run(
        capsys, "mathieu-scan", "--omega2", "0.5:5:10", "--eps", "0:1:5", "--csv", "scan.csv",
        "--json", "scan.json", "--outdir", str(tmp_path), "--jobs", "2",
    )
    assert code == 0 and "50 cells" in err
    rows = list(csv.DictReader(open(tmp_path / "scan.csv")))
    assert len(rows) == 50
    keys = [(float(r["eps"]), float(r["omega2"])) for r in rows]
    assert keys == sorted(keys)
    assert len(json.loads((tmp_path / "scan.json").read_text())) == 50


def test_scan_malformed_grid(capsys):
    assert _run(capsys, "mathieu-scan", "--omega2", ",", "--eps", "0:1:2")[0] == 1
    assert _run(capsys, "mathieu-scan", "--omega2", "a:b", "--eps", "0:1:2")[0] == 1
    assert _run(capsys, "mathieu-scan", "--omega2", "0:1:0", "--eps", "0:1:2")[0] == 1


def test_curves_first_tongue(capsys):
    code, out, _ = _run(capsys, "mathieu-curves", "--n-max", "1", "--eps-max", "0.1", "--step", "0.05")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0
    end = {r["branch"]: float(r["omega2"]) for r in rows if float(r["eps"]) == 0.1}
    assert abs(end["left"] - 0.95) < 0.01 and abs(end["right"] - 1.05) < 0.01


def test_crossection_sequences(capsys):
    code, out, err = _run(capsys, "mathieu-crossection", "--eps", "0.5")
    assert code == 0
    assert "i2: 1,2,3,4,5,6,7,8,9" in err and "i1: 1,1,1,2,3,3,3,4,5" in err
    assert json.loads(out)["below_first_tip"] is True


def test_pendulum_demo(capsys):
    code, out, err = _run(capsys, "pendulum")
    assert code == 0 and "q2: Elliptic" in err
    assert json.loads(out)["verdicts"]["q2"] == "Elliptic"


def test_pendulum_free(tmp_path, capsys):
    p = tmp_path / "p.json"
    p.write_text(json.dumps({"beta": 0.2, "T": 6.283185307179586, "forcing": {"cos": [], "sin": []}}))
    code, out, _ = _run(capsys, "pendulum", "--problem", str(p))
    d = json.loads(out)
    assert code == 0 and d["q1"]["i1"] == 0 and d["q2"]["i1"] == 1


@pytest.mark.parametrize("beta", ["0", "-0.5"])
def test_pendulum_bad_beta(tmp_path, capsys, beta):
    p = tmp_path / "p.json"
    p.write_text(f'{{"beta": {beta}, "T": 6.283185307179586, "forcing": {{"cos": [0.1]}}}}')
    code, _, err = _run(capsys, "pendulum", "--problem", str(p))
    assert code == 1 and "input error" in err


def test_bott_trials_exact_and_deterministic(capsys):
    code, out, _ = _run(capsys, "bott", "--seed", "7", "--trials", "100", "--m", "2,3")
    d = json.loads(out)
    assert code == 0 and d["all_hold"] and len(d["results"]) == 200
    assert run_bott_trials(7, 100, [2, 3]) == d


def test_bott_zero_trials(capsys):
    code, out, err = _run(capsys, "bott", "--trials", "0")
    assert code == 0 and "vacuous" in err and json.loads(out)["vacuous"] is True


def test_config_file_and_override(tmp_path, capsys):
    conf = tmp_path / "run.conf"
    conf.write_text("# sweep\nbuiltin = mathieu\nomega2 = 2.25\nm = 2\n")
    _, out, _ = _run(capsys, "index", "--config", str(conf))
    assert json.loads(out)["i2"] == 3
    _, out, _ = _run(capsys, "index", "--config", str(conf), "--omega2", "0.25")
    assert json.loads(out)["i2"] == 1
    conf.write_text("bogus = 1\n")
    assert _run(capsys, "index", "--config", str(conf))[0] == 1


def test_outputs_byte_identical(tmp_path, capsys):
    argv = ["mathieu-scan", "--omega2", "0.5:3:4", "--eps", "0:0.5:2", "--outdir", str(tmp_path)]
    main(argv + ["--csv", "a.csv", "--json", "a.json"])
    main(argv + ["--csv", "b.csv", "--json", "b.json", "--jobs", "3"])
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    main(["bott", "--seed", "3", "--trials", "5", "--out", str(tmp_path / "x.json")])
    main(["bott", "--seed", "3", "--trials", "5", "--out", str(tmp_path / "y.json")])
    assert (tmp_path / "x.json").read_bytes() == (tmp_path / "y.json").read_bytes()
    capsys.readouterr()
