import csv
import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from wetting import cli


def _rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_grid_parsing():
    g = cli.parse_grid("1.0:8.0:0.05")
    assert len(g) == 141 and g[0] == 1.0
    np.testing.assert_allclose(g[-1], 8.0)
    assert cli.parse_grid("0.1, 0.2,0.3") == [0.1, 0.2, 0.3]
    assert cli.parse_grid("3") == [3.0]
    with pytest.raises(cli.ConfigError):
        cli.parse_grid("1:0:0.1")
    with pytest.raises(cli.ConfigError):
        cli.parse_grid("a:b:c")


def test_phase_diagram_outputs(tmp_path):
    code = cli.run(["phase-diagram", "--family", "lazy", "--gamma", "0.4",
                    "--lambda", "1.0:8.0:0.05", "--output-dir", str(tmp_path)])
    assert code == 0
    rows = _rows(tmp_path / "phase-diagram.csv")
    assert rows[0] == ["lambda", "F", "a_c", "band"]
    assert len(rows) == 142
    first, last = rows[1], rows[-1]
    assert first[3] == "delocalized" and float(first[2]) == 0.0
    assert last[3] == "cramer" and 0 < float(last[2]) < 0.5
    # curve is increasing past lambda_c
    ac = np.array([float(r[2]) for r in rows[1:]])
    assert np.all(np.diff(ac) >= 0)
    root = ET.parse(tmp_path / "phase-diagram.svg").getroot()
    assert root.tag.endswith("svg")
    summary = json.loads((tmp_path / "phase-diagram.json").read_text())
    np.testing.assert_allclose(summary["summary"]["lambda_c"], 1 / 0.6, rtol=1e-14)


def test_floats_round_trip(tmp_path):
    assert cli.run(["free-energy", "--lambda", "3", "--output-dir", str(tmp_path)]) == 0
    row = _rows(tmp_path / "free-energy.csv")[1]
    assert float(row[1]) == float(repr(float(row[1])))
    np.testing.assert_allclose(float(row[1]), float(row[2]), rtol=1e-14)


def test_sample_is_byte_identical(tmp_path):
    args = ["sample", "--N", "1000", "--lambda", "3", "--a", "0.05", "--paths", "20", "--seed", "7"]
    assert cli.run(args + ["--output-dir", str(tmp_path / "a")]) == 0
    assert cli.run(args + ["--output-dir", str(tmp_path / "b")]) == 0
    for name in ("sample.csv", "sample-heights.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    rows = _rows(tmp_path / "a" / "sample.csv")
    assert rows[0] == ["path", "wet", "L", "R", "H", "min_height", "max_height"]
    assert all(int(r[5]) >= -50 for r in rows[1:])


def test_worker_pool_keeps_grid_order(tmp_path, monkeypatch):
    args = ["well-spectrum", "--lambda", "3", "--a", "0:0.3:0.05"]
    assert cli.run(args + ["--output-dir", str(tmp_path / "one")]) == 0
    monkeypatch.setenv(cli.THREADS_ENV, "4")
    assert cli.run(args + ["--output-dir", str(tmp_path / "four")]) == 0
    assert (tmp_path / "one" / "well-spectrum.csv").read_bytes() == (tmp_path / "four" / "well-spectrum.csv").read_bytes()


def test_config_file(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[common]\nfamily = almost_geometric\ntheta = 3\n\n[phase-diagram]\nlambda = 1.0:2.0:0.5\n")
    assert cli.run(["phase-diagram", "--config", str(cfg), "--output-dir", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "phase-diagram.csv")
    assert [r[3] for r in rows[1:]] == ["delocalized", "saturated_both", "saturated_both"]


@pytest.mark.parametrize("text", [
    "[common]\nfamily = lazy\ncolour = blue\n",
    "[plots]\nfamily = lazy\n",
    "[phase-diagram]\nseed = 3\nlambda = 2\n",
])
def test_bad_config_exits_2(tmp_path, capsys, text):
    cfg = tmp_path / "bad.ini"
    cfg.write_text(text)
    assert cli.run(["phase-diagram", "--config", str(cfg), "--output-dir", str(tmp_path)]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["status"] == "error" and err["exit_code"] == 2


def test_flag_errors_exit_2(tmp_path, capsys):
    assert cli.run(["sample", "--bogus", "1"]) == 2
    assert cli.run(["phase-diagram", "--output-dir", str(tmp_path)]) == 2
    assert cli.run(["phase-diagram", "--family", "cauchy", "--lambda", "2"]) == 2
    assert cli.run(["rate-function", "--family", "zeta", "--x", "0.1"]) == 2
    capsys.readouterr()


def test_domain_error_exits_1(tmp_path, capsys):
    assert cli.run(["contact-law", "--lambda", "1.2", "--N", "50", "--output-dir", str(tmp_path)]) == 1
    err = json.loads(capsys.readouterr().err)
    assert err["kind"] == "domain"
    assert cli.run(["verify-gaussian", "--lambda", "3", "--a", "0.3", "--N", "100",
                    "--output-dir", str(tmp_path)]) == 1


def test_oracle_family_free_energy(tmp_path):
    assert cli.run(["free-energy", "--family", "zeta", "--alpha", "1.5", "--lambda", "2:4:1",
                    "--output-dir", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "free-energy.csv")
    assert len(rows) == 4 and float(rows[-1][1]) > float(rows[1][1]) > 0


def test_other_commands(tmp_path):
    out = ["--output-dir", str(tmp_path)]
    assert cli.run(["rate-function", "--family", "geometric", "--x", "0:2:0.25"] + out) == 0
    assert cli.run(["contact-law", "--lambda", "3", "--N", "200"] + out) == 0
    assert cli.run(["verify-gaussian", "--lambda", "3", "--a", "0.05", "--N", "400"] + out) == 0
    s = json.loads((tmp_path / "verify-gaussian.json").read_text())["summary"]
    np.testing.assert_allclose(s["constants"]["sigma1"] ** 2, 0.7 / 3, rtol=1e-10)
    assert len(_rows(tmp_path / "rate-function.csv")) == 10


def test_verify_subset(tmp_path, capsys):
    assert cli.run(["verify", "--checks", "1,8", "--output-dir", str(tmp_path)]) == 0
    printed = capsys.readouterr().out.strip().splitlines()
    assert len(printed) == 2 and all(line.startswith("[PASS]") for line in printed)
    summary = json.loads((tmp_path / "verify.json").read_text())["summary"]
    assert summary["all_passed"]
