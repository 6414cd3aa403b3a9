import subprocess
import sys

import numpy as np
import pytest

from oracles import glued_dense, literal_H, scan_component
from slabwalk.cli import main
from slabwalk.config import ConfigError, parse_config

DESK = """\
d = 2
s = 1
scales = 2
gamma_cap = 1
first_scale = 1
delta_override = 0.01
constants_horizon = 8
box_radius = {radius}
T = {T}
"""

Z3_REPORT = """\
delmotte [10,32] 1.06565 3 PASS
volume_doubling [1,16] 7.61592 9 PASS
poincare [4,8,16] 1.70497 2 PASS
lazy_smoothing [8,16,32] 3.31781 2 FAIL
"""


def run(tmp_path, command, text, name="run.cfg"):
    cfg = tmp_path / name
    cfg.write_text(text)
    return main([command, "--config", str(cfg), "--out", str(tmp_path / "out"), "--quiet"])


def read_csv(path):
    lines = path.read_text().splitlines()
    return lines[0], [line.split(",") for line in lines[1:]]


def test_parse_config_basics():
    cfg = parse_config("d = 3  # comment\ns=1\nchecks = delmotte, poincare\npoincare_radii = 2 4\n")
    assert cfg.d == 3 and cfg.checks == ("delmotte", "poincare") and cfg.poincare_radii == (2, 4)
    assert parse_config("checks =\n").checks == ()
    for bad in ("colour = red\n", "d = 2\nd = 3\n", "d two\n", "d = 2\ns = 2\n", "T = x\n"):
        with pytest.raises(ConfigError):
            parse_config(bad)


def test_schedule_desk(tmp_path):
    assert run(tmp_path, "schedule", DESK.format(radius=20, T=19)) == 0
    assert (tmp_path / "out" / "schedule.txt").read_text() == "1 2 2 0 0\n2 12 14 1 1\n"
    constants = (tmp_path / "out" / "constants.txt").read_text().splitlines()
    assert constants[0].startswith("# k horizon") and constants[1].startswith("2 8 ")


def test_schedule_single_scale(tmp_path):
    text = DESK.format(radius=20, T=19).replace("scales = 2", "scales = 1")
    assert run(tmp_path, "schedule", text) == 0
    assert (tmp_path / "out" / "schedule.txt").read_text() == "1 2 2 0 0\n"
    assert (tmp_path / "out" / "constants.txt").read_text().count("\n") == 1


def test_schedule_d22_hits_resource_guard(tmp_path):
    assert run(tmp_path, "schedule", "d = 22\ns = 3\nscales = 3\n") == 3
    assert (tmp_path / "out" / "schedule.txt").read_text() == "1 2 2 0 0\n"


def test_unknown_key_exits_2(tmp_path):
    assert run(tmp_path, "schedule", "d = 2\nwarp = 9\n") == 2


def test_missing_schedule_exits_2(tmp_path):
    assert run(tmp_path, "build", DESK.format(radius=20, T=19)) == 2


def test_recurrent_halves_need_delta(tmp_path):
    text = DESK.format(radius=20, T=19).replace("delta_override = 0.01\n", "")
    assert run(tmp_path, "schedule", text) == 0
    assert run(tmp_path, "build", text) == 2


def test_build_and_experiment_match_dense(tmp_path):
    text = DESK.format(radius=20, T=19)
    assert run(tmp_path, "schedule", text) == 0
    assert run(tmp_path, "build", text) == 0
    out = tmp_path / "out"
    header = (out / "G.graph").read_text().splitlines()[0].split()
    assert run(tmp_path, "experiment", text) == 0
    head, rows = read_csv(out / "ratio.csv")
    assert head == "t,p_xx,p_yy,ratio" and len(rows) == 20

    a, b = (2, 12), (2, 14)
    halves = [
        scan_component(lambda p, par=par: literal_H(p, par, 2, a, b, 1, 2, first_scale=1), 20, 2)
        for par in ("even", "odd")
    ]
    walk, x, y = glued_dense(halves[0], halves[1], 0.01)
    assert int(header[1]) == len(halves[0]) + len(halves[1])
    p_xx = walk.row_series(x, 19)[:, x]
    p_yy = walk.row_series(y, 19)[:, y]
    got = np.array([[float(v) for v in row] for row in rows])
    assert np.max(np.abs(got[:, 1] - p_xx)) <= 1e-12
    assert np.max(np.abs(got[:, 2] - p_yy)) <= 1e-12
    assert (out / "nk.txt").read_text().startswith("nk k=2 t=1 ")


def test_symmetric_sides_give_unit_ratio(tmp_path):
    text = DESK.format(radius=20, T=19) + "sides = ee\n"
    assert run(tmp_path, "schedule", text) == 0
    assert run(tmp_path, "experiment", text) == 0
    _, rows = read_csv(tmp_path / "out" / "ratio.csv")
    assert all(abs(float(r[3]) - 1) <= 1e-13 for r in rows)


def test_T_zero_single_row(tmp_path):
    text = DESK.format(radius=20, T=0)
    assert run(tmp_path, "schedule", text) == 0
    assert run(tmp_path, "experiment", text) == 0
    assert (tmp_path / "out" / "ratio.csv").read_text() == "t,p_xx,p_yy,ratio\n0,1,1,1\n"


def test_horizon_short_of_T(tmp_path):
    text = DESK.format(radius=20, T=40)
    assert run(tmp_path, "schedule", text) == 0
    assert run(tmp_path, "experiment", text) == 3
    assert run(tmp_path, "experiment", text + "allow_approximate = true\n") == 0
    _, rows = read_csv(tmp_path / "out" / "ratio.csv")
    assert rows[19][-1] != "*" and rows[20][-1] == "*"


def test_kernel_and_decompose(tmp_path):
    text = DESK.format(radius=20, T=19) + "decompose_gamma = 2\ndecompose_times = 6 12\n"
    assert run(tmp_path, "schedule", text) == 0
    assert run(tmp_path, "kernel", text) == 0
    head, rows = read_csv(tmp_path / "out" / "kernel.csv")
    assert head == "t,p_e,f_e,p_o,f_o" and rows[1][1:] == ["0.5", "0.5", "0.5", "0.5"]
    assert run(tmp_path, "decompose", text) == 0
    head, rows = read_csv(tmp_path / "out" / "decompose.csv")
    assert head == "t,p1,p2,p3,p12,p_yy" and [r[0] for r in rows] == ["6", "12"]
    for r in rows:
        p1, p2, p3, p12, p_yy = map(float, r[1:])
        assert p1 == pytest.approx(p2, abs=1e-14) and p3 >= -1e-10


def test_verify_z3_golden(tmp_path):
    text = "d = 3\ns = 1\nbox_radius = 33\nT = 32\nverify_graph = lattice\n"
    status = run(tmp_path, "verify", text)
    assert (tmp_path / "out" / "report.txt").read_text() == Z3_REPORT
    assert status == 1


def test_verify_wrong_exponent_fails(tmp_path):
    text = "d = 3\ns = 1\nbox_radius = 33\nT = 32\nd_eff = 6\nchecks = delmotte\n"
    assert run(tmp_path, "verify", text) == 1
    assert (tmp_path / "out" / "report.txt").read_text().startswith("delmotte [10,32] ")
    assert "FAIL" in (tmp_path / "out" / "report.txt").read_text()


def test_verify_empty_checks(tmp_path):
    assert run(tmp_path, "verify", "d = 3\ns = 1\nchecks =\n") == 0
    assert (tmp_path / "out" / "report.txt").read_text() == ""


def test_module_entry_point(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("d = 2\nnope = 1\n")
    proc = subprocess.run(
        [sys.executable, "-m", "slabwalk", "schedule", "--config", str(cfg), "--out", str(tmp_path)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 2 and "unknown key" in proc.stderr
