import json
import math

import numpy as np
import pytest

from fockwalk.cli import (
    EXIT_CONFIG,
    EXIT_OK,
    ConfigError,
    main,
    parse_angle,
    parse_phi,
    read_config_file,
)


@pytest.mark.parametrize("text,expected", [
    ("pi/2", math.pi / 2),
    ("-2pi/3", -2 * math.pi / 3),
    ("3pi/4", 3 * math.pi / 4),
    ("2pi", 2 * math.pi),
    ("-pi", -math.pi),
    ("0", 0.0),
    ("0.25pi", 0.25 * math.pi),
    ("1.5", 1.5),
    ("PI / 8", math.pi / 8),
])
def test_parse_angle(text, expected):
    assert parse_angle(text) == pytest.approx(expected, abs=1e-15)


def test_parse_angle_rejects_garbage():
    with pytest.raises(ConfigError):
        parse_angle("two pies")


def test_parse_phi_is_exact():
    assert parse_phi("0").phi == 0.0
    assert parse_phi("pi").phi == math.pi
    with pytest.raises(ConfigError):
        parse_phi("pi/2")


def test_config_file_roundtrip(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\ntheta1 = pi/2\ntheta2=0  # inline\nsteps=12\n")
    pairs = read_config_file(str(cfg))
    assert pairs == {"theta1": "pi/2", "theta2": "0", "steps": "12"}


def test_walk_outputs_and_determinism(tmp_path):
    out1 = tmp_path / "a.csv"
    out2 = tmp_path / "b.csv"
    args = ["walk", "theta1=pi/2", "theta2=0", "phi=0", "steps=40"]
    assert main(args + ["--out", str(out1)]) == EXIT_OK
    assert main(args + ["--out", str(out2)]) == EXIT_OK
    assert out1.read_bytes() == out2.read_bytes()
    lines = out1.read_text().splitlines()
    assert lines[0] == "step,p_edge,sx0,sx1,mean_n,var_n,norm"
    assert len(lines) == 42  # header + steps 0..40


def test_walk_json_mirror_has_identical_values(tmp_path):
    out = tmp_path / "w.csv"
    mirror = tmp_path / "w.json"
    main(["walk", "theta1=pi/2", "theta2=pi/4", "steps=20",
          "--out", str(out), "--json", str(mirror)])
    rows = json.loads(mirror.read_text())
    lines = out.read_text().splitlines()[1:]
    assert len(rows) == len(lines)
    last = lines[-1].split(",")
    assert float(last[1]) == rows[-1]["p_edge"]


def test_walk_distribution_schema(tmp_path):
    out = tmp_path / "w.csv"
    dist = tmp_path / "d.csv"
    main(["walk", "theta1=pi/2", "theta2=0", "steps=20",
          "--out", str(out), "--dist-out", str(dist)])
    lines = dist.read_text().splitlines()
    assert lines[0] == "n,p_n,re_a,im_a,re_b,im_b"
    total = sum(float(line.split(",")[1]) for line in lines[1:])
    assert total == pytest.approx(1.0, abs=1e-9)


def test_walk_rejects_unknown_keys(tmp_path):
    code = main(["walk", "theta1=pi/2", "bogus=1", "--out", str(tmp_path / "x.csv")])
    assert code == EXIT_CONFIG


def test_empty_config_is_an_error(tmp_path):
    assert main(["walk", "--out", str(tmp_path / "x.csv")]) == EXIT_CONFIG


def test_sweep_parallel_serial_equivalence(tmp_path):
    serial = tmp_path / "serial.csv"
    parallel = tmp_path / "parallel.csv"
    args = ["sweep", "theta1=pi/2", "theta2=-5pi/8,-3pi/8,pi/8,3pi/8", "steps=40"]
    assert main(args + ["--out", str(serial), "--workers", "1"]) == EXIT_OK
    assert main(args + ["--out", str(parallel), "--workers", "4"]) == EXIT_OK
    assert serial.read_bytes() == parallel.read_bytes()


def test_sweep_single_point_matches_walk(tmp_path):
    sweep_out = tmp_path / "s.csv"
    walk_out = tmp_path / "w.csv"
    main(["sweep", "theta1=pi/2", "theta2=pi/8", "steps=30", "--out", str(sweep_out)])
    main(["walk", "theta1=pi/2", "theta2=pi/8", "steps=30", "--out", str(walk_out)])
    p_sweep = float(sweep_out.read_text().splitlines()[1].split(",")[4])
    p_walk = float(walk_out.read_text().splitlines()[-1].split(",")[1])
    assert p_sweep == p_walk


def test_quench_scenario_runs(tmp_path):
    out = tmp_path / "q.csv"
    assert main(["quench", "scenario=fig6b", "--out", str(out)]) == EXIT_OK
    final = float(out.read_text().splitlines()[-1].split(",")[1])
    assert final > 0.05


def test_quench_unknown_scenario(tmp_path):
    assert main(["quench", "scenario=nope", "--out", str(tmp_path / "q.csv")]) == EXIT_CONFIG


def test_eigen_table(tmp_path):
    out = tmp_path / "e.csv"
    assert main(["eigen", "theta1=pi/2", "theta2=0", "--out", str(out)]) == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[0] == "mode_class,eigenphase,edge_weight,p0,p1,ratio10,ratio21"
    assert len(lines) == 2 and lines[1].startswith("zero,")
    ratio = float(lines[1].split(",")[5])
    assert ratio == pytest.approx((math.sqrt(2) - 1) ** 2, abs=1e-10)


def test_pulse_verify_report(tmp_path, capsys):
    assert main(["pulse-verify", "theta1=pi/2", "theta2=pi/4", "n_max=6",
                 "tau=100", "dt=0.004"]) == EXIT_OK
    payload = json.loads(capsys.readouterr().out)
    assert payload["step_deviation"] < 1e-12
    assert payload["adiabatic"] is True


def test_phase_diagram_csv(tmp_path):
    out = tmp_path / "pd.csv"
    assert main(["phase-diagram", "grid=8", "n_k=512", "--out", str(out),
                 "--workers", "1"]) == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[0] == "theta1,theta2,nu0,nu_pi,delta0,delta_pi,status"
    labels = set()
    for line in lines[1:]:
        parts = line.split(",")
        if parts[-1] == "ok":
            labels.add((int(parts[2]), int(parts[3])))
    assert labels == {(0, 0), (0, 1), (1, 0), (1, 1)}


def test_output_files_use_lf_line_endings(tmp_path):
    out = tmp_path / "w.csv"
    main(["walk", "theta1=pi/2", "theta2=0", "steps=5", "--out", str(out)])
    raw = out.read_bytes()
    assert b"\r" not in raw
    assert raw.decode("utf-8")
