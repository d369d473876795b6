import json
import subprocess
import sys

import pytest

from revtorus.cli import COMMANDS, build_parser, config_hash, main


def _bad_config(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"profile": {"x": {"a0": 0.5, "cos": [1.0]},
                                            "y": {"a0": 0.0, "sin": [1.0]}}}))
    return path


def _manifest(out, command):
    return json.loads((out / f"{command}.manifest.json").read_text())


def test_parser_knows_every_command():
    p = build_parser()
    for c in COMMANDS:
        assert p.parse_args([c]).command == c


def test_validate_profile_canonical(tmp_path):
    assert main(["validate-profile", "--out", str(tmp_path)]) == 0
    man = _manifest(tmp_path, "validate-profile")
    assert man["diagnostics"]["n_critical_points"] == 2
    assert man["config_hash"] == config_hash(man["config"])
    assert man["outputs"] == ["critical_points.csv"]
    for key in ("versions", "timings", "config"):
        assert key in man


def test_validate_profile_not_positive(tmp_path):
    code = main(["validate-profile", "--config", str(_bad_config(tmp_path)),
                 "--out", str(tmp_path / "o")])
    assert code == 1
    assert "NotPositive" in _manifest(tmp_path / "o", "validate-profile")["error"]


def test_unknown_config_key(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"colour": "red"}))
    assert main(["orbits", "--config", str(path), "--out", str(tmp_path)]) == 1


def test_nonpositive_tolerance(tmp_path):
    assert main(["orbits", "--tol", "-1", "--out", str(tmp_path)]) == 1


def test_numerical_failure_maps_to_2(tmp_path):
    # Tiny eps with few samples saturates every window.
    code = main(["entropy", "--samples", "40", "--t-max", "20", "--eps", "0.02",
                 "--out", str(tmp_path)])
    assert code == 2
    assert "Saturated" in _manifest(tmp_path, "entropy")["error"]


def test_non_generating_set_is_validation_error(tmp_path):
    assert main(["group-growth", "--generators", "2,0;0,1", "--out", str(tmp_path)]) == 1


@pytest.mark.parametrize("args, name, header", [
    (["orbits"], "orbits.csv",
     "sCrit,xValue,thetaBranch,kind,period,floquetRe1,floquetIm1,floquetRe2,floquetIm2,"
     "floquetRe3,floquetIm3"),
    (["actions", "--n-rho", "3"], "actions.csv",
     "e,rho,i1,i2,tau,phiAdvance,tauOracle,phiOracle,relErrTau,relErrPhi"),
    (["stable-norm"], "stable_norm.csv", "rho,X,Y"),
    (["volume"], "volume.csv", "Vg_quadrature,Vg_shoelace,relGap"),
    (["asymptotics"], "asymptotics.csv", "law,fittedConstant,paperConstant,ratio,r2"),
    (["ball-growth", "--r-max", "8"], "ball_growth.csv", "r,volume,volumeOverR2"),
    (["group-growth", "--k-max", "5"], "group_growth.csv", "k,count"),
    (["entropy", "--samples", "400", "--t-max", "40", "--eps", "0.4,0.2"],
     "entropy_counts.csv", "epsilon,t,count"),
])
def test_csv_headers(tmp_path, args, name, header):
    assert main(args + ["--out", str(tmp_path)]) == 0
    text = (tmp_path / name).read_text()
    assert text.splitlines()[0] == header
    assert "\r" not in text
    man = _manifest(tmp_path, args[0])
    assert name in man["outputs"]


def test_group_growth_values(tmp_path):
    assert main(["group-growth", "--k-max", "3", "--out", str(tmp_path)]) == 0
    rows = (tmp_path / "group_growth.csv").read_text().splitlines()[1:]
    assert rows[-1] == "3,25"


def test_entropy_summary(tmp_path):
    assert main(["entropy", "--samples", "400", "--t-max", "40", "--eps", "0.4",
                 "--flow", "flat", "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "entropy_summary.csv").read_text().splitlines()
    assert lines[0] == "epsilon,slope,r2,hPolEstimate" and len(lines) == 2


def test_reruns_byte_identical(tmp_path):
    args = ["entropy", "--samples", "400", "--t-max", "40", "--seed", "9"]
    main(args + ["--out", str(tmp_path / "a")])
    main(args + ["--out", str(tmp_path / "b")])
    for name in ("entropy_counts.csv", "entropy_summary.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    ha = _manifest(tmp_path / "a", "entropy")["config_hash"]
    assert ha == _manifest(tmp_path / "b", "entropy")["config_hash"]


def test_config_file_round_trip(tmp_path, canon):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"profile": canon.to_config(), "e": 0.5}))
    assert main(["validate-profile", "--config", str(path), "--out", str(tmp_path)]) == 0


def test_console_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "revtorus.cli", "validate-profile",
                        "--out", str(tmp_path)], capture_output=True, text=True)
    assert r.returncode == 0
