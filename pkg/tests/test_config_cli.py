import json
import subprocess
import sys

import pytest

from mobile_mc.cli import main
from mobile_mc.config import ConfigError, load_config, parse_quantity
from mobile_mc.fhtd import ClosedForm, FhtdVariant
from mobile_mc.kinematics import IncrementScheme

FAST = """
[simulation]
n_particles = 400
dt = "0.5 s"
horizon = "11 s"
seed = 5

[fhtd]
alphas = [1.0]
mobility = [["5 um^2/s", "5 um^2/s"]]
n_points = 5

[hitting]
alphas = [1.0]
D_rx = ["0.5 um^2/s"]
n_points = 5

[air]
alphas = [1.0]
D_tx = ["0.5 um^2/s"]
beta_step = 0.25
"""


@pytest.fixture
def fast_cfg(tmp_path):
    path = tmp_path / "fast.toml"
    path.write_text(FAST)
    return path


def test_defaults_match_published_setup():
    cfg = load_config()
    p = cfg.params
    assert (p.D_m, p.D_tx, p.D_rx, p.alpha, p.T_s, p.k, p.r0) == (5.0, 0.0, 0.0, 1.0, 1.0, 1, 10.0)
    assert (cfg.T1, cfg.Tu, cfg.eta) == (1.0, 40.0, "literal")
    assert cfg.variant is FhtdVariant.NORMALIZED and cfg.closed_form is ClosedForm.CORRECTED
    assert cfg.sim["scheme"] is IncrementScheme.EXACT
    assert cfg.hitting["D_rx"] == [pytest.approx(0.5), pytest.approx(50.0)]


@pytest.mark.parametrize("text,kind,value", [
    ("5 um^2/s", "diffusivity", 5.0), ("0.5e-12 m^2/s", "diffusivity", 0.5),
    ("10 um", "length", 10.0), ("1 mm", "length", 1000.0), ("250 ms", "time", 0.25),
])
def test_parse_quantity(text, kind, value):
    assert parse_quantity(text, kind, "k") == pytest.approx(value)


@pytest.mark.parametrize("text", ["5", "5 furlongs", "10 s", 5.0])
def test_parse_quantity_rejects(text):
    with pytest.raises(ConfigError):
        parse_quantity(text, "length", "channel.r0")


@pytest.mark.parametrize("overrides,key", [
    ({"channel": {"alpha": 3.0}}, "channel"),
    ({"timing": {"T1": "50 s"}}, "timing.T1"),
    ({"simulation": {"scheme": "euler"}}, "simulation.scheme"),
    ({"simulation": {"n_particles": 1.5}}, "simulation.n_particles"),
    ({"air": {"beta_step": 0.3}}, "air.beta_step"),
])
def test_invalid_values_name_their_key(overrides, key):
    with pytest.raises(ConfigError) as exc:
        load_config(overrides=overrides)
    assert exc.value.key == key


def test_unknown_section_and_key(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text("[chanel]\nD_m = '5 um^2/s'\n")
    with pytest.raises(ConfigError) as exc:
        load_config(path)
    assert exc.value.key == "chanel"


def test_digest_is_stable():
    assert load_config().digest() == load_config().digest()
    assert load_config().digest() != load_config(overrides={"simulation": {"seed": 1}}).digest()


def test_cli_exit_code_config_error(tmp_path, capsys):
    path = tmp_path / "bad.toml"
    path.write_text("[channel]\nr0 = 'ten um'\n")
    assert main(["fhtd", "--config", str(path), "--out", str(tmp_path)]) == 2
    assert "channel.r0" in capsys.readouterr().err
    assert main(["fhtd", "--config", str(tmp_path / "missing.toml"),
                 "--out", str(tmp_path)]) == 2


def test_cli_printed_form_has_no_total(tmp_path, fast_cfg):
    assert main(["air", "--config", str(fast_cfg), "--closed-form", "printed",
                 "--out", str(tmp_path)]) == 1
    assert not (tmp_path / "air.csv").exists()


@pytest.mark.parametrize("command,files", [
    ("fhtd", ["fhtd.csv"]), ("hitting", ["hitting.csv"]),
    ("distance-pdf", ["distance_pdf.csv"]), ("air", ["air.csv", "air_summary.csv"]),
    ("simulate", ["simulate_hist.csv", "simulate_cdf.csv", "simulate_summary.json"]),
])
def test_cli_commands_write_outputs(tmp_path, fast_cfg, command, files):
    assert main([command, "--config", str(fast_cfg), "--out", str(tmp_path)]) == 0
    for name in files:
        assert (tmp_path / name).stat().st_size > 0


def test_fhtd_csv_columns(tmp_path, fast_cfg):
    main(["fhtd", "--config", str(fast_cfg), "--out", str(tmp_path), "--variant", "printed"])
    lines = (tmp_path / "fhtd.csv").read_text().splitlines()
    assert lines[0].split(",")[4:] == ["fhtd_printed_eq4_per_s", "fhtd_corrected_per_s",
                                       "fhtd_quadrature_per_s", "variant"]
    assert len(lines) == 6 and lines[1].endswith(",printed")


def test_simulate_summary_records_run(tmp_path, fast_cfg):
    main(["simulate", "--config", str(fast_cfg), "--out", str(tmp_path), "--seed", "17",
          "--scheme", "paper-iid"])
    s = json.loads((tmp_path / "simulate_summary.json").read_text())
    assert s["seed"] == 17 and s["scheme"] == "paper-iid" and s["n_particles"] == 400
    assert s["n_hits"] + s["n_censored"] == 400


def test_simulate_byte_identical_across_runs_and_workers(tmp_path, fast_cfg):
    outs = []
    for tag, workers in (("a", "1"), ("b", "1"), ("c", "2")):
        d = tmp_path / tag
        rc = subprocess.run([sys.executable, "-m", "mobile_mc", "simulate", "--config",
                             str(fast_cfg), "--out", str(d), "--workers", workers,
                             "--seed", "123"], capture_output=True).returncode
        assert rc == 0
        outs.append([(d / f).read_bytes() for f in
                     ("simulate_hist.csv", "simulate_cdf.csv", "simulate_summary.json")])
    assert outs[0] == outs[1] == outs[2]


def test_validate_without_mc(tmp_path):
    rc = main(["validate", "--no-mc", "--out", str(tmp_path)])
    report = (tmp_path / "validate_report.txt").read_text()
    assert "config sha256" in report
    assert "[PASS] closed form vs quadrature oracle" in report
    assert rc == (0 if "overall: PASS" in report else 1)


def test_version_flag():
    out = subprocess.run([sys.executable, "-m", "mobile_mc", "--version"],
                         capture_output=True, text=True)
    assert out.returncode == 0 and "0.1.0" in out.stdout
