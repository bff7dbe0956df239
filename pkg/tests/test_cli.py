import hashlib
import json
import os

import numpy as np
import pytest
import yaml

from spdsim.cli import EXIT_CONFIG, EXIT_OK, main
from spdsim.config import ConfigError, emit_config, parse_config

MINIMAL = """
device:
  omega_q: 5.664 GHz
  omega_b: 7.955 GHz
  omega_w: 7.609 GHz
  kappa_b: 3.7 MHz
  kappa_w: 16.7 MHz
  gamma_q: 35714.3 /s
  chi: [-490 MHz]
  g4: 3.6 MHz
  t_eff: 98 mK
drive:
  pump_power_dbm: -67 dBm
  pump_freq: 4.929 GHz
  pump_calib: 1995.6
  qubit_drive_calib: 100.74 GHz
  b_in_flux: 1.4534 MHz
  buffer_pulse_len: 0.02 us
layout: [3, 2, 2]
scenario: ionization_sweep
sweep: {start: -70 dBm, stop: -66 dBm, points: 5}
output_dir: PLACEHOLDER
seed: 7
propagation: {rtol: 1.0e-6, atol: 1.0e-10}
"""


def test_parse_reference_values():
    cfg = parse_config(MINIMAL.replace("PLACEHOLDER", "out"))
    assert np.isclose(cfg.device.omega_w, 2 * np.pi * 7.609e9, rtol=1e-12)
    assert np.isclose(cfg.device.kappa_w, 2 * np.pi * 16.7e6, rtol=1e-12)
    assert np.isclose(cfg.device.gamma_q, 35714.3, rtol=1e-12)  # plain rate
    assert cfg.device.chi == (pytest.approx(-2 * np.pi * 490e6),)
    assert cfg.layout.dims == (3, 2, 2)
    assert cfg.sweep.points == 5


def test_unknown_key_suggestion():
    with pytest.raises(ConfigError, match="did you mean 'kappa_w'"):
        parse_config(MINIMAL.replace("kappa_w", "kapa_w"))


def test_empty_document_lists_requirements():
    with pytest.raises(ConfigError, match="device, drive, layout, scenario, output_dir"):
        parse_config("")


def test_missing_unit_suffix_rejected():
    with pytest.raises(ConfigError, match="missing unit suffix"):
        parse_config(MINIMAL.replace("16.7 MHz", "16.7"))


def test_chi_padded_to_transmon_dim():
    cfg = parse_config(MINIMAL.replace("PLACEHOLDER", "out"))
    assert len(cfg.device.chi) == 1  # N_t = 3
    doc = MINIMAL.replace("layout: [3, 2, 2]", "layout: [5, 2, 2]")
    cfg5 = parse_config(doc.replace("PLACEHOLDER", "out"))
    assert len(cfg5.device.chi) == 3 and cfg5.device.chi[1:] == (0.0, 0.0)


def test_round_trip_emit_parse():
    cfg = parse_config(MINIMAL.replace("PLACEHOLDER", "out"))
    assert parse_config(emit_config(cfg)) == cfg


def test_unknown_scenario_suggestion():
    with pytest.raises(ConfigError, match="did you mean"):
        parse_config(MINIMAL.replace("ionization_sweep", "ionization_sweeep"))


def test_sweep_needs_two_points():
    with pytest.raises(ConfigError, match="at least 2"):
        parse_config(MINIMAL.replace("points: 5", "points: 1"))


def _run_cli(tmp_path, doc, argv_extra=()):
    tmp_path.mkdir(parents=True, exist_ok=True)
    cfg_path = tmp_path / "cfg.yaml"
    cfg_path.write_text(doc)
    out = tmp_path / "out"
    return main(["run", "--config", str(cfg_path), "--output", str(out), *argv_extra]), out


def test_cli_smoke_ionization_and_determinism(tmp_path):
    doc = MINIMAL.replace("PLACEHOLDER", "ignored")
    code, out = _run_cli(tmp_path, doc)
    assert code == EXIT_OK
    csv_path = out / "ionization.csv"
    assert csv_path.exists()
    first = csv_path.read_bytes()
    manifest = json.loads((out / "manifest.json").read_text())
    recorded = {e["name"]: e["sha256"] for e in manifest["files"]}
    assert recorded["ionization.csv"] == hashlib.sha256(first).hexdigest()
    # byte-identical re-run
    code2, out2 = _run_cli(tmp_path / "again", doc)
    assert code2 == EXIT_OK
    assert (out2 / "ionization.csv").read_bytes() == first
    # resolved config echoed for provenance
    echoed = parse_config((out / "config_resolved.yaml").read_text())
    assert echoed.device.kappa_w == pytest.approx(2 * np.pi * 16.7e6)
    # no files outside the output directory
    assert set(os.listdir(tmp_path)) == {"cfg.yaml", "out", "again"}


def test_cli_config_error_exit_code(tmp_path):
    code, _ = _run_cli(tmp_path, MINIMAL.replace("16.7 MHz", "16.7"))
    assert code == EXIT_CONFIG


def test_cli_override(tmp_path):
    doc = MINIMAL.replace("PLACEHOLDER", "ignored")
    cfg_path = tmp_path / "cfg.yaml"
    cfg_path.write_text(doc)
    out = tmp_path / "out"
    code = main(
        [
            "run",
            "--config",
            str(cfg_path),
            "--output",
            str(out),
            "--override",
            "sweep.points=6",
        ]
    )
    assert code == EXIT_OK
    rows = (out / "ionization.csv").read_text().strip().split("\n")
    # 6 points x 2 buffer branches + header
    assert len(rows) == 1 + 12


def test_cli_subcommand_sets_scenario(tmp_path):
    doc = yaml.safe_load(MINIMAL.replace("PLACEHOLDER", "ignored"))
    doc.pop("sweep")
    doc["scenario"] = "reduced_model_check"
    doc["options"] = {"deltas": [0.05], "n_b": 0.1}
    cfg_path = tmp_path / "cfg.yaml"
    cfg_path.write_text(yaml.safe_dump(doc))
    out = tmp_path / "out"
    code = main(["reduced_model_check", "--config", str(cfg_path), "--output", str(out)])
    assert code == EXIT_OK
    assert (out / "reduced_check.csv").exists()
