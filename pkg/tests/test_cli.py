import csv
import json
from pathlib import Path

import pytest

from casimir_hybrid.cli import ScenarioConfig, compare_rates_table, converge_table, main, parse_config
from casimir_hybrid.errors import ConfigParseError, ValidationError

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def crossing_cfg(**numerics):
    num = {"cutoffs": [6, 6], "axis": "omega_c", "span": [0.55, 0.65], "level_pair": [3, 4]}
    num.update(numerics)
    return {"scenario": "crossing", "model": {"kind": "single_atom", "omega_c": 0.6, "omega_a": 0.4, "g": 0.03,
                                              "lam": 0.005}, "numerics": num}


def write(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return path


def read_csv(path):
    lines = Path(path).read_text().splitlines()
    assert lines[0].startswith("# config_digest=")
    return list(csv.reader(lines[1:]))


def test_crossing_run_outputs(tmp_path):
    path = write(tmp_path, crossing_cfg())
    assert main(["run", "--config", str(path), "--out", str(tmp_path / "out")]) == 0
    rows = read_csv(tmp_path / "out" / "cfg_crossing.csv")
    assert rows[0][:2] == ["axis_value_at_min", "splitting"]
    assert float(rows[1][1]) == pytest.approx(1.83e-3, rel=0.05)
    manifest = json.loads((tmp_path / "out" / "cfg_manifest.json").read_text())
    assert manifest["scenario"] == "crossing"
    assert "cfg_crossing.csv" in manifest["outputs"]
    assert len(manifest["config_digest"]) == 64


def test_output_is_deterministic_with_17_digits(tmp_path):
    path = write(tmp_path, crossing_cfg())
    main(["run", "--config", str(path), "--out", str(tmp_path / "a")])
    main(["run", "--config", str(path), "--out", str(tmp_path / "b")])
    a = (tmp_path / "a" / "cfg_crossing.csv").read_text()
    assert a == (tmp_path / "b" / "cfg_crossing.csv").read_text()
    value = read_csv(tmp_path / "a" / "cfg_crossing.csv")[1][1]
    assert len(value.replace(".", "").lstrip("0").split("e")[0]) >= 15


def test_spectrum_shape(tmp_path):
    assert main(["run", "--config", str(CONFIGS / "single_atom_spectrum.json"), "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "single_atom_spectrum_spectrum.csv")
    assert rows[0] == ["omega_c", "level_0", "level_1", "level_2"]
    assert len(rows) == 51


def test_negative_cutoff_is_validation_error(tmp_path, capsys):
    path = write(tmp_path, crossing_cfg(cutoffs=[-1, 6]))
    with pytest.raises(ValidationError):
        parse_config(path.read_text())
    assert main(["run", "--config", str(path), "--out", str(tmp_path)]) != 0
    assert "ValidationError" in capsys.readouterr().err


def test_parse_error_reports_line(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "scenario": "crossing",\n  "model": {,}\n}')
    with pytest.raises(ConfigParseError, match="line 3"):
        parse_config(path.read_text())
    assert main(["run", "--config", str(path)]) == 2
    assert "line 3" in capsys.readouterr().err


def test_unknown_fields_and_scenarios():
    with pytest.raises(ConfigParseError):
        parse_config(json.dumps({**crossing_cfg(), "extra": 1}))
    with pytest.raises(ValidationError):
        parse_config(json.dumps({**crossing_cfg(), "scenario": "bogus"}))
    cfg = crossing_cfg()
    del cfg["numerics"]["level_pair"]
    with pytest.raises(ValidationError):
        parse_config(json.dumps(cfg))


def test_config_roundtrip():
    for path in sorted(CONFIGS.glob("*.json")):
        cfg = parse_config(path.read_text())
        again = parse_config(json.dumps(cfg.to_dict()))
        assert again == cfg
        assert again.digest() == cfg.digest()


def test_converge_crossing_ladder():
    cfg = parse_config(json.dumps(crossing_cfg()))
    rows, ok = converge_table(cfg, "splitting", [(4, 4), (6, 6), (8, 8)])
    assert ok
    assert rows[-1][2] < 0.01


def test_converge_uncoupled_levels_exact():
    cfg = {"scenario": "spectrum", "model": {"kind": "single_atom", "omega_c": 0.6, "omega_a": 0.4, "g": 0.0,
                                             "lam": 0.0},
           "numerics": {"axis": "omega_c", "grid": [0.5, 0.6, 0.7], "n_levels": 3}}
    rows, ok = converge_table(parse_config(json.dumps(cfg)), "level_2_last", [(3, 3), (4, 4), (6, 6)])
    assert ok
    assert rows[1][2] == 0.0 and rows[2][2] == 0.0


def test_converge_flags_tiny_cutoff(tmp_path):
    cfg = json.loads((CONFIGS / "pulse_spectrum_weak.json").read_text())
    cfg["numerics"]["t_grid"] = {"start": 0, "stop": 3000, "num": 1501}
    cfg["numerics"]["fft"]["window"] = [600, 3000]
    path = write(tmp_path, cfg)
    code = main(["converge", "--config", str(path), "--out", str(tmp_path), "--quantity", "max_mean_atom",
                 "--ladder", "2,2", "6,6"])
    assert code == 1
    manifest = json.loads((tmp_path / "cfg_manifest.json").read_text())
    assert manifest["convergence"][-1]["converged"] is False


def test_compare_rates_zero_coupling_row():
    cfg = {"scenario": "perturb_compare",
           "model": {"kind": "single_atom", "omega_c": 0.6, "omega_a": 0.4, "g": 0.03, "lam": 0.0},
           "numerics": {"axis": "omega_c", "span": [0.59, 0.61], "level_pair": [3, 4]},
           "compare": {"g_grid": [0.03], "formulas": ["g10_e01", "DCE_only_polaron"]}}
    header, rows = compare_rates_table(parse_config(json.dumps(cfg)))
    assert header[2] == "numeric_splitting"
    assert rows[0][2] < 1e-6
    assert rows[0][3] == 0.0 and rows[0][5] == 0.0


def test_compare_rates_marks_singular_rows(monkeypatch):
    from casimir_hybrid import cli
    from casimir_hybrid.errors import SingularDenominator

    def resonant(p):
        raise SingularDenominator("resonant")

    monkeypatch.setitem(cli.FORMULAS, "g10_e01", resonant)
    cfg = {"scenario": "perturb_compare",
           "model": {"kind": "single_atom", "omega_c": 0.6, "omega_a": 0.4, "g": 0.03, "lam": 0.005},
           "numerics": {"axis": "omega_c", "span": [0.59, 0.61], "level_pair": [3, 4]},
           "compare": {"g_grid": [0.03], "formulas": ["g10_e01"]}}
    header, rows = compare_rates_table(parse_config(json.dumps(cfg)))
    assert rows[0][3:] == ["singular", "singular"]


def test_env_overrides(tmp_path, monkeypatch):
    path = write(tmp_path, crossing_cfg())
    monkeypatch.setenv("CASIMIR_HYBRID_OUT", str(tmp_path / "env"))
    monkeypatch.setenv("CASIMIR_HYBRID_THREADS", "2")
    assert main(["run", "--config", str(path)]) == 0
    manifest = json.loads((tmp_path / "env" / "cfg_manifest.json").read_text())
    assert manifest["threads"] == 2


def test_compare_rates_subcommand(tmp_path):
    cfg = json.loads((CONFIGS / "single_photon_rates.json").read_text())
    cfg["compare"]["g_grid"] = [0.01, 0.02]
    path = write(tmp_path, cfg)
    assert main(["compare-rates", "--config", str(path), "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "cfg_compare_rates.csv")
    assert len(rows) == 3
    assert abs(float(rows[1][4])) < 0.1


def test_scenario_config_defaults():
    cfg = ScenarioConfig("crossing", {"kind": "single_atom", "omega_c": 0.6, "omega_a": 0.4, "g": 0.0, "lam": 0.0})
    assert cfg.params().cutoffs == (6, 6)
