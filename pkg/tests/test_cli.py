import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest
import yaml

from cmfluct.cli import (EXIT_ERROR, EXIT_INDETERMINATE, EXIT_OK, EXIT_USAGE, ConfigError, config_hash,
                         load_config, main, report, validate_config)

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def write(tmp_path, name, cfg):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(cfg), encoding="utf-8")
    return str(path)


def manifests(out):
    return [json.loads(p.read_text()) for p in sorted(Path(out).glob("*.json"))]


SQRT_IS = {"experiment": "criteria-is", "seed": 0, "model": {"kind": "Cauchy"},
           "function": {"kind": "power", "p": 0.5}, "policy": {"depth": 32}}


def test_sample_path_row_count(tmp_path):
    out = tmp_path / "out"
    assert main(["run", "--config", str(CONFIGS / "sample_path.yaml"), "--out-dir", str(out)]) == EXIT_OK
    (csv_file,) = out.glob("*.csv")
    rows = list(csv.reader(csv_file.read_text().splitlines()))
    assert rows[0] == ["time", "value", "config_hash"]
    assert len(rows) - 1 == 1000
    assert float(rows[1][0]) == 0.0 and float(rows[-1][0]) == 1.0


def test_criteria_is_verdicts(tmp_path):
    out = tmp_path / "out"
    assert main(["run", "--config", write(tmp_path, "c.yaml", SQRT_IS), "--out-dir", str(out)]) == EXIT_OK
    (m,) = manifests(out)
    assert m["summary"]["conditions"]["large"]["verdict"] == "converging"
    assert m["summary"]["verdict"] == "zero"


def test_rerun_is_byte_identical(tmp_path):
    cfg = write(tmp_path, "c.yaml", {"experiment": "mc-fluctuation", "seed": 5, "model": {"kind": "Cauchy"},
                                     "function": {"kind": "power", "p": 0.5},
                                     "params": {"regime": "IS", "sampler": "stick-breaking"},
                                     "policy": {"k_max": 12, "n_paths": 40, "n_boot": 20}})
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", "--config", cfg, "--out-dir", str(a)]) == EXIT_OK
    assert main(["run", "--config", cfg, "--out-dir", str(b), "--threads", "3"]) == EXIT_OK
    names = sorted(p.name for p in a.iterdir())
    assert names == sorted(p.name for p in b.iterdir()) and len(names) == 2
    for n in names:
        assert (a / n).read_bytes() == (b / n).read_bytes()


def test_seed_override_changes_hash_and_output(tmp_path):
    cfg = str(CONFIGS / "sample_path.yaml")
    assert main(["run", "--config", cfg, "--out-dir", str(tmp_path / "a")]) == EXIT_OK
    assert main(["run", "--config", cfg, "--out-dir", str(tmp_path / "b"), "--seed-override", "99"]) == EXIT_OK
    (ma,), (mb,) = manifests(tmp_path / "a"), manifests(tmp_path / "b")
    assert ma["config_hash"] != mb["config_hash"] and mb["config"]["seed"] == 99


def test_unknown_field_is_usage_error(tmp_path):
    bad = dict(SQRT_IS, colour="red")
    assert main(["run", "--config", write(tmp_path, "c.yaml", bad), "--out-dir", str(tmp_path / "o")]) == EXIT_USAGE
    bad = dict(SQRT_IS, params={"depthh": 3})
    assert main(["run", "--config", write(tmp_path, "c.yaml", bad), "--out-dir", str(tmp_path / "o")]) == EXIT_USAGE


def test_invalid_yaml_and_missing_file(tmp_path):
    path = tmp_path / "broken.yaml"
    path.write_text("experiment: [unclosed\n")
    assert main(["run", "--config", str(path)]) == EXIT_USAGE
    assert main(["run", "--config", str(tmp_path / "absent.yaml")]) == EXIT_USAGE


def test_runtime_error_exit_code(tmp_path):
    # the exact minorant sampler only exists for Cauchy processes
    cfg = {"experiment": "minorant", "seed": 1, "model": {"kind": "Stable", "alpha": 1.5, "rho": 0.6},
           "params": {"source": "cauchy-exact"}}
    out = tmp_path / "out"
    assert main(["run", "--config", write(tmp_path, "c.yaml", cfg), "--out-dir", str(out)]) == EXIT_ERROR
    (m,) = manifests(out)
    assert m["status"] == "error" and "Cauchy" in m["error"]


def test_indeterminate_exit_code(tmp_path):
    # t^{3/2} is convex: the vanishing side of the test does not apply, so the verdict stays open
    cfg = dict(SQRT_IS, function={"kind": "power", "p": 1.5}, require_determinate=True)
    out = tmp_path / "out"
    assert main(["run", "--config", write(tmp_path, "c.yaml", cfg), "--out-dir", str(out)]) == EXIT_INDETERMINATE
    (m,) = manifests(out)
    assert m["status"] == "indeterminate" and m["summary"]["verdict"] == "indeterminate"


def test_errors_dominate_indeterminate(tmp_path):
    ind = write(tmp_path, "a.yaml", dict(SQRT_IS, function={"kind": "power", "p": 1.5}, require_determinate=True))
    err = write(tmp_path, "b.yaml", {"experiment": "minorant", "seed": 1,
                                     "model": {"kind": "Stable", "alpha": 1.5, "rho": 0.6},
                                     "params": {"source": "cauchy-exact"}})
    assert main(["run", "--config", ind, "--config", err, "--out-dir", str(tmp_path / "o")]) == EXIT_ERROR


def test_validation_rules():
    with pytest.raises(ConfigError):
        validate_config({"experiment": "meander", "seed": 0, "model": {"kind": "Stable", "alpha": 0.5, "rho": 0.5},
                         "params": {"p": 1.0, "q": 2.0}})
    with pytest.raises(ConfigError):
        validate_config({"experiment": "phi-table", "seed": 0, "model": {"kind": "Cauchy"}, "params": {"u": [0]}})
    with pytest.raises(ConfigError):
        validate_config({"experiment": "sample-path", "seed": 0, "model": {"kind": "Cauchy", "alpha": 1.0}})
    with pytest.raises(ConfigError):
        validate_config({"experiment": "criteria-is", "seed": 0, "model": {"kind": "Cauchy"}})
    with pytest.raises(ConfigError):
        validate_config({"experiment": "sample-path", "seed": -1, "model": {"kind": "Cauchy"}})
    with pytest.raises(ConfigError):
        validate_config(["not", "a", "mapping"])


def test_defaults_filled_and_hash_stable():
    cfg = validate_config(SQRT_IS)
    assert cfg["params"]["route"] == "scaling" and cfg["require_determinate"] is False
    assert config_hash(cfg) == config_hash(validate_config(dict(SQRT_IS)))
    assert len(config_hash(cfg)) == 64


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.yaml")), ids=lambda p: p.stem)
def test_shipped_configs_validate(path):
    cfg = load_config(path)
    assert cfg["experiment"]


# -- report -----------------------------------------------------------------------------------


def test_report_on_empty_dir(tmp_path, capsys):
    assert main(["report", str(tmp_path)]) == EXIT_OK
    out = capsys.readouterr().out.splitlines()
    assert len(out) == 1 and out[0].startswith("label")


def test_report_on_missing_dir(tmp_path):
    assert main(["report", str(tmp_path / "nope")]) == EXIT_USAGE


def test_report_with_corrupt_file(tmp_path, capsys):
    out = tmp_path / "out"
    main(["run", "--config", write(tmp_path, "c.yaml", dict(SQRT_IS, label="AC5")), "--out-dir", str(out)])
    (out / "broken.json").write_text("{not json")
    capsys.readouterr()
    assert main(["report", str(out), "--csv", str(tmp_path / "table.csv")]) == EXIT_OK
    cap = capsys.readouterr()
    assert "broken.json" in cap.err and "warning" in cap.err
    assert "AC5" in cap.out and "True" in cap.out
    rows = list(csv.DictReader((tmp_path / "table.csv").read_text().splitlines()))
    assert len(rows) == 1 and rows[0]["verdict"] == "zero" and rows[0]["hash_ok"] == "True"


def test_report_detects_tampering(tmp_path):
    out = tmp_path / "out"
    main(["run", "--config", str(CONFIGS / "sample_path.yaml"), "--out-dir", str(out)])
    (csv_file,) = out.glob("*.csv")
    lines = csv_file.read_text().splitlines()
    lines[5] = lines[5].rsplit(",", 1)[0] + ",deadbeef"
    csv_file.write_text("\n".join(lines) + "\n")
    rows, warnings = report(out)
    assert rows[0]["hash_ok"] is False and not warnings
    (json_file,) = out.glob("*.json")
    d = json.loads(json_file.read_text())
    d["config"]["seed"] = 12345
    json_file.write_text(json.dumps(d))
    assert report(out)[0][0]["hash_ok"] is False


def test_report_orders_labels_naturally(tmp_path):
    out = tmp_path / "out"
    for label in ("AC10", "AC2", "AC1"):
        cfg = {"experiment": "sample-path", "seed": 1, "label": label, "model": {"kind": "Cauchy"},
               "params": {"n_points": 5}}
        main(["run", "--config", write(tmp_path, f"{label}.yaml", cfg), "--out-dir", str(out)])
    assert [r["label"] for r in report(out)[0]] == ["AC1", "AC2", "AC10"]


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "cmfluct.cli", "report", str(tmp_path)],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and proc.stdout.startswith("label")
