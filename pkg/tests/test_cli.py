import csv
import json

import numpy as np
import pytest

from grushin.cli import main
from grushin.config import ConfigError, load_config
from grushin.discretization import band_projection, load_field
from grushin.reports import REPORT_SCHEMA, load_report, reproducible_part, validate_report

SMALL = """\
[discretization]
K = 8
Lam = 4
M2 = 16
L2 = 16.0

[symbol]
name = constant
param.value = 1.0

[experiment]
seed = 11

[output]
dir = unused
"""


def write(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


@pytest.fixture
def small_cfg(tmp_path):
    return write(tmp_path, SMALL)


# -- configuration ------------------------------------------------------------


def test_default_config_parses(capsys):
    assert main(["default-config", "--seed", "5"]) == 0
    text = capsys.readouterr().out
    cfg = load_config(text=text)
    assert cfg.settings.seed == 5
    assert cfg.settings.disc_params["K"] == 32
    assert cfg.threads == 1


@pytest.mark.parametrize("body, line, needle", [
    ("[discretization]\nK = 8\nLam = four\n[experiment]\nseed = 1\n", 3, "integer"),
    ("[experiment]\nseed = 1\n[symbol]\nname = nope\n", 4, "unknown built-in"),
    ("[experiment]\nseed = 1\ncolour = red\n", 3, "unknown key"),
    ("[experiment]\nseed = 1\n\n[extras]\na = 1\n", 4, "unknown section"),
    ("[experiment]\nseed = 1\ncv_tol = -0.5\n", 3, "> 0"),
    ("[experiment]\nseed = 1\n[symbol]\nmode = sideways\n", 4, "expected one of"),
])
def test_config_errors_name_the_line(tmp_path, body, line, needle):
    path = write(tmp_path, body)
    with pytest.raises(ConfigError) as exc:
        load_config(path)
    assert exc.value.line == line
    assert str(exc.value).startswith(f"{path}:{line}:")
    assert needle in str(exc.value)


def test_seed_is_required_in_config_files(tmp_path):
    with pytest.raises(ConfigError, match="seed"):
        load_config(write(tmp_path, "[experiment]\nthreads = 2\n"))
    cfg = load_config(write(tmp_path, "[experiment]\nthreads = 2\n"), seed=4)
    assert cfg.settings.seed == 4 and cfg.threads == 2


def test_key_outside_section(tmp_path):
    with pytest.raises(ConfigError) as exc:
        load_config(write(tmp_path, "seed = 1\n"))
    assert exc.value.line == 1


def test_pi_literals_and_symbol_params(tmp_path):
    cfg = load_config(write(tmp_path, "[discretization]\nL2 = 5*pi\n[symbol]\nname = power-decay\n"
                                      "param.a = 0.25\n[experiment]\nseed = 0\n"))
    assert cfg.settings.disc_params["L2"] == pytest.approx(5 * np.pi)
    assert cfg.settings.symbol_params == {"a": 0.25}


def test_output_dir_environment_override(tmp_path, monkeypatch, small_cfg):
    monkeypatch.setenv("GRUSHIN_OUTPUT_DIR", str(tmp_path / "env"))
    assert load_config(small_cfg).output_dir == str(tmp_path / "env")


def test_cli_config_error_exit_code(tmp_path, capsys):
    path = write(tmp_path, "[discretization]\nK = x\n[experiment]\nseed = 1\n")
    assert main(["apply", "--config", path, "--out", str(tmp_path / "o")]) == 2
    assert f"{path}:2:" in capsys.readouterr().err


def test_cli_rejects_zero_threads(tmp_path, small_cfg):
    assert main(["apply", "--config", small_cfg, "--threads", "0", "--out", str(tmp_path / "o")]) == 2


def test_cli_unwritable_output(tmp_path, small_cfg):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["apply", "--config", small_cfg, "--out", str(blocker / "sub"), "-q"]) == 3


# -- apply and reports --------------------------------------------------------


def test_apply_identity_writes_band_projection(tmp_path, small_cfg):
    out = tmp_path / "o"
    assert main(["apply", "--config", small_cfg, "--out", str(out), "-q"]) == 0
    f = load_field(out / "fields" / "apply_input.bin")
    g = load_field(out / "fields" / "apply_output.bin", f.disc)
    p = band_projection(f).values
    assert np.max(np.abs(g.values - p)) <= 1e-12 * np.max(np.abs(p))


def test_apply_reads_input_field(tmp_path, small_cfg):
    first = tmp_path / "a"
    assert main(["apply", "--config", small_cfg, "--out", str(first), "-q"]) == 0
    src = first / "fields" / "apply_output.bin"
    path = write(tmp_path, SMALL.replace("seed = 11", f"seed = 11\ninput = {src}"), "in.cfg")
    second = tmp_path / "b"
    assert main(["apply", "--config", path, "--out", str(second), "-q"]) == 0
    a = load_field(src)
    b = load_field(second / "fields" / "apply_output.bin")
    # projecting a band-limited field again changes nothing
    assert np.max(np.abs(a.values - b.values)) <= 1e-12 * np.max(np.abs(a.values))


def test_report_schema_seed_and_threads(tmp_path, small_cfg):
    out = tmp_path / "o"
    assert main(["apply", "--config", small_cfg, "--out", str(out), "--threads", "2", "-q"]) == 0
    report = load_report(out / "report.json")
    validate_report(json.loads(json.dumps(report)))
    assert report["seed"] == 11 and report["threads"] == 2
    assert report["verdict"] == "PASS"
    assert report["checks"][0]["name"] == "apply"
    assert set(REPORT_SCHEMA["required"]) <= set(report)


def test_report_schema_rejects_tampering(tmp_path, small_cfg):
    out = tmp_path / "o"
    main(["apply", "--config", small_cfg, "--out", str(out), "-q"])
    report = load_report(out / "report.json")
    report["verdict"] = "MAYBE"
    with pytest.raises(Exception):
        validate_report(report)


def test_csv_columns_stable_across_runs(tmp_path, small_cfg):
    runs = []
    for name in ("r1", "r2"):
        out = tmp_path / name
        assert main(["verify-geometry", "--config", small_cfg, "--out", str(out), "-q"]) == 0
        files = sorted(p.name for p in (out / "checks").iterdir())
        tables = {}
        for fname in files:
            with open(out / "checks" / fname) as fh:
                tables[fname] = list(csv.reader(fh))
        runs.append((files, tables))
        runs[-1] += (reproducible_part(load_report(out / "report.json")),)
    assert runs[0][0] == runs[1][0]
    assert "verify_geometry.csv" in runs[0][0]
    for fname in runs[0][0]:
        assert runs[0][1][fname][0] == runs[1][1][fname][0]
    assert runs[0][1]["verify_geometry.csv"][0] == ["key", "value"]
    assert runs[0][1] == runs[1][1]
    assert runs[0][2] == runs[1][2]


def test_failing_verdict_exit_code(tmp_path):
    # the observed difference order is 2, outside this window
    path = write(tmp_path, SMALL.replace("seed = 11", "seed = 11\nfd_order_min = 3.0\nfd_order_max = 4.0"))
    assert main(["verify-hermite", "--config", path, "--out", str(tmp_path / "o"), "-q"]) == 1
    assert load_report(tmp_path / "o" / "report.json")["verdict"] == "FAIL"
