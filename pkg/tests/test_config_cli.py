import csv
import math
from pathlib import Path

import numpy as np
import pytest

from hybridpf import harness as H
from hybridpf.cli import cli_main
from hybridpf.config import load_config, parse_config
from hybridpf.diagnostics import RECORD_COLUMNS
from hybridpf.errors import ConfigError, UnstableStep

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

BASE = """
[experiment]
geometry = bar1d
model = hybrid     # trailing comment
[material]
eigenstrain = 1
[params]
nu = 2e-3
[grid]
nodes = 96
[schedule]
t_end = 0.02
samples = 3
[bar]
U1 = 0.5
z0 = 0.25
"""


def write(tmp_path, text, name="exp.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return path


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.cfg")), ids=lambda p: p.name)
def test_shipped_configs_parse(path):
    cfg = load_config(path)
    assert cfg.geometry in ("bar1d", "circle2d")


def test_defaults_and_comments():
    cfg = parse_config(BASE)
    assert cfg.model == "hybrid" and cfg.dim == 1
    assert cfg.grid.nodes == (96,) and cfg.grid.extent == (1.0,)
    assert cfg.schedule.skip == 1 and cfg.effort_p == 2
    assert cfg.bar.phase2_on_left


@pytest.mark.parametrize("edit, key", [
    (lambda s: s.replace("model = hybrid     # trailing comment\n", ""), "experiment.model"),
    (lambda s: s.replace("t_end = 0.02\n", ""), "schedule.t_end"),
    (lambda s: s + "[bogus]\nx = 1\n", "bogus"),
    (lambda s: s.replace("nu = 2e-3", "nu = 2e-3\nmu = 1e-3"), "params.mu"),
    (lambda s: s.replace("nodes = 96", "nodes = 4"), "grid.nodes"),
    (lambda s: s.replace("nodes = 96", "nodes = 9.5"), "grid.nodes"),
    (lambda s: s.replace("nu = 2e-3", "nu = -1"), "params.nu"),
    (lambda s: s.replace("nu = 2e-3", "nu = 2"), "params.nu"),
    (lambda s: s.replace("z0 = 0.25", "z0 = 1.5"), "bar.z0"),
    (lambda s: s.replace("model = hybrid", "model = spectral"), "experiment.model"),
])
def test_config_errors_name_the_key(edit, key):
    with pytest.raises(ConfigError) as info:
        parse_config(edit(BASE), "exp.cfg")
    assert info.value.key is not None and info.value.key.startswith(key)
    assert str(info.value).startswith("exp.cfg: ")


CIRCLE = """
[experiment]
geometry = circle2d
model = ac
[material]
eigenstrain = 0, 0, 0
[params]
mu = 1e-3
lam = 1e-2
[grid]
nodes = 64
extent = {extent}
origin = {origin}
[schedule]
t_end = 0.1
[circle]
R0 = 0.3
center = 0, 0
"""


def test_disc_placement_rules():
    parse_config(CIRCLE.format(extent=0.7, origin=-0.35))
    parse_config(CIRCLE.format(extent=0.35, origin=0))  # centred on a corner: mirror planes
    with pytest.raises(ConfigError, match="fit"):
        parse_config(CIRCLE.format(extent=0.5, origin=-0.25))
    with pytest.raises(ConfigError, match="fit"):
        parse_config(CIRCLE.format(extent=0.25, origin=0))


def test_cli_missing_key_exits_2(tmp_path, capsys):
    path = write(tmp_path, BASE.replace("model = hybrid     # trailing comment\n", ""))
    assert cli_main(["run", "--config", str(path), "--out", str(tmp_path)]) == 2
    assert "experiment.model" in capsys.readouterr().err


def test_cli_missing_config_file_exits_2(tmp_path):
    assert cli_main(["run", "--config", str(tmp_path / "nope.cfg")]) == 2
    assert cli_main(["run"]) == 2


def test_cli_oracle_matches_closed_form(tmp_path):
    assert cli_main(["oracle", "--config", str(CONFIGS / "bar1d.cfg"), "--out", str(tmp_path)]) == 0
    with (tmp_path / "oracle.csv").open() as fh:
        rows = list(csv.DictReader(fh))
    t = np.array([float(r["t"]) for r in rows])
    z = np.array([float(r["z"]) for r in rows])
    assert len(rows) == 11
    assert np.max(np.abs(z - (0.5 - 0.25 * np.exp(-t)))) < 1e-8


def test_cli_oracle_circle(tmp_path):
    assert cli_main(["oracle", "--config", str(CONFIGS / "circle2d.cfg"), "--out", str(tmp_path)]) == 0
    rows = list(csv.DictReader((tmp_path / "oracle.csv").open()))
    c1 = math.sqrt(2) / 6
    for r in rows:
        assert float(r["R"]) == pytest.approx(math.sqrt(0.09 - 2 * c1 * 0.1 * float(r["t"])))


def test_cli_run_writes_deterministic_records(tmp_path):
    path = write(tmp_path, BASE)
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert cli_main(["run", "--config", str(path), "--out", str(out_a)]) == 0
    assert cli_main(["run", "--config", str(path), "--out", str(out_b)]) == 0
    a = list(csv.reader((out_a / "records.csv").open()))
    b = list(csv.reader((out_b / "records.csv").open()))
    assert tuple(a[0]) == RECORD_COLUMNS and len(a) == 4
    assert [r[:-1] for r in a] == [r[:-1] for r in b]


def test_cli_sweep_outputs(tmp_path):
    text = BASE + "[sweep]\nparameter = nu\nvalues = 5e-4, 1e-3, 2e-3, 4e-3\n"
    path = write(tmp_path, text)
    assert cli_main(["sweep", "--config", str(path), "--out", str(tmp_path)]) == 0
    sweep = list(csv.DictReader((tmp_path / "sweep.csv").open()))
    fits = list(csv.DictReader((tmp_path / "fits.csv").open()))
    assert [float(r["value"]) for r in sweep] == [5e-4, 1e-3, 2e-3, 4e-3]
    assert {f["quantity"] for f in fits} == {"error", "width"}


def test_cli_numerical_failure_exits_3(tmp_path, monkeypatch, capsys):
    def boom(cfg):
        raise UnstableStep("step 7: order parameter left range", 7)

    monkeypatch.setattr(H, "simulate", boom)
    path = write(tmp_path, BASE)
    assert cli_main(["run", "--config", str(path), "--out", str(tmp_path)]) == 3
    assert "UnstableStep" in capsys.readouterr().err


def test_cli_validate_passes(capsys):
    assert cli_main(["validate"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and out.count("PASS") >= 10
