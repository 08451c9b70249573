import json
import subprocess
import sys

import pytest

from topobound import cli
from topobound.bounds import BoundReport, Formula

CIRCLE_MAP = """
[manifold]
name = "circle"

[map]
kind = "builtin"
name = "sin"
params = { p = 1, shift = -0.5 }
"""


def _cfg(tmp_path, text, name="run.toml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_condition_writes_json(tmp_path):
    out = tmp_path / "out"
    rc = cli.main(["condition", "--config", _cfg(tmp_path, CIRCLE_MAP), "--out", str(out),
                   "--resolution", "2048"])
    assert rc == 0
    rep = json.loads((out / "condition.json").read_text())
    assert rep["delta"] == pytest.approx(0.5, abs=1e-6)
    assert len(rep) == 8


def test_betti_and_mask(tmp_path):
    rc = cli.main(["betti", "--config", _cfg(tmp_path, CIRCLE_MAP), "--out", str(tmp_path)])
    assert rc == 0
    assert json.loads((tmp_path / "betti.json").read_text())["b"] == [2, 0]
    assert set((tmp_path / "mask.txt").read_text()) <= {"#", ".", "\n"}


def test_poly_map_and_morse(tmp_path):
    text = """
[manifold]
name = "implicit_circle"

[morse]
objective = [[[1, 0], 1.0]]
"""
    rc = cli.main(["morse", "--config", _cfg(tmp_path, text), "--out", str(tmp_path)])
    assert rc == 0
    assert (tmp_path / "morse.csv").read_text().splitlines()[1].startswith("2,2,")


def test_semialg_single(tmp_path):
    text = """
[manifold]
name = "circle"

[[family]]
kind = "builtin"
name = "sin"

[semialg]
dnf = [["ge"]]
delta_hat = 1.0
"""
    rc = cli.main(["semialg", "--config", _cfg(tmp_path, text), "--out", str(tmp_path),
                   "--resolution", "512"])
    assert rc == 0
    assert "Holds" in (tmp_path / "semialg.csv").read_text()


def test_config_errors_exit_1(tmp_path, capsys):
    assert cli.main(["condition", "--config", _cfg(tmp_path, "[map]\nkind = 'builtin'\n")]) == 1
    bad = CIRCLE_MAP + "colour = 'red'\n"
    assert cli.main(["condition", "--config", _cfg(tmp_path, bad, "b.toml")]) == 1
    assert "map.colour: unknown key" in capsys.readouterr().err
    assert cli.main(["condition", "--config", str(tmp_path / "missing.toml")]) == 1
    assert cli.main(["mv-check", "--config", _cfg(tmp_path, "seed = -1\n", "c.toml")]) == 1
    assert cli.main(["condition", "--config", _cfg(tmp_path, "x = [", "d.toml")]) == 1


def test_violation_exit_2(tmp_path, monkeypatch):
    def fake(*a, **k):
        return [BoundReport(Formula.TM_VARIETY, {"d": 1}, 4, 5)]
    monkeypatch.setattr(cli, "variety_sweep", fake)
    text = "[manifold]\nname = 'implicit_circle'\n"
    assert cli.main(["verify-bound", "--config", _cfg(tmp_path, text), "--out", str(tmp_path)]) == 2
    assert "Violated" in (tmp_path / "bounds.csv").read_text()


def test_not_comparable_exit_1(tmp_path, monkeypatch):
    monkeypatch.setattr(cli, "variety_sweep",
                        lambda *a, **k: [BoundReport(Formula.TM_VARIETY, {"d": 1}, 4, None)])
    text = "[manifold]\nname = 'implicit_circle'\n"
    assert cli.main(["verify-bound", "--config", _cfg(tmp_path, text), "--out", str(tmp_path)]) == 1


def test_seeded_runs_byte_identical(tmp_path):
    text = "seed = 7\n[mv]\nn_families = 6\ngrid = 12\n"
    cfg = _cfg(tmp_path, text)
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["mv-check", "--config", cfg, "--out", str(a), "--workers", "1"]) == 0
    assert cli.main(["mv-check", "--config", cfg, "--out", str(b), "--workers", "2"]) == 0
    assert (a / "mv.csv").read_bytes() == (b / "mv.csv").read_bytes()
    c = tmp_path / "c"
    cli.main(["mv-check", "--config", cfg, "--out", str(c), "--seed", "8"])
    assert (a / "mv.csv").read_bytes() != (c / "mv.csv").read_bytes()


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "topobound", "--help"], capture_output=True, text=True)
    assert r.returncode == 0
    assert "mv-check" in r.stdout
