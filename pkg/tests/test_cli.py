# Tests de integración para la línea de comandos

import json
from pathlib import Path
from unittest.mock import patch

import numpy as np
import pandas as pd
import pytest

from bistable_fronts.cli import main, parse_tau_grid
from bistable_fronts.errors import SimulationError

MODELS_DIR = Path(__file__).resolve().parent.parent / "models"


def _stdout_json(capsys) -> dict:
    return json.loads(capsys.readouterr().out)


# 1. Test para verificar la grilla de tau a:b:s
def test_parse_tau_grid():
    grid = parse_tau_grid("0:1:0.25")

    assert np.allclose(grid, [0.0, 0.25, 0.5, 0.75, 1.0])
    assert len(parse_tau_grid("0:6:0.05")) == 121


# 2. Test para verificar los errores de formato de la grilla
@pytest.mark.parametrize("text", ["0:1", "0:1:0", "1:0:0.1", "a:b:c"])
def test_parse_tau_grid_rejects_bad_text(text):
    with pytest.raises(ValueError):
        parse_tau_grid(text)


# 3. Test para verificar el subcomando roots y sus archivos en el directorio por defecto
def test_roots_reports_dominant_root(monkeypatch, tmp_path, capsys):
    monkeypatch.setenv("BISTABLE_FRONTS_OUTPUT_DIR", str(tmp_path))

    code = main(["roots", "--a", "-1", "--b", "-1", "--c", "0.5", "--h", "0.5"])

    payload = _stdout_json(capsys)
    assert code == 0
    assert payload["dominant_real"] > 0
    assert payload["total_in_window"] >= 1
    assert json.loads((tmp_path / "roots.json").read_text()) == payload
    manifest = json.loads((tmp_path / "roots.manifest.json").read_text())
    assert manifest["command"] == "roots"
    assert manifest["outputs"] == [str(tmp_path / "roots.json")]


# 4. Test para verificar que una velocidad no positiva es un error de argumentos
def test_roots_with_invalid_speed_exits_2(capsys):
    assert main(["roots", "--a", "-1", "--b", "-1", "--c", "0", "--h", "0.5"]) == 2


# 5. Test para verificar que faltar un argumento obligatorio sale con 2
def test_missing_argument_exits_2(capsys):
    assert main(["roots", "--a", "-1"]) == 2


# 6. Test para verificar el subcomando domain con sus archivos
def test_domain_writes_csv_and_manifest(tmp_path, capsys):
    out = tmp_path / "d.csv"

    code = main(
        [
            "domain", "--a", "-1", "--b", "-1", "--tau-max", "6", "--points", "50",
            "--out", str(out), "--gnuplot", "--parquet",
        ]
    )  # fmt: skip

    summary = _stdout_json(capsys)
    assert code == 0
    assert abs(summary["tau_sharp"] - 0.2785) < 1e-4
    assert abs(summary["theta"] - 0.695) < 1e-3

    lines = out.read_text().splitlines()
    assert lines[0] == "tau,clin"
    assert lines[1].endswith(",inf")
    assert not lines[-1].endswith(",inf")
    assert (tmp_path / "d.gp").exists()
    assert (tmp_path / "d.parquet").exists()

    manifest = json.loads((tmp_path / "d.manifest.json").read_text())
    assert manifest["command"] == "domain"
    assert str(out) in manifest["outputs"]


# 7. Test para verificar la salida del dominio con el modelo de juguete (tau = 4.110)
def test_toy_curve_exit_tau(tmp_path, capsys):
    out = tmp_path / "toy.csv"

    code = main(
        [
            "toy", "--kappa", "0.3333333", "--p", "0.5", "--q", "-1",
            "--tau-grid", "0:6:0.05", "--out", str(out),
        ]
    )  # fmt: skip

    summary = _stdout_json(capsys)
    assert code == 0
    assert summary["branch"] == "positive"
    assert abs(summary["domain_exit_tau"] - 4.1103) < 5e-3
    assert list(pd.read_csv(out).columns) == ["tau", "c", "monotone", "residual"]


# 8. Test para verificar el perfil del modelo de juguete
def test_toy_profile_out(tmp_path, capsys):
    profile = tmp_path / "perfil.csv"

    code = main(
        [
            "toy", "--kappa", "0.3333333", "--p", "0.5", "--q", "-1", "--tau", "1",
            "--out", str(tmp_path / "toy.csv"), "--profile-out", str(profile),
        ]
    )  # fmt: skip

    assert code == 0
    df = pd.read_csv(profile)
    assert list(df.columns) == ["t", "phi"]
    assert len(df) == 2001


# 9. Test para verificar que pedir el perfil en la rama negativa sale con 4
def test_toy_profile_on_negative_branch_exits_4(tmp_path, capsys):
    code = main(
        [
            "toy", "--kappa", "0.9", "--p", "0.5", "--q", "-1", "--tau", "0",
            "--out", str(tmp_path / "toy.csv"), "--profile-out", str(tmp_path / "p.csv"),
        ]
    )  # fmt: skip

    assert code == 4
    assert "positive-speed branch absent" in _stdout_json(capsys)["error"]


# 10. Test para verificar que parámetros fuera de rango salen con 2
def test_toy_invalid_parameters_exit_2(tmp_path, capsys):
    code = main(["toy", "--kappa", "1.5", "--p", "0.5", "--q", "-1", "--tau", "0"])

    assert code == 2


# 11. Test para verificar el frente de Nagumo y su reporte
def test_front_nagumo(tmp_path, capsys):
    out = tmp_path / "front.csv"

    code = main(
        ["front", "--model", str(MODELS_DIR / "nagumo.cfg"), "--N", "1000", "--out", str(out)]
    )

    payload = _stdout_json(capsys)
    assert code == 0
    assert abs(payload["c"] - 0.35355) < 1e-3
    assert payload["hypotheses"]["B_ok"] is True
    assert payload["verify"]["monotone"] is True
    report = json.loads((tmp_path / "front_report.json").read_text())
    assert report["model_id"] == payload["model_id"]
    assert list(pd.read_csv(out).columns) == ["t", "phi"]


# 12. Test para verificar que un modelo inexistente sale con 3
def test_front_missing_model_exits_3(tmp_path, capsys):
    code = main(["front", "--model", str(tmp_path / "no_existe.cfg")])

    assert code == 3


# 13. Test para verificar que un modelo no biestable sale con 4
def test_front_not_bistable_exits_4(tmp_path, capsys):
    path = tmp_path / "monoestable.cfg"
    path.write_text("kind=mackey_glass\nbeta=1\ne2=0.25\ndomain_lo=0.5\ndomain_hi=1.5\n")

    code = main(["front", "--model", str(path), "--out", str(tmp_path / "f.csv")])

    assert code == 4
    assert "not bistable" in _stdout_json(capsys)["error"]


# 14. Test para verificar que un intervalo corto hace fallar al solver con 5
def test_front_short_interval_exits_5(tmp_path, capsys):
    code = main(
        [
            "front", "--model", str(MODELS_DIR / "nagumo.cfg"), "--L", "3", "--N", "400",
            "--out", str(tmp_path / "f.csv"),
        ]
    )  # fmt: skip

    assert code == 5


# 15. Test para verificar un barrido corto en tau
def test_sweep_nagumo(tmp_path, capsys):
    out = tmp_path / "sweep.csv"

    code = main(
        [
            "sweep", "--model", str(MODELS_DIR / "nagumo.cfg"), "--tau-max", "0.1",
            "--N", "400", "--out", str(out),
        ]
    )  # fmt: skip

    summary = _stdout_json(capsys)
    assert code == 0
    assert summary["termination"] == "reached_tau_max"
    assert summary["first_nonmonotone_tau"] is None
    df = pd.read_csv(out)
    assert df["tau"].iloc[0] == 0.0
    assert np.isclose(df["tau"].iloc[-1], 0.1)


# 16. Test para verificar los archivos de la simulación
def test_simulate_writes_files(tmp_path, capsys):
    out = tmp_path / "sim.csv"

    code = main(
        [
            "simulate", "--model", str(MODELS_DIR / "nagumo.cfg"), "--x-max", "60",
            "--nx", "301", "--t-final", "5", "--snapshot-interval", "2.5", "--out", str(out),
        ]
    )  # fmt: skip

    summary = _stdout_json(capsys)
    assert code == 0
    assert "measured_speed" in summary
    for name in ("sim.csv", "sim_final.csv", "sim_summary.csv", "sim.manifest.json"):
        assert (tmp_path / name).exists()
    assert (tmp_path / "sim_snapshot_0000.csv").exists()
    assert list(pd.read_csv(tmp_path / "sim_summary.csv").columns) == [
        "tau",
        "measured_speed",
        "oscillation_flag",
    ]


# 17. Test para verificar que una falla de la simulación sale con 5
@patch("bistable_fronts.cli.simulate")
def test_simulation_failure_exits_5(mock_simulate, tmp_path, capsys):
    mock_simulate.side_effect = SimulationError("blow-up: valores no finitos en t=1")

    code = main(
        [
            "simulate", "--model", str(MODELS_DIR / "nagumo.cfg"),
            "--out", str(tmp_path / "sim.csv"),
        ]
    )  # fmt: skip

    assert code == 5
    mock_simulate.assert_called_once()
    assert not (tmp_path / "sim.csv").exists()


# 18. Test para verificar que un error de escritura sale con 3
@patch("bistable_fronts.cli.write_csv")
def test_write_failure_exits_3(mock_write_csv, tmp_path, capsys):
    mock_write_csv.side_effect = PermissionError("sin permisos")

    code = main(
        ["domain", "--a", "-1", "--b", "-1", "--tau-max", "2", "--out", str(tmp_path / "d.csv")]
    )

    assert code == 3


# 19. Test para verificar que un rango sin frontera finita sale con 2
def test_domain_without_finite_clin_exits_2(tmp_path, capsys):
    code = main(
        ["domain", "--a", "-1", "--b", "-1", "--tau-max", "0.1", "--out", str(tmp_path / "d.csv")]
    )

    assert code == 2


# 20. Test para verificar que la rama degenerada sale con 4
def test_toy_degenerate_branch_exits_4(tmp_path, capsys):
    code = main(
        [
            "toy", "--kappa", str(2.0 / 3.0), "--p", "0.5", "--q", "-1", "--tau", "1",
            "--out", str(tmp_path / "toy.csv"),
        ]
    )  # fmt: skip

    assert code == 4
    assert "degenerate branch" in _stdout_json(capsys)["error"]


# 21. Test para verificar la rama negativa con |c| no creciente
def test_toy_negative_branch_curve(tmp_path, capsys):
    out = tmp_path / "toy_neg.csv"

    code = main(
        [
            "toy", "--kappa", "0.9", "--p", "0.5", "--q", "-1",
            "--tau-grid", "0:10:0.5", "--out", str(out),
        ]
    )  # fmt: skip

    summary = _stdout_json(capsys)
    df = pd.read_csv(out)
    assert code == 0
    assert summary["branch"] == "negative"
    assert len(df) == 21
    assert (df["c"] < 0).all()
    assert df["monotone"].all()
    assert np.all(np.diff(np.abs(df["c"].to_numpy())) <= 1e-6)


# 22. Test para verificar que la simulación reproduce la velocidad del perfil
@pytest.mark.slow
def test_simulation_matches_front_speed(tmp_path, capsys):
    model = str(MODELS_DIR / "toysmooth.cfg")

    assert main(["front", "--model", model, "--tau", "1", "--out", str(tmp_path / "f.csv")]) == 0
    c_front = _stdout_json(capsys)["c"]
    assert main(["simulate", "--model", model, "--tau", "1", "--out", str(tmp_path / "s.csv")]) == 0
    measured = _stdout_json(capsys)["measured_speed"]

    assert abs(measured - c_front) < 0.02 * abs(c_front)


# 23. Test para verificar que la rama negativa guarda |c| y el gráfico lo usa
def test_toy_negative_branch_writes_abs_speed(tmp_path, capsys):
    out = tmp_path / "toy_neg.csv"

    code = main(
        [
            "toy", "--kappa", "0.9", "--p", "0.5", "--q", "-1",
            "--tau-grid", "0:10:0.5", "--out", str(out), "--gnuplot",
        ]
    )  # fmt: skip

    df = pd.read_csv(out)
    assert code == 0
    assert list(df.columns) == ["tau", "c", "abs_c", "monotone", "residual"]
    assert (df["abs_c"] >= 0).all()
    assert np.allclose(df["abs_c"], -df["c"])
    assert "'toy_neg.csv' using 1:3 with lines" in (tmp_path / "toy_neg.gp").read_text()
