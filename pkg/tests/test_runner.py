import csv
import dataclasses
import json
import logging

import numpy as np
import pytest

from reservoir_entanglement import runner
from reservoir_entanglement.artifacts import MANIFEST_NAME, read_manifest
from reservoir_entanglement.catalogue import close_catalogue, open_catalogue
from reservoir_entanglement.cli import main
from reservoir_entanglement.config import parse_config
from reservoir_entanglement.errors import ConfigurationError, NumericalQualityError, ReservoirError
from reservoir_entanglement.utils.runs import find_runs, latest_run

SCENARIO = """
[physical]
gamma = 1
coupling = 1
{physical}

[bath]
n_modes = 201
half_span = 20

[time]
t_end = {t_end}

[output]
method = {method}
{output}

[quality]
{quality}
"""


def _scenario(tmp_path, method="analytic", t_end=5, physical="", output="", quality="", name="scenario.ini"):
    path = tmp_path / name
    path.write_text(SCENARIO.format(method=method, t_end=t_end, physical=physical, output=output, quality=quality))
    return path


def _read_rows(path):
    with open(path, newline="", encoding="utf-8") as handle:
        return list(csv.DictReader(handle))


def test_simulate_analytic_writes_every_artifact(tmp_path):
    out = tmp_path / "run"
    assert main(["simulate", "--config", str(_scenario(tmp_path)), "--out", str(out)]) == 0

    manifest = json.loads((out / MANIFEST_NAME).read_text())
    assert set(manifest) >= {"config", "version", "files", "diagnostics", "duration_seconds"}
    assert manifest["config"]["directory"] == str(out)
    assert manifest["config"]["half_span"] == 20.0
    assert manifest["diagnostics"]["norm_drift"] is None
    assert manifest["diagnostics"]["cross_method_max_dev"] is None
    names = [record["name"] for record in manifest["files"]]
    assert names == ["population.csv", "concurrence.csv", "e_atom.csv", "spectrum.csv", "e_modes.csv", "e_modes_infinity.csv", "peaks.csv"]
    assert read_manifest(out).missing_files(out) == []

    population = _read_rows(out / "population.csv")
    assert list(population[0]) == ["gamma_t", "population_analytic"]
    assert float(population[0]["population_analytic"]) == 1.0
    assert float(population[-1]["gamma_t"]) == pytest.approx(5.0)
    assert list(_read_rows(out / "concurrence.csv")[0]) == ["gamma_t", "c2_total", "c2_atom_mode", "c2_mode_mode"]
    assert list(_read_rows(out / "e_modes.csv")[0]) == ["omega_lambda", "omega_mu", "value"]
    assert list(_read_rows(out / "spectrum.csv")[0]) == ["delta", "s_final", "s_infinity"]
    peaks = _read_rows(out / "peaks.csv")
    assert len(peaks) == 4


def test_csv_formatting(tmp_path):
    out = tmp_path / "run"
    config = parse_config(_scenario(tmp_path, output="artifacts = population").read_text())
    runner.run_scenario(dataclasses.replace(config, directory=str(out)))
    text = (out / "population.csv").read_bytes()
    assert b"\r\n" not in text
    first_row = text.splitlines()[1].split(b",")
    assert first_row == [b"0", b"1"]


def test_dimensionless_output(tmp_path):
    # gamma = 2 in absolute units; every column is reported for gamma = 1
    path = tmp_path / "scaled.ini"
    path.write_text("[physical]\ngamma = 2\ncoupling_ratio = 1\n[bath]\nn_modes = 201\nhalf_span = 40\n[time]\nt_end = 2.5\n[output]\nartifacts = population, spectrum\n")
    out = tmp_path / "run"
    assert main(["simulate", "--config", str(path), "--out", str(out)]) == 0
    population = _read_rows(out / "population.csv")
    assert float(population[-1]["gamma_t"]) == pytest.approx(5.0)
    spectrum = _read_rows(out / "spectrum.csv")
    deltas = [float(row["delta"]) for row in spectrum]
    assert deltas[0] == pytest.approx(-20.0)
    assert deltas[-1] == pytest.approx(20.0)
    middle = spectrum[len(spectrum) // 2]
    assert float(middle["delta"]) == pytest.approx(0.0, abs=1e-12)
    # S(0, infinity) = gamma / (2 pi Omega_0^2) -> 1 / (2 pi) in gamma = 1 units
    assert float(middle["s_infinity"]) == pytest.approx(1.0 / (2.0 * np.pi), rel=1e-9)


def test_simulate_both_methods_agree(tmp_path):
    out = tmp_path / "run"
    path = _scenario(tmp_path, method="both", t_end=3, output="artifacts = population, concurrence")
    assert main(["simulate", "--config", str(path), "--out", str(out)]) == 0
    diagnostics = read_manifest(out).diagnostics
    assert diagnostics["cross_method_max_dev"] < 1e-3
    assert diagnostics["norm_drift"] < 1e-8
    rows = _read_rows(out / "concurrence.csv")
    assert "c2_register_sum" in rows[0]
    assert list(_read_rows(out / "population.csv")[0]) == ["gamma_t", "population_discrete", "population_analytic"]


def test_method_override(tmp_path):
    out = tmp_path / "run"
    path = _scenario(tmp_path, method="analytic", t_end=1, output="artifacts = population")
    assert main(["simulate", "--config", str(path), "--out", str(out), "--method", "discrete"]) == 0
    assert list(_read_rows(out / "population.csv")[0]) == ["gamma_t", "population_discrete"]


def test_quality_gate_exit_code(tmp_path):
    out = tmp_path / "run"
    path = _scenario(tmp_path, method="discrete", t_end=1, output="artifacts = population", quality="norm_drift_limit = 1e-300")
    assert main(["simulate", "--config", str(path), "--out", str(out)]) == 3
    manifest = read_manifest(out)
    assert manifest.status == "quality_failed"
    assert manifest.missing_files(out) == []


def test_quality_gate_raises_with_manifest(tmp_path):
    config = parse_config(_scenario(tmp_path, method="discrete", t_end=1, output=f"artifacts = population\ndirectory = {tmp_path / 'run'}", quality="norm_drift_limit = 1e-300").read_text())
    with pytest.raises(NumericalQualityError) as excinfo:
        runner.run_scenario(config)
    assert excinfo.value.manifest.status == "quality_failed"
    assert "norm drift" in str(excinfo.value)
    assert (tmp_path / "run" / MANIFEST_NAME).exists()


def test_missing_gamma_exit_code(tmp_path, caplog):
    path = tmp_path / "broken.ini"
    path.write_text("[physical]\ncoupling = 1\n[time]\nt_end = 1\n")
    with caplog.at_level(logging.ERROR):
        assert main(["simulate", "--config", str(path)]) == 2
    assert "gamma: required" in caplog.text


def test_strong_coupling_concurrence_reaches_two(tmp_path):
    path = tmp_path / "strong.ini"
    path.write_text("[physical]\ngamma = 1\ncoupling = 10\n[time]\nt_end = 20\n[output]\nartifacts = population, concurrence\n")
    out = tmp_path / "run"
    assert main(["simulate", "--config", str(path), "--out", str(out)]) == 0
    rows = _read_rows(out / "concurrence.csv")
    assert float(rows[-1]["c2_total"]) == pytest.approx(2.0, abs=0.02)
    assert read_manifest(out).diagnostics["c2_infinity"] == pytest.approx(2.0, rel=1e-2)


def test_weak_coupling_concurrence_reaches_two(tmp_path):
    path = tmp_path / "weak.ini"
    path.write_text("[physical]\ngamma = 1\ncoupling = 0.1\n[bath]\nn_modes = 8001\n[time]\nt_end = 60\n[output]\nartifacts = concurrence\n")
    out = tmp_path / "run"
    assert main(["simulate", "--config", str(path), "--out", str(out)]) == 0
    rows = _read_rows(out / "concurrence.csv")
    assert float(rows[-1]["c2_total"]) == pytest.approx(2.0, abs=0.02)


@pytest.mark.parametrize("ratio", [0.1, 0.05])
def test_weak_coupling_c2_infinity_on_default_grid(tmp_path, caplog, ratio):
    path = tmp_path / "weak.ini"
    path.write_text(f"[physical]\ngamma = 1\ncoupling_ratio = {ratio}\n[time]\nt_end = 1\n[output]\nartifacts = population\n")
    out = tmp_path / "run"
    with caplog.at_level(logging.WARNING):
        assert main(["simulate", "--config", str(path), "--out", str(out)]) == 0
    manifest = read_manifest(out)
    assert manifest.config["n_modes"] == 2001
    assert manifest.diagnostics["c2_infinity"] == pytest.approx(2.0, rel=1e-2)
    assert "half-width of the long-time spectrum" in caplog.text


def test_long_time_frequencies_resolve_weak_line():
    params = parse_config("[physical]\ngamma = 1\ncoupling_ratio = 0.05\n[time]\nt_end = 1\n").params()
    frequencies = runner.long_time_frequencies(params)
    assert np.all(np.diff(frequencies) > 0)
    near = frequencies[np.abs(frequencies - params.atom_frequency) < 0.005]
    assert len(near) > 50
    assert frequencies[0] <= -40.0 and frequencies[-1] >= 40.0


def test_simulate_maps_reservoir_error_to_exit_three(tmp_path, monkeypatch, caplog):
    def fail(config):
        raise ReservoirError("manifest lists missing or inconsistent files: population.csv")

    monkeypatch.setattr(runner, "run_scenario", fail)
    with caplog.at_level(logging.ERROR):
        assert main(["simulate", "--config", str(_scenario(tmp_path)), "--out", str(tmp_path / "run")]) == 3
    assert "population.csv" in caplog.text


def test_figure_one(tmp_path):
    records = runner.emit_figure_data("fig1", tmp_path)
    assert [record.name for record in records] == ["fig1.csv"]
    rows = _read_rows(tmp_path / "fig1.csv")
    assert list(rows[0]) == ["gamma_t", "pop_strong", "pop_weak"]
    weak = np.array([float(row["pop_weak"]) for row in rows])
    strong = np.array([float(row["pop_strong"]) for row in rows])
    assert np.all(np.diff(weak) <= 0)
    maxima = np.flatnonzero((strong[1:-1] > strong[:-2]) & (strong[1:-1] >= strong[2:]))
    assert len(maxima) > 10


@pytest.mark.parametrize("which", ["fig1", "fig4"])
def test_figures_deterministic(tmp_path, which):
    first = runner.emit_figure_data(which, tmp_path / "a")
    second = runner.emit_figure_data(which, tmp_path / "b")
    assert first == second
    for record in first:
        assert (tmp_path / "a" / record.name).read_bytes() == (tmp_path / "b" / record.name).read_bytes()


def test_figure_two(tmp_path):
    runner.emit_figure_data("fig2", tmp_path)
    rows = _read_rows(tmp_path / "fig2.csv")
    assert list(rows[0]) == ["gamma_t", "c2_strong", "c2_weak"]
    assert float(rows[0]["c2_strong"]) == 0.0
    assert float(rows[-1]["c2_strong"]) == pytest.approx(2.0, abs=0.02)
    assert float(rows[-1]["c2_weak"]) == pytest.approx(2.0, abs=0.02)


def test_figure_three(tmp_path):
    records = runner.emit_figure_data("fig3", tmp_path)
    assert [record.name for record in records] == ["fig3a_strong.csv", "fig3b_weak.csv"]
    assert all(record.rows == 201 * 301 for record in records)
    rows = _read_rows(tmp_path / "fig3a_strong.csv")
    assert list(rows[0]) == ["gamma_t", "omega_lambda", "value"]
    assert float(rows[-1]["gamma_t"]) == pytest.approx(10.0)
    # Strong coupling: the atom-mode density at late times sits on the Rabi sidebands
    late = [row for row in rows if float(row["gamma_t"]) > 3.0]
    best = max(late, key=lambda row: float(row["value"]))
    assert abs(abs(float(best["omega_lambda"])) - 10.0) < 1.0


def test_figure_four_fields(tmp_path):
    records = runner.emit_figure_data("fig4", tmp_path)
    assert [record.name for record in records] == ["fig4a_strong.csv", "fig4b_moderate.csv", "fig4c_weak.csv"]
    for record in records:
        rows = _read_rows(tmp_path / record.name)
        assert record.rows == len(rows) == 321 * 321
        field = {(row["omega_lambda"], row["omega_mu"]): row["value"] for row in rows}
        for (x, y), value in list(field.items())[::997]:
            assert field[(y, x)] == value


def test_unknown_figure(tmp_path):
    assert main(["figures", "--which", "fig9", "--out", str(tmp_path)]) == 2
    with pytest.raises(ConfigurationError, match="which"):
        runner.emit_figure_data("fig9", tmp_path)


def test_sweep_over_couplings(tmp_path):
    path = _scenario(tmp_path, t_end=2, output="artifacts = population, peaks")
    out = tmp_path / "sweep"
    code = main(["sweep", "--config", str(path), "--axis", "coupling_ratio", "--values", "10,1,0.1", "--out", str(out), "--workers", "1"])
    assert code == 0
    rows = _read_rows(out / "summary.csv")
    assert [row["point"] for row in rows] == ["coupling_ratio=0.1", "coupling_ratio=1", "coupling_ratio=10"]
    assert [len(row["peak_deltas"].split(";")) for row in rows] == [1, 2, 2]
    assert [row["regime"] for row in rows] == ["weak", "strong", "strong"]
    assert all(row["status"] == "ok" for row in rows)
    strong = [float(delta) for delta in rows[2]["peak_deltas"].split(";")]
    assert strong == pytest.approx([-10.0, 10.0], abs=0.02)
    for row in rows:
        assert (out / row["point"] / MANIFEST_NAME).exists()


def test_sweep_summary_c2_infinity_on_default_grid(tmp_path):
    path = tmp_path / "base.ini"
    path.write_text("[physical]\ngamma = 1\ncoupling = 1\n[time]\nt_end = 1\n[output]\nartifacts = population\n")
    out = tmp_path / "sweep"
    code = main(["sweep", "--config", str(path), "--axis", "coupling_ratio", "--values", "10,1,0.1", "--out", str(out), "--workers", "1"])
    assert code == 0
    rows = _read_rows(out / "summary.csv")
    assert [row["point"] for row in rows] == ["coupling_ratio=0.1", "coupling_ratio=1", "coupling_ratio=10"]
    for row in rows:
        assert float(row["c2_infinity"]) == pytest.approx(2.0, rel=1e-2), row["point"]


def test_single_point_sweep_matches_scenario(tmp_path):
    path = _scenario(tmp_path, t_end=2, output="artifacts = population, concurrence")
    assert main(["simulate", "--config", str(path), "--out", str(tmp_path / "direct")]) == 0
    assert main(["sweep", "--config", str(path), "--axis", "coupling", "--values", "1", "--out", str(tmp_path / "sweep")]) == 0
    for name in ("population.csv", "concurrence.csv"):
        assert (tmp_path / "direct" / name).read_bytes() == (tmp_path / "sweep" / "coupling=1" / name).read_bytes()


def test_detuning_sweep_in_parallel_with_catalogue(tmp_path):
    path = _scenario(tmp_path, method="both", t_end=2, output="artifacts = population")
    catalogue = tmp_path / "runs.sqlite"
    out = tmp_path / "sweep"
    code = main(["sweep", "--config", str(path), "--axis", "detuning", "--values", "0,1", "--out", str(out), "--workers", "2", "--catalogue", str(catalogue)])
    assert code == 0
    for label in ("detuning=0", "detuning=1"):
        manifest = read_manifest(out / label)
        assert manifest.status == "ok"
        assert manifest.diagnostics["cross_method_max_dev"] < 1e-3
    session = open_catalogue(str(catalogue))
    runs = find_runs(session, kind="sweep")
    assert [run.label for run in runs] == ["detuning=0", "detuning=1"]
    assert latest_run(session).detuning == 1.0
    close_catalogue(session)


def test_sweep_rejects_empty_values(tmp_path):
    path = _scenario(tmp_path)
    assert main(["sweep", "--config", str(path), "--axis", "coupling", "--values", ","]) == 2
    with pytest.raises(ConfigurationError, match="values"):
        runner.run_sweep(parse_config(path.read_text()), "coupling", [])


def test_sweep_reports_failed_points(tmp_path):
    path = _scenario(tmp_path, method="discrete", t_end=1, output="artifacts = population", quality="norm_drift_limit = 1e-300")
    out = tmp_path / "sweep"
    assert main(["sweep", "--config", str(path), "--axis", "coupling", "--values", "1,2", "--out", str(out), "--workers", "1"]) == 3
    rows = _read_rows(out / "summary.csv")
    assert [row["status"] for row in rows] == ["quality_failed", "quality_failed"]


def test_resolve_workers(monkeypatch):
    monkeypatch.delenv(runner.WORKERS_ENV, raising=False)
    assert runner.resolve_workers(3, 10) == 3
    assert runner.resolve_workers(8, 2) == 2
    monkeypatch.setenv(runner.WORKERS_ENV, "2")
    assert runner.resolve_workers(None, 10) == 2
    assert runner.resolve_workers(4, 10) == 4
    monkeypatch.setenv(runner.WORKERS_ENV, "many")
    with pytest.raises(ConfigurationError, match=runner.WORKERS_ENV):
        runner.resolve_workers(None, 10)
    with pytest.raises(ConfigurationError, match="workers"):
        runner.resolve_workers(0, 10)
