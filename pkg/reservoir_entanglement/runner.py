"""
Scenario runs, parameter sweeps and figure data.

Every file is written in gamma = 1 units: times as gamma t, frequencies as
(omega - omega_0) / gamma, spectra as S gamma, E_A as E_A gamma and E_R as
E_R gamma^2.
"""

import dataclasses
import logging
import math
import os
import time
from pathlib import Path
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence, Union

import numpy as np
from multiprocess import Pool

from . import density, pseudomode
from .artifacts import FileRecord, RunManifest, export_stride, format_number, package_version, write_columns, write_csv, write_field
from .config import ScenarioConfig
from .discrete import SystemState, integrate, plan_steps
from .entanglement import NORM_TOLERANCE, concurrence_sum
from .errors import ConfigurationError, NumericalQualityError, ReservoirError
from .model import PhysicalParams, default_half_span, discretize_bath
from .pseudomode import Spectrum

logger = logging.getLogger(__name__)

WORKERS_ENV = "RESERVOIR_WORKERS"
SUMMARY_NAME = "summary.csv"

# Frequency window of the long-time analysis grids, in units of max(Omega_0, 3 gamma)
ANALYSIS_SPAN_FACTOR = 1.5
ANALYSIS_POINTS_PER_SIDE = 800
# Coarsest analysis spacing, in units of gamma
ANALYSIS_MAX_SPACING = 0.125
# Geometric nodes per side of omega_0 on the long-time grid, the finest at 1/LONG_TIME_FINEST_FRACTION of the narrowest line
LONG_TIME_POINTS_PER_SIDE = 1200
LONG_TIME_FINEST_FRACTION = 8.0

STRONG_RATIO = 10.0
MODERATE_RATIO = 1.0
WEAK_RATIO = 0.1

PathLike = Union[str, Path]


class Units(NamedTuple):
    """Rescaling to gamma = 1 with frequencies measured from the atomic transition"""

    gamma: float
    atom_frequency: float

    def time(self, t):
        return np.asarray(t, dtype=float) * self.gamma

    def delta(self, omega):
        return (np.asarray(omega, dtype=float) - self.atom_frequency) / self.gamma

    def density(self, values, power: int = 1):
        return np.asarray(values, dtype=float) * self.gamma**power

    @classmethod
    def of(cls, params: PhysicalParams) -> "Units":
        return cls(gamma=params.gamma, atom_frequency=params.atom_frequency)


def analysis_half_span(params: PhysicalParams) -> float:
    return ANALYSIS_SPAN_FACTOR * max(params.omega0_coupling, 3.0 * params.gamma)


def analysis_frequencies(params: PhysicalParams) -> np.ndarray:
    """Symmetric grid about omega_0 for long-time fields; omega_0 itself is always a node"""
    half_span = analysis_half_span(params)
    spacing = min(half_span / ANALYSIS_POINTS_PER_SIDE, ANALYSIS_MAX_SPACING * params.gamma)
    n_side = int(math.ceil(half_span / spacing - 1e-9))
    return params.atom_frequency + np.arange(-n_side, n_side + 1, dtype=float) * spacing


def long_time_frequencies(params: PhysicalParams) -> np.ndarray:
    """
    Non-uniform nodes for integrals of S(omega, infinity): geometric offsets from
    omega_0 down to a fraction of the narrowest long-time line, merged with a
    uniform grid over the default bath span.
    """
    half_span = default_half_span(params)
    finest = pseudomode.long_time_width(params) / LONG_TIME_FINEST_FRACTION
    offsets = np.geomspace(finest, half_span, LONG_TIME_POINTS_PER_SIDE)
    spacing = min(half_span / ANALYSIS_POINTS_PER_SIDE, ANALYSIS_MAX_SPACING * params.gamma)
    n_side = int(math.ceil(half_span / spacing - 1e-9))
    uniform = np.arange(-n_side, n_side + 1, dtype=float) * spacing
    return params.atom_frequency + np.union1d(np.concatenate((-offsets, offsets)), uniform)


def _quality_failures(config: ScenarioConfig, diagnostics: Dict) -> List[str]:
    failures = []
    drift = diagnostics.get("norm_drift")
    if drift is not None and drift > config.norm_drift_limit:
        failures.append(f"norm drift {drift:.3e} exceeds {config.norm_drift_limit:g}")
    deviation = diagnostics.get("cross_method_max_dev")
    if deviation is not None and deviation > config.cross_method_tolerance:
        failures.append(f"cross-method deviation {deviation:.3e} exceeds {config.cross_method_tolerance:g}")
    return failures


def run_scenario(config: ScenarioConfig) -> RunManifest:
    """
    Run one scenario and write its artifacts plus manifest.json to config.directory.

    The manifest is written even when a quality gate fails; the failure is then
    raised as NumericalQualityError carrying it.
    """
    started = time.perf_counter()
    config = config.resolved()
    params = config.params()
    grid = config.grid(params)
    units = Units.of(params)
    directory = Path(config.directory)
    directory.mkdir(parents=True, exist_ok=True)
    logger.info(
        "Running %s scenario: Omega_0/gamma=%g (%s coupling), detuning=%g, %d modes",
        config.method,
        config.coupling_ratio,
        pseudomode.coupling_regime(params),
        params.detuning,
        grid.size,
    )

    line_width = pseudomode.long_time_width(params)
    if grid.spacing > line_width:
        logger.warning(
            "Bath spacing %g exceeds the %g half-width of the long-time spectrum; late-time grid quadratures are unresolved",
            grid.spacing,
            line_width,
        )
    plan = plan_steps(params, grid, config.t_end, config.dt, config.sample_every)
    times = plan.times
    c_a0 = config.initial_amplitude
    diagnostics = {"norm_drift": None, "cross_method_max_dev": None}
    populations = {}
    trajectory = None
    if config.method in ("discrete", "both"):
        initial = SystemState.excited_atom(grid, config.atom_population)
        trajectory = integrate(initial, params, config.t_end, config.dt, config.sample_every)
        populations["discrete"] = trajectory.populations
        diagnostics["norm_drift"] = trajectory.norm_drift()
    if config.method in ("analytic", "both"):
        populations["analytic"] = np.abs(pseudomode.solve(params, c_a0).atom_amplitude(times)) ** 2
    if config.method == "both":
        diagnostics["cross_method_max_dev"] = float(np.max(np.abs(populations["discrete"] - populations["analytic"])))

    # Densities follow the analytic amplitudes whenever they were computed
    primary = "analytic" if "analytic" in populations else "discrete"
    atom_pop = populations[primary]

    def spectrum_at(index: int) -> Spectrum:
        if primary == "analytic":
            return pseudomode.spectrum_at_time(float(times[index]), grid, params, c_a0)
        return density.excitation_spectrum_from_state(trajectory[index])

    manifest = RunManifest(config=config.to_dict(), version=package_version())
    artifacts = config.artifacts
    gamma_t = units.time(times)
    deltas = units.delta(grid.frequencies)
    spectrum_infinity = pseudomode.spectrum_infinity(grid, params, c_a0)
    final_spectrum = spectrum_at(len(times) - 1)
    diagnostics["c2_infinity"] = density.total_concurrence(pseudomode.spectrum_infinity(long_time_frequencies(params), params, c_a0))

    if "population" in artifacts:
        columns = {"gamma_t": gamma_t}
        for name, values in populations.items():
            columns[f"population_{name}"] = values
        manifest.add_file("population.csv", write_columns(directory / "population.csv", columns))

    if "concurrence" in artifacts or "e_atom" in artifacts:
        time_stride = export_stride(len(times))
        frequency_stride = export_stride(grid.size)
        parts = []
        e_atom_rows = []
        for index in range(len(times)):
            spectrum = spectrum_at(index)
            parts.append(density.concurrence_parts(spectrum, atom_pop[index]))
            if index % time_stride == 0:
                e_atom_rows.append(density.density_atom_mode(spectrum, atom_pop[index])[::frequency_stride])

        if "concurrence" in artifacts:
            columns = {
                "gamma_t": gamma_t,
                "c2_total": np.array([part.total for part in parts]),
                "c2_atom_mode": np.array([part.atom_part for part in parts]),
                "c2_mode_mode": np.array([part.mode_part for part in parts]),
            }
            if trajectory is not None:
                if np.max(np.abs(trajectory.norms - 1.0)) <= NORM_TOLERANCE:
                    columns["c2_register_sum"] = np.array([concurrence_sum(state).total for state in trajectory])
                else:
                    logger.warning("Norm drift too large for the finite-register concurrence column; omitting it")
            manifest.add_file("concurrence.csv", write_columns(directory / "concurrence.csv", columns))

        if "e_atom" in artifacts:
            rows = write_field(
                directory / "e_atom.csv",
                gamma_t[::time_stride],
                deltas[::frequency_stride],
                units.density(np.array(e_atom_rows)),
                ("gamma_t", "omega_lambda"),
                stride=1,
            )
            manifest.add_file("e_atom.csv", rows)

    if "spectrum" in artifacts:
        columns = {
            "delta": deltas,
            "s_final": units.density(final_spectrum.values),
            "s_infinity": units.density(spectrum_infinity.values),
        }
        manifest.add_file("spectrum.csv", write_columns(directory / "spectrum.csv", columns))

    stride = export_stride(grid.size)
    if "e_modes" in artifacts:
        thinned = Spectrum(final_spectrum.frequencies[::stride], final_spectrum.values[::stride], final_spectrum.time)
        field = units.density(density.density_mode_mode(thinned), power=2)
        rows = write_field(directory / "e_modes.csv", deltas[::stride], deltas[::stride], field, ("omega_lambda", "omega_mu"), stride=1)
        manifest.add_file("e_modes.csv", rows)

    if "e_modes_infinity" in artifacts:
        field = density.density_mode_mode_infinity(grid.frequencies[::stride], params) * config.atom_population**2
        rows = write_field(
            directory / "e_modes_infinity.csv",
            deltas[::stride],
            deltas[::stride],
            units.density(field, power=2),
            ("omega_lambda", "omega_mu"),
            stride=1,
        )
        manifest.add_file("e_modes_infinity.csv", rows)

    frequencies = analysis_frequencies(params)
    field = density.density_mode_mode_infinity(frequencies, params) * config.atom_population**2
    peaks = density.sideband_peak_analysis((frequencies, field), params.gamma)
    diagnostics["peaks_infinity"] = [[float(units.delta(x)), float(units.delta(y))] for x, y in (peak.location for peak in peaks)]
    if "peaks" in artifacts:
        peak_rows = [
            (float(units.delta(peak.location[0])), float(units.delta(peak.location[1])), peak.height * params.gamma**2, peak.weight)
            for peak in peaks
        ]
        manifest.add_file("peaks.csv", write_csv(directory / "peaks.csv", ("omega_lambda", "omega_mu", "height", "weight"), peak_rows))

    manifest.diagnostics = diagnostics
    failures = _quality_failures(config, diagnostics)
    manifest.status = "quality_failed" if failures else "ok"
    manifest.duration_seconds = round(time.perf_counter() - started, 3)
    manifest.write(directory)

    missing = manifest.missing_files(directory)
    if missing:
        raise ReservoirError(f"manifest lists missing or inconsistent files: {', '.join(missing)}")
    if failures:
        message = "; ".join(failures)
        logger.error("Quality gate failed in %s: %s", directory, message)
        raise NumericalQualityError(message, diagnostics, manifest)
    return manifest


class SweepPoint(NamedTuple):
    label: str
    value: float
    directory: str
    regime: str
    status: str
    manifest: Optional[RunManifest]
    message: str = ""


class SweepResult(NamedTuple):
    axis: str
    points: List[SweepPoint]
    summary_path: Path

    @property
    def failed(self) -> List[SweepPoint]:
        return [point for point in self.points if point.status != "ok"]


def point_label(axis: str, value: float) -> str:
    return f"{axis}={format_number(value)}"


def resolve_workers(requested: Optional[int], n_points: int) -> int:
    """--workers, else RESERVOIR_WORKERS, else one worker per CPU"""
    if requested is None:
        raw = os.environ.get(WORKERS_ENV)
        if raw:
            try:
                requested = int(raw)
            except ValueError as exc:
                raise ConfigurationError(WORKERS_ENV, f"cannot parse {raw!r}") from exc
        else:
            requested = os.cpu_count() or 1
    if requested < 1:
        raise ConfigurationError("workers", "must be at least 1")
    return max(1, min(requested, n_points))


def _run_point(label: str, value: float, config: ScenarioConfig) -> SweepPoint:
    regime = pseudomode.coupling_regime(config.params())
    logger.info("Sweep point %s started", label)
    try:
        manifest = run_scenario(config)
    except NumericalQualityError as exc:
        return SweepPoint(label, value, config.directory, regime, "quality_failed", exc.manifest, str(exc))
    except ReservoirError as exc:
        logger.error("Sweep point %s failed: %s", label, exc)
        return SweepPoint(label, value, config.directory, regime, "failed", None, str(exc))
    logger.info("Sweep point %s finished in %.3fs", label, manifest.duration_seconds)
    return SweepPoint(label, value, config.directory, regime, "ok", manifest)


def _peak_deltas(manifest: Optional[RunManifest]) -> str:
    if manifest is None:
        return ""
    deltas = sorted({location[0] for location in manifest.diagnostics.get("peaks_infinity", [])})
    return ";".join(format_number(delta) for delta in deltas)


def run_sweep(base: ScenarioConfig, axis: str, values: Sequence[float], workers: Optional[int] = None) -> SweepResult:
    """
    One scenario per value of axis, each in its own <axis>=<value> subdirectory of
    base.directory, plus summary.csv sorted by value.

    Every point is configured (and so validated) before any of them runs.
    """
    if not values:
        raise ConfigurationError("values", "empty value list")
    root = Path(base.directory)
    points = []
    for value in sorted(set(float(v) for v in values)):
        label = point_label(axis, value)
        config = dataclasses.replace(base.with_axis(axis, value), directory=str(root / label)).resolved()
        points.append((label, value, config))

    n_workers = resolve_workers(workers, len(points))
    logger.info("Sweeping %s over %d values with %d worker(s)", axis, len(points), n_workers)
    if n_workers == 1:
        results = [_run_point(*point) for point in points]
    else:
        with Pool(processes=n_workers) as pool:
            results = pool.starmap(_run_point, points)

    root.mkdir(parents=True, exist_ok=True)
    summary_rows = [
        (
            point.label,
            point.value,
            format_number(point.manifest.diagnostics["c2_infinity"]) if point.manifest is not None else "",
            _peak_deltas(point.manifest),
            point.regime,
            point.status,
        )
        for point in results
    ]
    summary_path = root / SUMMARY_NAME
    write_csv(summary_path, ("point", "value", "c2_infinity", "peak_deltas", "regime", "status"), summary_rows)
    result = SweepResult(axis=axis, points=results, summary_path=summary_path)
    if result.failed:
        logger.error("%d of %d sweep points failed", len(result.failed), len(results))
    return result


def _figure_params(ratio: float) -> PhysicalParams:
    return PhysicalParams.create(gamma=1.0, omega0_coupling=ratio)


def _concurrence_series(params: PhysicalParams, times: np.ndarray, n_modes: int, half_span: float) -> np.ndarray:
    grid = discretize_bath(params, n_modes, half_span)
    populations = np.abs(pseudomode.atomic_amplitude_resonant(times, params)) ** 2
    return np.array([density.concurrence_parts(pseudomode.spectrum_at_time(float(t), grid, params), p).total for t, p in zip(times, populations)])


def _figure_populations(directory: Path) -> List[FileRecord]:
    times = np.linspace(0.0, 60.0, 3001)
    columns = {
        "gamma_t": times,
        "pop_strong": np.abs(pseudomode.atomic_amplitude_resonant(times, _figure_params(STRONG_RATIO))) ** 2,
        "pop_weak": np.abs(pseudomode.atomic_amplitude_resonant(times, _figure_params(WEAK_RATIO))) ** 2,
    }
    return [FileRecord("fig1.csv", write_columns(directory / "fig1.csv", columns))]


def _figure_concurrence(directory: Path) -> List[FileRecord]:
    # The weak-coupling long-time spectrum is 0.04 gamma wide, so the grid needs d_omega = 0.01 gamma
    times = np.linspace(0.0, 60.0, 1201)
    columns = {
        "gamma_t": times,
        "c2_strong": _concurrence_series(_figure_params(STRONG_RATIO), times, 8001, 40.0),
        "c2_weak": _concurrence_series(_figure_params(WEAK_RATIO), times, 8001, 40.0),
    }
    return [FileRecord("fig2.csv", write_columns(directory / "fig2.csv", columns))]


def _figure_atom_density(directory: Path) -> List[FileRecord]:
    records = []
    for name, ratio, t_end in (("fig3a_strong.csv", STRONG_RATIO, 10.0), ("fig3b_weak.csv", WEAK_RATIO, 60.0)):
        params = _figure_params(ratio)
        grid = discretize_bath(params, 301, analysis_half_span(params))
        times = np.linspace(0.0, t_end, 201)
        populations = np.abs(pseudomode.atomic_amplitude_resonant(times, params)) ** 2
        field = np.array([density.density_atom_mode(pseudomode.spectrum_at_time(float(t), grid, params), p) for t, p in zip(times, populations)])
        records.append(FileRecord(name, write_field(directory / name, times, grid.frequencies, field, ("gamma_t", "omega_lambda"), stride=1)))
    return records


def _figure_mode_density(directory: Path) -> List[FileRecord]:
    records = []
    for name, ratio in (("fig4a_strong.csv", STRONG_RATIO), ("fig4b_moderate.csv", MODERATE_RATIO), ("fig4c_weak.csv", WEAK_RATIO)):
        params = _figure_params(ratio)
        frequencies = analysis_frequencies(params)
        field = density.density_mode_mode_infinity(frequencies, params)
        records.append(FileRecord(name, write_field(directory / name, frequencies, frequencies, field, ("omega_lambda", "omega_mu"), stride=5)))
    return records


FIGURES: Dict[str, Callable[[Path], List[FileRecord]]] = {
    "fig1": _figure_populations,
    "fig2": _figure_concurrence,
    "fig3": _figure_atom_density,
    "fig4": _figure_mode_density,
}


def emit_figure_data(which: str, directory: PathLike) -> List[FileRecord]:
    """Plot-ready CSVs for one figure, all at gamma = 1, omega_0 = 0, on resonance with the atom fully excited"""
    if which not in FIGURES:
        raise ConfigurationError("which", f"unknown figure {which!r} (expected one of {', '.join(FIGURES)})")
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    return FIGURES[which](directory)
