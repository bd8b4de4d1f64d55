"""Entanglement densities built from the reservoir excitation spectrum"""

import logging
import math
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Tuple, Union

import numpy as np
from scipy import integrate

from .discrete import SystemState
from .errors import ConfigurationError, InvalidStateError
from .model import BathGrid, PhysicalParams
from .pseudomode import INFINITY, Spectrum, TimeLike, spectrum_infinity

logger = logging.getLogger(__name__)

PEAK_RELATIVE_THRESHOLD = 0.01
# Peak analysis needs d_omega below gamma / PEAK_GRID_RESOLUTION
PEAK_GRID_RESOLUTION = 4.0


@dataclass(frozen=True, eq=False)
class DensityFields:
    """E_A(omega, t) on a frequency grid and E_R(omega, omega', t) on grid x grid"""

    frequencies: np.ndarray
    e_atom: np.ndarray
    e_modes: np.ndarray
    time: TimeLike
    atom_population: float


class ConcurrenceParts(NamedTuple):
    total: float
    atom_part: float
    mode_part: float


class Peak(NamedTuple):
    location: Tuple[float, ...]
    height: float
    weight: float


def excitation_spectrum_from_state(state: SystemState, grid: Optional[BathGrid] = None) -> Spectrum:
    """S(omega_lambda, t) = |c_lambda(t)|^2 / d_omega"""
    grid = grid if grid is not None else state.grid
    if grid is None:
        raise InvalidStateError("the state carries no bath grid")
    if grid.size != state.n_modes:
        raise InvalidStateError(f"{state.n_modes} mode amplitudes for a grid of {grid.size} modes")
    return Spectrum(frequencies=grid.frequencies, values=np.abs(state.mode_amps) ** 2 / grid.spacing, time=state.time)


def density_atom_mode(spectrum: Spectrum, atom_pop: float) -> np.ndarray:
    """E_A = 4 |c_a|^2 S"""
    return 4.0 * atom_pop * spectrum.values


def density_mode_mode(spectrum: Spectrum) -> np.ndarray:
    """E_R = 2 S(omega_lambda) S(omega_mu), diagonal included"""
    return 2.0 * np.outer(spectrum.values, spectrum.values)


def density_fields(spectrum: Spectrum, atom_pop: float) -> DensityFields:
    return DensityFields(
        frequencies=spectrum.frequencies,
        e_atom=density_atom_mode(spectrum, atom_pop),
        e_modes=density_mode_mode(spectrum),
        time=spectrum.time,
        atom_population=atom_pop,
    )


def density_mode_mode_infinity(
    frequencies: np.ndarray,
    params: PhysicalParams,
    frequencies_mu: Optional[np.ndarray] = None,
) -> np.ndarray:
    """E_R(omega_lambda, omega_mu, infinity) for an atom starting fully excited"""
    frequencies = np.asarray(frequencies, dtype=float)
    if frequencies_mu is None:
        frequencies_mu = frequencies
    if params.is_resonant:
        omega0 = params.omega0_coupling
        half_width = params.gamma / 2.0

        def denominator(freq):
            delta = np.asarray(freq, dtype=float) - params.atom_frequency
            return (delta**2 - omega0**2) ** 2 + half_width**2 * delta**2

        numerator = omega0**4 * params.gamma**2 / (2.0 * math.pi**2)
        return numerator / np.outer(denominator(frequencies), denominator(frequencies_mu))
    s_lambda = spectrum_infinity(frequencies, params).values
    s_mu = spectrum_infinity(frequencies_mu, params).values
    return 2.0 * np.outer(s_lambda, s_mu)


def concurrence_parts(spectrum: Spectrum, atom_pop: float) -> ConcurrenceParts:
    """
    Atom-mode and mode-mode contributions to C^2 by trapezoid quadrature.

    The mode-mode double integral is separable, so it is evaluated as 2 (int S)^2.
    """
    bath = spectrum.integral()
    atom_part = 4.0 * atom_pop * bath
    mode_part = 2.0 * bath**2
    return ConcurrenceParts(total=atom_part + mode_part, atom_part=atom_part, mode_part=mode_part)


def total_concurrence(source: Union[DensityFields, Spectrum], atom_pop: Optional[float] = None) -> float:
    """C^2 = int E_A + int int E_R; a bare spectrum needs the atomic population unless it is the t = infinity one"""
    if isinstance(source, DensityFields):
        # Materialized fields are integrated as they are, the diagonal included
        frequencies = source.frequencies
        atom_part = integrate.trapezoid(source.e_atom, frequencies)
        mode_part = integrate.trapezoid(integrate.trapezoid(source.e_modes, frequencies, axis=1), frequencies)
        return float(atom_part + mode_part)
    if atom_pop is None:
        if source.time is not INFINITY:
            raise ConfigurationError("atom_pop", "required for a finite-time spectrum")
        atom_pop = 0.0
    return concurrence_parts(source, atom_pop).total


def _local_maxima_1d(values: np.ndarray) -> np.ndarray:
    # Strictly above the previous sample and not below the next: plateaus resolve to their first index
    left = np.concatenate(([-np.inf], values[:-1]))
    right = np.concatenate((values[1:], [-np.inf]))
    return np.flatnonzero((values > left) & (values >= right))


def _local_maxima_2d(field: np.ndarray) -> List[Tuple[int, int]]:
    padded = np.pad(field, 1, mode="constant", constant_values=-np.inf)
    core = padded[1:-1, 1:-1]
    is_peak = np.ones(field.shape, dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == 0 and dj == 0:
                continue
            neighbour = padded[1 + di : padded.shape[0] - 1 + di, 1 + dj : padded.shape[1] - 1 + dj]
            if (di, dj) < (0, 0):
                is_peak &= core > neighbour
            else:
                is_peak &= core >= neighbour
    return [tuple(int(v) for v in index) for index in np.argwhere(is_peak)]


def sideband_peak_analysis(
    source: Union[Spectrum, DensityFields, Tuple[np.ndarray, np.ndarray]],
    gamma: float,
    relative_threshold: float = PEAK_RELATIVE_THRESHOLD,
) -> List[Peak]:
    """
    Local maxima above relative_threshold of the global maximum, each with the
    weight integrated over a +/- gamma window around it.

    source is a spectrum (1-D), DensityFields (its mode-mode field) or a
    (frequencies, square field) pair.
    """
    if isinstance(source, Spectrum):
        frequencies, field = source.frequencies, source.values
    elif isinstance(source, DensityFields):
        frequencies, field = source.frequencies, source.e_modes
    else:
        frequencies, field = source
    frequencies = np.asarray(frequencies, dtype=float)
    field = np.asarray(field, dtype=float)
    if frequencies.size < 2:
        raise ConfigurationError("n_modes", "at least 2 frequency samples required for peak analysis")
    spacing = float(frequencies[1] - frequencies[0])
    if spacing >= gamma / PEAK_GRID_RESOLUTION:
        raise ConfigurationError("n_modes", f"grid spacing {spacing:g} too coarse for peak analysis (needs < {gamma / PEAK_GRID_RESOLUTION:g})")

    peaks = []
    if not np.max(field) > 0:
        return peaks
    floor = relative_threshold * float(np.max(field))
    if field.ndim == 1:
        for index in _local_maxima_1d(field):
            if field[index] < floor:
                continue
            window = np.abs(frequencies - frequencies[index]) <= gamma
            weight = integrate.trapezoid(field[window], frequencies[window])
            peaks.append(Peak(location=(float(frequencies[index]),), height=float(field[index]), weight=float(weight)))
    else:
        for row, column in _local_maxima_2d(field):
            if field[row, column] < floor:
                continue
            rows = np.abs(frequencies - frequencies[row]) <= gamma
            columns = np.abs(frequencies - frequencies[column]) <= gamma
            block = field[np.ix_(rows, columns)]
            inner = integrate.trapezoid(block, frequencies[columns], axis=1)
            weight = integrate.trapezoid(inner, frequencies[rows])
            peaks.append(
                Peak(
                    location=(float(frequencies[row]), float(frequencies[column])),
                    height=float(field[row, column]),
                    weight=float(weight),
                )
            )
    logger.debug("Found %d peaks above %g", len(peaks), floor)
    return peaks
