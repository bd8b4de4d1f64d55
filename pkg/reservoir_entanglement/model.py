"""Physical parameters, the Lorentzian reservoir structure function and the discretized bath"""

import dataclasses
import logging
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy import integrate

from .errors import ConfigurationError

logger = logging.getLogger(__name__)

# Quadrature window for the normalization of D(omega), in units of gamma
NORMALIZATION_HALF_SPAN = 200.0

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class PhysicalParams:
    """
    All model constants, in inverse-time units.

    gamma is the reservoir width, omega0_coupling the overall coupling strength,
    atom_frequency the atomic transition frequency and reservoir_center the
    Lorentzian peak. detuning is always reservoir_center - atom_frequency; pass
    the instance through validate_params to get a checked copy.
    """

    gamma: float
    omega0_coupling: float
    atom_frequency: float = 0.0
    reservoir_center: float = 0.0
    detuning: Optional[float] = None

    def __post_init__(self):
        if self.detuning is None:
            object.__setattr__(self, "detuning", self.reservoir_center - self.atom_frequency)

    @classmethod
    def create(
        cls,
        gamma: float,
        omega0_coupling: float,
        detuning: float = 0.0,
        atom_frequency: float = 0.0,
    ) -> "PhysicalParams":
        return validate_params(
            cls(
                gamma=gamma,
                omega0_coupling=omega0_coupling,
                atom_frequency=atom_frequency,
                reservoir_center=atom_frequency + detuning,
            )
        )

    @property
    def coupling_ratio(self) -> float:
        return self.omega0_coupling / self.gamma

    @property
    def is_resonant(self) -> bool:
        return self.detuning == 0.0


@dataclass(frozen=True, eq=False)
class BathGrid:
    """Uniform discretization of the reservoir continuum"""

    frequencies: np.ndarray
    spacing: float
    couplings: np.ndarray

    @property
    def mode_density(self) -> float:
        return 1.0 / self.spacing

    @property
    def size(self) -> int:
        return int(self.frequencies.shape[0])

    def __len__(self) -> int:
        return self.size

    def detunings(self, params: PhysicalParams) -> np.ndarray:
        """delta_lambda = omega_lambda - omega_0"""
        return self.frequencies - params.atom_frequency

    def max_detuning(self, params: PhysicalParams) -> float:
        return float(np.max(np.abs(self.detunings(params))))

    def total_coupling(self) -> float:
        """Sum of g_lambda^2, which approaches Omega_0^2 as the span grows"""
        return float(np.sum(self.couplings**2))

    def recurrence_time(self) -> float:
        """Revival time 2 pi / d_omega of a finite uniform bath"""
        return 2.0 * math.pi / self.spacing


def validate_params(params: PhysicalParams) -> PhysicalParams:
    for name in ("gamma", "omega0_coupling", "atom_frequency", "reservoir_center"):
        value = getattr(params, name)
        if not math.isfinite(value):
            logger.warning("Rejected non-finite %s=%r", name, value)
            raise ConfigurationError(name, "must be finite")
    if params.gamma <= 0:
        logger.warning("Rejected gamma=%r", params.gamma)
        raise ConfigurationError("gamma", "must be positive")
    if params.omega0_coupling <= 0:
        logger.warning("Rejected omega0_coupling=%r", params.omega0_coupling)
        raise ConfigurationError("omega0_coupling", "must be positive")
    return dataclasses.replace(params, detuning=params.reservoir_center - params.atom_frequency)


def lorentzian_structure_function(omega: ArrayLike, params: PhysicalParams) -> ArrayLike:
    """D(omega) = Gamma / ((omega - omega_c)^2 + (Gamma/2)^2), normalized to 2 pi"""
    offset = np.asarray(omega, dtype=float) - params.reservoir_center
    value = params.gamma / (offset**2 + (params.gamma / 2.0) ** 2)
    if np.ndim(value) == 0:
        return float(value)
    return value


def structure_function_norm(params: PhysicalParams, half_span: Optional[float] = None, n_points: int = 400001) -> float:
    """Trapezoid quadrature of D over omega_c +/- half_span (default 200 gamma)"""
    if half_span is None:
        half_span = NORMALIZATION_HALF_SPAN * params.gamma
    omega = params.reservoir_center + np.linspace(-half_span, half_span, n_points)
    return float(integrate.trapezoid(lorentzian_structure_function(omega, params), omega))


def default_half_span(params: PhysicalParams) -> float:
    """Covers the Lorentzian wings and the Rabi sidebands at +/- Omega_0"""
    return max(40.0 * params.gamma, 4.0 * params.omega0_coupling)


def discretize_bath(params: PhysicalParams, n_modes: int, half_span: Optional[float] = None) -> BathGrid:
    """
    Sample the continuum on a uniform grid centred on omega_c.

    Couplings follow rho g^2 = Omega_0^2 D / (2 pi) with rho = 1 / d_omega, every
    mode (endpoints included) carrying the full weight d_omega.
    """
    if half_span is None:
        half_span = default_half_span(params)
    if n_modes < 2:
        raise ConfigurationError("n_modes", "must be at least 2")
    if not half_span > 0 or not math.isfinite(half_span):
        raise ConfigurationError("half_span", "must be positive")

    spacing = 2.0 * half_span / (n_modes - 1)
    # Offsets are built from centred indices so the grid is exactly symmetric about omega_c
    offsets = (np.arange(n_modes, dtype=float) - (n_modes - 1) / 2.0) * spacing
    frequencies = params.reservoir_center + offsets
    couplings = params.omega0_coupling * np.sqrt(lorentzian_structure_function(frequencies, params) * spacing / (2.0 * math.pi))
    return BathGrid(frequencies=frequencies, spacing=spacing, couplings=couplings)
