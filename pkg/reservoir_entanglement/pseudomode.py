"""
Exact dynamics of the Lorentzian reservoir through its single pseudomode.

The atom couples to one damped mode b~ (i d/dt (c~_a, b~) = M (c~_a, b~) with
M = [[0, Omega_0], [Omega_0, Delta - i Gamma/2]]), so every amplitude is a short
sum of exponentials (A_k + C_k t) e^{s_k t}. The t-linear coefficients C_k only
appear at the critical point Gamma = 4 Omega_0, Delta = 0 where M is defective.
"""

import enum
import logging
import math
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np
from scipy import integrate

from .errors import ConfigurationError
from .model import BathGrid, PhysicalParams, lorentzian_structure_function

logger = logging.getLogger(__name__)

CRITICAL_ALPHA_TOLERANCE = 1e-8
DEGENERATE_DISCRIMINANT_TOLERANCE = 1e-12
SERIES_THRESHOLD = 0.1
SERIES_TERMS = 12

ArrayLike = Union[float, np.ndarray]


class Horizon(enum.Enum):
    """Symbolic time marker for the t -> infinity limit"""

    INFINITY = "infinity"

    def __str__(self):
        return self.value


INFINITY = Horizon.INFINITY
TimeLike = Union[float, Horizon]


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Reservoir excitation spectrum S(omega, t), a density per unit frequency"""

    frequencies: np.ndarray
    values: np.ndarray
    time: TimeLike

    @property
    def spacing(self) -> float:
        if len(self.frequencies) < 2:
            raise ConfigurationError("n_modes", "at least 2 frequency samples required")
        return float(self.frequencies[1] - self.frequencies[0])

    def integral(self) -> float:
        """Total bath excitation by trapezoid quadrature"""
        return float(integrate.trapezoid(self.values, self.frequencies))


@dataclass(frozen=True, eq=False)
class PseudomodeSolution:
    """
    c~_a(t) = c_a0 sum_k (weights_k + atom_secular_k t) e^{rates_k t}
    b~(t)   = c_a0 sum_k (pseudomode_weights_k + pseudomode_secular_k t) e^{rates_k t}

    The exponential sums feed the mode integrals and the leaked population. The
    amplitudes themselves come from the propagator e^{-i M t}, which stays exact
    where the two rates merge.
    """

    rates: np.ndarray
    weights: np.ndarray
    alpha: complex
    pseudomode_weights: np.ndarray
    atom_secular: np.ndarray
    pseudomode_secular: np.ndarray
    complex_detuning: complex
    omega0_coupling: float
    gamma: float
    c_a0: complex = 1.0 + 0j

    def atom_amplitude(self, t: ArrayLike) -> ArrayLike:
        cosine, sinc = _propagator_terms(self.complex_detuning, self.omega0_coupling, t)
        return _scalar_or_array(self.c_a0 * (cosine + 0.5j * self.complex_detuning * sinc))

    def pseudomode_amplitude(self, t: ArrayLike) -> ArrayLike:
        _, sinc = _propagator_terms(self.complex_detuning, self.omega0_coupling, t)
        return _scalar_or_array(-1j * self.omega0_coupling * self.c_a0 * sinc)

    def leaked_population(self, t: ArrayLike) -> ArrayLike:
        """Gamma * integral_0^t |b~|^2, the population that has left through the pseudomode damping"""
        t_arr = np.asarray(t, dtype=float)
        total = np.zeros_like(t_arr, dtype=complex)
        for k in range(self.rates.shape[0]):
            for m in range(self.rates.shape[0]):
                w = self.rates[k] + np.conj(self.rates[m])
                p_k, q_k = self.pseudomode_weights[k], self.pseudomode_secular[k]
                p_m, q_m = np.conj(self.pseudomode_weights[m]), np.conj(self.pseudomode_secular[m])
                i0, i1, i2 = _power_exponential_integrals(w, t_arr)
                total = total + p_k * p_m * i0 + (p_k * q_m + q_k * p_m) * i1 + q_k * q_m * i2
        value = self.gamma * abs(self.c_a0) ** 2 * total.real
        if np.ndim(value) == 0:
            return float(value)
        return value


def _times(t: ArrayLike) -> np.ndarray:
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise ConfigurationError("t", "must be non-negative")
    return t_arr


def _scalar_or_array(value: np.ndarray) -> ArrayLike:
    if np.ndim(value) == 0:
        return complex(value)
    return value


def _even_series(y: np.ndarray, sign: float) -> np.ndarray:
    """sum_n sign^n y^(2n) / (2n + 1)!: sin(y)/y for sign = -1, sinh(y)/y for sign = +1"""
    square = sign * y * y
    series = np.zeros_like(y, dtype=complex)
    for n in reversed(range(SERIES_TERMS)):
        series = series * square + 1.0 / math.factorial(2 * n + 1)
    return series


def _propagator_terms(complex_detuning: complex, omega0: float, t: ArrayLike) -> Tuple[np.ndarray, np.ndarray]:
    """
    (e^{-i m t/2} cos(q t), e^{-i m t/2} t sin(q t)/(q t)) with m = Delta - i Gamma/2
    and q^2 = m^2/4 + Omega_0^2, so that e^{-i M t} = e^{-i m t/2} (cos(q t) - i sin(q t) (M - m/2) / q).

    Both are built from the decaying eigen-exponentials; sin(q t)/(q t) switches
    to its series below SERIES_THRESHOLD.
    """
    t_arr = _times(t)
    q = complex(np.sqrt(complex(complex_detuning**2 / 4.0 + omega0**2)))
    lower = np.exp(-1j * (complex_detuning / 2.0 - q) * t_arr)
    upper = np.exp(-1j * (complex_detuning / 2.0 + q) * t_arr)
    y = q * t_arr
    small = np.abs(y) < SERIES_THRESHOLD
    safe_q = q if q != 0 else 1.0
    series = np.exp(-0.5j * complex_detuning * t_arr) * t_arr * _even_series(np.where(small, y, 0.0), -1.0)
    sinc = np.where(small, series, (lower - upper) / (2j * safe_q))
    return (lower + upper) / 2.0, sinc


def _damped_hyperbolic(x: np.ndarray, decay: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """(e^{-decay} cosh x, e^{-decay} sinh(x)/x), with Re x <= decay"""
    grow = np.exp(x - decay)
    shrink = np.exp(-x - decay)
    small = np.abs(x) < SERIES_THRESHOLD
    safe_x = np.where(small, 1.0, x)
    series = np.exp(-decay) * _even_series(np.where(small, x, 0.0), 1.0)
    return (grow + shrink) / 2.0, np.where(small, series, (grow - shrink) / (2.0 * safe_x))


def _power_exponential_integrals(w: complex, t: np.ndarray):
    """integral_0^t t'^n e^{w t'} dt' for n = 0, 1, 2 (Re w < 0 for a damped system)"""
    e = np.exp(w * t)
    i0 = (e - 1.0) / w
    i1 = (t * e - i0) / w
    i2 = (t**2 * e - 2.0 * i1) / w
    return i0, i1, i2


def alpha(params: PhysicalParams) -> complex:
    """Modified decay rate sqrt(Gamma^2 - 16 Omega_0^2) on the principal complex branch"""
    return complex(np.sqrt(complex(params.gamma**2 - 16.0 * params.omega0_coupling**2)))


def markovian_decay_rate(params: PhysicalParams) -> float:
    """Weak-coupling population decay rate 4 Omega_0^2 / Gamma"""
    return 4.0 * params.omega0_coupling**2 / params.gamma


def long_time_width(params: PhysicalParams) -> float:
    """Half-width of the narrowest line of S(omega, infinity): a Rabi sideband (Gamma/4) or the weak-coupling emission line"""
    emission = params.omega0_coupling**2 * lorentzian_structure_function(params.atom_frequency, params) / 2.0
    return min(params.gamma / 4.0, emission)


def coupling_regime(params: PhysicalParams) -> str:
    ratio = 4.0 * params.omega0_coupling / params.gamma
    if abs(ratio - 1.0) < CRITICAL_ALPHA_TOLERANCE:
        return "critical"
    return "strong" if ratio > 1.0 else "weak"


def _resonant_solution(params: PhysicalParams, c_a0: complex) -> PseudomodeSolution:
    gamma = params.gamma
    omega0 = params.omega0_coupling
    a = alpha(params)
    if abs(a) < CRITICAL_ALPHA_TOLERANCE * gamma:
        logger.debug("Critical damping: using the e^{-Gamma t/4}(1 + Gamma t/4) limit")
        return _critical_solution(params, c_a0, a)
    rates = np.array([(-gamma + a) / 4.0, (-gamma - a) / 4.0])
    weights = np.array([(1.0 + gamma / a) / 2.0, (1.0 - gamma / a) / 2.0])
    # b~ = i (d c~_a / dt) / Omega_0
    pseudomode_weights = 1j * weights * rates / omega0
    return PseudomodeSolution(
        rates=rates,
        weights=weights,
        alpha=a,
        pseudomode_weights=pseudomode_weights,
        atom_secular=np.zeros(2, dtype=complex),
        pseudomode_secular=np.zeros(2, dtype=complex),
        complex_detuning=params.detuning - 0.5j * gamma,
        omega0_coupling=omega0,
        gamma=gamma,
        c_a0=complex(c_a0),
    )


def _critical_solution(params: PhysicalParams, c_a0: complex, a: complex) -> PseudomodeSolution:
    # M is defective here: x(t) = e^{-i mu t} (1 - i (M - mu) t) x(0), mu = (Delta - i Gamma/2) / 2
    mu = (params.detuning - 0.5j * params.gamma) / 2.0
    return PseudomodeSolution(
        rates=np.array([-1j * mu]),
        weights=np.array([1.0 + 0j]),
        alpha=a,
        pseudomode_weights=np.array([0j]),
        atom_secular=np.array([1j * mu]),
        pseudomode_secular=np.array([-1j * params.omega0_coupling]),
        complex_detuning=params.detuning - 0.5j * params.gamma,
        omega0_coupling=params.omega0_coupling,
        gamma=params.gamma,
        c_a0=complex(c_a0),
    )


def solve(params: PhysicalParams, c_a0: complex = 1.0) -> PseudomodeSolution:
    """Pseudomode solution, in the cosh/sinh form at resonance and by eigen-decomposition otherwise"""
    if params.is_resonant:
        return _resonant_solution(params, c_a0)
    return _eigen_solution(params, c_a0)


def _eigen_solution(params: PhysicalParams, c_a0: complex) -> PseudomodeSolution:
    # Eigenvectors of M are (Omega_0, mu) for each eigenvalue mu, so the weights are closed-form
    omega0 = params.omega0_coupling
    m = params.detuning - 0.5j * params.gamma
    discriminant = m * m + 4.0 * omega0**2
    scale = max(params.gamma, omega0, abs(params.detuning))
    if abs(discriminant) < DEGENERATE_DISCRIMINANT_TOLERANCE * scale**2:
        logger.debug("Degenerate pseudomode eigenvalues at detuning %g", params.detuning)
        return _critical_solution(params, c_a0, alpha(params))

    root = np.sqrt(discriminant)
    mu_plus = (m + root) / 2.0
    mu_minus = (m - root) / 2.0
    split = mu_plus - mu_minus
    weights = np.array([-mu_minus / split, mu_plus / split])
    pseudomode_weights = np.array([omega0 / split, -omega0 / split])
    return PseudomodeSolution(
        rates=np.array([-1j * mu_plus, -1j * mu_minus]),
        weights=weights,
        alpha=alpha(params),
        pseudomode_weights=pseudomode_weights,
        atom_secular=np.zeros(2, dtype=complex),
        pseudomode_secular=np.zeros(2, dtype=complex),
        complex_detuning=params.detuning - 0.5j * params.gamma,
        omega0_coupling=params.omega0_coupling,
        gamma=params.gamma,
        c_a0=complex(c_a0),
    )


def _require_resonance(params: PhysicalParams):
    if not params.is_resonant:
        raise ConfigurationError("detuning", "the closed form holds only at resonance (detuning = 0)")


def atomic_amplitude_resonant(t: ArrayLike, params: PhysicalParams, c_a0: complex = 1.0) -> ArrayLike:
    """c~_a(t) = c~_a(0) e^{-Gamma t/4} (cosh(alpha t/4) + (Gamma/alpha) sinh(alpha t/4))"""
    _require_resonance(params)
    t_arr = _times(t)
    quarter = params.gamma * t_arr / 4.0
    cosh, sinhc = _damped_hyperbolic(alpha(params) * t_arr / 4.0, quarter)
    # (Gamma/alpha) sinh(alpha t/4) = (Gamma t/4) sinh(x)/x
    return _scalar_or_array(complex(c_a0) * (cosh + quarter * sinhc))


def atomic_amplitude_general(t: ArrayLike, params: PhysicalParams, c_a0: complex = 1.0) -> Tuple[ArrayLike, ArrayLike]:
    """(c~_a(t), b~(t)) for any detuning, starting from an empty pseudomode"""
    solution = _eigen_solution(params, c_a0)
    return solution.atom_amplitude(t), solution.pseudomode_amplitude(t)


def _phi(x: np.ndarray, order: int) -> np.ndarray:
    """
    integral_0^1 s^(order-1) e^{x s} ds, i.e. (e^x - 1)/x for order 1 and
    (x e^x - e^x + 1)/x^2 for order 2, with the removable singularity at x = 0
    replaced by its Taylor series.
    """
    small = np.abs(x) < SERIES_THRESHOLD
    safe = np.where(small, 1.0, x)
    if order == 1:
        exact = (np.exp(safe) - 1.0) / safe
    else:
        exact = (safe * np.exp(safe) - np.exp(safe) + 1.0) / safe**2
    series = np.zeros_like(x, dtype=complex)
    for n in reversed(range(SERIES_TERMS)):
        series = series * x + 1.0 / (math.factorial(n) * (n + order))
    return np.where(small, series, exact)


def _mode_integral(solution: PseudomodeSolution, detunings: np.ndarray, t: TimeLike) -> np.ndarray:
    """integral_0^t e^{i delta t'} c~_a(t') dt' / c_a0 for every detuning"""
    total = np.zeros(detunings.shape, dtype=complex)
    for rate, weight, secular in zip(solution.rates, solution.weights, solution.atom_secular):
        z = rate + 1j * detunings
        if t is INFINITY:
            total += -weight / z
            if secular != 0:
                total += secular / z**2
            continue
        x = z * t
        total += weight * t * _phi(x, 1)
        if secular != 0:
            total += secular * t**2 * _phi(x, 2)
    return total


def mode_amplitudes_analytic(t: float, grid: BathGrid, params: PhysicalParams, c_a0: complex = 1.0) -> np.ndarray:
    """c~_lambda(t) = -i g_lambda integral_0^t e^{i delta_lambda t'} c~_a(t') dt' for an initially empty bath"""
    if t is not INFINITY and not t >= 0:
        raise ConfigurationError("t", "must be non-negative")
    solution = solve(params, c_a0)
    return -1j * grid.couplings * solution.c_a0 * _mode_integral(solution, grid.detunings(params), t)


def spectrum_at_time(t: TimeLike, grid: BathGrid, params: PhysicalParams, c_a0: complex = 1.0) -> Spectrum:
    """S(omega_lambda, t) = rho |c_lambda(t)|^2; the picture does not matter for |c_lambda|"""
    amplitudes = mode_amplitudes_analytic(t, grid, params, c_a0)
    return Spectrum(frequencies=grid.frequencies, values=np.abs(amplitudes) ** 2 * grid.mode_density, time=t)


def _frequencies_of(source: Union[BathGrid, np.ndarray]) -> np.ndarray:
    if isinstance(source, BathGrid):
        return source.frequencies
    return np.asarray(source, dtype=float)


def spectrum_infinity(source: Union[BathGrid, np.ndarray], params: PhysicalParams, c_a0: complex = 1.0) -> Spectrum:
    """
    Long-time excitation spectrum.

    At resonance this is Omega_0^2 (Gamma/2) / (pi [(delta^2 - Omega_0^2)^2 + (Gamma/2)^2 delta^2]);
    detuned reservoirs use the pole-sum limit of the mode amplitudes instead.
    """
    frequencies = _frequencies_of(source)
    delta = frequencies - params.atom_frequency
    if params.is_resonant:
        omega0 = params.omega0_coupling
        half_width = params.gamma / 2.0
        values = omega0**2 * half_width / (math.pi * ((delta**2 - omega0**2) ** 2 + half_width**2 * delta**2))
    else:
        values = spectrum_infinity_pole_sum(frequencies, params)
    return Spectrum(frequencies=frequencies, values=values * abs(c_a0) ** 2, time=INFINITY)


def spectrum_infinity_pole_sum(frequencies: np.ndarray, params: PhysicalParams) -> np.ndarray:
    """Omega_0^2 D(omega) / (2 pi) |integral_0^inf e^{i delta t} c~_a(t) dt|^2 for c_a0 = 1"""
    frequencies = np.asarray(frequencies, dtype=float)
    solution = solve(params)
    integral = _mode_integral(solution, frequencies - params.atom_frequency, INFINITY)
    return params.omega0_coupling**2 * lorentzian_structure_function(frequencies, params) / (2.0 * math.pi) * np.abs(integral) ** 2


def spectrum_infinity_structured(frequencies: np.ndarray, params: PhysicalParams) -> np.ndarray:
    """First (unsimplified) resonant form: Omega_0^2 D / (2 pi) * (delta^2 + (Gamma/2)^2) / denominator"""
    _require_resonance(params)
    frequencies = np.asarray(frequencies, dtype=float)
    delta = frequencies - params.atom_frequency
    omega0 = params.omega0_coupling
    half_width = params.gamma / 2.0
    structure = omega0**2 * lorentzian_structure_function(frequencies, params) / (2.0 * math.pi)
    return structure * (delta**2 + half_width**2) / ((delta**2 - omega0**2) ** 2 + half_width**2 * delta**2)
