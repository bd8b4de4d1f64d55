"""Interaction-picture Schrodinger equations for the atom plus a finite set of bath modes"""

import logging
import math
from dataclasses import dataclass
from typing import Iterator, List, NamedTuple, Optional

import numpy as np

from .errors import ConfigurationError, InvalidStateError
from .model import BathGrid, PhysicalParams

logger = logging.getLogger(__name__)

# Register index of the atom; bath mode lambda sits at index lambda + 1
ATOM = 0

DEFAULT_STEP_FRACTION = 0.01
STABLE_STEP_FRACTION = 0.1
MAX_SNAPSHOTS = 2000
INITIAL_NORM_TOLERANCE = 1e-10


@dataclass(frozen=True, eq=False)
class SystemState:
    """
    Single-excitation amplitudes (c_0, c_a, {c_lambda}) at time t.

    atom_amp and mode_amps are interaction-picture amplitudes. grid may be None
    for bare registers that are only used for entanglement calculations.
    """

    time: float
    vacuum_amp: complex
    atom_amp: complex
    mode_amps: np.ndarray
    grid: Optional[BathGrid] = None

    def __post_init__(self):
        object.__setattr__(self, "mode_amps", np.asarray(self.mode_amps, dtype=complex))
        if self.grid is not None and self.mode_amps.shape[0] != self.grid.size:
            raise InvalidStateError(f"{self.mode_amps.shape[0]} mode amplitudes for a grid of {self.grid.size} modes")

    @classmethod
    def excited_atom(cls, grid: Optional[BathGrid], atom_population: float = 1.0, n_modes: Optional[int] = None) -> "SystemState":
        """Atom holding atom_population, the remainder in the vacuum, empty bath"""
        if not 0.0 <= atom_population <= 1.0:
            raise ConfigurationError("atom_population", "must lie in [0, 1]")
        size = grid.size if grid is not None else n_modes
        if size is None:
            raise ConfigurationError("n_modes", "required when no grid is given")
        return cls(
            time=0.0,
            vacuum_amp=complex(math.sqrt(1.0 - atom_population)),
            atom_amp=complex(math.sqrt(atom_population)),
            mode_amps=np.zeros(size, dtype=complex),
            grid=grid,
        )

    @property
    def n_modes(self) -> int:
        return int(self.mode_amps.shape[0])

    @property
    def register_size(self) -> int:
        """Number of qubits: the atom plus every mode"""
        return self.n_modes + 1

    @property
    def excitation_amps(self) -> np.ndarray:
        """Excited-qubit amplitudes in register order (atom first)"""
        return np.concatenate(([self.atom_amp], self.mode_amps))

    @property
    def atom_population(self) -> float:
        return abs(self.atom_amp) ** 2

    def norm(self) -> float:
        return abs(self.vacuum_amp) ** 2 + abs(self.atom_amp) ** 2 + float(np.sum(np.abs(self.mode_amps) ** 2))

    def schrodinger_picture(self, params: PhysicalParams):
        """Undo the interaction-picture phases: c_a = e^{-i w0 t} c~_a, c_l = e^{-i w_l t} c~_l"""
        if self.grid is None:
            raise InvalidStateError("schrodinger_picture needs the bath grid")
        atom = np.exp(-1j * params.atom_frequency * self.time) * self.atom_amp
        modes = np.exp(-1j * self.grid.frequencies * self.time) * self.mode_amps
        return complex(atom), modes


class Derivative(NamedTuple):
    vacuum: complex
    atom: complex
    modes: np.ndarray


class StepPlan(NamedTuple):
    dt: float
    n_steps: int
    sample_every: int

    @property
    def sample_steps(self) -> np.ndarray:
        steps = np.arange(0, self.n_steps + 1, self.sample_every)
        if steps[-1] != self.n_steps:
            steps = np.append(steps, self.n_steps)
        return steps

    @property
    def times(self) -> np.ndarray:
        return self.sample_steps * self.dt


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Decimated snapshots of one integration, stored column-wise"""

    times: np.ndarray
    vacuum_amp: complex
    atom_amps: np.ndarray
    mode_amps: np.ndarray
    grid: Optional[BathGrid]

    def __len__(self) -> int:
        return int(self.times.shape[0])

    def __getitem__(self, index: int) -> SystemState:
        return SystemState(
            time=float(self.times[index]),
            vacuum_amp=self.vacuum_amp,
            atom_amp=complex(self.atom_amps[index]),
            mode_amps=self.mode_amps[index],
            grid=self.grid,
        )

    def __iter__(self) -> Iterator[SystemState]:
        for index in range(len(self)):
            yield self[index]

    @property
    def states(self) -> List[SystemState]:
        return list(self)

    @property
    def populations(self) -> np.ndarray:
        return np.abs(self.atom_amps) ** 2

    @property
    def norms(self) -> np.ndarray:
        return abs(self.vacuum_amp) ** 2 + self.populations + np.sum(np.abs(self.mode_amps) ** 2, axis=1)

    def norm_drift(self) -> float:
        return float(np.max(np.abs(self.norms - self.norms[0])))


def _rhs(y: np.ndarray, couplings: np.ndarray, phase: np.ndarray) -> np.ndarray:
    """y = (c~_a, c~_lambda...); phase = exp(-i delta_lambda t)"""
    out = np.empty_like(y)
    # np.sum uses pairwise summation, so the result is independent of threading
    out[0] = -1j * np.sum(couplings * phase * y[1:])
    out[1:] = -1j * couplings * np.conj(phase) * y[0]
    return out


def derivative(state: SystemState, params: PhysicalParams) -> Derivative:
    if state.grid is None:
        raise InvalidStateError("derivative needs the bath grid")
    phase = np.exp(-1j * state.grid.detunings(params) * state.time)
    y = state.excitation_amps
    dy = _rhs(y, state.grid.couplings, phase)
    return Derivative(vacuum=0j, atom=complex(dy[0]), modes=dy[1:])


def stability_scale(params: PhysicalParams, grid: BathGrid) -> float:
    """min(1/Omega_0, 1/Gamma, 1/max|delta|), the shortest time scale of the equations"""
    scales = [1.0 / params.omega0_coupling, 1.0 / params.gamma]
    max_detuning = grid.max_detuning(params)
    if max_detuning > 0:
        scales.append(1.0 / max_detuning)
    return min(scales)


def plan_steps(
    params: PhysicalParams,
    grid: BathGrid,
    t_end: float,
    dt: Optional[float] = None,
    sample_every: Optional[int] = None,
) -> StepPlan:
    """
    Resolve the step size and snapshot decimation for an integration to t_end.

    The step is shrunk slightly so that an integer number of steps lands on t_end.
    """
    if not t_end >= 0 or not math.isfinite(t_end):
        raise ConfigurationError("t_end", "must be a finite non-negative time")
    scale = stability_scale(params, grid)
    if dt is None:
        dt = DEFAULT_STEP_FRACTION * scale
    if not dt > 0:
        raise ConfigurationError("dt", "must be positive")
    if dt > STABLE_STEP_FRACTION * scale:
        raise ConfigurationError("dt", f"{dt:g} exceeds the stability bound {STABLE_STEP_FRACTION * scale:g}")

    n_steps = int(math.ceil(t_end / dt - 1e-9)) if t_end > 0 else 0
    if n_steps > 0:
        dt = t_end / n_steps
    if sample_every is None:
        sample_every = max(1, int(math.ceil(n_steps / (MAX_SNAPSHOTS - 2))))
    if sample_every < 1:
        raise ConfigurationError("sample_every", "must be at least 1")
    return StepPlan(dt=dt, n_steps=n_steps, sample_every=int(sample_every))


def integrate(
    initial: SystemState,
    params: PhysicalParams,
    t_end: float,
    dt: Optional[float] = None,
    sample_every: Optional[int] = None,
) -> Trajectory:
    """Classical fixed-step RK4 in the interaction picture"""
    grid = initial.grid
    if grid is None:
        raise InvalidStateError("integrate needs the bath grid")
    if abs(initial.norm() - 1.0) > INITIAL_NORM_TOLERANCE:
        raise InvalidStateError(f"initial norm {initial.norm():.12g} is not 1")

    plan = plan_steps(params, grid, t_end, dt, sample_every)
    if t_end > grid.recurrence_time() / 2.0:
        logger.warning(
            "t_end=%g exceeds half the recurrence time %g of the discrete bath; revivals will appear",
            t_end,
            grid.recurrence_time(),
        )
    logger.debug("RK4: %d modes, %d steps of dt=%g, sampling every %d", grid.size, plan.n_steps, plan.dt, plan.sample_every)

    detunings = grid.detunings(params)
    couplings = grid.couplings
    half_step = np.exp(-1j * detunings * plan.dt / 2.0)
    sample_steps = plan.sample_steps

    y = initial.excitation_amps.copy()
    snapshots = np.empty((sample_steps.shape[0], y.shape[0]), dtype=complex)
    snapshots[0] = y
    next_sample = 1
    h = plan.dt
    for step in range(plan.n_steps):
        # Phases are recomputed from the step index rather than accumulated
        phase = np.exp(-1j * detunings * (initial.time + step * h))
        phase_mid = phase * half_step
        phase_end = phase_mid * half_step
        k1 = _rhs(y, couplings, phase)
        k2 = _rhs(y + 0.5 * h * k1, couplings, phase_mid)
        k3 = _rhs(y + 0.5 * h * k2, couplings, phase_mid)
        k4 = _rhs(y + h * k3, couplings, phase_end)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if next_sample < sample_steps.shape[0] and step + 1 == sample_steps[next_sample]:
            snapshots[next_sample] = y
            next_sample += 1

    return Trajectory(
        times=initial.time + plan.times,
        vacuum_amp=initial.vacuum_amp,
        atom_amps=snapshots[:, 0].copy(),
        mode_amps=snapshots[:, 1:],
        grid=grid,
    )
