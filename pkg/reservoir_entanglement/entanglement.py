"""
Reduced density matrices, two-qubit concurrence and global entanglement.

Single-excitation states are handled through their amplitudes; the dense
helpers at the bottom of the module work on full 2^n state vectors and are
only practical for small registers.
"""

import math
from typing import NamedTuple, Sequence

import numpy as np

from .discrete import ATOM, SystemState
from .errors import InvalidStateError

NORM_TOLERANCE = 1e-8
NEGATIVE_EIGENVALUE_TOLERANCE = 1e-10
MATRIX_TOLERANCE = 1e-10

SIGMA_Y = np.array([[0.0, -1j], [1j, 0.0]])
SIGMA_YY = np.kron(SIGMA_Y, SIGMA_Y)


class ConcurrenceSum(NamedTuple):
    total: float
    atom_part: float
    mode_part: float


def _amplitude(state: SystemState, index: int) -> complex:
    if not 0 <= index < state.register_size:
        raise InvalidStateError(f"subsystem index {index} outside a register of {state.register_size} qubits")
    if index == ATOM:
        return complex(state.atom_amp)
    return complex(state.mode_amps[index - 1])


def _require_normalized(state: SystemState):
    norm = state.norm()
    if abs(norm - 1.0) > NORM_TOLERANCE:
        raise InvalidStateError(f"state norm {norm:.12g} deviates from 1")


def reduced_two_qubit(state: SystemState, j: int, i: int) -> np.ndarray:
    """
    rho_ji over |0_j 0_i>, |0_j 1_i>, |1_j 0_i>, |1_j 1_i>.

    Tracing the rest of the register leaves the pure part c_0|00> + c_i|01> + c_j|10>
    plus the weight of every other excited qubit on |00>. Index 0 is the atom,
    index lambda + 1 the bath mode lambda.
    """
    if j == i:
        raise InvalidStateError("reduced_two_qubit needs two distinct subsystems")
    c_j = _amplitude(state, j)
    c_i = _amplitude(state, i)
    c_0 = complex(state.vacuum_amp)
    rest = state.norm() - abs(c_0) ** 2 - abs(c_j) ** 2 - abs(c_i) ** 2
    pure = np.array([c_0, c_i, c_j, 0.0], dtype=complex)
    rho = np.outer(pure, pure.conj())
    rho[0, 0] += rest
    return rho


def reduced_one_qubit(state: SystemState, j: int) -> np.ndarray:
    c_j = _amplitude(state, j)
    c_0 = complex(state.vacuum_amp)
    p_j = abs(c_j) ** 2
    return np.array([[1.0 - p_j, c_0 * c_j.conjugate()], [c_0.conjugate() * c_j, p_j]], dtype=complex)


def one_qubit_purity(state: SystemState, j: int) -> float:
    """tr rho_j^2 = 1 - 2 |c_j|^2 sum_{i != j} |c_i|^2"""
    p_j = abs(_amplitude(state, j)) ** 2
    excited = state.norm() - abs(state.vacuum_amp) ** 2
    return 1.0 - 2.0 * p_j * (excited - p_j)


def _check_density_matrix(rho: np.ndarray):
    if rho.shape != (4, 4):
        raise InvalidStateError(f"expected a 4x4 density matrix, got shape {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > MATRIX_TOLERANCE:
        raise InvalidStateError("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > MATRIX_TOLERANCE:
        raise InvalidStateError(f"density matrix trace {np.trace(rho).real:.12g} is not 1")


def wootters_eigenvalues(rho: np.ndarray) -> np.ndarray:
    """
    Eigenvalues of R = rho (sY x sY) rho* (sY x sY), largest first.

    They are obtained as squared singular values of V^dagger (sY x sY) V*, where
    V holds the eigenvectors of rho scaled by the square roots of its
    eigenvalues. That matrix is well conditioned even where R is defective.
    """
    rho = np.asarray(rho, dtype=complex)
    _check_density_matrix(rho)
    populations, vectors = np.linalg.eigh((rho + rho.conj().T) / 2.0)
    if populations.min() < -NEGATIVE_EIGENVALUE_TOLERANCE:
        raise InvalidStateError(f"density matrix has eigenvalue {populations.min():.3e} < 0")
    scaled = vectors * np.sqrt(np.clip(populations, 0.0, None))
    tau = scaled.conj().T @ SIGMA_YY @ scaled.conj()
    singular = np.linalg.svd(tau, compute_uv=False)
    return np.sort(singular**2)[::-1]


def concurrence_general(rho: np.ndarray) -> float:
    """c = max(0, sqrt(l1) - sqrt(l2) - sqrt(l3) - sqrt(l4))"""
    roots = np.sqrt(np.clip(wootters_eigenvalues(rho), 0.0, None))
    return float(max(0.0, roots[0] - roots[1] - roots[2] - roots[3]))


def concurrence_closed_form(c_j: complex, c_i: complex) -> float:
    """Squared concurrence 4 |c_j|^2 |c_i|^2 of a single-excitation pair"""
    return 4.0 * abs(c_j) ** 2 * abs(c_i) ** 2


def global_entanglement(state: SystemState) -> float:
    """
    Q = 2 - (2/n) sum_j tr rho_j^2 over the n = N + 1 qubits of the atom plus N modes.
    """
    _require_normalized(state)
    populations = np.abs(state.excitation_amps) ** 2
    excited = float(np.sum(populations))
    purities = 1.0 - 2.0 * populations * (excited - populations)
    n_qubits = state.register_size
    return float(2.0 - 2.0 / n_qubits * np.sum(purities))


def concurrence_sum(state: SystemState) -> ConcurrenceSum:
    """C^2 = sum_lambda c^2(rho_a,lambda) + sum_{lambda<mu} c^2(rho_lambda,mu)"""
    _require_normalized(state)
    mode_populations = np.abs(state.mode_amps) ** 2
    bath = float(np.sum(mode_populations))
    atom_part = 4.0 * state.atom_population * bath
    mode_part = 2.0 * (bath**2 - float(np.sum(mode_populations**2)))
    return ConcurrenceSum(total=atom_part + mode_part, atom_part=atom_part, mode_part=mode_part)


def dense_state_vector(state: SystemState) -> np.ndarray:
    """Full 2^(N+1) vector; qubit 0 (the atom) is the most significant bit"""
    n_qubits = state.register_size
    psi = np.zeros(2**n_qubits, dtype=complex)
    psi[0] = state.vacuum_amp
    for index, amplitude in enumerate(state.excitation_amps):
        psi[1 << (n_qubits - 1 - index)] = amplitude
    return psi


def _qubit_count(psi: np.ndarray) -> int:
    n_qubits = int(round(math.log2(psi.shape[0])))
    if 2**n_qubits != psi.shape[0]:
        raise InvalidStateError(f"state vector length {psi.shape[0]} is not a power of two")
    return n_qubits


def partial_trace(psi: np.ndarray, keep: Sequence[int]) -> np.ndarray:
    """Reduced density matrix of the kept qubits, ordered as given (first = most significant)"""
    psi = np.asarray(psi, dtype=complex)
    n_qubits = _qubit_count(psi)
    keep = list(keep)
    traced = [q for q in range(n_qubits) if q not in keep]
    tensor = psi.reshape((2,) * n_qubits).transpose(keep + traced)
    matrix = tensor.reshape(2 ** len(keep), 2 ** len(traced))
    return matrix @ matrix.conj().T


def global_entanglement_dense(psi: np.ndarray) -> float:
    """Q for an arbitrary normalized pure state of n qubits"""
    psi = np.asarray(psi, dtype=complex)
    norm = float(np.vdot(psi, psi).real)
    if abs(norm - 1.0) > NORM_TOLERANCE:
        raise InvalidStateError(f"state norm {norm:.12g} deviates from 1")
    n_qubits = _qubit_count(psi)
    purities = []
    for qubit in range(n_qubits):
        rho = partial_trace(psi, [qubit])
        purities.append(float(np.trace(rho @ rho).real))
    return 2.0 - 2.0 / n_qubits * sum(purities)


def ghz_state(n_qubits: int) -> np.ndarray:
    psi = np.zeros(2**n_qubits, dtype=complex)
    psi[0] = psi[-1] = 1.0 / math.sqrt(2.0)
    return psi


def w_state(n_qubits: int) -> SystemState:
    """W state over the atom plus n_qubits - 1 modes, as a single-excitation register"""
    amplitude = 1.0 / math.sqrt(n_qubits)
    return SystemState(
        time=0.0,
        vacuum_amp=0j,
        atom_amp=complex(amplitude),
        mode_amps=np.full(n_qubits - 1, amplitude, dtype=complex),
    )
