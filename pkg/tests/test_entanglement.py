import math

import numpy as np
import pytest

from reservoir_entanglement.discrete import SystemState
from reservoir_entanglement.entanglement import (
    concurrence_closed_form,
    concurrence_general,
    concurrence_sum,
    dense_state_vector,
    ghz_state,
    global_entanglement,
    global_entanglement_dense,
    one_qubit_purity,
    partial_trace,
    reduced_one_qubit,
    reduced_two_qubit,
    w_state,
    wootters_eigenvalues,
)
from reservoir_entanglement.errors import InvalidStateError


def _random_state(rng, n_modes, with_vacuum=True):
    amps = rng.normal(size=n_modes + 2) + 1j * rng.normal(size=n_modes + 2)
    if not with_vacuum:
        amps[0] = 0.0
    amps /= np.linalg.norm(amps)
    return SystemState(time=0.0, vacuum_amp=amps[0], atom_amp=amps[1], mode_amps=amps[2:])


def test_reduced_two_qubit_excited_atom():
    state = SystemState(time=0.0, vacuum_amp=0j, atom_amp=1.0 + 0j, mode_amps=np.zeros(3))
    rho = reduced_two_qubit(state, 0, 1)
    np.testing.assert_allclose(rho, np.diag([0.0, 0.0, 1.0, 0.0]))


def test_reduced_two_qubit_bell_pair():
    amplitude = 1.0 / math.sqrt(2.0)
    state = SystemState(time=0.0, vacuum_amp=0j, atom_amp=complex(amplitude), mode_amps=[amplitude, 0.0])
    rho = reduced_two_qubit(state, 0, 1)
    expected = np.zeros((4, 4))
    expected[1:3, 1:3] = 0.5
    np.testing.assert_allclose(rho, expected, atol=1e-15)
    assert concurrence_general(rho) == pytest.approx(1.0, abs=1e-12)


def test_reduced_two_qubit_rejects_same_subsystem():
    state = w_state(3)
    with pytest.raises(InvalidStateError):
        reduced_two_qubit(state, 1, 1)
    with pytest.raises(InvalidStateError):
        reduced_two_qubit(state, 0, 3)


def test_reduced_matrices_valid():
    rng = np.random.default_rng(11)
    for _ in range(50):
        state = _random_state(rng, 6)
        rho = reduced_two_qubit(state, 2, 5)
        assert np.max(np.abs(rho - rho.conj().T)) < 1e-12
        assert abs(np.trace(rho) - 1.0) < 1e-12
        assert np.linalg.eigvalsh(rho).min() > -1e-12
        assert np.all(rho[3, :] == 0) and np.all(rho[:, 3] == 0)


def test_reduced_matrices_match_dense_partial_trace():
    rng = np.random.default_rng(5)
    for n_modes in (1, 2, 3, 4):
        for _ in range(25):
            state = _random_state(rng, n_modes)
            psi = dense_state_vector(state)
            for j in range(state.register_size):
                np.testing.assert_allclose(reduced_one_qubit(state, j), partial_trace(psi, [j]), atol=1e-12)
                for i in range(state.register_size):
                    if i == j:
                        continue
                    np.testing.assert_allclose(reduced_two_qubit(state, j, i), partial_trace(psi, [j, i]), atol=1e-12)
            assert global_entanglement(state) == pytest.approx(global_entanglement_dense(psi), abs=1e-12)


def test_one_qubit_purity():
    state = SystemState(time=0.0, vacuum_amp=0j, atom_amp=0j, mode_amps=[1.0, 0.0])
    np.testing.assert_allclose(reduced_one_qubit(state, 0), [[1.0, 0.0], [0.0, 0.0]])
    assert one_qubit_purity(state, 0) == pytest.approx(1.0)

    half = 1.0 / math.sqrt(2.0)
    state = SystemState(time=0.0, vacuum_amp=0j, atom_amp=complex(half), mode_amps=[0.5, 0.5])
    assert one_qubit_purity(state, 0) == pytest.approx(0.5)

    rng = np.random.default_rng(2)
    state = _random_state(rng, 4)
    psi = dense_state_vector(state)
    for j in range(state.register_size):
        rho = partial_trace(psi, [j])
        assert one_qubit_purity(state, j) == pytest.approx(float(np.trace(rho @ rho).real), abs=1e-12)


def test_concurrence_product_state():
    rho = np.zeros((4, 4))
    rho[0, 0] = 1.0
    assert concurrence_general(rho) == pytest.approx(0.0, abs=1e-12)


def test_concurrence_rejects_invalid_matrices():
    with pytest.raises(InvalidStateError):
        concurrence_general(np.eye(3) / 3.0)
    with pytest.raises(InvalidStateError):
        concurrence_general(np.diag([0.5, 0.5, 0.5, 0.5]))
    with pytest.raises(InvalidStateError):
        concurrence_general(np.diag([1.2, -0.2, 0.0, 0.0]))
    skew = np.eye(4) / 4.0
    skew[0, 1] = 0.1
    with pytest.raises(InvalidStateError):
        concurrence_general(skew)


def test_wootters_eigenvalues_sorted():
    rho = np.diag([0.25, 0.25, 0.25, 0.25])
    values = wootters_eigenvalues(rho)
    assert np.all(np.diff(values) <= 0)
    np.testing.assert_allclose(values, 1.0 / 16.0)


def test_concurrence_closed_form_values():
    half = 1.0 / math.sqrt(2.0)
    assert concurrence_closed_form(half, half) == pytest.approx(1.0)
    assert concurrence_closed_form(0.3, 0.0) == 0.0


def test_concurrence_closed_form_matches_general():
    rng = np.random.default_rng(1)
    for _ in range(1000):
        n_modes = int(rng.integers(1, 8))
        state = _random_state(rng, n_modes, with_vacuum=bool(rng.integers(0, 2)))
        j, i = rng.choice(state.register_size, size=2, replace=False)
        c_j = state.excitation_amps[j]
        c_i = state.excitation_amps[i]
        general = concurrence_general(reduced_two_qubit(state, int(j), int(i)))
        assert general**2 == pytest.approx(concurrence_closed_form(c_j, c_i), abs=1e-10)


@pytest.mark.parametrize("n_qubits", [2, 3, 5, 8])
def test_ghz_global_entanglement(n_qubits):
    assert global_entanglement_dense(ghz_state(n_qubits)) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("n_qubits", [2, 4, 16, 1024])
def test_w_global_entanglement(n_qubits):
    expected = 4.0 * (n_qubits - 1) / n_qubits**2
    assert global_entanglement(w_state(n_qubits)) == pytest.approx(expected, abs=1e-12)


def test_w_state_dense_agrees():
    state = w_state(4)
    assert global_entanglement(state) == pytest.approx(0.75, abs=1e-12)
    assert global_entanglement_dense(dense_state_vector(state)) == pytest.approx(0.75, abs=1e-12)


def test_product_states_have_no_global_entanglement():
    vacuum = SystemState(time=0.0, vacuum_amp=1.0 + 0j, atom_amp=0j, mode_amps=np.zeros(5))
    excited = SystemState(time=0.0, vacuum_amp=0j, atom_amp=1.0 + 0j, mode_amps=np.zeros(5))
    assert global_entanglement(vacuum) == pytest.approx(0.0, abs=1e-15)
    assert global_entanglement(excited) == pytest.approx(0.0, abs=1e-15)
    product = np.kron([math.cos(0.3), math.sin(0.3)], [math.cos(1.1), 1j * math.sin(1.1)])
    assert global_entanglement_dense(np.kron(product, [1.0, 0.0])) == pytest.approx(0.0, abs=1e-12)


def test_global_entanglement_rejects_unnormalized():
    state = SystemState(time=0.0, vacuum_amp=0j, atom_amp=0.9 + 0j, mode_amps=np.zeros(2))
    with pytest.raises(InvalidStateError):
        global_entanglement(state)
    with pytest.raises(InvalidStateError):
        concurrence_sum(state)
    with pytest.raises(InvalidStateError):
        global_entanglement_dense(np.ones(4))
    with pytest.raises(InvalidStateError):
        global_entanglement_dense(np.ones(3) / math.sqrt(3.0))


def test_concurrence_sum_excited_atom():
    state = SystemState(time=0.0, vacuum_amp=0j, atom_amp=1.0 + 0j, mode_amps=np.zeros(4))
    assert tuple(concurrence_sum(state)) == (0.0, 0.0, 0.0)


def test_concurrence_sum_matches_pairs_and_global_entanglement():
    rng = np.random.default_rng(9)
    for n_modes in (1, 3, 6):
        state = _random_state(rng, n_modes)
        pairs = [
            concurrence_closed_form(state.excitation_amps[j], state.excitation_amps[i])
            for j in range(state.register_size)
            for i in range(j + 1, state.register_size)
        ]
        result = concurrence_sum(state)
        assert result.total == pytest.approx(sum(pairs), abs=1e-12)
        assert result.atom_part == pytest.approx(sum(pairs[: n_modes]), abs=1e-12)
        assert global_entanglement(state) == pytest.approx(2.0 * result.total / state.register_size, abs=1e-12)


def test_concurrence_sum_spread_bath():
    population = 0.3
    n_modes = 2001
    bath = np.full(n_modes, math.sqrt((1.0 - population) / n_modes), dtype=complex)
    state = SystemState(time=0.0, vacuum_amp=0j, atom_amp=complex(math.sqrt(population)), mode_amps=bath)
    result = concurrence_sum(state)
    assert result.total == pytest.approx(2.0 - 2.0 * population**2, abs=2e-3)


def test_concurrence_sum_w_over_modes():
    n_modes = 8
    state = SystemState(time=0.0, vacuum_amp=0j, atom_amp=0j, mode_amps=np.full(n_modes, 1.0 / math.sqrt(n_modes)))
    result = concurrence_sum(state)
    assert result.atom_part == 0.0
    assert result.mode_part == pytest.approx(2.0 * (1.0 - 1.0 / n_modes), abs=1e-12)
