import numpy as np
import pytest
from hypothesis import given, strategies as st

from semiqft import gates
from semiqft.dyadic import DyadicPhase
from semiqft.qft import build_standard_qft, lower_to_hardware_gates
from semiqft.semiclassical import build_semiclassical_circuit, plan_blocks
from semiqft.sim import (
    CX,
    CapacityError,
    Circuit,
    CircuitError,
    ConditionedPhase,
    Measure,
    OutcomeDistribution,
    Reset,
    SingleQubit,
    StateVector,
    apply,
    enumerate_branches,
    run_statevector,
    sample,
    total_variation,
)

SQ2 = 1 / np.sqrt(2)


def test_state_norm_checked():
    with pytest.raises(ValueError):
        StateVector(1, np.array([1.0, 1.0]))
    with pytest.raises(ValueError):
        StateVector(2, np.array([1.0, 0.0]))


def test_from_bitstring_is_msb_first():
    assert np.argmax(StateVector.from_bitstring("10").probabilities()) == 2


def test_hadamard_on_zero():
    out = apply(StateVector.basis(1), SingleQubit(gates.H, 0), [])
    np.testing.assert_allclose(out.amplitudes, [SQ2, SQ2], atol=1e-12)


def test_cx_truth_table():
    out = apply(StateVector.basis(2, 0b10), CX(1, 0), [])
    assert abs(out.amplitudes[0b11]) == pytest.approx(1)


def test_conditioned_phase_fires_on_condition():
    plus = StateVector(1, np.array([SQ2, SQ2]))
    op = ConditionedPhase(((0, 1),), DyadicPhase(1, 2), 0)
    np.testing.assert_allclose(apply(plus, op, [1]).amplitudes, [SQ2, 1j * SQ2], atol=1e-12)
    np.testing.assert_allclose(apply(plus, op, [0]).amplitudes, [SQ2, SQ2], atol=1e-12)


def test_unassigned_classical_bit_rejected():
    op = ConditionedPhase(((0, 1),), DyadicPhase(1, 2), 0)
    with pytest.raises(CircuitError):
        apply(StateVector.basis(1), op, [None])


def test_index_out_of_range():
    with pytest.raises(CircuitError):
        Circuit(1, 0, [SingleQubit(gates.H, 1)])
    with pytest.raises(CircuitError):
        apply(StateVector.basis(1), SingleQubit(gates.H, 3), [])


def test_condition_must_follow_measurement():
    with pytest.raises(CircuitError):
        Circuit(1, 1, [ConditionedPhase(((0, 1),), DyadicPhase(1, 2), 0), Measure(0, 0)])


def test_recycled_measured_qubit_needs_reset():
    bad = Circuit(1, 2, [Measure(0, 0), SingleQubit(gates.H, 0), Measure(0, 1)], recycled=True)
    with pytest.raises(CircuitError):
        enumerate_branches(bad, StateVector.basis(1))
    good = Circuit(1, 2, [Measure(0, 0), Reset(0), SingleQubit(gates.H, 0), Measure(0, 1)], recycled=True)
    assert enumerate_branches(good, StateVector.basis(1)).probs == pytest.approx({0: 0.5, 2: 0.5})


def test_enumerate_hadamard():
    circ = Circuit(1, 1, [SingleQubit(gates.H, 0), Measure(0, 0)])
    assert enumerate_branches(circ, StateVector.basis(1)).probs == pytest.approx({0: 0.5, 1: 0.5})


def test_enumerate_deterministic_projection():
    circ = Circuit(1, 1, [Measure(0, 0)])
    assert enumerate_branches(circ, StateVector.basis(1, 1)).probs == {1: 1.0}


def test_enumerate_standard_qft3_uniform():
    dist = enumerate_branches(build_standard_qft(3), StateVector.basis(3))
    np.testing.assert_allclose(dist.to_array(), np.full(8, 0.125), atol=1e-12)


def test_capacity_error():
    circ = Circuit(1, 1, [SingleQubit(gates.H, 0), Measure(0, 0)] + [Reset(0)] * 4)
    with pytest.raises(CapacityError):
        enumerate_branches(circ, StateVector.basis(1), cap=16)


def test_sample_hadamard_concentrates():
    circ = Circuit(1, 1, [SingleQubit(gates.H, 0), Measure(0, 0)])
    dist = sample(circ, StateVector.basis(1), 8192, seed=3)
    assert abs(dist[0] - 0.5) <= 0.02


def test_sample_single_shot_forced():
    circ = Circuit(2, 2, [SingleQubit(gates.X, 1), Measure(0, 0), Measure(1, 1)])
    assert sample(circ, StateVector.basis(2), 1, seed=0).counts == {2: 1}


def test_sample_semiclassical_3_2_near_uniform():
    circ = build_semiclassical_circuit(plan_blocks(3, 2))
    dist = sample(circ, StateVector.basis(3), 8192, seed=11)
    assert total_variation(dist.to_array(), np.full(8, 0.125)) <= 0.02


def test_sample_reproducible_per_seed():
    circ = build_standard_qft(3)
    psi = StateVector.random(3, np.random.default_rng(1))
    assert sample(circ, psi, 500, seed=5).counts == sample(circ, psi, 500, seed=5).counts


def test_enumerate_bitwise_reproducible():
    circ = build_semiclassical_circuit(plan_blocks(4, 2))
    psi = StateVector.random(4, np.random.default_rng(2))
    assert enumerate_branches(circ, psi).probs == enumerate_branches(circ, psi).probs


def test_outcome_distribution_validates():
    with pytest.raises(ValueError):
        OutcomeDistribution(1, {0: 0.7, 1: 0.7})
    with pytest.raises(ValueError):
        OutcomeDistribution(1, {2: 1.0})


_GATES = [gates.H, gates.X, gates.Y, gates.Z, gates.S, gates.T, gates.r_k(3), gates.u3(0.3, 1.1, -0.4)]


@st.composite
def random_circuits(draw, max_width=4, max_ops=25):
    width = draw(st.integers(1, max_width))
    ops = []
    for _ in range(draw(st.integers(0, max_ops))):
        if width > 1 and draw(st.booleans()):
            c, t = draw(st.permutations(range(width)))[:2]
            ops.append(CX(c, t))
        else:
            ops.append(SingleQubit(draw(st.sampled_from(_GATES)), draw(st.integers(0, width - 1))))
    return Circuit(width, 0, ops)


@given(random_circuits(), st.integers(0, 2**32 - 1))
def test_norm_preserved(circ, seed):
    psi = StateVector.random(circ.num_qubits, np.random.default_rng(seed))
    assert abs(run_statevector(circ, psi).norm() - 1) <= 1e-10


@given(random_circuits(), st.integers(0, 2**32 - 1))
def test_branch_leaves_sum_to_one(circ, seed):
    width = circ.num_qubits
    measured = Circuit(width, width, list(circ.ops) + [Measure(q, q) for q in range(width)])
    psi = StateVector.random(width, np.random.default_rng(seed))
    dist = enumerate_branches(measured, psi)
    assert abs(sum(dist.probs.values()) - 1) <= 1e-9
    np.testing.assert_allclose(dist.to_array(), run_statevector(circ, psi).probabilities(), atol=1e-10)


@pytest.mark.parametrize("n, t", [(3, 1), (3, 2), (4, 3), (5, 2)])
def test_sampling_consistency_large_shots(n, t):
    circ = lower_to_hardware_gates(build_semiclassical_circuit(plan_blocks(n, t)))
    psi = StateVector.random(n, np.random.default_rng(n * 10 + t))
    exact = enumerate_branches(circ, psi)
    assert total_variation(sample(circ, psi, 100_000, seed=n + t), exact) <= 0.02
