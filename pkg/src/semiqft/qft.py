"""Standard QFT circuits, the dense DFT oracle, hardware lowering and gate counting."""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import gates
from .sim import (
    CPhase,
    CX,
    Circuit,
    CircuitError,
    ConditionedPhase,
    ControlledPermutation,
    Measure,
    Reset,
    SingleQubit,
    StateVector,
    circuit_unitary,
)


@lru_cache(maxsize=16)
def _dft_matrix(n: int) -> np.ndarray:
    dim = 1 << n
    exps = np.outer(np.arange(dim), np.arange(dim)) % dim
    m = np.exp(2j * np.pi * exps / dim) / np.sqrt(dim)
    m.setflags(write=False)
    return m


def dft_matrix(n: int) -> np.ndarray:
    """``M[c, a] = omega^(a c) / 2^(n/2)`` with ``omega = e^(2 pi i / 2^n)``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > 12:
        raise ValueError("dense DFT oracle is limited to n <= 12")
    return _dft_matrix(n)


def dft_apply(state: StateVector) -> StateVector:
    """Ground-truth QFT of an arbitrary state, by dense matrix-vector product."""
    return StateVector(state.width, dft_matrix(state.width) @ state.amplitudes)


def dft_probabilities(state: StateVector) -> np.ndarray:
    return np.abs(dft_matrix(state.width) @ state.amplitudes) ** 2


def bit_reverse(value: int, n: int) -> int:
    return int(format(value, f"0{n}b")[::-1], 2)


@lru_cache(maxsize=64)
def build_standard_qft(n: int, measure: bool = True, max_k: int | None = None) -> Circuit:
    """Coppersmith QFT over Z_{2^n}.

    Most-significant qubit first: each qubit gets a Hadamard followed by
    controlled-R_k from every less significant qubit. The circuit leaves
    output bits in reversed significance; rather than SWAP gates, qubit ``j``
    is measured into classical bit ``n-1-j``. ``max_k`` drops rotations
    with ``k > max_k`` (approximate QFT); ``None`` keeps all of them.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    ops = []
    for j in range(n - 1, -1, -1):
        ops.append(SingleQubit(gates.H, j))
        for m in range(j - 1, -1, -1):
            k = j - m + 1
            if k > gates.MAX_K:
                raise ValueError(f"controlled-R_{k} exceeds the k <= {gates.MAX_K} limit")
            if max_k is not None and k > max_k:
                continue
            ops.append(CPhase(Fraction(2, 2**k), m, j))
    if measure:
        ops.extend(Measure(j, n - 1 - j) for j in range(n))
    return Circuit(n, n if measure else 0, ops)


def output_permutation(n: int) -> np.ndarray:
    """Permutation matrix applying the classical bit-reversal relabeling."""
    dim = 1 << n
    p = np.zeros((dim, dim))
    for i in range(dim):
        p[bit_reverse(i, n), i] = 1
    return p


def standard_qft_unitary(n: int) -> np.ndarray:
    """Unitary of ``build_standard_qft(n)`` with the output relabeling applied."""
    return output_permutation(n) @ circuit_unitary(build_standard_qft(n, measure=False))


# ---------------------------------------------------------------------------
# Lowering


_NATIVE = {"u1", "u2", "u3", "h", "s", "t"}


def lower_single(gate: gates.SingleQubitGate) -> gates.SingleQubitGate:
    if gate.name == "h":
        return gates.u2(Fraction(1), Fraction(0))
    if gate.name == "x":
        return gates.u3(Fraction(1), Fraction(1), Fraction(0))
    if gate.name == "y":
        return gates.u3(Fraction(1), Fraction(1, 2), Fraction(1, 2))
    if gate.name == "z":
        return gates.u1(Fraction(1))
    if gate.name == "id":
        return gates.u1(Fraction(0))
    if gate.name in _NATIVE:
        return gate
    raise CircuitError(f"no hardware lowering for gate {gate.label}")


def lower_to_hardware_gates(circuit: Circuit) -> Circuit:
    """Rewrite into U1/U2/U3 + CX: controlled phases become the two-CNOT fragment, H becomes U2(pi, 0)."""
    ops = []
    for op in circuit.ops:
        if isinstance(op, CPhase):
            dec = gates.decompose_phase_gate(gates.u1(op.angle))
            ops.extend(gates.controlled_gate_ops(dec, op.control, op.target))
        elif isinstance(op, SingleQubit):
            ops.append(SingleQubit(lower_single(op.gate), op.target))
        elif isinstance(op, (CX, Measure, ConditionedPhase, Reset)):
            ops.append(op)
        else:
            raise CircuitError(f"cannot lower {type(op).__name__}")
    return replace(circuit, ops=tuple(ops))


# ---------------------------------------------------------------------------
# Counting


@dataclass(frozen=True)
class CountLedger:
    single_qubit: int = 0
    two_qubit: int = 0
    measurements: int = 0
    peak_register_width: int = 0
    resets: int = 0
    oracle_calls: int = 0
    # Transpositions needed if the output bit order were fixed with SWAP gates.
    relabel_swaps: int = 0
    steps: int = 0

    @property
    def two_qubit_with_swaps(self) -> int:
        """Two-qubit count if relabeling were replaced by SWAPs (3 CX each)."""
        return self.two_qubit + 3 * self.relabel_swaps

    def __add__(self, other: CountLedger) -> CountLedger:
        return CountLedger(
            self.single_qubit + other.single_qubit,
            self.two_qubit + other.two_qubit,
            self.measurements + other.measurements,
            max(self.peak_register_width, other.peak_register_width),
            self.resets + other.resets,
            self.oracle_calls + other.oracle_calls,
            self.relabel_swaps + other.relabel_swaps,
            self.steps + other.steps,
        )


def _relabel_swaps(circuit: Circuit) -> int:
    mapping = {op.target: op.clbit for op in circuit.ops if isinstance(op, Measure)}
    if circuit.recycled or sorted(mapping) != sorted(mapping.values()):
        return 0
    seen, cycles = set(), 0
    for start in mapping:
        if start in seen:
            continue
        cycles += 1
        node = start
        while node not in seen:
            seen.add(node)
            node = mapping[node]
    return len(mapping) - cycles


def count_gates(circuit: Circuit) -> CountLedger:
    single = two = meas = resets = oracle = 0
    for op in circuit.ops:
        if isinstance(op, (SingleQubit, ConditionedPhase)):
            single += 1
        elif isinstance(op, (CX, CPhase)):
            two += 1
        elif isinstance(op, Measure):
            meas += 1
        elif isinstance(op, Reset):
            resets += 1
        elif isinstance(op, ControlledPermutation):
            oracle += 1
    width = circuit.num_qubits if circuit.ops else 0
    return CountLedger(single, two, meas, width, resets, oracle, _relabel_swaps(circuit))
