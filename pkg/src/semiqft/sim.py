"""State-vector simulation with mid-circuit measurement and classical feedback.

Qubit ``j`` carries bit weight ``2**j`` in basis-state labels, and a circuit's
outcome is the integer ``sum(2**j * clbit[j])`` over its classical bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .dyadic import DyadicPhase, to_radians

NORM_TOL = 1e-10
UNITARY_TOL = 1e-12
DEFAULT_BRANCH_CAP = 2**20
# Branches below this joint probability are dropped during enumeration; the
# discarded mass is bounded by cap * PRUNE, far below every tolerance used.
PRUNE = 1e-18


class CapacityError(RuntimeError):
    """Raised when an exact computation would exceed its configured size cap."""


class CircuitError(ValueError):
    """Raised for malformed circuits or illegal operations during execution."""


@dataclass
class StateVector:
    width: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.width < 1:
            raise ValueError("width must be >= 1")
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.shape != (1 << self.width,):
            raise ValueError(
                f"expected {1 << self.width} amplitudes, got {self.amplitudes.shape}"
            )
        if abs(self.norm() - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalized (norm^2 = {self.norm()})")

    @classmethod
    def basis(cls, width: int, index: int = 0) -> StateVector:
        if not 0 <= index < 1 << width:
            raise ValueError(f"basis index {index} out of range for {width} qubits")
        amps = np.zeros(1 << width, dtype=np.complex128)
        amps[index] = 1.0
        return cls(width, amps)

    @classmethod
    def from_bitstring(cls, bits: str) -> StateVector:
        """Basis state from a string written most-significant qubit first."""
        if not bits or set(bits) - {"0", "1"}:
            raise ValueError(f"not a bitstring: {bits!r}")
        return cls.basis(len(bits), int(bits, 2))

    @classmethod
    def random(cls, width: int, rng: np.random.Generator) -> StateVector:
        amps = rng.normal(size=1 << width) + 1j * rng.normal(size=1 << width)
        return cls(width, amps / np.linalg.norm(amps))

    def norm(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def copy(self) -> StateVector:
        return StateVector(self.width, self.amplitudes.copy())


# ---------------------------------------------------------------------------
# Operations


@dataclass(frozen=True)
class SingleQubit:
    gate: object  # anything exposing a 2x2 ``matrix``; see gates.SingleQubitGate
    target: int


@dataclass(frozen=True)
class CX:
    control: int
    target: int


@dataclass(frozen=True)
class CPhase:
    """Controlled phase ``diag(1, 1, 1, e^{i angle})``; angle as in dyadic.to_radians."""

    angle: object
    control: int
    target: int


@dataclass(frozen=True)
class Measure:
    target: int
    clbit: int


@dataclass(frozen=True)
class ConditionedPhase:
    """``diag(1, e^{2 pi i phase})`` on target when every (clbit, value) holds."""

    condition: tuple
    phase: DyadicPhase
    target: int


@dataclass(frozen=True)
class Reset:
    target: int


@dataclass(frozen=True)
class ControlledPermutation:
    """Basis permutation ``|y> -> |perm[y]>`` on ``targets`` (LSB first).

    Applied only when ``control`` reads 1; ``control=None`` means unconditional.
    """

    perm: tuple
    targets: tuple
    control: int | None = None


GateOp = Union[SingleQubit, CX, CPhase, Measure, ConditionedPhase, Reset, ControlledPermutation]


def op_qubits(op) -> tuple:
    if isinstance(op, (SingleQubit, Measure, ConditionedPhase, Reset)):
        return (op.target,)
    if isinstance(op, (CX, CPhase)):
        return (op.control, op.target)
    if isinstance(op, ControlledPermutation):
        return op.targets if op.control is None else (op.control, *op.targets)
    raise CircuitError(f"unknown operation {op!r}")


@dataclass(frozen=True)
class Circuit:
    num_qubits: int
    num_clbits: int = 0
    ops: tuple = ()
    # In recycled mode a measured qubit must be reset before it is touched again.
    recycled: bool = False

    def __post_init__(self):
        object.__setattr__(self, "ops", tuple(self.ops))
        written: set[int] = set()
        for pos, op in enumerate(self.ops):
            qubits = op_qubits(op)
            for q in qubits:
                if not 0 <= q < self.num_qubits:
                    raise CircuitError(f"op {pos} ({op!r}): qubit {q} out of range")
            if len(set(qubits)) != len(qubits):
                raise CircuitError(f"op {pos} ({op!r}): repeated qubit")
            if isinstance(op, Measure):
                if not 0 <= op.clbit < self.num_clbits:
                    raise CircuitError(f"op {pos}: classical bit {op.clbit} out of range")
                written.add(op.clbit)
            elif isinstance(op, ConditionedPhase):
                for bit, value in op.condition:
                    if bit not in written:
                        raise CircuitError(
                            f"op {pos}: condition reads classical bit {bit} before it is measured"
                        )
                    if value not in (0, 1):
                        raise CircuitError(f"op {pos}: condition value must be 0 or 1")
            elif isinstance(op, SingleQubit):
                m = np.asarray(op.gate.matrix)
                if m.shape != (2, 2) or np.max(np.abs(m.conj().T @ m - np.eye(2))) > UNITARY_TOL:
                    raise CircuitError(f"op {pos}: gate is not a 2x2 unitary")

    def __add__(self, other: Circuit) -> Circuit:
        return Circuit(
            max(self.num_qubits, other.num_qubits),
            max(self.num_clbits, other.num_clbits),
            self.ops + other.ops,
            self.recycled or other.recycled,
        )

    @property
    def measure_count(self) -> int:
        return sum(isinstance(op, (Measure, Reset)) for op in self.ops)

    def measured_clbits(self) -> set:
        return {op.clbit for op in self.ops if isinstance(op, Measure)}


# ---------------------------------------------------------------------------
# Array kernels. ``psi`` is a flat complex vector over ``width`` qubits.


def _apply_1q(psi: np.ndarray, matrix: np.ndarray, target: int) -> np.ndarray:
    view = psi.reshape(-1, 2, 1 << target)
    return np.einsum("ab,ibk->iak", matrix, view).reshape(-1)


def _bit_mask(size: int, qubit: int) -> np.ndarray:
    return ((np.arange(size) >> qubit) & 1).astype(bool)


def _apply_cx(psi: np.ndarray, control: int, target: int) -> np.ndarray:
    idx = np.arange(psi.size)
    src = np.where((idx >> control) & 1, idx ^ (1 << target), idx)
    return psi[src]


def _apply_phase(psi: np.ndarray, radians: float, qubits: Sequence[int]) -> np.ndarray:
    idx = np.arange(psi.size)
    mask = np.ones(psi.size, dtype=bool)
    for q in qubits:
        mask &= ((idx >> q) & 1).astype(bool)
    out = psi.copy()
    out[mask] *= np.exp(1j * radians)
    return out


def _apply_permutation(psi: np.ndarray, op: ControlledPermutation) -> np.ndarray:
    idx = np.arange(psi.size)
    field_val = np.zeros(psi.size, dtype=np.int64)
    for i, q in enumerate(op.targets):
        field_val |= ((idx >> q) & 1) << i
    perm = np.asarray(op.perm, dtype=np.int64)
    new_val = perm[field_val]
    dst = idx.copy()
    for i, q in enumerate(op.targets):
        bit = (new_val >> i) & 1
        dst = (dst & ~(1 << q)) | (bit << q)
    if op.control is not None:
        dst = np.where((idx >> op.control) & 1, dst, idx)
    out = np.empty_like(psi)
    out[dst] = psi
    return out


def prob_one(psi: np.ndarray, qubit: int) -> float:
    view = psi.reshape(-1, 2, 1 << qubit)
    return float(np.sum(np.abs(view[:, 1, :]) ** 2))


def project(psi: np.ndarray, qubit: int, value: int) -> tuple[np.ndarray, float]:
    """Project ``qubit`` onto ``value``; return the renormalized state and its probability."""
    view = psi.reshape(-1, 2, 1 << qubit).copy()
    view[:, 1 - value, :] = 0
    out = view.reshape(-1)
    p = float(np.vdot(out, out).real)
    if p > 0:
        out /= math.sqrt(p)
    return out, p


def marginal(psi: np.ndarray, qubits: Sequence[int]) -> np.ndarray:
    """Joint outcome probabilities of ``qubits`` (``qubits[i]`` is bit ``i``)."""
    idx = np.arange(psi.size)
    key = np.zeros(psi.size, dtype=np.int64)
    for i, q in enumerate(qubits):
        key |= ((idx >> q) & 1) << i
    return np.bincount(key, weights=np.abs(psi) ** 2, minlength=1 << len(qubits))


def project_many(psi: np.ndarray, qubits: Sequence[int], value: int) -> np.ndarray:
    idx = np.arange(psi.size)
    keep = np.ones(psi.size, dtype=bool)
    for i, q in enumerate(qubits):
        keep &= ((idx >> q) & 1) == ((value >> i) & 1)
    out = np.where(keep, psi, 0)
    p = float(np.vdot(out, out).real)
    return out / math.sqrt(p)


def _condition_holds(condition, classical) -> bool:
    for bit, value in condition:
        if classical[bit] is None:
            raise CircuitError(f"classical bit {bit} read before assignment")
        if classical[bit] != value:
            return False
    return True


def apply_unitary_op(psi: np.ndarray, op, classical=None) -> np.ndarray:
    """Apply any non-measuring op to a raw amplitude array."""
    if isinstance(op, SingleQubit):
        return _apply_1q(psi, np.asarray(op.gate.matrix), op.target)
    if isinstance(op, CX):
        return _apply_cx(psi, op.control, op.target)
    if isinstance(op, CPhase):
        return _apply_phase(psi, to_radians(op.angle), (op.control, op.target))
    if isinstance(op, ConditionedPhase):
        if classical is None:
            raise CircuitError("conditioned phase needs a classical record")
        if _condition_holds(op.condition, classical):
            return _apply_phase(psi, op.phase.radians, (op.target,))
        return psi
    if isinstance(op, ControlledPermutation):
        return _apply_permutation(psi, op)
    raise CircuitError(f"{type(op).__name__} is not a unitary operation")


def apply(
    state: StateVector,
    op,
    classical: list,
    rng: np.random.Generator | None = None,
) -> StateVector:
    """Apply one operation and return the new state.

    ``classical`` is a mutable list of bit values (``None`` when unassigned);
    ``Measure`` samples an outcome with ``rng`` and records it there.
    """
    for q in op_qubits(op):
        if not 0 <= q < state.width:
            raise CircuitError(f"qubit {q} out of range for width {state.width}")
    if isinstance(op, (Measure, Reset)):
        if rng is None:
            raise CircuitError("sampling a measurement requires an rng")
        if isinstance(op, Measure) and not 0 <= op.clbit < len(classical):
            raise CircuitError(f"classical bit {op.clbit} out of range")
        p1 = prob_one(state.amplitudes, op.target)
        outcome = int(rng.random() < p1)
        psi, _ = project(state.amplitudes, op.target, outcome)
        if isinstance(op, Measure):
            classical[op.clbit] = outcome
        elif outcome:
            psi = _apply_1q(psi, _X, op.target)
        return StateVector(state.width, psi)
    if isinstance(op, ConditionedPhase):
        for bit, _ in op.condition:
            if not 0 <= bit < len(classical):
                raise CircuitError(f"classical bit {bit} out of range")
    return StateVector(state.width, apply_unitary_op(state.amplitudes, op, classical))


_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)


# ---------------------------------------------------------------------------
# Distributions


@dataclass
class OutcomeDistribution:
    """Probabilities over integer outcomes ``c`` in ``[0, 2**n)``."""

    n: int
    probs: dict = field(default_factory=dict)
    counts: dict | None = None

    def __post_init__(self):
        for c, p in self.probs.items():
            if not 0 <= c < 1 << self.n:
                raise ValueError(f"outcome {c} outside [0, 2^{self.n})")
            if not -1e-12 <= p <= 1 + 1e-12:
                raise ValueError(f"probability {p} for outcome {c} outside [0, 1]")
        total = sum(self.probs.values())
        if self.probs and abs(total - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {total}")

    @classmethod
    def from_array(cls, probs: np.ndarray, n: int | None = None, tol: float = 0.0) -> OutcomeDistribution:
        probs = np.asarray(probs, dtype=float)
        n = int(round(math.log2(probs.size))) if n is None else n
        return cls(n, {int(c): float(p) for c, p in enumerate(probs) if p > tol})

    @classmethod
    def from_counts(cls, n: int, counts: dict) -> OutcomeDistribution:
        shots = sum(counts.values())
        return cls(n, {c: k / shots for c, k in sorted(counts.items())}, dict(sorted(counts.items())))

    def __getitem__(self, c: int) -> float:
        return self.probs.get(c, 0.0)

    def to_array(self) -> np.ndarray:
        out = np.zeros(1 << self.n)
        for c, p in self.probs.items():
            out[c] = p
        return out

    def support(self, tol: float = 1e-12) -> set:
        return {c for c, p in self.probs.items() if p > tol}

    def total_variation(self, other: OutcomeDistribution) -> float:
        if self.n != other.n:
            raise ValueError(f"outcome spaces differ: {self.n} vs {other.n} bits")
        keys = set(self.probs) | set(other.probs)
        return 0.5 * sum(abs(self[c] - other[c]) for c in keys)


def total_variation(p, q) -> float:
    if isinstance(p, OutcomeDistribution):
        return p.total_variation(q if isinstance(q, OutcomeDistribution) else OutcomeDistribution.from_array(q, p.n))
    return 0.5 * float(np.sum(np.abs(np.asarray(p) - np.asarray(q))))


# ---------------------------------------------------------------------------
# Execution


def _check_input(circuit: Circuit, state: StateVector):
    if state.width != circuit.num_qubits:
        raise CircuitError(f"input has {state.width} qubits, circuit expects {circuit.num_qubits}")
    missing = set(range(circuit.num_clbits)) - circuit.measured_clbits()
    if missing:
        raise CircuitError(f"classical bits {sorted(missing)} are never measured")


class _Executor:
    """Advances one branch through the op list, stopping at measurements/resets."""

    def __init__(self, circuit: Circuit):
        self.circuit = circuit
        self.ops = circuit.ops

    def advance(self, psi, classical, pos, consumed):
        ops = self.ops
        while pos < len(ops):
            op = ops[pos]
            if self.circuit.recycled and not isinstance(op, Reset):
                for q in op_qubits(op):
                    if q in consumed:
                        raise CircuitError(f"op {pos}: qubit {q} was measured and not reset")
            if isinstance(op, (Measure, Reset)):
                return psi, pos
            psi = apply_unitary_op(psi, op, classical)
            pos += 1
        return psi, pos

    def branch(self, psi, classical, pos, consumed, outcome):
        """Take outcome ``outcome`` at the measurement at ``pos``."""
        op = self.ops[pos]
        out, p = project(psi, op.target, outcome)
        classical = list(classical)
        consumed = set(consumed)
        if isinstance(op, Measure):
            classical[op.clbit] = outcome
            consumed.add(op.target)
        else:
            if outcome:
                out = _apply_1q(out, _X, op.target)
            consumed.discard(op.target)
        return out, p, classical, consumed


def _outcome(classical) -> int:
    return sum(bit << j for j, bit in enumerate(classical) if bit)


def enumerate_branches(
    circuit: Circuit, state: StateVector, cap: int = DEFAULT_BRANCH_CAP
) -> OutcomeDistribution:
    """Exact outcome distribution, walking every measurement branch."""
    _check_input(circuit, state)
    if circuit.measure_count >= 64 or (1 << circuit.measure_count) > cap:
        raise CapacityError(
            f"2^{circuit.measure_count} measurement branches exceed the cap of {cap}"
        )
    ex = _Executor(circuit)
    probs = np.zeros(1 << circuit.num_clbits)
    stack = [(state.amplitudes, [None] * circuit.num_clbits, 0, frozenset(), 1.0)]
    while stack:
        psi, classical, pos, consumed, weight = stack.pop()
        psi, pos = ex.advance(psi, classical, pos, consumed)
        if pos == len(ex.ops):
            probs[_outcome(classical)] += weight
            continue
        p1 = prob_one(psi, ex.ops[pos].target)
        for outcome, p in ((0, 1.0 - p1), (1, p1)):
            if weight * p <= PRUNE:
                continue
            out, _, cl, cons = ex.branch(psi, classical, pos, consumed, outcome)
            stack.append((out, cl, pos + 1, cons, weight * p))
    probs /= probs.sum()
    return OutcomeDistribution.from_array(probs, circuit.num_clbits)


def sample(
    circuit: Circuit, state: StateVector, shots: int, seed=None
) -> OutcomeDistribution:
    """Shot-based execution by sequential Born-rule collapse.

    States reached along a measurement-record prefix are memoized, which does
    not change the sampling law, only the cost of repeated prefixes.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    _check_input(circuit, state)
    ex = _Executor(circuit)
    rng = np.random.default_rng(seed)
    # path -> (state stopped at the next measurement, its position, P(outcome=1), classical, consumed)
    nodes: dict = {}
    counts: dict = {}
    for _ in range(shots):
        path = ()
        psi, classical, pos, consumed = state.amplitudes, [None] * circuit.num_clbits, 0, set()
        while True:
            node = nodes.get(path)
            if node is None:
                psi, pos = ex.advance(psi, classical, pos, consumed)
                p1 = prob_one(psi, ex.ops[pos].target) if pos < len(ex.ops) else 0.0
                node = nodes[path] = (psi, pos, p1, classical, consumed)
            psi, pos, p1, classical, consumed = node
            if pos == len(ex.ops):
                break
            outcome = int(rng.random() < p1)
            psi, _, classical, consumed = ex.branch(psi, classical, pos, consumed, outcome)
            pos += 1
            path = path + (outcome,)
        c = _outcome(classical)
        counts[c] = counts.get(c, 0) + 1
    return OutcomeDistribution.from_counts(circuit.num_clbits, counts)


def circuit_unitary(circuit: Circuit) -> np.ndarray:
    """Dense unitary of a measurement-free circuit (column ``j`` = image of ``|j>``)."""
    dim = 1 << circuit.num_qubits
    cols = np.eye(dim, dtype=np.complex128)
    out = np.empty_like(cols)
    for j in range(dim):
        psi = cols[:, j]
        for op in circuit.ops:
            if isinstance(op, (Measure, Reset, ConditionedPhase)):
                raise CircuitError("circuit_unitary needs a circuit without measurement or feedback")
            psi = apply_unitary_op(psi, op)
        out[:, j] = psi
    return out


def run_statevector(circuit: Circuit, state: StateVector) -> StateVector:
    """Final state of a measurement-free circuit."""
    psi = state.amplitudes
    for op in circuit.ops:
        if isinstance(op, (Measure, Reset)):
            raise CircuitError("run_statevector cannot execute measurements")
        psi = apply_unitary_op(psi, op)
    return StateVector(state.width, psi)
