"""Block-wise semiclassical QFT: measure each t-bit block, feed dyadic phases forward.

The n input bits are cut into a leading block of ``n - l*t`` most-significant
bits followed by ``l`` blocks of ``t`` bits. Blocks are transformed left to
right (most significant first). After a block is measured, its outcome
updates the running feedback phase ``phi``, which parametrizes the S_k
rotations applied to the next block before its own small QFT.

Block ``j`` occupies input qubits ``base(j) .. base(j)+size(j)-1`` and writes
output bits ``offset(j) .. offset(j)+size(j)-1``; the leading block writes the
least significant output bits.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Iterator, Sequence

import numpy as np

from . import gates
from .dyadic import ZERO, DyadicPhase
from .qft import CountLedger, build_standard_qft, dft_probabilities
from .sim import (
    DEFAULT_BRANCH_CAP,
    PRUNE,
    CapacityError,
    Circuit,
    ConditionedPhase,
    Measure,
    OutcomeDistribution,
    Reset,
    SingleQubit,
    StateVector,
    apply_unitary_op,
    marginal,
    project_many,
)


@dataclass(frozen=True)
class BlockPlan:
    n: int
    t: int
    l: int

    @property
    def block_sizes(self) -> list:
        return [self.n - self.l * self.t] + [self.t] * self.l

    @property
    def num_blocks(self) -> int:
        return self.l + 1

    def size(self, j: int) -> int:
        return self.n - self.l * self.t if j == 0 else self.t

    def base(self, j: int) -> int:
        """Lowest input qubit of block ``j``."""
        return self.l * self.t if j == 0 else (self.l - j) * self.t

    def offset(self, j: int) -> int:
        """Lowest output bit written by block ``j``."""
        return 0 if j == 0 else self.n - (self.l - j + 1) * self.t


def plan_blocks(n: int, t: int) -> BlockPlan:
    """Partition ``n`` bits into blocks of width ``t``.

    ``l = n/t - 1`` when ``t`` divides ``n``, else ``floor(n/t)``, so the
    leading block always holds between 1 and ``t`` bits.
    """
    if t < 1 or t > n:
        raise ValueError(f"need 1 <= t <= n, got n={n}, t={t}")
    l = n // t - 1 if n % t == 0 else n // t
    return BlockPlan(n, t, l)


def phi_next(phi_prev: DyadicPhase, measured_block: int, block_size: int, is_first: bool) -> DyadicPhase:
    """Feedback phase after a block is measured (cycles, exact).

    First block: ``c' / 2^(size+1)``. Later blocks: ``phi/2^t + c'/2^(t+1)``.
    """
    if not 0 <= measured_block < 1 << block_size:
        raise ValueError(f"block outcome {measured_block} does not fit in {block_size} bits")
    fresh = DyadicPhase(measured_block, block_size + 1)
    if is_first:
        if phi_prev:
            raise ValueError("the first block starts from phi = 0")
        return fresh
    out = phi_prev.shift_down(block_size) + fresh
    assert out.cycles < 1
    return out


def build_block_step(plan: BlockPlan, block_index: int, phi: DyadicPhase = ZERO) -> Circuit:
    """Circuit fragment for one block, on block-local qubits and classical bits.

    Local qubit ``i`` carries weight ``2^i``; S_k goes on the qubit of weight
    ``2^(t-k)``. Zero feedback emits no S_k gates.
    """
    if not 0 <= block_index <= plan.l:
        raise ValueError(f"block index {block_index} outside 0..{plan.l}")
    if block_index == 0 and phi:
        raise ValueError("the first block takes phi = 0")
    size = plan.size(block_index)
    ops = []
    if phi:
        for k in range(1, size + 1):
            ops.append(SingleQubit(gates.s_k(k, phi), size - k))
    ops.extend(build_standard_qft(size).ops)
    return Circuit(size, size, ops)


def _remap(op, qmap: Sequence[int]):
    if isinstance(op, (SingleQubit, Measure, ConditionedPhase, Reset)):
        return replace(op, target=qmap[op.target])
    return replace(op, control=qmap[op.control], target=qmap[op.target])


@dataclass
class SemiclassicalRun:
    plan: BlockPlan
    mode: str
    blocks: list = field(default_factory=list)
    phases: list = field(default_factory=list)
    c: int = 0
    probability: float = 1.0


Prepare = Callable[[np.ndarray, int, int], np.ndarray]


class BlockWalker:
    """Executes a block plan on a register, branching on every block outcome.

    ``qubits(j)`` lists the register qubits holding block ``j`` (LSB first).
    ``prepare(psi, j, last_raw)`` readies the register for block ``j``;
    ``last_raw`` is the raw qubit readout of the previous block (-1 for none).
    """

    def __init__(self, plan: BlockPlan, qubits: Callable[[int], Sequence[int]], prepare: Prepare | None = None,
                 mode: str = "full", cap: int = DEFAULT_BRANCH_CAP):
        if plan.n >= 63 or (1 << plan.n) > cap:
            raise CapacityError(f"2^{plan.n} outcome branches exceed the cap of {cap}")
        self.plan = plan
        self.qubits = qubits
        self.prepare = prepare or (lambda psi, j, raw: psi)
        self.mode = mode

    def _step(self, psi: np.ndarray, j: int, phi: DyadicPhase):
        """Apply block ``j``'s unitary part; return state, readout qubits per clbit, outcome probabilities."""
        frag = build_block_step(self.plan, j, phi)
        qmap = list(self.qubits(j))
        readout = [0] * frag.num_clbits
        for op in frag.ops:
            if isinstance(op, Measure):
                readout[op.clbit] = qmap[op.target]
            else:
                psi = apply_unitary_op(psi, _remap(op, qmap))
        return psi, readout, marginal(psi, readout)

    def _raw(self, j: int, readout, value: int) -> int:
        """Outcome re-expressed as block-local qubit values (for resets)."""
        qmap = list(self.qubits(j))
        return sum(((value >> b) & 1) << qmap.index(q) for b, q in enumerate(readout))

    def branches(self, psi0: np.ndarray) -> Iterator[SemiclassicalRun]:
        plan = self.plan
        stack = [(psi0, 0, ZERO, [], [], 0, 1.0, -1)]
        while stack:
            psi, j, phi, blocks, phases, c, weight, raw = stack.pop()
            if j == plan.num_blocks:
                yield SemiclassicalRun(plan, self.mode, blocks, phases, c, weight)
                continue
            psi = self.prepare(psi, j, raw)
            psi, readout, probs = self._step(psi, j, phi)
            size = plan.size(j)
            for value in range(len(probs) - 1, -1, -1):
                p = weight * probs[value]
                if p <= PRUNE:
                    continue
                nxt = phi_next(phi, value, size, j == 0)
                stack.append((
                    project_many(psi, readout, value),
                    j + 1,
                    nxt,
                    blocks + [value],
                    phases + [nxt] if j < plan.l else phases,
                    c | (value << plan.offset(j)),
                    p,
                    self._raw(j, readout, value),
                ))

    def sample(self, psi0: np.ndarray, shots: int, rng: np.random.Generator) -> dict:
        """Counts from ``shots`` sequential collapses.

        Block states are memoized by outcome prefix; this changes the cost of
        repeated prefixes, not the sampling law.
        """
        plan = self.plan
        nodes: dict = {}
        children: dict = {}
        counts: dict = {}
        draws = rng.random((shots, plan.num_blocks))
        for u in draws:
            path: tuple = ()
            psi, phi, raw, c = psi0, ZERO, -1, 0
            for j in range(plan.num_blocks):
                node = nodes.get(path)
                if node is None:
                    stepped, readout, probs = self._step(self.prepare(psi, j, raw), j, phi)
                    cum = np.cumsum(probs)
                    node = nodes[path] = (cum / cum[-1], stepped, readout)
                cum, stepped, readout = node
                value = min(int(np.searchsorted(cum, u[j], side="right")), len(cum) - 1)
                c |= value << plan.offset(j)
                parent, path = path, path + (value,)
                if j < plan.l:
                    child = children.get(path)
                    if child is None:
                        child = children[path] = (
                            project_many(stepped, readout, value),
                            phi_next(phi, value, plan.size(j), j == 0),
                            self._raw(j, readout, value),
                        )
                    psi, phi, raw = child
            counts[c] = counts.get(c, 0) + 1
        return counts


def factor_blocks(state: StateVector, plan: BlockPlan, tol: float = 1e-10) -> list:
    """Split a block-product state into per-block vectors (block order).

    Raises ``ValueError`` when the state is entangled across blocks.
    """
    rest = state.amplitudes
    out = []
    remaining = plan.n
    for j in range(plan.num_blocks):
        size = plan.size(j)
        remaining -= size
        if remaining == 0:
            out.append(rest)
            break
        mat = rest.reshape(1 << size, 1 << remaining)
        u, s, vh = np.linalg.svd(mat)
        if len(s) > 1 and s[1] > tol:
            raise ValueError("input is entangled across blocks; use register='full'")
        out.append(u[:, 0] * s[0])
        rest = vh[0]
    return out


def _walker_for(plan: BlockPlan, state, register: str, cap: int) -> tuple[BlockWalker, np.ndarray]:
    if register == "full":
        if state.width != plan.n:
            raise ValueError(f"input has {state.width} qubits, plan expects {plan.n}")
        walker = BlockWalker(plan, lambda j: range(plan.base(j), plan.base(j) + plan.size(j)), mode="full", cap=cap)
        return walker, state.amplitudes
    if register != "recycled":
        raise ValueError(f"unknown register mode {register!r}")
    if callable(state):
        block_states = [np.asarray(state(j), dtype=np.complex128) for j in range(plan.num_blocks)]
    else:
        if state.width != plan.n:
            raise ValueError(f"input has {state.width} qubits, plan expects {plan.n}")
        block_states = factor_blocks(state, plan)
    width = plan.t

    def prepare(psi, j, raw):
        # Reset the measured register, then load the next block's input.
        fresh = np.zeros(1 << width, dtype=np.complex128)
        fresh[: 1 << plan.size(j)] = block_states[j]
        return fresh

    walker = BlockWalker(plan, lambda j: range(plan.size(j)), prepare, mode="recycled", cap=cap)
    return walker, np.zeros(1 << width, dtype=np.complex128)


def iter_branches(state, plan: BlockPlan, register: str = "full", cap: int = DEFAULT_BRANCH_CAP) -> Iterator[SemiclassicalRun]:
    walker, psi0 = _walker_for(plan, state, register, cap)
    return walker.branches(psi0)


def run_semiclassical(
    state,
    plan: BlockPlan,
    mode: str = "enumerate",
    shots: int = 1024,
    seed=None,
    register: str = "full",
    cap: int = DEFAULT_BRANCH_CAP,
) -> OutcomeDistribution:
    """Outcome distribution of the block-wise semiclassical QFT.

    ``register="full"`` keeps all n qubits and accepts any input state;
    ``register="recycled"`` reuses one t-qubit register and needs a
    block-product input (or a callable ``j -> block state``).
    """
    walker, psi0 = _walker_for(plan, state, register, cap)
    if mode == "enumerate":
        probs = np.zeros(1 << plan.n)
        for run in walker.branches(psi0):
            probs[run.c] += run.probability
        return OutcomeDistribution.from_array(probs / probs.sum(), plan.n)
    if mode == "sample":
        if shots < 1:
            raise ValueError("shots must be >= 1")
        counts = walker.sample(psi0, shots, np.random.default_rng(seed))
        return OutcomeDistribution.from_counts(plan.n, counts)
    raise ValueError(f"unknown mode {mode!r}")


def branch_phase(a: int, c: int, plan: BlockPlan) -> complex:
    """Amplitude of ``|c>`` given ``|a>``, replayed block by block in exact arithmetic.

    Each block contributes its small-QFT kernel ``omega_{2^size}^{a' c'}`` and
    the feedback term ``(a'/2^(t-1)) * phi`` (block MSB weighted by 1).
    """
    n = plan.n
    if not (0 <= a < 1 << n and 0 <= c < 1 << n):
        raise ValueError(f"a and c must lie in [0, 2^{n})")
    cycles = Fraction(0)
    phi = ZERO
    for j in range(plan.num_blocks):
        size = plan.size(j)
        mask = (1 << size) - 1
        a_blk = (a >> plan.base(j)) & mask
        c_blk = (c >> plan.offset(j)) & mask
        cycles += Fraction(a_blk * c_blk, 1 << size)
        if j > 0:
            cycles += phi.as_fraction() * Fraction(a_blk, 1 << (size - 1))
        phi = phi_next(phi, c_blk, size, j == 0)
    cycles %= 1
    return cmath.exp(2j * math.pi * float(cycles)) / 2 ** (n / 2)


def feedback_terms(plan: BlockPlan, j: int) -> list:
    """``(local qubit, earlier output bit, phase)`` triples realizing block ``j``'s S_k gates bit by bit."""
    if j == 0:
        return []
    t, off = plan.t, plan.offset(j)
    terms = []
    for i in range(plan.size(j)):
        for x in range(off):
            # bit x enters phi_j with weight 2^(x-off-1); S_k on qubit i divides by 2^(t-i-1)
            terms.append((i, x, DyadicPhase(1, off + t - i - x)))
    return terms


def build_semiclassical_circuit(plan: BlockPlan) -> Circuit:
    """Static full-register circuit with per-bit classically conditioned phases."""
    ops = []
    for j in range(plan.num_blocks):
        base, off, size = plan.base(j), plan.offset(j), plan.size(j)
        qmap = list(range(base, base + size))
        for i, x, phase in feedback_terms(plan, j):
            ops.append(ConditionedPhase(((x, 1),), phase, base + i))
        for op in build_standard_qft(size).ops:
            if isinstance(op, Measure):
                ops.append(Measure(qmap[op.target], off + op.clbit))
            else:
                ops.append(_remap(op, qmap))
    return Circuit(plan.n, plan.n, ops)


def build_recycled_circuit(plan: BlockPlan, a: int) -> Circuit:
    """Static t-qubit circuit for basis input ``|a>``: prepare, feed back, transform, measure, reset."""
    if not 0 <= a < 1 << plan.n:
        raise ValueError(f"input {a} out of range")
    ops = []
    used: list = []
    for j in range(plan.num_blocks):
        base, off, size = plan.base(j), plan.offset(j), plan.size(j)
        ops.extend(Reset(q) for q in used)
        for i in range(size):
            if (a >> (base + i)) & 1:
                ops.append(SingleQubit(gates.X, i))
        for i, x, phase in feedback_terms(plan, j):
            ops.append(ConditionedPhase(((x, 1),), phase, i))
        for op in build_standard_qft(size).ops:
            ops.append(replace(op, clbit=off + op.clbit) if isinstance(op, Measure) else op)
        used = list(range(size))
    return Circuit(plan.t, plan.n, ops, recycled=True)


def closed_form_two_qubit(plan: BlockPlan) -> int:
    s0 = plan.size(0)
    return plan.l * plan.t * (plan.t - 1) // 2 + s0 * (s0 - 1) // 2


def recycled_execution_ledger(plan: BlockPlan, extra_work_qubits: int = 0) -> CountLedger:
    """Resource counts for recycled execution (controlled phases counted before lowering)."""
    return CountLedger(
        single_qubit=plan.n + plan.l * plan.t,
        two_qubit=closed_form_two_qubit(plan),
        measurements=plan.n,
        peak_register_width=plan.t + extra_work_qubits,
        resets=plan.n - plan.size(plan.l),
        steps=plan.l + 1,
    )


def theorem_check(state: StateVector, plan: BlockPlan) -> float:
    """Total-variation distance between the semiclassical and dense-DFT distributions."""
    dist = run_semiclassical(state, plan)
    return 0.5 * float(np.sum(np.abs(dist.to_array() - dft_probabilities(state))))
