"""Order finding and factoring on top of the recycled semiclassical QFT."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import gates
from .qft import CountLedger
from .semiclassical import BlockWalker, plan_blocks, recycled_execution_ledger
from .sim import (
    DEFAULT_BRANCH_CAP,
    CX,
    Circuit,
    ControlledPermutation,
    OutcomeDistribution,
    SingleQubit,
    apply_unitary_op,
)

SUCCESS = "success"
FAILURE_ZERO = "failure-zero"
FAILURE_BAD_ORDER = "failure-bad-order"
FAILURE_TRIVIAL_GCD = "failure-trivial-gcd"


def _is_prime(m: int) -> bool:
    if m < 2:
        return False
    return all(m % d for d in range(2, math.isqrt(m) + 1))


def _is_prime_power(m: int) -> bool:
    for b in range(2, m.bit_length() + 1):
        root = round(m ** (1 / b))
        for cand in (root - 1, root, root + 1):
            if cand > 1 and cand**b == m and _is_prime(cand):
                return True
    return False


@dataclass(frozen=True)
class ShorConfig:
    N: int
    x: int
    t: int = 2

    def __post_init__(self):
        N, x = self.N, self.x
        if N < 3 or N % 2 == 0:
            raise ValueError(f"N must be odd and >= 3, got {N}")
        if _is_prime(N):
            raise ValueError(f"N = {N} is prime")
        if _is_prime_power(N):
            raise ValueError(f"N = {N} is a prime power")
        if not 1 < x < N:
            raise ValueError(f"x must lie in (1, N), got {x}")
        if math.gcd(x, N) != 1:
            raise ValueError(f"gcd({x}, {N}) = {math.gcd(x, N)} is already a factor")
        if not 1 <= self.t <= self.n:
            raise ValueError(f"t must lie in [1, {self.n}], got {self.t}")

    @property
    def work_qubits(self) -> int:
        return math.ceil(math.log2(self.N))

    @property
    def n(self) -> int:
        return 2 * self.work_qubits


@dataclass
class ShorOutcome:
    c: int | None = None
    convergent: tuple | None = None
    order: int | None = None
    factors: frozenset | None = None
    status: str = FAILURE_ZERO
    attempts: int = 0

    @property
    def success(self) -> bool:
        return self.status == SUCCESS


def classical_shortcut(N: int, x: int) -> ShorOutcome | None:
    """Cases that need no quantum step: even N, or x sharing a factor with N."""
    if N % 2 == 0 and N > 2:
        return ShorOutcome(factors=frozenset({2, N // 2}), status=SUCCESS)
    g = math.gcd(x, N)
    if 1 < g < N:
        return ShorOutcome(factors=frozenset({g, N // g}), status=SUCCESS)
    return None


def modexp_permutation(x: int, N: int, k: int, work_qubits: int | None = None) -> tuple:
    """Permutation ``y -> y * x^(2^k) mod N`` on ``y < N``, identity above."""
    if math.gcd(x, N) != 1:
        raise ValueError(f"gcd({x}, {N}) != 1")
    w = work_qubits if work_qubits is not None else math.ceil(math.log2(N))
    if 1 << w < N:
        raise ValueError(f"{w} work qubits cannot hold residues mod {N}")
    mult = pow(x, 1 << k, N)
    return tuple((y * mult) % N if y < N else y for y in range(1 << w))


def compiled_mult11_mod15(control: int | None = None, work: tuple = (0, 1, 2, 3)) -> Circuit:
    """Multiply-by-11 mod 15, exact only on the reachable residues {1, 11}.

    1 = 0001 and 11 = 1011 differ in the bits of weight 2 and 8, so flipping
    those two work qubits swaps them.
    """
    width = max(work) + 1 if control is None else max(max(work), control) + 1
    if control is None:
        ops = [SingleQubit(gates.X, work[1]), SingleQubit(gates.X, work[3])]
    else:
        ops = [CX(control, work[1]), CX(control, work[3])]
    return Circuit(width, 0, ops)


def _order_walker(cfg: ShorConfig, compiled: bool, cap: int):
    if compiled and (cfg.N, cfg.x) != (15, 11):
        raise ValueError("the compiled multiplier only exists for N=15, x=11")
    plan = plan_blocks(cfg.n, cfg.t)
    t, w = cfg.t, cfg.work_qubits
    work = tuple(range(t, t + w))

    def controlled_power(i: int, k: int) -> list:
        if compiled:
            return list(compiled_mult11_mod15(i, work).ops) if k == 0 else []
        return [ControlledPermutation(modexp_permutation(cfg.x, cfg.N, k, w), work, i)]

    def prepare(psi, j, raw):
        # reset the exponent register from its last readout, then superpose and multiply
        if raw > 0:
            for i in range(t):
                if (raw >> i) & 1:
                    psi = apply_unitary_op(psi, SingleQubit(gates.X, i))
        for i in range(plan.size(j)):
            psi = apply_unitary_op(psi, SingleQubit(gates.H, i))
        for i in range(plan.size(j)):
            for op in controlled_power(i, plan.base(j) + i):
                psi = apply_unitary_op(psi, op)
        return psi

    walker = BlockWalker(plan, lambda j: range(plan.size(j)), prepare, mode="recycled", cap=cap)
    psi0 = np.zeros(1 << (t + w), dtype=np.complex128)
    psi0[1 << t] = 1.0  # work register holds 1
    return plan, walker, psi0


def run_order_finding(
    cfg: ShorConfig,
    mode: str = "enumerate",
    shots: int = 1024,
    seed=None,
    compiled: bool = False,
    cap: int = DEFAULT_BRANCH_CAP,
) -> OutcomeDistribution:
    """Distribution of the exponent-register readout ``c``.

    Exponent blocks are streamed most significant first through a t-qubit
    register, next to a persistent work register of ``ceil(log2 N)`` qubits.
    """
    plan, walker, psi0 = _order_walker(cfg, compiled, cap)
    if mode == "enumerate":
        probs = np.zeros(1 << plan.n)
        for run in walker.branches(psi0):
            probs[run.c] += run.probability
        return OutcomeDistribution.from_array(probs / probs.sum(), plan.n)
    if mode == "sample":
        if shots < 1:
            raise ValueError("shots must be >= 1")
        return OutcomeDistribution.from_counts(plan.n, walker.sample(psi0, shots, np.random.default_rng(seed)))
    raise ValueError(f"unknown mode {mode!r}")


def order_finding_ledger(cfg: ShorConfig) -> CountLedger:
    base = recycled_execution_ledger(plan_blocks(cfg.n, cfg.t), cfg.work_qubits)
    return CountLedger(
        base.single_qubit, base.two_qubit, base.measurements, base.peak_register_width,
        base.resets, cfg.n, base.relabel_swaps, base.steps,
    )


def convergents(value: Fraction):
    """Successive continued-fraction convergents of a non-negative rational."""
    h_prev, h = 0, 1
    k_prev, k = 1, 0
    num, den = value.numerator, value.denominator
    while den:
        a, rem = divmod(num, den)
        h_prev, h = h, a * h + h_prev
        k_prev, k = k, a * k + k_prev
        yield Fraction(h, k)
        num, den = den, rem


def continued_fraction_order(c: int, n_bits: int, N: int) -> tuple | None:
    """Smallest-denominator convergent ``d/r`` of ``c/2^n`` with ``r <= N`` within ``1/2^(n+1)``."""
    if not 0 <= c < 1 << n_bits:
        raise ValueError(f"c = {c} outside [0, 2^{n_bits})")
    if c == 0:
        return None
    target = Fraction(c, 1 << n_bits)
    bound = Fraction(1, 1 << (n_bits + 1))
    for conv in convergents(target):
        if conv.denominator > N:
            break
        if conv != 0 and abs(target - conv) <= bound:
            return conv.numerator, conv.denominator
    return None


def extract_factors(cfg: ShorConfig, r: int) -> ShorOutcome:
    N, x = cfg.N, cfg.x
    if r < 1 or pow(x, r, N) != 1:
        return ShorOutcome(order=None, status=FAILURE_BAD_ORDER)
    half = pow(x, r // 2, N)
    if r % 2 or half == N - 1:
        return ShorOutcome(order=r, status=FAILURE_TRIVIAL_GCD)
    found = {g for g in (math.gcd(half - 1, N), math.gcd(half + 1, N)) if 1 < g < N}
    if not found:
        return ShorOutcome(order=r, status=FAILURE_TRIVIAL_GCD)
    return ShorOutcome(order=r, factors=frozenset(found), status=SUCCESS)


def postprocess(cfg: ShorConfig, c: int) -> ShorOutcome:
    """Continued fractions, then gcds, for one measured ``c``."""
    if c == 0:
        return ShorOutcome(c=0, status=FAILURE_ZERO)
    conv = continued_fraction_order(c, cfg.n, cfg.N)
    if conv is None:
        return ShorOutcome(c=c, status=FAILURE_BAD_ORDER)
    out = extract_factors(cfg, conv[1])
    out.c, out.convergent = c, conv
    return out


@dataclass
class FactorReport:
    outcome: ShorOutcome
    distributions: list = field(default_factory=list)


def factor(
    cfg: ShorConfig,
    shots: int = 1,
    seed=None,
    attempts: int = 10,
    compiled: bool = False,
) -> ShorOutcome:
    """Sample, post-process, retry.

    Each attempt draws ``shots`` samples under its own sub-seed and tries the
    observed values of ``c`` from most to least frequent. Never raises on
    failure; the returned outcome carries the final status.
    """
    return factor_report(cfg, shots, seed, attempts, compiled).outcome


def factor_report(cfg: ShorConfig, shots: int = 1, seed=None, attempts: int = 10, compiled: bool = False) -> FactorReport:
    if attempts < 1:
        raise ValueError("attempts must be >= 1")
    seeds = np.random.SeedSequence(seed).spawn(attempts)
    report = FactorReport(ShorOutcome())
    for attempt, sub in enumerate(seeds, start=1):
        dist = run_order_finding(cfg, "sample", shots, np.random.default_rng(sub), compiled)
        report.distributions.append(dist)
        for c in sorted(dist.counts, key=lambda v: (-dist.counts[v], v)):
            out = postprocess(cfg, c)
            out.attempts = attempt
            report.outcome = out
            if out.success:
                return report
    return report
