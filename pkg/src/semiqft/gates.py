"""Hardware gate set, QFT phase rotations, and the two-CNOT controlled-phase construction."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .dyadic import DyadicPhase, format_angle, to_radians
from .sim import CX, UNITARY_TOL, Circuit, SingleQubit, circuit_unitary

MAX_K = 30


@dataclass(frozen=True)
class SingleQubitGate:
    """A named single-qubit gate.

    ``params`` hold exact angles (``Fraction`` multiples of pi) where possible,
    radians otherwise. ``u2``/``u3`` take parameters in ``(lam, phi)`` and
    ``(theta, lam, phi)`` order.
    """

    name: str
    params: tuple = ()
    tag: str | None = None

    @property
    def matrix(self) -> np.ndarray:
        return _MATRIX_BUILDERS[self.name](*[to_radians(p) for p in self.params])

    @property
    def label(self) -> str:
        if self.tag:
            return self.tag
        if not self.params:
            return self.name.upper()
        args = ",".join(format_angle(p, pi="π") for p in self.params)
        return f"{self.name.upper()}({args})"

    def is_diagonal(self) -> bool:
        m = self.matrix
        return abs(m[0, 1]) < UNITARY_TOL and abs(m[1, 0]) < UNITARY_TOL

    def __repr__(self) -> str:
        return f"<{self.label}>"


def _u1(lam):
    return np.array([[1, 0], [0, cmath.exp(1j * lam)]], dtype=np.complex128)


def _u2(lam, phi):
    return np.array(
        [[1, -cmath.exp(1j * lam)], [cmath.exp(1j * phi), cmath.exp(1j * (lam + phi))]],
        dtype=np.complex128,
    ) / math.sqrt(2)


def _u3(theta, lam, phi):
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array(
        [[c, -cmath.exp(1j * lam) * s], [cmath.exp(1j * phi) * s, cmath.exp(1j * (lam + phi)) * c]],
        dtype=np.complex128,
    )


_MATRIX_BUILDERS = {
    "id": lambda: np.eye(2, dtype=np.complex128),
    "h": lambda: np.array([[1, 1], [1, -1]], dtype=np.complex128) / math.sqrt(2),
    "x": lambda: np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "y": lambda: np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "z": lambda: np.diag([1, -1]).astype(np.complex128),
    "s": lambda: np.diag([1, 1j]).astype(np.complex128),
    "t": lambda: np.diag([1, cmath.exp(1j * math.pi / 4)]),
    "u1": _u1,
    "u2": _u2,
    "u3": _u3,
}

H = SingleQubitGate("h")
X = SingleQubitGate("x")
Y = SingleQubitGate("y")
Z = SingleQubitGate("z")
S = SingleQubitGate("s")
T = SingleQubitGate("t")
I = SingleQubitGate("id")


def u1(lam) -> SingleQubitGate:
    return SingleQubitGate("u1", (lam,))


def u2(lam, phi) -> SingleQubitGate:
    return SingleQubitGate("u2", (lam, phi))


def u3(theta, lam, phi) -> SingleQubitGate:
    return SingleQubitGate("u3", (theta, lam, phi))


def r_k(k: int) -> SingleQubitGate:
    """QFT rotation ``diag(1, e^{2 pi i / 2^k})``."""
    if k < 1:
        raise ValueError(f"R_k needs k >= 1, got {k}")
    if k > MAX_K:
        raise ValueError(f"R_k with k > {MAX_K} is below double-precision phase resolution")
    return SingleQubitGate("u1", (Fraction(2, 2**k),), tag=f"R{k}")


def s_k(k: int, phi: DyadicPhase) -> SingleQubitGate:
    """Feedback rotation ``diag(1, e^{2 pi i phi / 2^(k-1)})``."""
    if k < 1:
        raise ValueError(f"S_k needs k >= 1, got {k}")
    angle = phi.half_turns() / 2 ** (k - 1)
    return SingleQubitGate("u1", (angle,), tag=f"S{k}({format_angle(angle, pi='π')})")


@dataclass(frozen=True)
class ControlledDecomposition:
    """``U = e^{i alpha} A X B X C`` with ``A B C = I``."""

    alpha: object
    A: SingleQubitGate
    B: SingleQubitGate
    C: SingleQubitGate
    target: SingleQubitGate

    def residuals(self) -> tuple[float, float]:
        """Max-norm residuals of ``ABC - I`` and ``e^{i alpha} AXBXC - U``."""
        a, b, c = self.A.matrix, self.B.matrix, self.C.matrix
        x = X.matrix
        abc = np.max(np.abs(a @ b @ c - np.eye(2)))
        rebuilt = cmath.exp(1j * to_radians(self.alpha)) * (a @ x @ b @ x @ c)
        return float(abc), float(np.max(np.abs(rebuilt - self.target.matrix)))


def _phase_angle(gate: SingleQubitGate):
    if gate.name == "u1":
        return gate.params[0]
    if gate.name == "id":
        return Fraction(0)
    if gate.name == "s":
        return Fraction(1, 2)
    if gate.name == "t":
        return Fraction(1, 4)
    if gate.name == "z":
        return Fraction(1)
    m = gate.matrix
    if not gate.is_diagonal() or abs(m[0, 0] - 1) > UNITARY_TOL:
        raise ValueError(f"{gate.label} is not a phase gate diag(1, e^(i theta))")
    return cmath.phase(m[1, 1])


def decompose_phase_gate(gate: SingleQubitGate) -> ControlledDecomposition:
    """Split ``diag(1, e^{i theta})`` into ``alpha = theta/2``, ``A = C = U1(theta/4)``, ``B = U1(-theta/2)``."""
    m = gate.matrix
    if not gate.is_diagonal() or abs(m[0, 0] - 1) > UNITARY_TOL:
        raise ValueError(f"{gate.label} is not a phase gate diag(1, e^(i theta))")
    theta = _phase_angle(gate)
    if theta == 0:
        return ControlledDecomposition(Fraction(0), I, I, I, gate)
    quarter = u1(theta / 4)
    return ControlledDecomposition(theta / 2, quarter, u1(-theta / 2), quarter, gate)


def controlled_gate_ops(dec: ControlledDecomposition, control: int, target: int) -> list:
    if control == target:
        raise ValueError("control and target must differ")
    ops = [
        SingleQubit(dec.C, target),
        CX(control, target),
        SingleQubit(dec.B, target),
        CX(control, target),
        SingleQubit(dec.A, target),
    ]
    # The global phase rides on the control line, making the pair exactly controlled-U.
    ops.append(SingleQubit(u1(dec.alpha), control))
    return ops


def controlled_gate_circuit(
    dec: ControlledDecomposition, control: int = 1, target: int = 0, num_qubits: int | None = None
) -> Circuit:
    """Two-CNOT realization of controlled-U; defaults to control on qubit 1."""
    width = num_qubits if num_qubits is not None else max(control, target) + 1
    return Circuit(width, 0, controlled_gate_ops(dec, control, target))


def controlled_matrix(gate: SingleQubitGate, control: int = 1, target: int = 0) -> np.ndarray:
    """4x4 controlled-U in the ``qubit j has weight 2^j`` convention."""
    out = np.eye(4, dtype=np.complex128)
    u = gate.matrix
    for t_in in range(2):
        for t_out in range(2):
            i = (1 << control) | (t_in << target)
            o = (1 << control) | (t_out << target)
            out[o, i] = u[t_out, t_in]
    return out


def unitary_equal(u: np.ndarray, v: np.ndarray, up_to_global_phase: bool = False, tol: float = 1e-10) -> bool:
    u, v = np.asarray(u), np.asarray(v)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    if up_to_global_phase:
        i = np.unravel_index(np.argmax(np.abs(v)), v.shape)
        if abs(v[i]) == 0 or abs(u[i]) == 0:
            return bool(np.max(np.abs(u - v)) <= tol)
        lam = u[i] / v[i]
        v = v * (lam / abs(lam))
    return bool(np.max(np.abs(u - v)) <= tol)


def fragment_unitary(dec: ControlledDecomposition) -> np.ndarray:
    return circuit_unitary(controlled_gate_circuit(dec))
