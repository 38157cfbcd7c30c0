"""Emit and parse a small QASM-2.0 dialect for the hardware gate set.

Every classical bit gets its own 1-bit register ``c<j>`` so feedback can test
a single bit: ``if(c0==1) u1(pi/2) q[1];``.
"""

from __future__ import annotations

import re
from fractions import Fraction
from pathlib import Path

from . import gates
from .dyadic import DyadicPhase, format_angle
from .sim import CX, Circuit, ConditionedPhase, Measure, Reset, SingleQubit

HEADER = 'OPENQASM 2.0;\ninclude "qelib1.inc";\n'


class QasmError(ValueError):
    pass


def _gate_line(gate: gates.SingleQubitGate, q: int) -> str:
    fmt = format_angle
    if gate.name in ("h", "s", "t"):
        return f"{gate.name} q[{q}];"
    if gate.name == "u1":
        return f"u1({fmt(gate.params[0])}) q[{q}];"
    if gate.name == "u2":
        lam, phi = gate.params
        return f"u2({fmt(phi)},{fmt(lam)}) q[{q}];"
    if gate.name == "u3":
        theta, lam, phi = gate.params
        return f"u3({fmt(theta)},{fmt(phi)},{fmt(lam)}) q[{q}];"
    raise QasmError(f"gate {gate.label} is not in the hardware vocabulary; lower the circuit first")


def to_qasm(circuit: Circuit) -> str:
    lines = [HEADER.rstrip("\n")]
    if circuit.num_qubits:
        lines.append(f"qreg q[{circuit.num_qubits}];")
    lines.extend(f"creg c{j}[1];" for j in range(circuit.num_clbits))
    for op in circuit.ops:
        if isinstance(op, SingleQubit):
            lines.append(_gate_line(op.gate, op.target))
        elif isinstance(op, CX):
            lines.append(f"cx q[{op.control}],q[{op.target}];")
        elif isinstance(op, Measure):
            lines.append(f"measure q[{op.target}] -> c{op.clbit}[0];")
        elif isinstance(op, Reset):
            lines.append(f"reset q[{op.target}];")
        elif isinstance(op, ConditionedPhase):
            if len(op.condition) != 1:
                raise QasmError("conditionals must test exactly one classical bit")
            (bit, value), = op.condition
            lines.append(f"if(c{bit}=={value}) u1({format_angle(op.phase.half_turns())}) q[{op.target}];")
        else:
            raise QasmError(f"{type(op).__name__} is not expressible; lower the circuit first")
    return "\n".join(lines) + "\n"


def emit_qasm(circuit: Circuit, path) -> str:
    text = to_qasm(circuit)
    Path(path).write_text(text)
    return text


_PI_RE = re.compile(r"^(-)?(?:(\d+)\*)?pi(?:/(\d+))?$")
_NUM_RE = re.compile(r"^-?(\d+(\.\d*)?|\.\d+)([eE][-+]?\d+)?$")


def _angle(text: str, lineno: int):
    s = text.replace(" ", "")
    m = _PI_RE.match(s)
    if m:
        sign, num, den = m.groups()
        value = Fraction(int(num or 1), int(den or 1))
        return -value if sign else value
    if s in ("0", "-0"):
        return Fraction(0)
    if _NUM_RE.match(s):
        return float(s)
    raise QasmError(f"line {lineno}: cannot parse angle {text!r}")


_QUBIT = r"q\[(\d+)\]"
_PATTERNS = [
    ("qreg", re.compile(r"^qreg\s+q\[(\d+)\]$")),
    ("creg", re.compile(r"^creg\s+(\w+)\[1\]$")),
    ("cx", re.compile(rf"^cx\s+{_QUBIT}\s*,\s*{_QUBIT}$")),
    ("measure", re.compile(rf"^measure\s+{_QUBIT}\s*->\s*(\w+)\[0\]$")),
    ("reset", re.compile(rf"^reset\s+{_QUBIT}$")),
    ("if", re.compile(rf"^if\s*\(\s*(\w+)\s*==\s*([01])\s*\)\s*u1\s*\(([^)]*)\)\s*{_QUBIT}$")),
    ("gate", re.compile(rf"^(h|s|t|u1|u2|u3)\s*(?:\(([^)]*)\))?\s*{_QUBIT}$")),
]


def parse_qasm_text(text: str) -> Circuit:
    num_qubits = 0
    cregs: dict = {}
    ops = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("//", 1)[0]
        for stmt in line.split(";"):
            stmt = " ".join(stmt.split())
            if not stmt or stmt.startswith("OPENQASM") or stmt.startswith("include"):
                continue
            for kind, pat in _PATTERNS:
                m = pat.match(stmt)
                if m:
                    break
            else:
                word = stmt.split("(")[0].split()[0]
                raise QasmError(f"line {lineno}: unsupported instruction {word!r}")
            g = m.groups()
            if kind == "qreg":
                num_qubits = int(g[0])
            elif kind == "creg":
                cregs[g[0]] = len(cregs)
            elif kind == "cx":
                ops.append(CX(int(g[0]), int(g[1])))
            elif kind == "measure":
                ops.append(Measure(int(g[0]), _creg(cregs, g[1], lineno)))
            elif kind == "reset":
                ops.append(Reset(int(g[0])))
            elif kind == "if":
                angle = _angle(g[2], lineno)
                if not isinstance(angle, Fraction):
                    raise QasmError(f"line {lineno}: conditional phase must be a dyadic multiple of pi")
                phase = DyadicPhase.from_fraction((angle / 2) % 1)
                ops.append(ConditionedPhase(((_creg(cregs, g[0], lineno), int(g[1])),), phase, int(g[3])))
            else:
                name, args, q = g
                params = [_angle(a, lineno) for a in args.split(",")] if args else []
                ops.append(SingleQubit(_build_gate(name, params, lineno), int(q)))
    try:
        return Circuit(num_qubits, len(cregs), ops)
    except ValueError as exc:
        raise QasmError(str(exc)) from exc


def _creg(cregs: dict, name: str, lineno: int) -> int:
    if name not in cregs:
        raise QasmError(f"line {lineno}: undeclared classical register {name!r}")
    return cregs[name]


def _build_gate(name: str, params: list, lineno: int) -> gates.SingleQubitGate:
    expected = {"h": 0, "s": 0, "t": 0, "u1": 1, "u2": 2, "u3": 3}[name]
    if len(params) != expected:
        raise QasmError(f"line {lineno}: {name} takes {expected} parameters, got {len(params)}")
    if name == "u1":
        return gates.u1(params[0])
    if name == "u2":
        phi, lam = params
        return gates.u2(lam, phi)
    if name == "u3":
        theta, phi, lam = params
        return gates.u3(theta, lam, phi)
    return {"h": gates.H, "s": gates.S, "t": gates.T}[name]


def parse_qasm(path) -> Circuit:
    return parse_qasm_text(Path(path).read_text())
