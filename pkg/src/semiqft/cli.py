"""Command-line front end.

Exit codes: 0 success, 2 usage error, 3 capacity error, 4 factoring failed.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, analysis, gates, qasm, shor
from .dyadic import format_angle, to_radians
from .qft import build_standard_qft, count_gates, dft_probabilities, lower_to_hardware_gates
from .semiclassical import (
    build_semiclassical_circuit,
    plan_blocks,
    recycled_execution_ledger,
    run_semiclassical,
)
from .sim import CapacityError, OutcomeDistribution, StateVector, enumerate_branches, sample

EXIT_OK, EXIT_USAGE, EXIT_CAPACITY, EXIT_FACTOR_FAILED = 0, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{message}\n\n{self.format_help()}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="semiqft", description="Semiclassical QFT and Shor order-finding simulator.")
    parser.add_argument("--version", action="version", version=f"semiqft {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("qft", help="run a standard or semiclassical QFT")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--mode", choices=("standard", "semiclassical"))
    p.add_argument("--t", type=int, help="block width (semiclassical mode)")
    p.add_argument("--input", default=None, help="bitstring, most significant qubit first, or 'random'")
    how = p.add_mutually_exclusive_group()
    how.add_argument("--exact", action="store_true", help="exact distribution (default)")
    how.add_argument("--shots", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise-p", type=float, help="two-qubit depolarizing probability")
    p.add_argument("--trajectories", type=int, default=2000)
    p.add_argument("--emit-qasm", metavar="PATH")
    p.add_argument("--json", metavar="PATH")

    p = sub.add_parser("shor", help="factor N by semiclassical order finding")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--x", type=int, required=True)
    p.add_argument("--t", type=int, default=2)
    p.add_argument("--shots", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--attempts", type=int, default=10)
    p.add_argument("--exact", action="store_true", help="also report the exact distribution")
    p.add_argument("--compiled", action="store_true", help="use the compiled 11*y mod 15 multiplier")
    p.add_argument("--json", metavar="PATH")

    p = sub.add_parser("decompose", help="two-CNOT controlled-R_k construction")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--emit-qasm", metavar="PATH")
    p.add_argument("--json", metavar="PATH")

    p = sub.add_parser("compare", help="semiclassical vs standard QFT over Z_8 under noise")
    p.add_argument("--noise-p", type=float, required=True)
    p.add_argument("--trajectories", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--input", default="000", help="3-bit input bitstring")
    p.add_argument("--fourier-peak", type=int, help="use the input whose ideal output is |peak>")
    p.add_argument("--json", metavar="PATH")
    return parser


# ---------------------------------------------------------------------------
# Result documents


def distribution_fields(dist: OutcomeDistribution) -> dict:
    """Outcome map keyed by decimal ``c``; bitstrings list ``c_0 c_1 ...`` in measurement order."""
    out = {
        "distribution": {str(c): float(p) for c, p in sorted(dist.probs.items())},
        "bitstrings": {str(c): format(c, f"0{dist.n}b")[::-1] for c in sorted(dist.probs)},
    }
    if dist.counts is not None:
        out["counts"] = {str(c): int(k) for c, k in sorted(dist.counts.items())}
    return out


def ledger_fields(ledger) -> dict:
    return {
        "single_qubit": ledger.single_qubit,
        "two_qubit": ledger.two_qubit,
        "two_qubit_with_swaps": ledger.two_qubit_with_swaps,
        "measurements": ledger.measurements,
        "resets": ledger.resets,
        "peak_register_width": ledger.peak_register_width,
        "steps": ledger.steps,
    }


def new_document(command: str, request: dict) -> dict:
    return {
        "tool": "semiqft",
        "version": __version__,
        "command": command,
        "request": request,
        "seed": request.get("seed"),
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
    }


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True)


def comparable(doc: dict) -> dict:
    """Document without fields that legitimately differ between identical runs."""
    return {k: v for k, v in doc.items() if k != "timestamp"}


# ---------------------------------------------------------------------------
# Commands


def _input_state(text: str | None, n: int, seed: int) -> tuple[StateVector, str]:
    if text is None:
        return StateVector.basis(n, 0), "0" * n
    if text == "random":
        return StateVector.random(n, np.random.default_rng(seed)), "random"
    if len(text) != n or set(text) - {"0", "1"}:
        raise UsageError(f"--input must be 'random' or a {n}-character bitstring, got {text!r}")
    return StateVector.from_bitstring(text), text


def _cmd_qft(args) -> tuple[dict, int]:
    n = args.n
    if n < 1:
        raise UsageError("--n must be >= 1")
    mode = args.mode or ("semiclassical" if args.t is not None else "standard")
    t = args.t if args.t is not None else n
    if mode == "semiclassical" and not 1 <= t <= n:
        raise UsageError(f"--t must lie in [1, {n}]")
    if args.shots is not None and args.shots < 1:
        raise UsageError("--shots must be >= 1")
    state, label = _input_state(args.input, n, args.seed)
    request = {"n": n, "mode": mode, "t": t if mode == "semiclassical" else None, "input": label,
               "shots": args.shots, "seed": args.seed, "noise_p": args.noise_p}
    doc = new_document("qft", request)

    if mode == "semiclassical":
        plan = plan_blocks(n, t)
        circuit = build_semiclassical_circuit(plan)
        doc["recycled_ledger"] = ledger_fields(recycled_execution_ledger(plan))
    else:
        circuit = build_standard_qft(n)
    lowered = lower_to_hardware_gates(circuit)
    doc["gate_counts"] = ledger_fields(count_gates(circuit))
    doc["lowered_gate_counts"] = ledger_fields(count_gates(lowered))

    if args.noise_p is not None:
        noise = analysis.NoiseModel(args.noise_p)
        ens = analysis.trajectory_ensemble(lowered, state, noise, args.trajectories, args.seed)
        dist = OutcomeDistribution.from_array(ens.mean(), n)
        gamma, se = ens.overlap(dft_probabilities(state))
        doc["gamma"] = gamma
        doc["gamma_standard_error"] = se
        doc["trajectories"] = args.trajectories
    elif mode == "semiclassical":
        if args.shots:
            dist = run_semiclassical(state, plan, "sample", args.shots, args.seed)
        else:
            dist = run_semiclassical(state, plan)
    elif args.shots:
        dist = sample(circuit, state, args.shots, args.seed)
    else:
        dist = enumerate_branches(circuit, state)
    doc.update(distribution_fields(dist))
    if args.emit_qasm:
        qasm.emit_qasm(lowered, args.emit_qasm)
        doc["qasm_path"] = str(args.emit_qasm)
    return doc, EXIT_OK


def _outcome_fields(out: shor.ShorOutcome) -> dict:
    return {
        "c": out.c,
        "convergent": list(out.convergent) if out.convergent else None,
        "order": out.order,
        "factors": sorted(out.factors) if out.factors else None,
        "status": out.status,
        "attempts": out.attempts,
    }


def _cmd_shor(args) -> tuple[dict, int]:
    request = {"N": args.N, "x": args.x, "t": args.t, "shots": args.shots, "seed": args.seed,
               "attempts": args.attempts, "compiled": args.compiled}
    doc = new_document("shor", request)
    shortcut = shor.classical_shortcut(args.N, args.x)
    if shortcut is not None:
        doc["shor"] = _outcome_fields(shortcut)
        doc["shor"]["classical"] = True
        return doc, EXIT_OK
    if args.shots < 1 or args.attempts < 1:
        raise UsageError("--shots and --attempts must be >= 1")
    try:
        cfg = shor.ShorConfig(args.N, args.x, args.t)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    report = shor.factor_report(cfg, args.shots, args.seed, args.attempts, args.compiled)
    doc["shor"] = _outcome_fields(report.outcome)
    doc["config"] = {"n": cfg.n, "work_qubits": cfg.work_qubits}
    doc["gate_counts"] = ledger_fields(shor.order_finding_ledger(cfg))
    doc.update(distribution_fields(report.distributions[-1]))
    if args.exact:
        exact = shor.run_order_finding(cfg, compiled=args.compiled)
        doc["exact_distribution"] = {str(c): p for c, p in sorted(exact.probs.items())}
    return doc, EXIT_OK if report.outcome.success else EXIT_FACTOR_FAILED


def _cmd_decompose(args) -> tuple[dict, int]:
    try:
        target = gates.r_k(args.k)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    dec = gates.decompose_phase_gate(target)
    abc_res, rebuild_res = dec.residuals()
    frag = gates.controlled_gate_circuit(dec)
    from .sim import circuit_unitary

    frag_res = float(np.max(np.abs(circuit_unitary(frag) - gates.controlled_matrix(target))))
    doc = new_document("decompose", {"k": args.k})
    doc["decomposition"] = {
        "target": target.label,
        "alpha": format_angle(dec.alpha),
        "alpha_radians": to_radians(dec.alpha),
        "A": dec.A.label,
        "B": dec.B.label,
        "C": dec.C.label,
        "residual_abc": abc_res,
        "residual_rebuild": rebuild_res,
        "residual_controlled": frag_res,
    }
    doc["gate_counts"] = ledger_fields(count_gates(frag))
    if args.emit_qasm:
        qasm.emit_qasm(frag, args.emit_qasm)
        doc["qasm_path"] = str(args.emit_qasm)
    return doc, EXIT_OK


def _cmd_compare(args) -> tuple[dict, int]:
    if args.trajectories < 1:
        raise UsageError("--trajectories must be >= 1")
    try:
        noise = analysis.NoiseModel(args.noise_p)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if args.fourier_peak is not None:
        if not 0 <= args.fourier_peak < 8:
            raise UsageError("--fourier-peak must lie in [0, 8)")
        state, label = analysis.fourier_basis_state(3, args.fourier_peak), f"fourier:{args.fourier_peak}"
    else:
        state, label = _input_state(args.input, 3, args.seed)
    report = analysis.compare_semiclassical_vs_standard(noise, args.trajectories, args.seed, state, label)
    doc = new_document("compare", {"noise_p": args.noise_p, "trajectories": args.trajectories,
                                   "seed": args.seed, "input": label})
    doc["comparison"] = {
        "gamma_semiclassical": report.gamma_semiclassical,
        "gamma_standard": report.gamma_standard,
        "se_semiclassical": report.se_semiclassical,
        "se_standard": report.se_standard,
        "margin_in_se": report.margin_in_se() if math.isfinite(report.margin_in_se()) else None,
        "cx_semiclassical": report.cx_semiclassical,
        "cx_standard": report.cx_standard,
        "hardware_reference": report.reference,
    }
    return doc, EXIT_OK


_COMMANDS = {"qft": _cmd_qft, "shor": _cmd_shor, "decompose": _cmd_decompose, "compare": _cmd_compare}


def _error_document(code: int, message: str) -> dict:
    return {"tool": "semiqft", "version": __version__, "error": message, "exit_code": code}


def parse_and_run(argv=None) -> tuple[dict, int]:
    """Run one command and return ``(document, exit code)``.

    Failures come back as a document with an ``error`` field rather than an exception.
    """
    try:
        args = build_parser().parse_args(argv)
        doc, code = _COMMANDS[args.command](args)
    except UsageError as exc:
        return _error_document(EXIT_USAGE, str(exc)), EXIT_USAGE
    except CapacityError as exc:
        return _error_document(EXIT_CAPACITY, str(exc)), EXIT_CAPACITY
    except ValueError as exc:
        return _error_document(EXIT_USAGE, str(exc)), EXIT_USAGE
    if args.json:
        Path(args.json).write_text(dumps(doc) + "\n")
    return doc, code


def main(argv=None) -> int:
    try:
        doc, code = parse_and_run(argv)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    if "error" in doc:
        print(doc["error"], file=sys.stderr)
    else:
        print(dumps(doc))
    return code


if __name__ == "__main__":
    sys.exit(main())
