import json
from pathlib import Path

import pytest

from semiqft import __version__, cli

GOLDEN = Path(__file__).parent / "golden"


def run(*argv):
    return cli.parse_and_run(list(argv))


def test_qft_semiclassical_exact():
    doc, code = run("qft", "--n", "3", "--t", "2", "--input", "000", "--exact")
    assert code == 0
    assert doc["distribution"] == {str(c): 0.125 for c in range(8)}
    assert doc["lowered_gate_counts"]["two_qubit"] == 2
    assert doc["request"]["mode"] == "semiclassical"
    assert doc["version"] == __version__


def test_qft_standard_sampled():
    doc, code = run("qft", "--n", "3", "--mode", "standard", "--input", "101", "--shots", "200", "--seed", "4")
    assert code == 0
    assert sum(doc["counts"].values()) == 200
    assert doc["lowered_gate_counts"]["two_qubit"] == 6


def test_qft_noisy_reports_gamma():
    doc, code = run("qft", "--n", "3", "--t", "2", "--input", "random", "--noise-p", "0.05", "--trajectories", "200")
    assert code == 0
    assert 0 < doc["gamma"] <= 1 and doc["gamma_standard_error"] >= 0


def test_bitstrings_are_in_measurement_order():
    doc, _ = run("qft", "--n", "2", "--t", "1", "--input", "00")
    assert doc["bitstrings"]["1"] == "10"


def test_shor_document():
    doc, code = run("shor", "--N", "15", "--x", "11", "--t", "2", "--shots", "1", "--seed", "7")
    assert code == 0
    assert doc["shor"]["c"] in (0, 128)
    assert doc["shor"]["status"] == "success" and doc["shor"]["factors"] == [3, 5]
    assert doc["gate_counts"]["peak_register_width"] == 6


def test_shor_exact_distribution_field():
    doc, _ = run("shor", "--N", "15", "--x", "11", "--exact")
    assert doc["exact_distribution"] == {"0": pytest.approx(0.5), "128": pytest.approx(0.5)}


def test_shor_failure_exit_code():
    doc, code = run("shor", "--N", "15", "--x", "14", "--attempts", "2", "--shots", "2")
    assert code == cli.EXIT_FACTOR_FAILED
    assert doc["shor"]["status"] != "success"


def test_shor_classical_shortcut():
    doc, code = run("shor", "--N", "15", "--x", "6")
    assert code == 0 and doc["shor"]["factors"] == [3, 5] and doc["shor"]["classical"]


def test_decompose_k4():
    doc, code = run("decompose", "--k", "4")
    dec = doc["decomposition"]
    assert code == 0
    assert dec["alpha"] == "pi/16"
    assert (dec["A"], dec["B"], dec["C"]) == ("U1(π/32)", "U1(-π/16)", "U1(π/32)")
    assert max(dec["residual_abc"], dec["residual_rebuild"], dec["residual_controlled"]) <= 1e-12


def test_compare_document():
    doc, code = run("compare", "--noise-p", "0.05", "--trajectories", "500", "--fourier-peak", "5")
    assert code == 0
    cmp_ = doc["comparison"]
    assert (cmp_["cx_semiclassical"], cmp_["cx_standard"]) == (2, 6)
    assert cmp_["gamma_semiclassical"] > cmp_["gamma_standard"]


@pytest.mark.parametrize(
    "argv",
    [
        ("qft", "--n", "3", "--bogus"),
        ("qft", "--n", "3", "--t", "5"),
        ("qft", "--n", "3", "--input", "01"),
        ("qft", "--n", "3", "--shots", "0"),
        ("shor", "--N", "13", "--x", "2"),
        ("decompose", "--k", "0"),
        ("compare", "--noise-p", "2"),
        ("nonsense",),
    ],
)
def test_usage_errors(argv):
    doc, code = run(*argv)
    assert code == cli.EXIT_USAGE and "error" in doc


def test_unknown_flag_includes_help():
    doc, _ = run("qft", "--n", "3", "--bogus")
    assert "usage:" in doc["error"]


def test_capacity_error_exit_code():
    doc, code = run("qft", "--n", "21", "--mode", "standard", "--input", "0" * 21)
    assert code == cli.EXIT_CAPACITY


@pytest.mark.parametrize(
    "argv",
    [
        ("qft", "--n", "4", "--t", "2", "--input", "random", "--shots", "300", "--seed", "11"),
        ("qft", "--n", "3", "--t", "2", "--input", "random", "--noise-p", "0.1", "--trajectories", "300", "--seed", "2"),
        ("shor", "--N", "21", "--x", "2", "--shots", "16", "--seed", "5"),
        ("compare", "--noise-p", "0.05", "--trajectories", "300", "--seed", "8"),
    ],
)
def test_document_determinism(argv):
    a, _ = run(*argv)
    b, _ = run(*argv)
    assert cli.dumps(cli.comparable(a)) == cli.dumps(cli.comparable(b))


def test_document_round_trips_losslessly():
    doc, _ = run("qft", "--n", "4", "--t", "3", "--input", "random", "--seed", "1")
    assert json.loads(cli.dumps(doc)) == doc
    for p in doc["distribution"].values():
        assert float(repr(p)) == p


@pytest.mark.parametrize(
    "name, argv",
    [
        ("decompose_k4.json", ("decompose", "--k", "4")),
        ("qft_3_2_exact.json", ("qft", "--n", "3", "--t", "2", "--input", "000", "--exact")),
    ],
)
def test_golden_documents(name, argv):
    doc, _ = run(*argv)
    assert cli.comparable(doc) == json.loads((GOLDEN / name).read_text())


def test_json_and_qasm_outputs(tmp_path):
    out, q = tmp_path / "doc.json", tmp_path / "circ.qasm"
    doc, code = run("qft", "--n", "3", "--t", "2", "--input", "000", "--json", str(out), "--emit-qasm", str(q))
    assert code == 0
    assert json.loads(out.read_text()) == doc
    assert q.read_text() == (GOLDEN / "semiclassical_qft_3_2.qasm").read_text()


def test_main_prints_document(capsys):
    assert cli.main(["decompose", "--k", "2"]) == 0
    assert json.loads(capsys.readouterr().out)["decomposition"]["alpha"] == "pi/4"


def test_main_reports_errors_on_stderr(capsys):
    assert cli.main(["qft", "--n", "0"]) == cli.EXIT_USAGE
    assert "--n" in capsys.readouterr().err


def test_main_help_exits_zero(capsys):
    assert cli.main(["--help"]) == 0
