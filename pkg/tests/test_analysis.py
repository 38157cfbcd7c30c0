import numpy as np
import pytest
from hypothesis import given, strategies as st

from semiqft import analysis
from semiqft.analysis import NoiseModel, compare_semiclassical_vs_standard, fourier_basis_state, run_noisy, sso
from semiqft.qft import count_gates, dft_probabilities
from semiqft.sim import CX, Circuit, Measure, OutcomeDistribution, StateVector, enumerate_branches, total_variation


def _dist(draw, size):
    w = np.array(draw(st.lists(st.floats(0, 1), min_size=size, max_size=size)))
    if w.sum() == 0:
        w[0] = 1
    return w / w.sum()


distributions = st.integers(1, 16).flatmap(lambda k: st.tuples(st.just(k), st.data()))


def test_sso_worked_value():
    assert sso({0: 0.5, 1: 0.5}, {0: 1.0}) == pytest.approx(0.5)


def test_sso_disjoint():
    assert sso({0: 1.0}, {1: 1.0}) == 0


def test_sso_accepts_distributions():
    d = OutcomeDistribution(2, {0: 0.25, 3: 0.75})
    assert sso(d, d) == pytest.approx(1)


def test_sso_mismatched_spaces():
    with pytest.raises(ValueError):
        sso(OutcomeDistribution(1, {0: 1.0}), OutcomeDistribution(2, {0: 1.0}))
    with pytest.raises(ValueError):
        sso(np.ones(2) / 2, np.ones(4) / 4)


@given(distributions)
def test_sso_properties(kd):
    k, data = kd
    m = _dist(data.draw, k)
    e = _dist(data.draw, k)
    g = sso(m, e)
    assert -1e-12 <= g <= 1 + 1e-12
    assert g == pytest.approx(sso(e, m), abs=1e-12)
    assert sso(m, m) == pytest.approx(1, abs=1e-12)


def test_noise_model_validation():
    with pytest.raises(ValueError):
        NoiseModel(1.5)
    with pytest.raises(ValueError):
        NoiseModel(0.1, -0.1)


def test_noiseless_run_matches_enumeration():
    circ = analysis.standard_qft_3()
    psi = StateVector.random(3, np.random.default_rng(0))
    out = run_noisy(circ, psi, NoiseModel(0.0), 50, seed=1)
    assert total_variation(out, enumerate_branches(circ, psi)) <= 1e-12


def test_full_noise_degrades_overlap():
    circ = Circuit(2, 2, [CX(0, 1), Measure(0, 0), Measure(1, 1)])
    psi = StateVector.basis(2, 1)
    ideal = enumerate_branches(circ, psi)
    noisy = run_noisy(circ, psi, NoiseModel(1.0), 2000, seed=2)
    assert sso(noisy, ideal) < 1


def test_run_noisy_is_seeded():
    circ = analysis.semiclassical_qft_3_2()
    psi = fourier_basis_state(3, 5)
    a = run_noisy(circ, psi, NoiseModel(0.1), 500, seed=9)
    b = run_noisy(circ, psi, NoiseModel(0.1), 500, seed=9)
    assert a.probs == b.probs


def test_single_qubit_noise_sites():
    circ = analysis.controlled_r4()
    ens = analysis.trajectory_ensemble(circ, StateVector.basis(2), NoiseModel(0.0, 0.5), 200, seed=3)
    assert ens.distributions.shape[1] == 1  # no measured bits, one trivial outcome
    assert len(analysis._noise_sites(circ, NoiseModel(0.0, 0.5))) == 4


def test_fourier_basis_state_peaks():
    for peak in range(8):
        probs = dft_probabilities(fourier_basis_state(3, peak))
        assert probs[peak] == pytest.approx(1)


def test_circuit_cx_counts():
    assert count_gates(analysis.semiclassical_qft_3_2()).two_qubit == 2
    assert count_gates(analysis.standard_qft_3()).two_qubit == 6
    assert count_gates(analysis.controlled_r4()).two_qubit == 2


def test_compare_noiseless():
    report = compare_semiclassical_vs_standard(NoiseModel(0.0), 100, seed=0)
    assert report.gamma_semiclassical == pytest.approx(1) and report.gamma_standard == pytest.approx(1)
    assert (report.cx_semiclassical, report.cx_standard) == (2, 6)


def test_zero_input_stays_uniform_under_pauli_noise():
    # Every control is a basis state when its gate fires, so Pauli errors cannot unbalance any qubit.
    for circ in (analysis.semiclassical_qft_3_2(), analysis.standard_qft_3()):
        out = run_noisy(circ, StateVector.basis(3), NoiseModel(0.3), 3000, seed=4)
        np.testing.assert_allclose(out.to_array(), np.full(8, 1 / 8), atol=1e-12)


def test_ordering_with_fourier_input():
    report = compare_semiclassical_vs_standard(
        NoiseModel(0.05), 20_000, seed=5, state=fourier_basis_state(3, 5), input_label="fourier:5"
    )
    assert report.gamma_semiclassical > report.gamma_standard
    assert report.margin_in_se() > 3


@pytest.mark.parametrize("circuit", ["semiclassical", "standard"])
def test_overlap_monotone_in_noise(circuit):
    circ = analysis.semiclassical_qft_3_2() if circuit == "semiclassical" else analysis.standard_qft_3()
    psi = fourier_basis_state(3, 5)
    ideal = dft_probabilities(psi)
    gammas = []
    for p in (0.01, 0.05, 0.1):
        gamma, _ = analysis.trajectory_ensemble(circ, psi, NoiseModel(p), 100_000, seed=6).overlap(ideal)
        assert 0 < gamma < 1
        gammas.append(gamma)
    assert gammas == sorted(gammas, reverse=True)


def test_standard_error_shrinks_with_trajectories():
    circ = analysis.standard_qft_3()
    psi = fourier_basis_state(3, 3)
    ideal = dft_probabilities(psi)
    _, se_small = analysis.trajectory_ensemble(circ, psi, NoiseModel(0.05), 1_000, seed=1).overlap(ideal)
    _, se_big = analysis.trajectory_ensemble(circ, psi, NoiseModel(0.05), 100_000, seed=1).overlap(ideal)
    assert se_big < se_small / 5


def test_hardware_references_recorded():
    assert analysis.HARDWARE_REFERENCE_OVERLAPS["semiclassical_qft_3_2"] > analysis.HARDWARE_REFERENCE_OVERLAPS["standard_qft_3"]
