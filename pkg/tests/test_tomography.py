import numpy as np
import pytest

from wexpand.fock import DensityMatrix
from wexpand.gates import w_state_qubits
from wexpand.tomography import (
    CountRecord,
    bootstrap_errors,
    counts_from_csv,
    counts_to_csv,
    default_settings,
    exact_counts,
    expected_probability,
    fidelity,
    flux_for_typical_count,
    imlm_reconstruct,
    sample_counts,
    setting_from_string,
    setting_projector,
)

W3 = w_state_qubits(3)
RHO_W3 = DensityMatrix.from_pure(W3, [4, 5, 6])
SETTINGS_3 = default_settings(3)


def trace_distance(a, b):
    eigs = np.linalg.eigvalsh(a - b)
    return 0.5 * np.abs(eigs).sum()


def random_density(rng, dim, rank=None):
    rank = rank or dim
    x = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = x @ x.conj().T
    return rho / np.trace(rho).real


def test_default_settings_counts():
    assert len(SETTINGS_3) == 64
    assert len(default_settings(4)) == 256
    assert len(default_settings(2)) == 16
    assert all(len(s) == 3 for s in SETTINGS_3)


def test_projector_identities():
    d = setting_projector(("D",))
    assert np.allclose(d, 0.5 * np.array([[1, 1], [1, 1]]))
    r = setting_projector(("R",))
    assert np.allclose(r, 0.5 * np.array([[1, 1j], [-1j, 1]]))
    l = setting_projector(("L",))
    assert np.allclose(l, 0.5 * np.array([[1, -1j], [1j, 1]]))


def test_expected_probabilities_for_w3():
    assert expected_probability(RHO_W3, ("V", "H", "H")) == pytest.approx(1 / 3)
    assert expected_probability(RHO_W3, ("V", "V", "V")) == pytest.approx(0.0)
    mixed = DensityMatrix(np.eye(8) / 8, [0, 1, 2])
    for setting in (("H", "D", "R"), ("V", "V", "L")):
        assert expected_probability(mixed, setting) == pytest.approx(1 / 8)


def test_expected_probability_dimension_mismatch():
    with pytest.raises(ValueError):
        expected_probability(RHO_W3, ("H", "V"))


def test_sample_counts_deterministic_and_zero_prob():
    a = sample_counts(RHO_W3, SETTINGS_3, 104.0, seed=9)
    b = sample_counts(RHO_W3, SETTINGS_3, 104.0, seed=9)
    assert [r.count for r in a] == [r.count for r in b]
    vvv = [r for r in a if r.setting == ("V", "V", "V")]
    assert vvv[0].count == 0


def test_sample_counts_poisson_mean():
    # Oracle: Poisson statistics; the empirical mean over many draws stays
    # within 3 sigma of flux * probability.
    flux, p = 50.0, 1 / 3
    draws = [
        sample_counts(RHO_W3, [("V", "H", "H")], flux, seed)[0].count
        for seed in range(400)
    ]
    mean = np.mean(draws)
    sigma = np.sqrt(flux * p / len(draws))
    assert abs(mean - flux * p) < 3 * sigma


def test_imlm_exact_w3_counts():
    counts = exact_counts(RHO_W3, SETTINGS_3, 104.0)
    result = imlm_reconstruct(counts, SETTINGS_3)
    assert fidelity(result.rho, W3) >= 0.999
    assert result.converged


def test_imlm_recovers_maximally_mixed():
    mixed = DensityMatrix(np.eye(8) / 8, [0, 1, 2])
    counts = exact_counts(mixed, SETTINGS_3, 104.0)
    result = imlm_reconstruct(counts, SETTINGS_3)
    assert trace_distance(result.rho.matrix, mixed.matrix) < 0.01


def test_imlm_single_qubit_pure_state():
    settings = default_settings(1)
    result = imlm_reconstruct([100, 0, 50, 50], settings)
    assert fidelity(result.rho, np.array([1.0, 0.0])) >= 0.999


def test_reconstruction_result_serialization():
    result = imlm_reconstruct([100, 0, 50, 50], default_settings(1))
    doc = result.to_json()
    assert doc["density_matrix"]["dim"] == 2
    assert doc["converged"] is True
    assert doc["iterations"] == result.iterations
    assert doc["bootstrap"] is None


def test_imlm_loglik_nondecreasing_on_random_counts():
    rng = np.random.default_rng(31)
    settings = default_settings(2)
    for _ in range(10):
        rho = DensityMatrix(random_density(rng, 4), [0, 1])
        counts = sample_counts(rho, settings, 80.0, seed=int(rng.integers(1 << 31)))
        result = imlm_reconstruct(counts, settings, max_iter=3000)
        diffs = np.diff(result.loglik_history)
        assert (diffs >= 0).all()


def test_imlm_fixed_point_on_full_rank_states():
    # The iteration trajectory depends only on the relative frequencies, so
    # exact probabilities are fed at a realistic count scale where the
    # absolute log-likelihood-gain threshold is meaningfully tight.
    rng = np.random.default_rng(37)
    for trial in range(4):
        for n, dim in ((2, 4), (3, 8)):
            settings = default_settings(n)
            rho = random_density(rng, dim)
            counts = exact_counts(DensityMatrix(rho, list(range(n))), settings, 1e4)
            result = imlm_reconstruct(counts, settings, max_iter=5000)
            assert trace_distance(result.rho.matrix, rho) < 1e-3


def test_imlm_output_physical():
    rng = np.random.default_rng(41)
    settings = default_settings(2)
    for seed in range(5):
        rho = DensityMatrix(random_density(rng, 4, rank=2), [0, 1])
        counts = sample_counts(rho, settings, 30.0, seed=seed)
        result = imlm_reconstruct(counts, settings)
        result.rho.validate()
        eigs = np.linalg.eigvalsh(result.rho.matrix)
        assert eigs.min() >= -1e-10
        assert np.trace(result.rho.matrix).real == pytest.approx(1.0, abs=1e-9)


def test_imlm_rejects_incomplete_settings():
    settings = [("H", "H"), ("H", "V"), ("V", "H"), ("V", "V")]
    with pytest.raises(ValueError):
        imlm_reconstruct([10, 10, 10, 10], settings)


def test_imlm_rejects_empty_data():
    with pytest.raises(ValueError):
        imlm_reconstruct([0] * 64, SETTINGS_3)


def test_fidelity_reference_values():
    assert fidelity(RHO_W3, W3) == pytest.approx(1.0)
    mixed = DensityMatrix(np.eye(8) / 8, [0, 1, 2])
    assert fidelity(mixed, W3) == pytest.approx(1 / 8)
    with pytest.raises(ValueError):
        fidelity(mixed, w_state_qubits(2))


def test_fidelity_invariant_under_common_reordering():
    rng = np.random.default_rng(43)
    rho = random_density(rng, 8)
    perm = [2, 0, 1]
    # reorder qubits of both the state and the target identically
    tensor = rho.reshape([2] * 6)
    axes = perm + [3 + p for p in perm]
    rho_perm = tensor.transpose(axes).reshape(8, 8)
    target = w_state_qubits(3)
    target_perm = target.reshape(2, 2, 2).transpose(perm).reshape(8)
    assert fidelity(rho, target) == pytest.approx(fidelity(rho_perm, target_perm))


def test_flux_for_typical_count():
    flux = flux_for_typical_count(RHO_W3, SETTINGS_3, 104.0)
    mean_count = np.mean(
        [flux * expected_probability(RHO_W3, s) for s in SETTINGS_3]
    )
    assert mean_count == pytest.approx(104.0)


def test_bootstrap_deterministic_and_small_at_high_flux():
    settings = default_settings(2)
    rho = DensityMatrix.from_pure(w_state_qubits(2), [0, 1])
    counts = exact_counts(rho, settings, 1e7)
    kwargs = dict(seed=5, target=w_state_qubits(2), max_iter=2000)
    errs_a = bootstrap_errors(counts, settings, 8, **kwargs)
    errs_b = bootstrap_errors(counts, settings, 8, **kwargs)
    assert errs_a == errs_b
    # relative Poisson noise ~ 1/sqrt(1e7 p): errors collapse toward zero
    assert errs_a["fidelity"] < 1e-3
    assert abs(errs_a["witness"]) < 1e-2


def test_bootstrap_experiment_scale_error_order():
    flux = flux_for_typical_count(RHO_W3, SETTINGS_3, 104.0)
    counts = sample_counts(RHO_W3, SETTINGS_3, flux, seed=7)
    errs = bootstrap_errors(counts, SETTINGS_3, 25, seed=11, target=W3)
    # order-of-magnitude agreement with the quoted +/- 0.042
    assert 0.0042 <= errs["fidelity"] <= 0.42


def test_count_records_and_csv_round_trip(tmp_path):
    with pytest.raises(ValueError):
        CountRecord(("H",), -1)
    records = sample_counts(RHO_W3, SETTINGS_3[:8], 104.0, seed=3, seconds=5220.0)
    path = tmp_path / "counts.csv"
    counts_to_csv(records, path)
    loaded = counts_from_csv(path)
    assert [r.setting for r in loaded] == [r.setting for r in records]
    assert [r.count for r in loaded] == [float(r.count) for r in records]
    assert loaded[0].seconds == 5220.0
    assert setting_from_string("HDR") == ("H", "D", "R")
