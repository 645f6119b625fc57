import json
import math

import numpy as np
import pytest

from wexpand.fock import (
    DensityMatrix,
    FockBasisVector,
    PhotonicState,
    WiringError,
    apply_annihilation,
    apply_creation,
    coincidence_probability,
    inner_product,
    mode,
    number_state,
    postselect_qubits,
    qubit_amplitudes,
    single_photon,
    tensor,
    vacuum_state,
    ORTHOGONAL,
    PRINCIPAL,
)
from wexpand.gates import photonic_w_state


def random_state(rng, modes, max_photons=2):
    """Random normalized sparse state over the given labels."""
    terms = {}
    for _ in range(4):
        occ = {}
        for lab in modes:
            n = rng.integers(0, max_photons + 1)
            if n:
                occ[lab] = int(n)
        fbv = FockBasisVector.from_occupations(occ)
        terms[fbv] = complex(rng.normal(), rng.normal())
    return PhotonicState(terms).normalized()


def test_creation_on_vacuum():
    state = apply_creation(vacuum_state(), mode(1, "V"))
    assert len(state) == 1
    fbv = FockBasisVector.from_occupations({mode(1, "V"): 1})
    assert state.amplitude(fbv) == pytest.approx(1.0)


def test_creation_bosonic_factor():
    one = single_photon(2, "H")
    two = apply_creation(one, mode(2, "H"))
    fbv = FockBasisVector.from_occupations({mode(2, "H"): 2})
    assert two.amplitude(fbv) == pytest.approx(math.sqrt(2))


def test_double_creation_matches_factorial_normalization():
    # Oracle: |n> = (a^dag)^n / sqrt(n!) |vac>, so two creations on vacuum
    # give sqrt(2!) |2> and normalizing recovers the basis vector exactly.
    state = apply_creation(apply_creation(vacuum_state(), mode(2, "H")), mode(2, "H"))
    assert state.norm() == pytest.approx(math.sqrt(math.factorial(2)))
    normalized = state.normalized()
    expected = number_state(2, "H", 2)
    overlap = inner_product(expected, normalized)
    assert overlap.real == pytest.approx(1.0)


def test_inner_product_basics():
    v1 = single_photon(1, "V")
    assert inner_product(v1, v1) == pytest.approx(1.0)
    assert inner_product(v1, single_photon(1, "H")) == 0.0
    w3 = photonic_w_state([4, 5, 6])
    assert inner_product(w3, w3).real == pytest.approx(1.0)


def test_inner_product_conjugate_linear():
    rng = np.random.default_rng(3)
    labels = [mode(0, "H"), mode(0, "V"), mode(1, "H")]
    for _ in range(10):
        a = random_state(rng, labels)
        b = random_state(rng, labels)
        c = complex(rng.normal(), rng.normal())
        lhs = inner_product(a.scaled(c), b)
        assert lhs == pytest.approx(c.conjugate() * inner_product(a, b))
        rhs = inner_product(a, b.scaled(c))
        assert rhs == pytest.approx(c * inner_product(a, b))
        assert inner_product(a, a).imag == pytest.approx(0.0)
        assert inner_product(a, a).real >= 0


def test_tensor_and_vacuum_identity():
    joint = tensor(single_photon(1, "V"), number_state(2, "H", 2))
    fbv = FockBasisVector.from_occupations({mode(1, "V"): 1, mode(2, "H"): 2})
    assert joint.amplitude(fbv) == pytest.approx(1.0)

    x = tensor(single_photon(1, "V"), vacuum_state())
    assert inner_product(x, single_photon(1, "V")).real == pytest.approx(1.0)


def test_tensor_norm_multiplicative():
    rng = np.random.default_rng(5)
    a = random_state(rng, [mode(0, "H"), mode(0, "V")]).scaled(0.7)
    b = random_state(rng, [mode(1, "H"), mode(1, "V")]).scaled(0.4)
    assert tensor(a, b).norm() == pytest.approx(a.norm() * b.norm())


def test_tensor_overlapping_modes_rejected():
    with pytest.raises(WiringError):
        tensor(single_photon(1, "V"), single_photon(1, "H"))


def test_creations_on_distinct_modes_commute():
    rng = np.random.default_rng(11)
    labels = [mode(0, "H"), mode(1, "V"), mode(2, "H", ORTHOGONAL)]
    for _ in range(20):
        state = random_state(rng, labels)
        la, lb = rng.choice(len(labels), size=2, replace=False)
        ab = apply_creation(apply_creation(state, labels[la]), labels[lb])
        ba = apply_creation(apply_creation(state, labels[lb]), labels[la])
        for fbv, amp in ab.items():
            assert amp == pytest.approx(ba.amplitude(fbv), abs=1e-12)
        assert len(ab) == len(ba)


def test_creation_then_annihilation_is_number_plus_one():
    for n in range(4):
        state = number_state(3, "V", n)
        rebuilt = apply_annihilation(apply_creation(state, mode(3, "V")), mode(3, "V"))
        fbv = next(iter(state.terms))
        assert rebuilt.amplitude(fbv) == pytest.approx(n + 1)


def test_postselect_w3_projector():
    w3 = photonic_w_state([4, 5, 6])
    rho, prob = postselect_qubits(w3, [4, 5, 6])
    assert prob == pytest.approx(1.0)
    # support on VHH (idx 4), HVH (idx 2), HHV (idx 1), all entries 1/3
    expected = np.zeros((8, 8))
    for i in (1, 2, 4):
        for j in (1, 2, 4):
            expected[i, j] = 1 / 3
    assert np.allclose(rho.matrix, expected, atol=1e-12)


def test_postselect_missing_photon_flags_empty():
    state = tensor(single_photon(4, "H"), single_photon(6, "V"))
    rho, prob = postselect_qubits(state, [4, 5, 6])
    assert rho is None
    assert prob == 0.0


def test_postselect_empty_mode_list_rejected():
    with pytest.raises(ValueError):
        postselect_qubits(vacuum_state(), [])


def test_postselect_distinguishable_bins_gives_classical_marginal():
    # (|H_p V_o> + |V_o H_p>)/sqrt(2) over modes 4, 5: the bin patterns of
    # the two branches never meet, so the qubit marginal must be diagonal.
    f1 = FockBasisVector.from_occupations(
        {mode(4, "H", PRINCIPAL): 1, mode(5, "V", ORTHOGONAL): 1}
    )
    f2 = FockBasisVector.from_occupations(
        {mode(4, "V", ORTHOGONAL): 1, mode(5, "H", PRINCIPAL): 1}
    )
    state = PhotonicState({f1: 1 / math.sqrt(2), f2: 1 / math.sqrt(2)})
    rho, prob = postselect_qubits(state, [4, 5])
    assert prob == pytest.approx(1.0)

    # Oracle: dense partial trace over the bin factor of each photon.
    # Order the one-photon mode basis as (pol, bin) per spatial mode.
    def dense_index(pol, tbin):
        return {"H": 0, "V": 1}[pol] * 2 + {PRINCIPAL: 0, ORTHOGONAL: 1}[tbin]

    psi = np.zeros(16, dtype=complex)
    psi[dense_index("H", PRINCIPAL) * 4 + dense_index("V", ORTHOGONAL)] = 1 / math.sqrt(2)
    psi[dense_index("V", ORTHOGONAL) * 4 + dense_index("H", PRINCIPAL)] = 1 / math.sqrt(2)
    full = np.outer(psi, psi.conj()).reshape(2, 2, 2, 2, 2, 2, 2, 2)
    # axes: pol4, bin4, pol5, bin5 (ket), then the same four (bra)
    oracle = np.trace(full, axis1=1, axis2=5)   # trace bin4 -> (p4,p5,b5,p4',p5',b5')
    oracle = np.trace(oracle, axis1=2, axis2=5)  # trace bin5 -> (p4,p5,p4',p5')
    oracle = oracle.reshape(4, 4)
    assert np.allclose(rho.matrix, oracle, atol=1e-12)
    assert np.allclose(rho.matrix, np.diag(np.diag(rho.matrix)), atol=1e-12)


def test_postselect_probability_matches_term_filter():
    rng = np.random.default_rng(23)
    labels = [
        mode(4, "H"),
        mode(4, "V"),
        mode(5, "H", ORTHOGONAL),
        mode(5, "V"),
        mode(6, "H"),
    ]
    for _ in range(10):
        state = random_state(rng, labels, max_photons=1)
        rho, prob = postselect_qubits(state, [4, 5])
        # Independent filter: keep exactly-one-photon-per-mode terms.
        expected = 0.0
        for fbv, amp in state.items():
            if (
                fbv.photons_in_spatial(4) == 1
                and fbv.photons_in_spatial(5) == 1
                and fbv.total_photons() == 2
            ):
                expected += abs(amp) ** 2
        assert prob == pytest.approx(expected, abs=1e-12)
        if rho is not None:
            rho.validate()


def test_qubit_amplitudes_pure_projection():
    w3 = photonic_w_state([4, 5, 6])
    amps = qubit_amplitudes(w3, [4, 5, 6])
    assert amps[4] == pytest.approx(1 / math.sqrt(3))  # VHH
    assert amps[2] == pytest.approx(1 / math.sqrt(3))  # HVH
    assert amps[1] == pytest.approx(1 / math.sqrt(3))  # HHV


def test_qubit_amplitudes_rejects_mixed_bins():
    f1 = FockBasisVector.from_occupations(
        {mode(4, "H", PRINCIPAL): 1, mode(5, "V", ORTHOGONAL): 1}
    )
    f2 = FockBasisVector.from_occupations(
        {mode(4, "V", ORTHOGONAL): 1, mode(5, "H", PRINCIPAL): 1}
    )
    state = PhotonicState({f1: 1 / math.sqrt(2), f2: 1 / math.sqrt(2)})
    with pytest.raises(ValueError):
        qubit_amplitudes(state, [4, 5])


def test_coincidence_probability_threshold():
    state = PhotonicState(
        {
            FockBasisVector.from_occupations({mode(0, "H"): 2, mode(4, "H"): 1}): 0.6,
            FockBasisVector.from_occupations({mode(0, "H"): 1}): 0.8,
        }
    )
    assert coincidence_probability(state, [0]) == pytest.approx(1.0)
    assert coincidence_probability(state, [0, 4]) == pytest.approx(0.36)
    assert coincidence_probability(state, [0], min_photons=2) == pytest.approx(0.36)


def test_density_matrix_json_round_trip():
    w3 = photonic_w_state([4, 5, 6])
    rho, _ = postselect_qubits(w3, [4, 5, 6])
    doc = rho.to_json()
    assert set(doc) == {"dim", "qubit_order", "re", "im"}
    assert doc["dim"] == 8
    assert doc["qubit_order"] == [4, 5, 6]
    again = DensityMatrix.from_json(json.loads(json.dumps(doc)))
    assert np.allclose(again.matrix, rho.matrix)
    assert again.qubit_order == rho.qubit_order


def test_mode_label_validation():
    with pytest.raises(ValueError):
        mode(-1, "H")
    with pytest.raises(ValueError):
        mode(0, "X")
    with pytest.raises(ValueError):
        mode(0, "H", "weird")


def test_amplitude_pruning():
    state = PhotonicState({FockBasisVector(): 1e-16})
    assert len(state) == 0
