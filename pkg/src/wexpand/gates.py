"""The W-state expansion gate.

Wiring (fixed spatial ids): the input photon in mode 1 meets the two-photon
ancilla from mode 2 on a 50:50 beamsplitter whose outputs are mode 3 and
mode 4; a half-wave plate on mode 4 flips the sign of V to compensate the
reflection phase; mode 3 then splits on a second 50:50 beamsplitter (vacuum
auxiliary input, mode 7) into modes 5 and 6.  Success is post-selected on
one photon in each of the output modes 4, 5 and 6, which maps an N-qubit
W state whose accessed qubit enters mode 1 onto the (N+2)-qubit W state
with probability (N+2)/(16N).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .fock import (
    DensityMatrix,
    FockBasisVector,
    PhotonicState,
    mode,
    postselect_qubits,
    qubit_amplitudes,
    tensor,
    H,
    V,
)
from .optics import (
    BeamsplitterSpec,
    JonesElement,
    JonesUnitary,
    REFLECTION_MINUS_ON_OUT_A,
    REFLECTION_MINUS_ON_OUT_B,
    apply_circuit,
)

MODE_INPUT = 1
MODE_ANCILLA = 2
MODE_INTERNAL = 3
MODE_AUX = 7
OUTPUT_MODES = (4, 5, 6)

# Mode ids every gate run expects to find in vacuum.
_GATE_CLEAN_MODES = (MODE_INTERNAL, MODE_AUX) + OUTPUT_MODES


class GateInputError(ValueError):
    """The gate input already holds photons in internal or output modes."""


@dataclass(frozen=True)
class ExpansionGate:
    """Fixed wiring of the expansion gate as an ordered element list."""

    include_sign_plate: bool = True
    elements: tuple = field(init=False)

    def __post_init__(self):
        first_bs = BeamsplitterSpec(
            in_a=MODE_INPUT,
            in_b=MODE_ANCILLA,
            out_a=MODE_INTERNAL,
            out_b=OUTPUT_MODES[0],
            transmissivity=0.5,
            sign_convention=REFLECTION_MINUS_ON_OUT_B,
        )
        second_bs = BeamsplitterSpec(
            in_a=MODE_INTERNAL,
            in_b=MODE_AUX,
            out_a=OUTPUT_MODES[1],
            out_b=OUTPUT_MODES[2],
            transmissivity=0.5,
            sign_convention=REFLECTION_MINUS_ON_OUT_A,
        )
        wiring = [first_bs]
        if self.include_sign_plate:
            wiring.append(JonesElement(OUTPUT_MODES[0], JonesUnitary.v_phase_flip()))
        wiring.append(second_bs)
        object.__setattr__(self, "elements", tuple(wiring))


def run_gate(state: PhotonicState, gate: ExpansionGate | None = None) -> PhotonicState:
    """Propagate a state with photons in modes 1 and 2 through the gate."""
    for spatial in _GATE_CLEAN_MODES:
        for fbv in state.terms:
            if fbv.photons_in_spatial(spatial):
                raise GateInputError(
                    f"gate input must leave mode {spatial} in vacuum"
                )
    if gate is None:
        gate = ExpansionGate()
    return apply_circuit(state, gate.elements)


def w_state_qubits(n: int) -> np.ndarray:
    """The symmetric single-V qubit state of dimension 2^n."""
    if n < 1:
        raise ValueError("W state needs at least one qubit")
    vec = np.zeros(2**n, dtype=complex)
    amp = 1.0 / math.sqrt(n)
    for j in range(n):
        vec[1 << (n - 1 - j)] = amp
    return vec


def photonic_w_state(mode_ids: Sequence[int]) -> PhotonicState:
    """W state embedded as one photon per listed spatial mode."""
    ids = list(mode_ids)
    if not ids:
        raise ValueError("W state needs at least one mode")
    amp = 1.0 / math.sqrt(len(ids))
    terms = {}
    for j, v_mode in enumerate(ids):
        occ = {mode(m, V if m == v_mode else H): 1 for m in ids}
        terms[FockBasisVector.from_occupations(occ)] = amp
    return PhotonicState(terms)


def two_photon_ancilla_state() -> PhotonicState:
    """|2_H> in the ancilla mode (re-exported by the sources module)."""
    from .fock import number_state

    return number_state(MODE_ANCILLA, H, 2)


def untouched_mode_ids(n: int) -> list[int]:
    """Spatial ids of the N-1 W-state photons that never enter the gate.

    Mode 0 comes first (the two-qubit seed keeps its untouched photon
    there); further photons take ids above the gate's wiring range.
    """
    if n < 1:
        raise ValueError("W state needs at least one qubit")
    if n == 1:
        return []
    return [0] + [MODE_AUX + 1 + k for k in range(n - 2)]


def success_probability_analytic(n: int) -> float:
    """Post-selection success probability (N+2)/(16N) for an N-qubit input."""
    if n < 1:
        raise ValueError("W state needs at least one qubit")
    return (n + 2) / (16.0 * n)


def _gate_branch_amplitudes(gate: ExpansionGate) -> tuple[np.ndarray, np.ndarray]:
    """Post-selected three-qubit amplitude maps of the gate for an H and a V
    photon entering mode 1, computed from the full Fock simulation."""
    ancilla = two_photon_ancilla_state()
    branches = []
    for pol in (H, V):
        photon = PhotonicState(
            {FockBasisVector.from_occupations({mode(MODE_INPUT, pol): 1}): 1.0}
        )
        out = run_gate(tensor(photon, ancilla), gate)
        branches.append(qubit_amplitudes(out, OUTPUT_MODES))
    return branches[0], branches[1]


def expand_w(
    n: int, gate: ExpansionGate | None = None
) -> tuple[DensityMatrix, float]:
    """Expand an ideal N-qubit W state into an (N+2)-qubit one.

    The accessed qubit is routed photonically through the gate; the N-1
    untouched qubits never enter the optics and are carried directly as
    polarization qubits, which keeps the state size linear in N.  Output
    qubit order: untouched modes ascending, then the gate outputs 4, 5, 6.
    """
    if n < 1:
        raise ValueError("W state needs at least one qubit")
    if gate is None:
        gate = ExpansionGate()
    branch_h, branch_v = _gate_branch_amplitudes(gate)

    rest = untouched_mode_ids(n)
    n_rest = len(rest)
    out = np.zeros(2 ** (n_rest + 3), dtype=complex)
    amp = 1.0 / math.sqrt(n)
    block = 8  # the three gate-output qubits are the least significant bits
    # V on one of the untouched qubits: the gate sees an H photon.
    for j in range(n_rest):
        rest_index = 1 << (n_rest - 1 - j)
        out[rest_index * block : (rest_index + 1) * block] += amp * branch_h
    # V enters the gate.
    out[0:block] += amp * branch_v

    probability = float(np.vdot(out, out).real)
    qubit_order = rest + list(OUTPUT_MODES)
    return DensityMatrix.from_pure(out, qubit_order), probability


def expand_w_full_photonic(
    n: int, gate: ExpansionGate | None = None
) -> tuple[DensityMatrix | None, float]:
    """Same expansion with every W-state photon represented in Fock space.

    Exponentially heavier than ``expand_w``; used to cross-check it on
    small instances.
    """
    if n < 1:
        raise ValueError("W state needs at least one qubit")
    rest = untouched_mode_ids(n)
    seed = photonic_w_state(rest + [MODE_INPUT])
    state = run_gate(tensor(seed, two_photon_ancilla_state()), gate)
    return postselect_qubits(state, rest + list(OUTPUT_MODES))
