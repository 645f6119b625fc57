"""Photon-source models and the two-photon interference scan.

Covers the ideal two-photon Fock ancilla, the weak coherent pulse (WCP)
that stands in for it experimentally, the down-conversion pair source, and
the delay scan that maps out the Hong-Ou-Mandel dip at the gate's first
beamsplitter.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Sequence

from .fock import (
    FockBasisVector,
    PhotonicState,
    coincidence_probability,
    mode,
    number_state,
    tensor,
    vacuum_state,
    H,
    V,
)
from .gates import MODE_ANCILLA, MODE_INPUT, run_gate
from .optics import apply_delay


@dataclass
class SourceParams:
    """Knobs of the experimental sources.

    nu                mean photon number of the weak coherent pulse
    gamma             pair-emission probability per pulse of the SPDC source
    n_max             Fock truncation of the coherent pulse
    coherence_length  1/e half-width of the coincidence dip, in micrometers
    overlap           static mode overlap at zero delay (1 = perfectly matched)
    """

    nu: float = 0.3
    gamma: float = 0.05
    n_max: int = 4
    coherence_length: float = 144.0
    overlap: float = 1.0

    def __post_init__(self):
        if self.nu < 0:
            raise ValueError("mean photon number must be nonnegative")
        if self.gamma < 0:
            raise ValueError("pair probability must be nonnegative")
        if self.n_max < 2:
            raise ValueError("coherent-pulse truncation must keep at least 2 photons")
        if not 0.0 <= self.overlap <= 1.0:
            raise ValueError("overlap must lie in [0, 1]")
        if self.coherence_length <= 0:
            raise ValueError("coherence length must be positive")
        if self.gamma > 0 and self.nu > 0 and self.gamma >= self.nu:
            warnings.warn(
                "pair rate gamma should be well below the coherent-pulse "
                "mean photon number nu",
                stacklevel=2,
            )


def two_photon_ancilla(spatial_mode: int = MODE_ANCILLA) -> PhotonicState:
    """Ideal ancilla: two H photons in one mode."""
    return number_state(spatial_mode, H, 2)


def weak_coherent_pulse(
    params: SourceParams, spatial_mode: int = MODE_ANCILLA, phase: float = 0.0
) -> PhotonicState:
    """H-polarized coherent state truncated at ``n_max`` photons.

    Number-state amplitudes follow exp(-nu/2) nu^(n/2) / sqrt(n!) with an
    optional coherent phase per photon; the truncated state is renormalized.
    """
    nu = params.nu
    if nu == 0.0:
        return vacuum_state()
    alpha = math.sqrt(nu) * complex(math.cos(phase), math.sin(phase))
    label = mode(spatial_mode, H)
    terms = {}
    for n in range(params.n_max + 1):
        amp = math.exp(-nu / 2.0) * alpha**n / math.sqrt(math.factorial(n))
        occ = {label: n} if n else {}
        terms[FockBasisVector.from_occupations(occ)] = amp
    return PhotonicState(terms).normalized()


V_POLARIZED = "V_polarized"
DIAGONAL = "diagonal"


def spdc_pair(
    params: SourceParams,
    modes: tuple[int, int] = (0, 1),
    pump: str = V_POLARIZED,
    include_double_pairs: bool = False,
) -> PhotonicState:
    """Down-conversion output on two spatial modes, mostly vacuum.

    A V-polarized pump emits sqrt(gamma) |1_H, 1_H|; a diagonal pump emits
    the symmetric pair (|1_H 1_V> + |1_V 1_H>)/sqrt(2), already written in
    the local frame where it matches the two-qubit W state.  With
    ``include_double_pairs`` the exponential pair-creation series is kept to
    second order, adding double-pair terms at amplitude O(gamma).
    """
    m0, m1 = modes
    if m0 == m1:
        raise ValueError("pair source needs two distinct modes")
    if pump not in (V_POLARIZED, DIAGONAL):
        raise ValueError(f"unknown pump setting {pump!r}")
    root_gamma = math.sqrt(params.gamma)

    if pump == V_POLARIZED:
        pair_ops = [((mode(m0, H), mode(m1, H)), 1.0)]
    else:
        inv = 1.0 / math.sqrt(2.0)
        pair_ops = [
            ((mode(m0, H), mode(m1, V)), inv),
            ((mode(m0, V), mode(m1, H)), inv),
        ]

    def create_pair(state_terms: dict) -> dict:
        grown: dict[FockBasisVector, complex] = {}
        for fbv, amp in state_terms.items():
            for (lab_a, lab_b), coeff in pair_ops:
                f1, fac1 = fbv.added(lab_a)
                f2, fac2 = f1.added(lab_b)
                grown[f2] = grown.get(f2, 0.0) + amp * coeff * fac1 * fac2
        return grown

    terms: dict[FockBasisVector, complex] = {FockBasisVector(): 1.0}
    one_pair = create_pair(terms)
    for fbv, amp in one_pair.items():
        terms[fbv] = terms.get(fbv, 0.0) + root_gamma * amp
    if include_double_pairs:
        two_pairs = create_pair(one_pair)
        for fbv, amp in two_pairs.items():
            terms[fbv] = terms.get(fbv, 0.0) + (params.gamma / 2.0) * amp
    return PhotonicState(terms).normalized()


def heralded_single_photon(
    herald_mode: int = 0, signal_mode: int = MODE_INPUT
) -> PhotonicState:
    """Pair state conditioned on a herald click: |1_H>_herald |1_H>_signal."""
    return tensor(
        number_state(herald_mode, H, 1), number_state(signal_mode, H, 1)
    )


def delay_overlap(delay_um: float, coherence_length_um: float) -> float:
    """Wavepacket overlap xi(delay) for a Gaussian pulse.

    Scaled so that the coincidence dip, which goes as xi^2, decays as
    exp(-delay^2 / l_c^2) with l_c the fitted coherence length.
    """
    x = delay_um / coherence_length_um
    return math.exp(-0.5 * x * x)


def _hom_coincidence(xi: float, params: SourceParams, phase: float = 0.0) -> float:
    """Threefold coincidence probability (herald, mode 4, mode 5) for one
    overlap value."""
    pulse = weak_coherent_pulse(params, MODE_ANCILLA, phase=phase)
    state = tensor(heralded_single_photon(), pulse)
    state = apply_delay(state, MODE_ANCILLA, xi)
    state = run_gate(state)
    return coincidence_probability(state, (0, 4, 5))


def hom_scan(
    delays: Sequence[float], params: SourceParams
) -> list[tuple[float, float]]:
    """Coincidence dip: threefold probability versus delay in micrometers.

    A heralded single photon meets the delayed coherent pulse at the gate's
    first beamsplitter; the static mode mismatch ``params.overlap`` caps the
    zero-delay overlap.
    """
    if len(delays) == 0:
        raise ValueError("empty delay list")
    curve = []
    for delta in delays:
        xi = params.overlap * delay_overlap(delta, params.coherence_length)
        curve.append((float(delta), _hom_coincidence(xi, params)))
    return curve


def hom_asymptote(params: SourceParams) -> float:
    """Coincidence level far outside the dip (fully distinguishable)."""
    return _hom_coincidence(0.0, params)


def hom_visibility(params: SourceParams) -> float:
    """1 - C(0)/C(inf) of the modeled dip."""
    flat = hom_asymptote(params)
    return 1.0 - _hom_coincidence(params.overlap, params) / flat


def calibrate_overlap_for_visibility(
    target_visibility: float, params: SourceParams, tol: float = 1e-10
) -> float:
    """Static overlap xi_0 that makes the modeled dip hit a target visibility.

    The multiphoton background of the coherent pulse caps the visibility
    below 1; requesting more than the cap raises.
    """
    if not 0.0 <= target_visibility < 1.0:
        raise ValueError("target visibility must lie in [0, 1)")
    probe = SourceParams(
        nu=params.nu,
        gamma=params.gamma,
        n_max=params.n_max,
        coherence_length=params.coherence_length,
        overlap=1.0,
    )
    if hom_visibility(probe) < target_visibility:
        raise ValueError(
            "target visibility exceeds the multiphoton-limited maximum "
            f"{hom_visibility(probe):.4f}"
        )
    flat = hom_asymptote(probe)

    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        vis = 1.0 - _hom_coincidence(mid, probe) / flat
        if vis < target_visibility:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def hom_scan_to_csv(curve: Iterable[tuple[float, float]], path) -> None:
    """Plot-ready dip curve: delay_um, coincidence_probability."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["delay_um", "coincidence_probability"])
        for delta, p in curve:
            writer.writerow([f"{delta:.6f}", f"{p:.12e}"])
