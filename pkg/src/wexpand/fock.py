"""Sparse bosonic Fock-space states over labeled optical modes.

A mode is labeled by (spatial path, polarization, temporal bin) and a state
is a sparse complex amplitude map over occupation-number basis vectors.
All circuit evolution stays pure; mixedness enters only in
``postselect_qubits``, which keeps one photon per listed spatial mode and
traces the temporal bins out of the surviving polarization qubits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from types import MappingProxyType
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .tolerances import (
    AMPLITUDE_PRUNE,
    HERMITICITY_ATOL,
    POSTSELECT_MIN_PROBABILITY,
    PSD_ATOL,
    TRACE_ATOL,
)

H = "H"
V = "V"
POLARIZATIONS = (H, V)

# Two temporal bins are enough to model pairwise partial distinguishability:
# "p" is the principal wavepacket, "o" the orthogonal complement.
PRINCIPAL = "p"
ORTHOGONAL = "o"
TEMPORAL_BINS = (PRINCIPAL, ORTHOGONAL)

_POL_INDEX = {H: 0, V: 1}
_BIN_INDEX = {PRINCIPAL: 0, ORTHOGONAL: 1}


class WiringError(ValueError):
    """Modes were combined in a way that signals a circuit-wiring bug."""


class ModeLabel(NamedTuple):
    spatial: int
    pol: str
    tbin: str = PRINCIPAL

    def sort_key(self) -> tuple[int, int, int]:
        return (self.spatial, _POL_INDEX[self.pol], _BIN_INDEX[self.tbin])

    def __str__(self) -> str:
        suffix = "" if self.tbin == PRINCIPAL else "'"
        return f"{self.pol}{suffix}@{self.spatial}"


def mode(spatial: int, pol: str, tbin: str = PRINCIPAL) -> ModeLabel:
    """Validated ``ModeLabel`` constructor."""
    if spatial < 0:
        raise ValueError(f"spatial mode id must be nonnegative, got {spatial}")
    if pol not in _POL_INDEX:
        raise ValueError(f"polarization must be one of {POLARIZATIONS}, got {pol!r}")
    if tbin not in _BIN_INDEX:
        raise ValueError(f"temporal bin must be one of {TEMPORAL_BINS}, got {tbin!r}")
    return ModeLabel(int(spatial), pol, tbin)


@dataclass(frozen=True)
class FockBasisVector:
    """Occupation numbers per mode; zero-count entries are never stored.

    ``occ`` is kept sorted by the canonical label order (spatial, then
    polarization, then temporal bin) so equal occupations compare equal.
    """

    occ: tuple[tuple[ModeLabel, int], ...] = ()

    @staticmethod
    def from_occupations(occupations: Mapping[ModeLabel, int]) -> "FockBasisVector":
        items = []
        for label, count in dict(occupations).items():
            count = int(count)
            if count < 0:
                raise ValueError(f"negative occupation {count} at {label}")
            if count:
                items.append((label, count))
        items.sort(key=lambda item: item[0].sort_key())
        return FockBasisVector(tuple(items))

    def as_dict(self) -> dict[ModeLabel, int]:
        return dict(self.occ)

    def occupation(self, label: ModeLabel) -> int:
        for lab, count in self.occ:
            if lab == label:
                return count
        return 0

    def total_photons(self) -> int:
        return sum(count for _, count in self.occ)

    def photons_in_spatial(self, spatial: int) -> int:
        return sum(count for lab, count in self.occ if lab.spatial == spatial)

    def spatial_modes(self) -> frozenset[int]:
        return frozenset(lab.spatial for lab, _ in self.occ)

    def added(self, label: ModeLabel) -> tuple["FockBasisVector", float]:
        """One photon added at ``label``; returns the bosonic sqrt(n+1) factor."""
        occ = self.as_dict()
        n = occ.get(label, 0)
        occ[label] = n + 1
        return FockBasisVector.from_occupations(occ), math.sqrt(n + 1)

    def removed(self, label: ModeLabel) -> tuple["FockBasisVector", float] | None:
        """One photon removed at ``label``, or None if the mode is empty."""
        occ = self.as_dict()
        n = occ.get(label, 0)
        if n == 0:
            return None
        occ[label] = n - 1
        return FockBasisVector.from_occupations(occ), math.sqrt(n)

    def __str__(self) -> str:
        if not self.occ:
            return "|vac>"
        return "|" + " ".join(f"{n}{lab}" for lab, n in self.occ) + ">"


VACUUM = FockBasisVector()


class PhotonicState:
    """Sparse superposition of Fock basis vectors.

    Immutable after construction: every operation returns a new state, so
    values can be shared freely between threads.  Amplitudes below the prune
    threshold are dropped on construction.
    """

    __slots__ = ("_terms",)

    def __init__(
        self,
        terms: Mapping[FockBasisVector, complex],
        prune: float = AMPLITUDE_PRUNE,
    ):
        self._terms = {
            fbv: complex(amp) for fbv, amp in terms.items() if abs(amp) > prune
        }

    @property
    def terms(self) -> Mapping[FockBasisVector, complex]:
        return MappingProxyType(self._terms)

    def items(self):
        return self._terms.items()

    def __len__(self) -> int:
        return len(self._terms)

    def norm_squared(self) -> float:
        return sum(abs(a) ** 2 for a in self._terms.values())

    def norm(self) -> float:
        return math.sqrt(self.norm_squared())

    def normalized(self) -> "PhotonicState":
        n = self.norm()
        if n < 1e-300:
            raise ValueError("cannot normalize a zero state")
        return PhotonicState({f: a / n for f, a in self._terms.items()}, prune=0.0)

    def scaled(self, factor: complex) -> "PhotonicState":
        return PhotonicState({f: a * factor for f, a in self._terms.items()})

    def spatial_modes(self) -> frozenset[int]:
        out: set[int] = set()
        for fbv in self._terms:
            out |= fbv.spatial_modes()
        return frozenset(out)

    def amplitude(self, fbv: FockBasisVector) -> complex:
        return self._terms.get(fbv, 0.0 + 0.0j)

    def __repr__(self) -> str:
        body = " + ".join(
            f"({amp:.4g}){fbv}" for fbv, amp in list(self._terms.items())[:6]
        )
        more = "" if len(self._terms) <= 6 else f" ... ({len(self._terms)} terms)"
        return f"PhotonicState[{body}{more}]"


def vacuum_state() -> PhotonicState:
    return PhotonicState({VACUUM: 1.0})


def single_photon(spatial: int, pol: str, tbin: str = PRINCIPAL) -> PhotonicState:
    return PhotonicState(
        {FockBasisVector.from_occupations({mode(spatial, pol, tbin): 1}): 1.0}
    )


def number_state(spatial: int, pol: str, n: int, tbin: str = PRINCIPAL) -> PhotonicState:
    """Normalized n-photon state in a single mode."""
    if n < 0:
        raise ValueError("photon number must be nonnegative")
    if n == 0:
        return vacuum_state()
    return PhotonicState(
        {FockBasisVector.from_occupations({mode(spatial, pol, tbin): n}): 1.0}
    )


def apply_creation(state: PhotonicState, label: ModeLabel) -> PhotonicState:
    """Creation operator on one mode; output is generally unnormalized."""
    out: dict[FockBasisVector, complex] = {}
    for fbv, amp in state.items():
        new, factor = fbv.added(label)
        out[new] = out.get(new, 0.0) + amp * factor
    return PhotonicState(out)


def apply_annihilation(state: PhotonicState, label: ModeLabel) -> PhotonicState:
    """Annihilation operator on one mode; kills empty-mode terms."""
    out: dict[FockBasisVector, complex] = {}
    for fbv, amp in state.items():
        hit = fbv.removed(label)
        if hit is None:
            continue
        new, factor = hit
        out[new] = out.get(new, 0.0) + amp * factor
    return PhotonicState(out)


def inner_product(a: PhotonicState, b: PhotonicState) -> complex:
    """<a|b>, conjugate-linear in ``a``."""
    small, large = (a, b) if len(a) <= len(b) else (b, a)
    total = 0.0 + 0.0j
    for fbv, amp in small.items():
        other = large.amplitude(fbv)
        if other:
            if small is a:
                total += amp.conjugate() * other
            else:
                total += other.conjugate() * amp
    return total


def tensor(a: PhotonicState, b: PhotonicState) -> PhotonicState:
    """Join two states living on disjoint spatial modes."""
    shared = a.spatial_modes() & b.spatial_modes()
    if shared:
        raise WiringError(f"tensor factors share spatial modes {sorted(shared)}")
    out: dict[FockBasisVector, complex] = {}
    for fa, amp_a in a.items():
        occ_a = fa.as_dict()
        for fb, amp_b in b.items():
            occ = dict(occ_a)
            occ.update(fb.as_dict())
            out[FockBasisVector.from_occupations(occ)] = amp_a * amp_b
    return PhotonicState(out)


def coincidence_probability(
    state: PhotonicState, spatial_modes: Sequence[int], min_photons: int = 1
) -> float:
    """Probability that every listed spatial mode holds >= min_photons.

    Models threshold detectors: terms are kept regardless of what the
    unlisted modes contain.
    """
    if not spatial_modes:
        raise ValueError("empty mode list")
    total = 0.0
    for fbv, amp in state.items():
        if all(fbv.photons_in_spatial(m) >= min_photons for m in spatial_modes):
            total += abs(amp) ** 2
    return total


def basis_index(pols: Sequence[str]) -> int:
    """Computational-basis index for a polarization pattern (H=0, V=1).

    The first qubit is the most significant bit.
    """
    idx = 0
    for p in pols:
        idx = (idx << 1) | _POL_INDEX[p]
    return idx


def _single_photon_pattern(
    fbv: FockBasisVector, modes: Sequence[int]
) -> tuple[tuple[str, ...], tuple[str, ...]] | None:
    """(pol pattern, bin pattern) if ``fbv`` has exactly one photon per listed
    mode and none anywhere else, otherwise None."""
    if fbv.total_photons() != len(modes):
        return None
    by_spatial: dict[int, ModeLabel] = {}
    for lab, count in fbv.occ:
        if count != 1 or lab.spatial in by_spatial:
            return None
        by_spatial[lab.spatial] = lab
    if set(by_spatial) != set(modes):
        return None
    pols = tuple(by_spatial[m].pol for m in modes)
    bins = tuple(by_spatial[m].tbin for m in modes)
    return pols, bins


def postselect_qubits(
    state: PhotonicState, spatial_modes: Sequence[int]
) -> tuple["DensityMatrix | None", float]:
    """Project onto one photon per listed mode (vacuum elsewhere) and trace
    out the temporal bins.

    Returns the renormalized polarization-qubit density matrix, with qubits
    ordered as in ``spatial_modes``, together with the success probability.
    A probability at or below the flag threshold yields ``(None, probability)``.
    """
    modes = list(spatial_modes)
    if not modes:
        raise ValueError("empty mode list")
    if len(set(modes)) != len(modes):
        raise ValueError("duplicate spatial modes in post-selection list")
    if abs(state.norm_squared() - 1.0) > 1e-6:
        raise ValueError("postselect_qubits expects a normalized state")

    n = len(modes)
    dim = 2**n
    # Amplitude vector over polarization patterns, one per temporal-bin pattern.
    by_bins: dict[tuple[str, ...], np.ndarray] = {}
    probability = 0.0
    for fbv, amp in state.items():
        pattern = _single_photon_pattern(fbv, modes)
        if pattern is None:
            continue
        pols, bins = pattern
        vec = by_bins.get(bins)
        if vec is None:
            vec = np.zeros(dim, dtype=complex)
            by_bins[bins] = vec
        vec[basis_index(pols)] += amp
        probability += abs(amp) ** 2

    if probability <= POSTSELECT_MIN_PROBABILITY:
        return None, 0.0

    rho = np.zeros((dim, dim), dtype=complex)
    for vec in by_bins.values():
        rho += np.outer(vec, vec.conj())
    rho /= probability
    result = DensityMatrix(rho, list(modes))
    result.validate()
    return result, probability


def qubit_amplitudes(state: PhotonicState, spatial_modes: Sequence[int]) -> np.ndarray:
    """Unnormalized polarization-qubit amplitudes of the one-photon-per-mode
    component of a pure state.

    Raises if more than one temporal-bin pattern survives the projection,
    because the projected state is then not a pure qubit state.
    """
    modes = list(spatial_modes)
    if not modes:
        raise ValueError("empty mode list")
    vec = np.zeros(2 ** len(modes), dtype=complex)
    seen_bins: set[tuple[str, ...]] = set()
    for fbv, amp in state.items():
        pattern = _single_photon_pattern(fbv, modes)
        if pattern is None:
            continue
        pols, bins = pattern
        seen_bins.add(bins)
        if len(seen_bins) > 1:
            raise ValueError(
                "temporal bins are mixed; the projected state is not pure"
            )
        vec[basis_index(pols)] += amp
    return vec


@dataclass
class DensityMatrix:
    """Density operator over polarization qubits.

    ``qubit_order`` records which spatial mode each qubit came from; the
    first entry is the most significant bit of the matrix index.
    """

    matrix: np.ndarray
    qubit_order: list[int]

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        if self.matrix.ndim != 2 or self.matrix.shape[0] != self.matrix.shape[1]:
            raise ValueError("density matrix must be square")
        n = len(self.qubit_order)
        if self.matrix.shape[0] != 2**n:
            raise ValueError(
                f"dimension {self.matrix.shape[0]} does not match "
                f"{n} qubits in qubit_order"
            )

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_qubits(self) -> int:
        return len(self.qubit_order)

    @staticmethod
    def from_pure(vector: np.ndarray, qubit_order: Sequence[int]) -> "DensityMatrix":
        vec = np.asarray(vector, dtype=complex)
        norm = np.linalg.norm(vec)
        if norm < 1e-300:
            raise ValueError("cannot build a density matrix from a zero vector")
        vec = vec / norm
        return DensityMatrix(np.outer(vec, vec.conj()), list(qubit_order))

    def validate(self) -> None:
        """Raise unless Hermitian, positive semidefinite and trace one."""
        m = self.matrix
        if np.max(np.abs(m - m.conj().T)) > HERMITICITY_ATOL:
            raise ValueError("density matrix is not Hermitian")
        eigenvalues = np.linalg.eigvalsh((m + m.conj().T) / 2)
        if eigenvalues.min() < -PSD_ATOL:
            raise ValueError(
                f"density matrix has negative eigenvalue {eigenvalues.min():.3e}"
            )
        if abs(np.trace(m).real - 1.0) > TRACE_ATOL:
            raise ValueError(f"density matrix trace {np.trace(m).real!r} != 1")

    def to_json(self) -> dict:
        """Serialization with fixed field names {dim, qubit_order, re, im}."""
        return {
            "dim": self.dim,
            "qubit_order": list(self.qubit_order),
            "re": [float(x) for x in self.matrix.real.ravel()],
            "im": [float(x) for x in self.matrix.imag.ravel()],
        }

    @staticmethod
    def from_json(doc: Mapping) -> "DensityMatrix":
        dim = int(doc["dim"])
        re = np.asarray(doc["re"], dtype=float).reshape(dim, dim)
        im = np.asarray(doc["im"], dtype=float).reshape(dim, dim)
        return DensityMatrix(re + 1j * im, list(doc["qubit_order"]))
