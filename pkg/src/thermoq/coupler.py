"""Two-transmon bridge between the thermal and probe modes.

Modes a and b couple to qubits Q1 and Q2, and the qubits couple to each
other by an XY exchange.  All couplings are in the rotating-wave form, so
the Hamiltonian conserves the total excitation number N and splits into
blocks; the cross-Kerr lives in the N <= 2 blocks.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .jacobi import jacobi_eigh
from .physics import TWO_PI, hz_to_rad

__all__ = [
    "AssignmentError",
    "CouplerCircuit",
    "DressedSpectrum",
    "FockTruncation",
    "build_hamiltonian",
    "chi_from_g",
    "eigensolve_symmetric",
    "inverse_purcell",
    "lambda_exact",
    "lambda_perturbative",
    "solve_cross_kerr",
]

MAX_MATRIX_ENTRIES = 10**6
MAX_N_MAX = 6
CONVERGENCE_STEP = 0.01
ASSIGNMENT_MIN_OVERLAP = 0.5

Label = tuple[int, int, int, int]
CROSS_KERR_LABELS: tuple[Label, ...] = ((0, 0, 0, 0), (1, 0, 0, 0), (0, 1, 0, 0), (1, 1, 0, 0))


class AssignmentError(RuntimeError):
    def __init__(self, label: Label, overlap: float):
        super().__init__(f"dressed state for bare |{label}> is ambiguous (max overlap {overlap:.3f})")
        self.label = label
        self.overlap = overlap


@dataclass(frozen=True)
class CouplerCircuit:
    """Bare frequencies and couplings, all in rad/s."""

    omega_a: float
    omega_b: float
    omega_1: float
    omega_2: float
    g_a1: float
    g_b2: float
    J_XY: float

    def __post_init__(self) -> None:
        for name in ("omega_a", "omega_b", "omega_1", "omega_2"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if 0.0 in self.detunings():
            raise ValueError("detunings must be nonzero")

    @classmethod
    def from_hz(cls, f_a, f_b, f_1, f_2, g_a1, g_b2, J_XY) -> "CouplerCircuit":
        return cls(*(hz_to_rad(v) for v in (f_a, f_b, f_1, f_2, g_a1, g_b2, J_XY)))

    def detunings(self) -> tuple[float, float, float]:
        """``(Delta_a1, Delta_b2, Delta_12)``."""
        return (self.omega_a - self.omega_1, self.omega_b - self.omega_2, self.omega_1 - self.omega_2)

    def chis(self) -> tuple[float, float]:
        d_a1, d_b2, _ = self.detunings()
        return chi_from_g(self.g_a1, d_a1), chi_from_g(self.g_b2, d_b2)

    def dispersive_flags(self) -> dict[str, bool]:
        """True where a coupling is outside the dispersive regime."""
        d_a1, d_b2, d_12 = self.detunings()
        return {
            "g_a1": abs(self.g_a1 / d_a1) > 0.1,
            "g_b2": abs(self.g_b2 / d_b2) > 0.1,
            "J_XY": abs(self.J_XY / d_12) > 0.2,
        }

    def scaled(self, s: float) -> "CouplerCircuit":
        """Same frequencies with every coupling multiplied by ``s``."""
        return CouplerCircuit(
            self.omega_a, self.omega_b, self.omega_1, self.omega_2,
            s * self.g_a1, s * self.g_b2, s * self.J_XY,
        )

    def swapped(self) -> "CouplerCircuit":
        """Relabel (a, Q1) <-> (b, Q2)."""
        return CouplerCircuit(
            self.omega_b, self.omega_a, self.omega_2, self.omega_1,
            self.g_b2, self.g_a1, self.J_XY,
        )

    def lambda_perturbative(self) -> float:
        chi_a1, chi_b2 = self.chis()
        return lambda_perturbative(chi_a1, chi_b2, self.J_XY, self.detunings()[2])


@dataclass(frozen=True)
class FockTruncation:
    n_max: int = 3

    def __post_init__(self) -> None:
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1")

    @property
    def dimension(self) -> int:
        return (self.n_max + 1) ** 2 * 4


@dataclass(frozen=True)
class DressedSpectrum:
    labels: tuple[Label, ...]
    energies: tuple[float, ...]
    overlaps: tuple[float, ...]

    def energy(self, label: Label) -> float:
        return self.energies[self.labels.index(label)]


@dataclass
class Hamiltonian:
    """Dense matrix plus the basis labels and the excitation-number blocks."""

    matrix: np.ndarray
    labels: list[Label]
    blocks: dict[int, list[int]] = field(default_factory=dict)

    def block(self, N: int) -> np.ndarray:
        idx = self.blocks[N]
        return self.matrix[np.ix_(idx, idx)]


def chi_from_g(g: float, delta: float) -> float:
    """Dispersive shift ``-g^2/Delta``."""
    if delta == 0:
        raise ValueError("zero detuning: dispersive shift undefined")
    return -g * g / delta


def lambda_perturbative(chi_a1: float, chi_b2: float, J_XY: float, delta_12: float) -> float:
    """Leading cross-Kerr of the bridge, ``8 chi_a1 chi_b2 J^2 / Delta_12^3``."""
    if delta_12 == 0:
        raise ValueError("zero qubit-qubit detuning")
    return 8.0 * chi_a1 * chi_b2 * J_XY**2 / delta_12**3


def inverse_purcell(g_b2: float, delta_b2: float, T1: float) -> float:
    """Loss rate (Hz) the probe mode inherits from a lossy qubit."""
    if not T1 > 0:
        raise ValueError("T1 must be positive")
    if delta_b2 == 0:
        raise ValueError("zero detuning")
    return (g_b2 / delta_b2) ** 2 / (TWO_PI * T1)


def _basis(n_max: int) -> list[Label]:
    r = range(n_max + 1)
    return list(itertools.product(r, r, (0, 1), (0, 1)))


def build_hamiltonian(
    circuit: CouplerCircuit, trunc: FockTruncation, frame: float = 0.0
) -> Hamiltonian:
    """Bare energies plus RWA couplings in the product basis ``|n_a, n_b, q1, q2>``.

    ``frame`` subtracts ``N * frame`` from every diagonal entry (a rotating
    frame); it shifts each block by a constant and leaves eigenvectors alone.
    """
    dim = trunc.dimension
    if dim * dim > MAX_MATRIX_ENTRIES:
        raise MemoryError(f"Hilbert dimension {dim} exceeds the {MAX_MATRIX_ENTRIES}-entry guard")
    labels = _basis(trunc.n_max)
    index = {lab: i for i, lab in enumerate(labels)}
    c = circuit
    H = np.zeros((dim, dim))
    blocks: dict[int, list[int]] = {}
    for i, (na, nb, q1, q2) in enumerate(labels):
        N = na + nb + q1 + q2
        blocks.setdefault(N, []).append(i)
        # per-mode detuning from the frame, so that N-conserving differences cancel exactly
        H[i, i] = (
            na * (c.omega_a - frame) + nb * (c.omega_b - frame)
            + q1 * (c.omega_1 - frame) + q2 * (c.omega_2 - frame)
        )
        # lowering moves only; the symmetric partner is filled alongside
        if na > 0 and q1 == 0:
            j = index[(na - 1, nb, 1, q2)]
            H[i, j] = H[j, i] = c.g_a1 * math.sqrt(na)
        if nb > 0 and q2 == 0:
            j = index[(na, nb - 1, q1, 1)]
            H[i, j] = H[j, i] = c.g_b2 * math.sqrt(nb)
        if q1 == 1 and q2 == 0:
            j = index[(na, nb, 0, 1)]
            H[i, j] = H[j, i] = c.J_XY
    return Hamiltonian(H, labels, blocks)


def eigensolve_symmetric(H: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and orthonormal eigenvectors of a real symmetric matrix."""
    return jacobi_eigh(H)


def dressed_spectrum(
    circuit: CouplerCircuit, trunc: FockTruncation, labels: tuple[Label, ...] = CROSS_KERR_LABELS
) -> DressedSpectrum:
    """Dressed energies for ``labels`` by maximum overlap within each N block.

    Energies are reported in the frame rotating at ``omega_a`` per
    excitation, which keeps the diagonal small; any energy combination that
    conserves N (such as the cross-Kerr) is unaffected.
    """
    ham = build_hamiltonian(circuit, trunc, frame=circuit.omega_a)
    energies, overlaps = [], []
    solved: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    for label in labels:
        N = sum(label)
        if N not in solved:
            solved[N] = eigensolve_symmetric(ham.block(N))
        w, V = solved[N]
        row = ham.blocks[N].index(ham.labels.index(label))
        weights = V[row, :] ** 2
        # argmax returns the first maximum: lowest index on exact ties
        k = int(np.argmax(weights))
        if weights[k] <= ASSIGNMENT_MIN_OVERLAP:
            raise AssignmentError(label, float(weights[k]))
        energies.append(float(w[k]))
        overlaps.append(float(weights[k]))
    return DressedSpectrum(tuple(labels), tuple(energies), tuple(overlaps))


def _lambda_at(circuit: CouplerCircuit, trunc: FockTruncation) -> float:
    dressed = dressed_spectrum(circuit, trunc)
    e00, e10, e01, e11 = (dressed.energy(lab) for lab in CROSS_KERR_LABELS)
    return (e11 - e10) - (e01 - e00)


@dataclass(frozen=True)
class CrossKerrSolution:
    lambda_exact: float
    lambda_pert: float
    n_max: int
    converged: bool
    history: tuple[float, ...]

    @property
    def relative_error(self) -> float:
        if self.lambda_pert == 0:
            return math.inf if self.lambda_exact != 0 else 0.0
        return abs(self.lambda_exact - self.lambda_pert) / abs(self.lambda_pert)


def solve_cross_kerr(circuit: CouplerCircuit, trunc: FockTruncation | None = None) -> CrossKerrSolution:
    """Exact-diagonalisation cross-Kerr with automatic truncation escalation.

    ``n_max`` is raised one step at a time until the result moves by less
    than 1% (or by less than 1e-10 |omega_a| in absolute terms), up to 6.
    """
    trunc = trunc or FockTruncation()
    n = trunc.n_max
    history = [_lambda_at(circuit, FockTruncation(n))]
    converged = False
    abs_floor = 1e-10 * abs(circuit.omega_a)
    while n < MAX_N_MAX:
        n += 1
        history.append(_lambda_at(circuit, FockTruncation(n)))
        step = abs(history[-1] - history[-2])
        if step <= CONVERGENCE_STEP * abs(history[-1]) or step <= abs_floor:
            converged = True
            break
    return CrossKerrSolution(history[-1], circuit.lambda_perturbative(), n, converged, tuple(history))


def lambda_exact(circuit: CouplerCircuit, trunc: FockTruncation | None = None) -> float:
    """Connected energy ``E11 - E10 - E01 + E00`` of the dressed spectrum (rad/s)."""
    return solve_cross_kerr(circuit, trunc).lambda_exact
