"""Exact measurement statistics for a single equatorial qubit and a 4-qubit
statevector engine for the ring cluster state.

A single qubit on the Bloch equator is fully described by one phase angle:
(|0> + e^{i phi}|1>)/sqrt(2), up to a global phase. The 4-qubit register is a
bare array of 16 complex amplitudes; qubit 1 is the most significant bit of
the basis label. Statevectors are owned by one run at a time.
"""

import math

import numpy as np

from .angles import normalize_angle

N_QUBITS = 4
DIM = 2 ** N_QUBITS

# Norm drift allowance after rotation / collapse.
NORM_TOL = 1e-10

# popcount of each 4-bit basis label, used by the field rotation
_POPCOUNT = np.array([bin(i).count("1") for i in range(DIM)])


class DegenerateBranch(RuntimeError):
    """Collapse onto a branch whose probability is numerically zero."""


def outcome_probability(phi: float, alpha: float) -> float:
    """Born probability of outcome 1 when projecting |phi> onto direction alpha."""
    return 0.5 * (1.0 + math.cos(phi - alpha))


def sample_outcome(phi: float, alpha: float, rng) -> int:
    """Draw one measurement outcome bit; consumes exactly one uniform."""
    return 1 if rng.random() < outcome_probability(phi, alpha) else 0


def post_measurement_phase(alpha: float, outcome: int) -> float:
    """Phase prepared by the measurement: alpha for outcome 1, alpha+pi for 0."""
    return normalize_angle(alpha if outcome == 1 else alpha + math.pi)


def evolve_phase(phi: float, delta: float) -> float:
    """Advance the qubit phase by the field angle accumulated over one interval."""
    return normalize_angle(phi + delta)


class MeasurementRecord:
    """Append-only sequence of (direction, outcome bit) pairs.

    The same record feeds the learning agent, the tomography estimate and the
    Bayesian update, so it is kept deliberately dumb.
    """

    __slots__ = ("entries",)

    def __init__(self):
        self.entries = []

    def append(self, alpha: float, outcome: int) -> None:
        if outcome not in (0, 1):
            raise ValueError(f"outcome must be a bit, got {outcome!r}")
        self.entries.append((normalize_angle(alpha), outcome))

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


def ring_cluster_state() -> np.ndarray:
    """4-qubit ring cluster state.

    Controlled-phase gates on the pairs 1-2, 2-3, 3-4, 4-1 applied to |+>^4;
    every amplitude is +-1/4.
    """
    amps = np.full(DIM, 0.25, dtype=complex)
    for idx in range(DIM):
        b = [(idx >> (N_QUBITS - 1 - k)) & 1 for k in range(N_QUBITS)]
        cz_parity = b[0] * b[1] + b[1] * b[2] + b[2] * b[3] + b[3] * b[0]
        if cz_parity % 2:
            amps[idx] = -amps[idx]
    return amps


def apply_field_rotation(state: np.ndarray, phi: float) -> np.ndarray:
    """Rotate every qubit about z by the field angle.

    Per qubit the convention is diag(e^{-i phi/2}, e^{+i phi/2}); only
    measurement statistics are meaningful, the global phase is not.
    """
    return state * np.exp(1j * phi * (_POPCOUNT - 2))


def _projector(alpha: float) -> np.ndarray:
    """2x2 projector onto the equatorial state with phase alpha."""
    e = np.exp(1j * alpha)
    return 0.5 * np.array([[1.0, np.conj(e)], [e, 1.0]], dtype=complex)


def _apply_single_qubit(state: np.ndarray, mat: np.ndarray, qubit: int) -> np.ndarray:
    t = state.reshape([2] * N_QUBITS)
    t = np.moveaxis(t, qubit - 1, -1)
    t = t @ mat.T
    return np.moveaxis(t, -1, qubit - 1).reshape(DIM)


def project_qubit(state: np.ndarray, qubit: int, alpha: float, outcome: int) -> np.ndarray:
    """Unnormalized branch after projecting one qubit onto |alpha> (outcome 1)
    or |alpha+pi> (outcome 0)."""
    if not 1 <= qubit <= N_QUBITS:
        raise ValueError(f"qubit must be 1..{N_QUBITS}, got {qubit!r}")
    direction = alpha if outcome == 1 else alpha + math.pi
    return _apply_single_qubit(state, _projector(direction), qubit)


def measure_qubit(state: np.ndarray, qubit: int, alpha: float, rng):
    """Projectively measure one qubit along direction alpha.

    Returns (outcome bit, collapsed and renormalized state). The branch
    probability is computed exactly from the amplitudes; the only randomness
    is the single Bernoulli draw.
    """
    branch_1 = project_qubit(state, qubit, alpha, 1)
    p1 = float(np.vdot(branch_1, branch_1).real)
    outcome = 1 if rng.random() < p1 else 0
    branch = branch_1 if outcome == 1 else project_qubit(state, qubit, alpha, 0)
    norm_sq = float(np.vdot(branch, branch).real)
    if norm_sq < 1e-14:
        raise DegenerateBranch(
            f"sampled branch has probability {norm_sq:.3e}; state is inconsistent"
        )
    return outcome, branch / math.sqrt(norm_sq)
