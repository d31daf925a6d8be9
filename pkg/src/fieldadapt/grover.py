"""Measurement-based Grover search on the 4-qubit ring cluster state under a
stray field, unadapted and with field-adapted measurement directions.

The marked element's two bits are encoded as measurement directions (0 or pi)
on qubits 1 and 4; qubits 2 and 3 follow the protocol direction. Decoding
XORs outcome bits: (r1 ^ r3, r2 ^ r4). Every deterministic claim is checked
against exhaustive enumeration of the 16 measurement branches; sampling only
enters through one Bernoulli draw per measurement.
"""

import itertools
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .angles import circular_distance
from .pscore import CANONICAL_ACTIONS, TRIGGER_PERCEPT, ClipNetwork, select_action
from .quantum import (apply_field_rotation, measure_qubit, project_qubit,
                      ring_cluster_state)

ADAPTED_STRATEGIES = ("fixed-4-perfect", "glow-composed")

# outcome bit patterns (r1, r2, r3, r4) in basis-label order
_OUTCOME_TUPLES = tuple(itertools.product((0, 1), repeat=4))


@dataclass
class GroverRun:
    """One Grover execution: the four directions measured, the four outcome
    bits, and the decoded element (r1 ^ r3, r2 ^ r4)."""

    directions: Tuple[float, float, float, float]
    outcomes: Tuple[int, int, int, int]
    decoded: Tuple[int, int]


def grover_analytic_success(phi: float) -> float:
    """Closed-form success of the unadapted protocol: (3 + cos 2 phi)^2 / 16."""
    return (3.0 + math.cos(2.0 * phi)) ** 2 / 16.0


def oracle_directions(marked: Tuple[int, int]) -> Tuple[float, float]:
    """Directions on qubits 1 and 4 that mark the element: 0 for bit 0, pi
    for bit 1."""
    b1, b2 = marked
    if b1 not in (0, 1) or b2 not in (0, 1):
        raise ValueError(f"marked element must be two bits, got {marked!r}")
    return (math.pi if b1 else 0.0, math.pi if b2 else 0.0)


def decode(outcomes) -> Tuple[int, int]:
    r1, r2, r3, r4 = outcomes
    return (r1 ^ r3, r2 ^ r4)


def _run_with_directions(phi: float, directions, rng) -> GroverRun:
    state = apply_field_rotation(ring_cluster_state(), phi)
    outcomes = []
    for qubit, direction in enumerate(directions, start=1):
        bit, state = measure_qubit(state, qubit, direction, rng)
        outcomes.append(bit)
    outcomes = tuple(outcomes)
    return GroverRun(tuple(directions), outcomes, decode(outcomes))


def run_grover(phi: float, marked: Tuple[int, int],
               directions_for_2_3: Tuple[float, float] = (0.0, 0.0),
               rng=None) -> GroverRun:
    """One Grover step: oracle directions on qubits 1 and 4, protocol
    directions on 2 and 3, sequential projective measurements, decode."""
    d1, d4 = oracle_directions(marked)
    return _run_with_directions(phi, (d1, directions_for_2_3[0],
                                      directions_for_2_3[1], d4), rng)


def joint_outcome_distribution(phi: float, directions) -> np.ndarray:
    """Exact joint distribution over the 16 outcome tuples, by exhaustively
    projecting every branch. Index order follows _OUTCOME_TUPLES."""
    state = apply_field_rotation(ring_cluster_state(), phi)
    probs = np.empty(16)
    for i, bits in enumerate(_OUTCOME_TUPLES):
        branch = state
        for qubit, (direction, bit) in enumerate(zip(directions, bits), start=1):
            branch = project_qubit(branch, qubit, direction, bit)
        probs[i] = float(np.vdot(branch, branch).real)
    return probs


def decode_mask(marked: Tuple[int, int]) -> np.ndarray:
    """Boolean mask over _OUTCOME_TUPLES selecting tuples that decode to the
    marked element."""
    return np.array([decode(bits) == tuple(marked) for bits in _OUTCOME_TUPLES])


def enumerated_success(phi: float, marked: Tuple[int, int], directions) -> float:
    """Exact success probability of decoding the marked element for explicit
    measurement directions."""
    probs = joint_outcome_distribution(phi, directions)
    return float(probs[decode_mask(marked)].sum())


def unadapted_success(phi: float, marked: Tuple[int, int] = (0, 0),
                      directions_for_2_3: Tuple[float, float] = (0.0, 0.0)) -> float:
    """Exact success of the zero-field protocol run in field phi."""
    d1, d4 = oracle_directions(marked)
    return enumerated_success(phi, marked,
                              (d1, directions_for_2_3[0], directions_for_2_3[1], d4))


# bit table and sign table for the batched amplitude formula:
# A(r) = (1/16) sum_b (-1)^{ring parity of b} (-1)^{sum_k (1 - r_k) b_k} prod_k z_k^{b_k}
_BITS = np.array(_OUTCOME_TUPLES)  # reused as the 16 basis-bit patterns
_RING_PARITY = np.array([(b[0] * b[1] + b[1] * b[2] + b[2] * b[3] + b[3] * b[0]) % 2
                         for b in _OUTCOME_TUPLES])


def _sign_table() -> np.ndarray:
    flips = (1 - _BITS) @ _BITS.T  # [r, b] = sum_k (1 - r_k) b_k
    return np.where((flips + _RING_PARITY[None, :]) % 2 == 1, -1.0, 1.0)


_SIGNS = _sign_table()


def batched_success(phis, directions, marked: Tuple[int, int]) -> np.ndarray:
    """Exact success probabilities for a batch of runs, one row of four
    directions each.

    Closed-form amplitudes of the rotated cluster state; agrees with
    joint_outcome_distribution branch by branch and exists so ensemble sweeps
    do not pay the per-branch projector chain.
    """
    directions = np.atleast_2d(np.asarray(directions, dtype=float))
    phis = np.broadcast_to(np.asarray(phis, dtype=float), (directions.shape[0],))
    z = np.exp(-1j * (directions - phis[:, None]))           # (N, 4)
    v = np.where(_BITS[None, :, :] == 1, z[:, None, :], 1.0).prod(axis=2)  # (N, 16)
    amplitudes = v @ _SIGNS.T / 16.0                          # (N, 16) over r
    probs = np.abs(amplitudes) ** 2
    return probs[:, decode_mask(marked)].sum(axis=1)


def closest_canonical_direction(phi: float) -> float:
    """Nearest of the four canonical directions; exact ties resolve toward
    the lower angle."""
    distances = [circular_distance(phi, a) for a in CANONICAL_ACTIONS]
    best = min(distances)
    return min(a for a, d in zip(CANONICAL_ACTIONS, distances) if d <= best + 1e-12)


def sample_adapted_directions(net: ClipNetwork, rng, count: int = 4):
    """Draw the measurement directions for one run, independently per qubit,
    from a frozen network's trigger percept."""
    return tuple(net.actions[select_action(net, TRIGGER_PERCEPT, rng)]
                 for _ in range(count))


def run_grover_adapted(phi: float, marked: Tuple[int, int], strategy: str,
                       trained: Optional[ClipNetwork] = None, rng=None) -> GroverRun:
    """Grover step with agent-chosen directions, for the marked element 00.

    "fixed-4-perfect" is the vanishing-damping limit of a trained 4-direction
    agent: every measurement uses the single canonical direction closest to
    phi. "glow-composed" samples each of the four directions from a frozen
    post-composition network, which must be supplied and actually trained.
    """
    if tuple(marked) != (0, 0):
        raise ValueError("the adapted experiment runs with marked element 00 only")
    if strategy == "fixed-4-perfect":
        d = closest_canonical_direction(phi)
        directions = (d, d, d, d)
    elif strategy == "glow-composed":
        if trained is None or float(trained.weights.max()) <= 1.0:
            raise ValueError("glow-composed needs a trained, frozen network")
        directions = sample_adapted_directions(trained, rng)
    else:
        raise ValueError(f"strategy must be one of {ADAPTED_STRATEGIES}, got {strategy!r}")
    return _run_with_directions(phi, directions, rng)


def fixed4_success(phi: float) -> float:
    """Exact success of the fixed-4-perfect strategy at field angle phi."""
    d = closest_canonical_direction(phi)
    return enumerated_success(phi, (0, 0), (d, d, d, d))
