"""The 8-percept feedback agent that adapts all measurement directions at
once, and its use as a trained direction translator.

The qubit is never re-prepared: each measurement leaves it in a known state,
the field rotates that state during the waiting interval, and the agent sees
the previous (direction, outcome) pair as its percept. Damping is restricted
to the activated percept's subgraph so every subgraph keeps the
single-percept dynamics.
"""

from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from .pscore import (CANONICAL_ACTIONS, ClipNetwork, LearningParams,
                     apply_update, mix_seed, select_action, subjective_success)
from .quantum import evolve_phase, post_measurement_phase, sample_outcome

# Percepts: every (previous direction, previous outcome) combination.
FEEDBACK_PERCEPTS = tuple((alpha, bit) for alpha in CANONICAL_ACTIONS for bit in (0, 1))


def feedback_network() -> ClipNetwork:
    """Fresh 8-percept x 4-action network."""
    return ClipNetwork(FEEDBACK_PERCEPTS, CANONICAL_ACTIONS)


def random_initial_percept(rng) -> Tuple[float, int]:
    """Arbitrary starting point for the feedback cycle; consumes one uniform."""
    idx = min(int(rng.random() * len(FEEDBACK_PERCEPTS)), len(FEEDBACK_PERCEPTS) - 1)
    return FEEDBACK_PERCEPTS[idx]


@dataclass
class FeedbackAgent:
    """Network plus the (direction, outcome) pair of the last measurement."""

    net: ClipNetwork = field(default_factory=feedback_network)
    params: LearningParams = field(default_factory=LearningParams)
    last: Tuple[float, int] = (CANONICAL_ACTIONS[0], 1)


def feedback_round(agent: FeedbackAgent, phi: float, rng):
    """One cycle: evolve the prepared qubit, measure, learn, remember.

    The qubit enters the round in the state prepared by the last measurement,
    picks up the field angle phi, and is measured along a direction drawn
    from the edges of the percept (= the last direction/outcome pair). The
    update damps only that percept's subgraph. Returns (percept used, chosen
    direction, outcome bit).
    """
    percept = agent.last
    qubit_phase = evolve_phase(post_measurement_phase(*percept), phi)
    action_idx = select_action(agent.net, percept, rng)
    direction = agent.net.actions[action_idx]
    outcome = sample_outcome(qubit_phase, direction, rng)
    apply_update(agent.net, percept, action_idx,
                 agent.params.reward_scale * outcome, agent.params,
                 scope="percept-subgraph")
    agent.last = (direction, outcome)
    return percept, direction, outcome


def conditioned_success(agent: FeedbackAgent, percept, phi: float) -> float:
    """Success probability given a percept, against the exact phase its
    preparation-plus-evolution produces."""
    effective = evolve_phase(post_measurement_phase(*percept), phi)
    return subjective_success(agent.net, percept, effective)


def translate_direction(agent: FeedbackAgent, intended: Tuple[float, int], rng) -> float:
    """Use a trained agent as a translator from an intended zero-field
    direction to a field-compensated one.

    `intended` is the percept (direction, outcome role) that would prepare
    the wanted state in zero field; the returned angle is sampled from the
    trained edges without any update, so the network stays frozen.
    """
    if intended not in agent.net.percepts:
        raise KeyError(f"intended direction {intended!r} is not a known percept")
    return agent.net.actions[select_action(agent.net, intended, rng)]


@dataclass
class FeedbackEnsembleResult:
    """Per-percept ensemble statistics of the conditioned success plus final
    per-agent weights."""

    percepts: tuple
    success_curves: np.ndarray     # (n_percepts, n_rounds) ensemble mean
    min_curves: np.ndarray         # (n_percepts, n_rounds)
    max_curves: np.ndarray         # (n_percepts, n_rounds)
    rbar_curves: np.ndarray        # (n_percepts, n_rounds) complex resultants
    final_weights: np.ndarray      # (n_agents, n_percepts, n_actions)
    visit_counts: np.ndarray       # (n_agents, n_percepts)


def run_feedback_ensemble(phi: float, n_agents: int, n_rounds: int,
                          params: LearningParams, seed: int,
                          chunk_rounds: int = 4096) -> FeedbackEnsembleResult:
    """Simulate independent feedback agents in lock-step.

    Each agent owns a seeded stream consumed identically to the scalar
    feedback_round loop: one uniform for the initial percept, then two per
    round (action, outcome). Results are independent of the lock-step
    batching.
    """
    n_percepts = len(FEEDBACK_PERCEPTS)
    n_actions = len(CANONICAL_ACTIONS)
    action_angles = np.asarray(CANONICAL_ACTIONS)
    prepared = np.array([post_measurement_phase(a, b) for a, b in FEEDBACK_PERCEPTS])
    effective = prepared + phi
    # q[p, a]: reward probability of action a when percept p was just produced
    q = 0.5 * (1.0 + np.cos(effective[:, None] - action_angles[None, :]))

    streams = [np.random.default_rng(mix_seed(seed, j)) for j in range(n_agents)]
    init = np.array([g.random() for g in streams])
    percept_idx = np.minimum((init * n_percepts).astype(int), n_percepts - 1)

    weights = np.ones((n_agents, n_percepts, n_actions))
    visits = np.zeros((n_agents, n_percepts), dtype=np.int64)
    mean_curves = np.empty((n_percepts, n_rounds))
    min_curves = np.empty((n_percepts, n_rounds))
    max_curves = np.empty((n_percepts, n_rounds))
    rbar_curves = np.empty((n_percepts, n_rounds), dtype=complex)
    unit_vectors = np.exp(1j * action_angles)
    rows = np.arange(n_agents)

    done = 0
    while done < n_rounds:
        todo = min(chunk_rounds, n_rounds - done)
        uniforms = np.empty((n_agents, todo, 2))
        for j, g in enumerate(streams):
            uniforms[j] = g.random((todo, 2))
        for t in range(todo):
            p_all = weights / weights.sum(axis=2, keepdims=True)
            conditioned = np.einsum("pa,npa->np", q, p_all)       # (N, P)
            mean_curves[:, done + t] = conditioned.mean(axis=0)
            min_curves[:, done + t] = conditioned.min(axis=0)
            max_curves[:, done + t] = conditioned.max(axis=0)
            rbar_curves[:, done + t] = p_all.mean(axis=0) @ unit_vectors

            sub = weights[rows, percept_idx]                      # (N, A) copy
            p = sub / sub.sum(axis=1, keepdims=True)
            cum = np.cumsum(p, axis=1)
            action = np.minimum((cum <= uniforms[:, t, 0][:, None]).sum(axis=1),
                                n_actions - 1)
            outcome = (uniforms[:, t, 1] < q[percept_idx, action]).astype(np.int64)
            sub -= params.damping * (sub - 1.0)
            sub[rows, action] += params.reward_scale * outcome
            weights[rows, percept_idx] = sub
            visits[rows, percept_idx] += 1
            percept_idx = action * 2 + outcome
        done += todo

    return FeedbackEnsembleResult(FEEDBACK_PERCEPTS, mean_curves, min_curves,
                                  max_curves, rbar_curves, weights, visits)
