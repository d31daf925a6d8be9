"""The projective simulator core: clip-network state, action selection, the
reward/damping update, glow accumulation, subjective success, the analytic
steady state and learning-time extraction.

A ClipNetwork is a two-layer graph: percept clips on one side, action clips
(measurement directions) on the other, one weighted edge per pair. Weights
start at 1, rewards add to the taken edge, damping pulls every weight back
toward 1, so weights never drop below 1. A network is owned by one agent and
an agent's episode is strictly sequential; ensembles parallelize across
agents with independent random streams.
"""

import math
from dataclasses import dataclass

import numpy as np

from .angles import EPS_ANGLE, circular_distance, normalize_angle

# The trigger percept of the single-percept network.
TRIGGER_PERCEPT = "*"

# Default action directions: every pi/2, i.e. the +-x and +-y projectors.
CANONICAL_ACTIONS = (0.0, 0.5 * math.pi, math.pi, 1.5 * math.pi)

DAMPING_SCOPES = ("all-edges", "percept-subgraph")

_MASK64 = 0xFFFFFFFFFFFFFFFF
_GOLDEN64 = 0x9E3779B97F4A7C15


class NonConvergence(RuntimeError):
    """The steady-state solver exhausted its budget."""


class NotReached(RuntimeError):
    """A learning curve never attained the requested target."""


def mix_seed(master: int, index: int) -> int:
    """Derive a per-agent 64-bit seed from a master seed and an agent index.

    splitmix64 finalizer over master + (index+1) * golden-ratio stride; the
    derivation is order-independent, so ensembles may run in any order.
    """
    z = (master + (index + 1) * _GOLDEN64) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


@dataclass
class LearningParams:
    """Reward scaling and damping rate of the update rule."""

    reward_scale: float = 1.0
    damping: float = 0.01

    def __post_init__(self):
        if self.reward_scale < 0.0:
            raise ValueError(f"reward_scale must be >= 0, got {self.reward_scale!r}")
        if not 0.0 <= self.damping <= 1.0:
            raise ValueError(f"damping must be in [0, 1], got {self.damping!r}")

    @property
    def ratio(self) -> float:
        """reward_scale / damping, the only combination the steady state sees."""
        return self.reward_scale / self.damping


class ClipNetwork:
    """Percepts, action angles, edge weights and edge glow.

    weights[p, a] is the h-value of the edge from percept p to action a and
    stays >= 1 under the update rule; glow[p, a] is the reward accumulator
    used only while composing new directions.
    """

    def __init__(self, percepts, actions):
        self.percepts = tuple(percepts)
        if not self.percepts:
            raise ValueError("a clip network needs at least one percept")
        self.actions = [normalize_angle(a) for a in actions]
        for i, a in enumerate(self.actions):
            for b in self.actions[:i]:
                if circular_distance(a, b) <= EPS_ANGLE:
                    raise ValueError(f"duplicate action direction {a!r}")
        self._rows = {p: i for i, p in enumerate(self.percepts)}
        shape = (len(self.percepts), len(self.actions))
        self.weights = np.ones(shape)
        self.glow = np.zeros(shape)

    def percept_row(self, percept) -> int:
        try:
            return self._rows[percept]
        except KeyError:
            raise KeyError(f"unknown percept {percept!r}") from None

    def add_action(self, angle: float, weight: float = 1.0) -> int:
        """Append a new action clip; the new edges start at `weight`, glow 0."""
        angle = normalize_angle(angle)
        for a in self.actions:
            if circular_distance(angle, a) <= EPS_ANGLE:
                raise ValueError(f"action {angle!r} duplicates an existing direction")
        self.actions.append(angle)
        n_percepts = len(self.percepts)
        self.weights = np.hstack([self.weights, np.full((n_percepts, 1), float(weight))])
        self.glow = np.hstack([self.glow, np.zeros((n_percepts, 1))])
        return len(self.actions) - 1

    def copy(self) -> "ClipNetwork":
        clone = ClipNetwork.__new__(ClipNetwork)
        clone.percepts = self.percepts
        clone.actions = list(self.actions)
        clone._rows = dict(self._rows)
        clone.weights = self.weights.copy()
        clone.glow = self.glow.copy()
        return clone


def single_percept_network(actions=CANONICAL_ACTIONS) -> ClipNetwork:
    """Fresh network with the single trigger percept and the given directions."""
    return ClipNetwork((TRIGGER_PERCEPT,), actions)


def action_distribution(net: ClipNetwork, percept) -> np.ndarray:
    """Normalized edge weights of the percept: p_a = h_a / sum h."""
    row = net.weights[net.percept_row(percept)]
    return row / row.sum()


def select_action(net: ClipNetwork, percept, rng) -> int:
    """Sample an action index from the percept's edge weights.

    Consumes exactly one uniform; the inverse-CDF rule here is mirrored by
    the vectorized ensemble engines, so scalar and batched runs agree draw
    for draw.
    """
    cum = np.cumsum(action_distribution(net, percept))
    idx = int(np.searchsorted(cum, rng.random(), side="right"))
    return min(idx, len(cum) - 1)


def apply_update(net: ClipNetwork, percept, taken_action: int, reward: float,
                 params: LearningParams, scope: str = "all-edges") -> None:
    """One round of the update rule: h <- h - damping*(h - 1), plus the reward
    on the taken edge.

    Scope "all-edges" damps the whole network (single-percept default);
    "percept-subgraph" damps only the edges leaving the activated percept, so
    each percept's subgraph keeps the single-percept dynamics regardless of
    how rarely it is visited.
    """
    if scope not in DAMPING_SCOPES:
        raise ValueError(f"scope must be one of {DAMPING_SCOPES}, got {scope!r}")
    row = net.percept_row(percept)
    if scope == "all-edges":
        net.weights -= params.damping * (net.weights - 1.0)
    else:
        net.weights[row] -= params.damping * (net.weights[row] - 1.0)
    net.weights[row, taken_action] += reward


def accumulate_glow(net: ClipNetwork, percept, taken_action: int, reward: float) -> None:
    """Glow mode: bank the reward on the taken edge, leave every h untouched.

    The agent's behavior is unchanged while glow accumulates, so with fresh
    weights it keeps sampling all directions uniformly.
    """
    net.glow[net.percept_row(percept), taken_action] += reward


def subjective_success(net: ClipNetwork, percept, phi: float) -> float:
    """Probability that the next measurement is rewarded: sum_a p(1|phi,a) p_a."""
    p = action_distribution(net, percept)
    q = 0.5 * (1.0 + np.cos(phi - np.asarray(net.actions)))
    return float(np.dot(q, p))


def _steady_state_residual(h: np.ndarray, gain: np.ndarray) -> float:
    return float(np.max(np.abs((h - 1.0) * h.sum() - gain * h)))


def steady_state_weights(actions, phi: float, ratio: float, *,
                         tol: float = 1e-10, max_iterations: int = 10 ** 6,
                         initial: np.ndarray | None = None) -> np.ndarray:
    """Solve the steady-state balance (h_a - 1) * sum(h) = ratio * q_a * h_a.

    Damping losses and time-averaged reward gains are in equilibrium; q_a is
    the outcome probability of direction a against the field angle phi. Uses
    a damped fixed-point iteration h <- 1 + ratio*q*h/sum(h) (mixing 0.5) and
    falls back to bisection + Newton on the scalar S = sum(h), for which
    h_a = S / (S - ratio*q_a) holds identically.
    """
    actions = np.asarray(actions, dtype=float)
    if actions.size == 0:
        raise ValueError("at least one action is required")
    if ratio <= 0.0:
        raise ValueError(f"ratio must be positive, got {ratio!r}")
    gain = ratio * 0.5 * (1.0 + np.cos(phi - actions))

    h = (1.0 + gain) if initial is None else np.asarray(initial, dtype=float).copy()
    budget = max_iterations
    fp_budget = min(5000, budget)
    for _ in range(fp_budget):
        h = 0.5 * h + 0.5 * (1.0 + gain * h / h.sum())
        budget -= 1
        if _steady_state_residual(h, gain) < tol:
            return h

    # Scalar fallback: find the root of G(S) = sum_a S/(S - gain_a) - S.
    def g_of(s: float) -> float:
        return float(np.sum(s / (s - gain)) - s)

    lo = float(gain.max()) * (1.0 + 1e-14) + 1e-12
    hi = float(actions.size + gain.sum() + 1.0)
    if g_of(hi) > 0.0:
        raise NonConvergence("no bracket for the steady-state sum")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g_of(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    s = 0.5 * (lo + hi)
    for _ in range(8):  # Newton polish; G is smooth and monotone here
        slope = float(np.sum(-gain / (s - gain) ** 2) - 1.0)
        if slope == 0.0:
            break
        step = g_of(s) / slope
        if not (lo <= s - step <= hi):
            break
        s -= step
    h = s / (s - gain)
    if _steady_state_residual(h, gain) < tol:
        return h

    for _ in range(budget):  # resume fixed-point from the polished estimate
        h = 0.5 * h + 0.5 * (1.0 + gain * h / h.sum())
        if _steady_state_residual(h, gain) < tol:
            return h
    raise NonConvergence(
        f"steady state not reached within {max_iterations} iterations "
        f"(residual {_steady_state_residual(h, gain):.3e})"
    )


def asymptotic_success(actions, phi: float, ratio: float, **kwargs) -> float:
    """Steady-state success probability sum_a q_a * h_a / sum(h)."""
    actions = np.asarray(actions, dtype=float)
    h = steady_state_weights(actions, phi, ratio, **kwargs)
    q = 0.5 * (1.0 + np.cos(phi - actions))
    return float(np.dot(q, h) / h.sum())


def learning_time_tau90(curve, target: float) -> int:
    """First round index at which an ensemble success curve reaches the target."""
    curve = np.asarray(curve, dtype=float)
    hits = np.nonzero(curve >= target)[0]
    if hits.size == 0:
        raise NotReached(f"curve never reached {target!r}")
    return int(hits[0])


def tau90_per_agent(outcomes: np.ndarray, target: float, window: int = 50) -> float:
    """Average per-agent learning time from raw outcome bits.

    Each agent's 0/1 reward sequence is smoothed with a centered moving
    average of `window` rounds to tame Bernoulli noise; the agent's learning
    time is the first round whose full window reaches the target. Agents that
    never reach it are excluded from the average.
    """
    outcomes = np.asarray(outcomes, dtype=float)
    if outcomes.ndim != 2 or outcomes.shape[1] < window:
        raise ValueError("need an (agents, rounds) matrix with rounds >= window")
    kernel_sums = np.cumsum(outcomes, axis=1)
    smoothed = (kernel_sums[:, window - 1:] -
                np.pad(kernel_sums, ((0, 0), (1, 0)))[:, :-window]) / window
    reached = smoothed >= target
    any_hit = reached.any(axis=1)
    if not any_hit.any():
        raise NotReached(f"no agent reached {target!r}")
    first = reached[any_hit].argmax(axis=1) + (window - 1) / 2.0
    return float(first.mean())
