"""Scenario definitions, ensemble orchestration and statistics extraction.

Every experiment family is a Scenario; run_scenario simulates all
agents independently and deterministically for a given seed and returns
per-round ensemble statistics plus optional per-agent snapshots. Agents run
in vectorized lock-step but each consumes its own seeded stream in exactly
the order the scalar loops would, so batching never changes results.
"""

import csv
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import composition, estimators, grover
from .angles import circular_mean, circular_std, normalize_angle
from .multipercept import run_feedback_ensemble
from .pscore import (CANONICAL_ACTIONS, TRIGGER_PERCEPT, LearningParams,
                     NotReached, action_distribution, apply_update,
                     asymptotic_success, learning_time_tau90, mix_seed,
                     select_action, single_percept_network,
                     steady_state_weights)
from .quantum import MeasurementRecord, sample_outcome

SCENARIO_KINDS = (
    "static-learn", "relearn-switch", "oscillating-field", "drifting-field",
    "projector-sweep", "bisect-compose", "glow-compose", "multi-percept",
    "grover-sweep", "estimator-compare",
)

DRIFT_MODES = ("linear", "oscillating")
COMPOSE_METHODS = ("glow", "bisect")

DEFAULT_DIRECTION_COUNTS = (2, 4, 6, 8, 10, 12, 14, 16)


class ConfigError(ValueError):
    """A scenario field failed validation."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass
class Scenario:
    """One experiment: which dynamics to run, the field schedule knobs, the
    ensemble size and the master seed. Defaults mirror the reference setup
    (reward scale 1, damping 1/100, 1000 agents, glow threshold 500)."""

    kind: str
    agents: int = 1000
    rounds: int = 1000
    seed: int = 0
    params: LearningParams = field(default_factory=LearningParams)
    snapshots: bool = False
    phi: float = 0.0
    phi_after: Optional[float] = None          # relearn-switch target angle
    switch_round: Optional[int] = None         # relearn-switch; default rounds//2
    drift_mode: str = "linear"
    omega: Optional[float] = None              # drift rate / oscillation frequency
    amplitude: float = math.pi / 4             # oscillating-field amplitude
    compose_method: str = "glow"
    compose_round: Optional[int] = None        # bisect composition step
    glow_threshold: float = 500.0
    proximity_factor: float = 0.1
    direction_counts: Sequence[int] = DEFAULT_DIRECTION_COUNTS
    ratio: float = 100.0
    grid_points: int = 720                     # projector-sweep phi grid
    grid_step: float = math.pi / 500           # grover-sweep phi step
    mc_runs: int = 3000                        # grover-sweep unadapted sampling

    def validate(self) -> None:
        if self.kind not in SCENARIO_KINDS:
            raise ConfigError("kind", f"unknown scenario kind {self.kind!r}")
        if self.agents < 1:
            raise ConfigError("agents", "need at least one agent")
        if self.rounds < 1:
            raise ConfigError("rounds", "need at least one round")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed", "seed must fit in 64 bits")
        if self.kind == "relearn-switch":
            if self.phi_after is None:
                raise ConfigError("phi_after", "relearn-switch needs the new angle")
            switch = self.rounds // 2 if self.switch_round is None else self.switch_round
            if not 0 < switch < self.rounds:
                raise ConfigError("switch_round", "must lie inside the run")
        if self.kind in ("oscillating-field", "drifting-field"):
            if self.drift_mode not in DRIFT_MODES:
                raise ConfigError("drift_mode", f"must be one of {DRIFT_MODES}")
        if self.kind in ("bisect-compose", "glow-compose"):
            if self.compose_method not in COMPOSE_METHODS:
                raise ConfigError("compose_method",
                                  f"must be one of {COMPOSE_METHODS}")
        if self.kind == "bisect-compose":
            step = self.rounds // 2 if self.compose_round is None else self.compose_round
            if not 0 < step < self.rounds:
                raise ConfigError("compose_round", "must lie inside the run")
        if self.kind == "glow-compose" and self.glow_threshold <= 0:
            raise ConfigError("glow_threshold", "must be positive")
        if self.kind == "projector-sweep":
            if any(int(m) < 1 for m in self.direction_counts):
                raise ConfigError("direction_counts", "counts must be >= 1")
            if self.ratio <= 0:
                raise ConfigError("ratio", "must be positive")
            if self.grid_points < 1:
                raise ConfigError("grid_points", "must be >= 1")
        if self.kind == "grover-sweep":
            if self.grid_step <= 0:
                raise ConfigError("grid_step", "must be positive")
            if self.mc_runs < 1:
                raise ConfigError("mc_runs", "must be >= 1")


def field_schedule(scenario: Scenario) -> np.ndarray:
    """Field angle for every round of the scenario."""
    n = np.arange(scenario.rounds, dtype=float)
    if scenario.kind == "relearn-switch":
        switch = (scenario.rounds // 2 if scenario.switch_round is None
                  else scenario.switch_round)
        phis = np.full(scenario.rounds, scenario.phi)
        phis[switch:] = scenario.phi_after
        return phis
    if scenario.kind == "oscillating-field" or (
            scenario.kind == "drifting-field" and scenario.drift_mode == "oscillating"):
        omega = 10.0 if scenario.omega is None else scenario.omega
        return -scenario.amplitude * np.cos(omega * n)
    if scenario.kind == "drifting-field":
        omega = math.pi / 5000 if scenario.omega is None else scenario.omega
        return omega * n
    return np.full(scenario.rounds, scenario.phi)


# ---------------------------------------------------------------------------
# vectorized ensemble engines
# ---------------------------------------------------------------------------

class AgentStreams:
    """Per-agent random streams, consumed in the same order as the scalar
    agent loop (one uniform per action pick, one per outcome)."""

    def __init__(self, seed: int, n_agents: int):
        self.generators = [np.random.default_rng(mix_seed(seed, j))
                           for j in range(n_agents)]

    def initial_uniforms(self) -> np.ndarray:
        return np.array([g.random() for g in self.generators])

    def round_block(self, n_rounds: int) -> np.ndarray:
        block = np.empty((len(self.generators), n_rounds, 2))
        for j, g in enumerate(self.generators):
            block[j] = g.random((n_rounds, 2))
        return block


def _select_indices(probabilities: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
    """Inverse-CDF pick per row; identical to pscore.select_action."""
    cum = np.cumsum(probabilities, axis=1)
    idx = (cum <= uniforms[:, None]).sum(axis=1)
    return np.minimum(idx, probabilities.shape[1] - 1)


@dataclass
class EnsembleCurve:
    """Per-round ensemble statistics of the success probability and the
    ensemble resultant of the mean action distribution."""

    mean_success: np.ndarray
    min_success: np.ndarray
    max_success: np.ndarray
    rbar: np.ndarray                       # complex, |rbar| <= 1
    percept: Optional[str] = None          # label for per-percept variants


@dataclass
class LearningEnsembleResult:
    curve: EnsembleCurve
    action_angles: np.ndarray              # (n_agents, n_actions)
    final_weights: np.ndarray              # (n_agents, n_actions)
    final_mean_success: float
    outcomes: Optional[np.ndarray] = None  # (n_agents, n_rounds) bits


def run_learning_ensemble(phis: np.ndarray, n_agents: int, params: LearningParams,
                          seed: Optional[int] = None, *,
                          actions=CANONICAL_ACTIONS,
                          action_matrix: Optional[np.ndarray] = None,
                          initial_weights: Optional[np.ndarray] = None,
                          streams: Optional[AgentStreams] = None,
                          record_outcomes: bool = False,
                          chunk_rounds: int = 2048) -> LearningEnsembleResult:
    """Single-percept ensemble learning under an arbitrary field schedule.

    phis gives the field angle per round. Curve entry n is the statistic of
    the networks entering round n (so a fresh ensemble starts at 0.5);
    final_mean_success is evaluated after the last update. Per-agent action
    angles may differ (post-composition ensembles); weights then live in a
    dense matrix aligned with action_matrix.
    """
    phis = np.asarray(phis, dtype=float)
    n_rounds = phis.size
    if streams is None:
        streams = AgentStreams(seed, n_agents)
    if action_matrix is None:
        action_matrix = np.broadcast_to(np.asarray(actions, dtype=float),
                                        (n_agents, len(actions))).copy()
    n_actions = action_matrix.shape[1]
    weights = (np.ones((n_agents, n_actions)) if initial_weights is None
               else np.asarray(initial_weights, dtype=float).copy())
    unit_vectors = np.exp(1j * action_matrix)
    rows = np.arange(n_agents)

    mean_s = np.empty(n_rounds)
    min_s = np.empty(n_rounds)
    max_s = np.empty(n_rounds)
    rbar = np.empty(n_rounds, dtype=complex)
    outcome_bits = np.empty((n_agents, n_rounds), dtype=np.uint8) if record_outcomes else None

    done = 0
    while done < n_rounds:
        todo = min(chunk_rounds, n_rounds - done)
        uniforms = streams.round_block(todo)
        for t in range(todo):
            phi = phis[done + t]
            q = 0.5 * (1.0 + np.cos(phi - action_matrix))
            p = weights / weights.sum(axis=1, keepdims=True)
            success = (q * p).sum(axis=1)
            mean_s[done + t] = success.mean()
            min_s[done + t] = success.min()
            max_s[done + t] = success.max()
            rbar[done + t] = (p * unit_vectors).sum() / n_agents

            taken = _select_indices(p, uniforms[:, t, 0])
            rewarded = uniforms[:, t, 1] < q[rows, taken]
            if record_outcomes:
                outcome_bits[:, done + t] = rewarded
            weights -= params.damping * (weights - 1.0)
            weights[rows, taken] += params.reward_scale * rewarded
        done += todo

    q = 0.5 * (1.0 + np.cos(phis[-1] - action_matrix))
    p = weights / weights.sum(axis=1, keepdims=True)
    final_mean = float((q * p).sum(axis=1).mean())
    curve = EnsembleCurve(mean_s, min_s, max_s, rbar)
    return LearningEnsembleResult(curve, action_matrix, weights, final_mean,
                                  outcome_bits)


def _concat_curves(first: EnsembleCurve, second: EnsembleCurve) -> EnsembleCurve:
    return EnsembleCurve(
        np.concatenate([first.mean_success, second.mean_success]),
        np.concatenate([first.min_success, second.min_success]),
        np.concatenate([first.max_success, second.max_success]),
        np.concatenate([first.rbar, second.rbar]),
    )


@dataclass
class BisectEnsembleResult:
    curve: EnsembleCurve
    composed_angles: np.ndarray            # (n_agents,) inserted midpoints
    action_angles: np.ndarray
    final_weights: np.ndarray
    final_mean_success: float


def run_bisect_ensemble(phi: float, n_agents: int, params: LearningParams,
                        seed: int, compose_round: int, total_rounds: int) -> BisectEnsembleResult:
    """Learn, bisect the two strongest directions once, learn on.

    Composition is an explicitly scheduled step: after compose_round rounds
    every agent inserts the midpoint of its two strongest directions and
    training continues with five actions.
    """
    streams = AgentStreams(seed, n_agents)
    phase_one = run_learning_ensemble(np.full(compose_round, phi), n_agents,
                                      params, streams=streams)
    n_actions = phase_one.action_angles.shape[1]
    angles5 = np.empty((n_agents, n_actions + 1))
    weights5 = np.empty((n_agents, n_actions + 1))
    composed = np.empty(n_agents)
    for j in range(n_agents):
        net = single_percept_network(phase_one.action_angles[j])
        net.weights[0] = phase_one.final_weights[j]
        outcome = composition.bisect_compose(net)
        if outcome.kind != "inserted":      # midpoint collided with an action
            net.add_action(normalize_angle(net.actions[0] + math.pi / 4))
        composed[j] = net.actions[-1]
        angles5[j] = net.actions
        weights5[j] = net.weights[0]
    phase_two = run_learning_ensemble(np.full(total_rounds - compose_round, phi),
                                      n_agents, params, streams=streams,
                                      action_matrix=angles5,
                                      initial_weights=weights5)
    return BisectEnsembleResult(_concat_curves(phase_one.curve, phase_two.curve),
                                composed, angles5, phase_two.final_weights,
                                phase_two.final_mean_success)


@dataclass
class GlowEnsembleResult:
    curve: EnsembleCurve
    trigger_rounds: np.ndarray             # (n_agents,) round the threshold fell
    kinds: list                            # "inserted" | "strengthened" per agent
    composed_angles: np.ndarray            # direction created or reinforced
    total_glow: np.ndarray                 # h assigned to that direction
    success_at_composition: np.ndarray     # subjective success right after
    action_angles: np.ndarray              # (n_agents, 5), column 4 may be inert
    final_weights: np.ndarray              # (n_agents, 5), inert column stays 0
    final_mean_success: float


def run_glow_ensemble(phi: float, n_agents: int, params: LearningParams,
                      seed: int, glow_threshold: float, total_rounds: int,
                      proximity_factor: float = 0.1,
                      chunk_rounds: int = 2048) -> GlowEnsembleResult:
    """Glow accumulation, per-agent composition, then normal learning.

    Behavior is uniform while glow accumulates (weights frozen at 1). The
    round after an agent's largest glow register reaches the threshold it
    composes via the glow rule and switches to the usual update dynamics;
    agents trigger at different rounds, the curve therefore averages mixed
    modes, which is exactly the stepped ensemble curve.
    """
    n_base = len(CANONICAL_ACTIONS)
    streams = AgentStreams(seed, n_agents)
    angles = np.zeros((n_agents, n_base + 1))
    angles[:, :n_base] = CANONICAL_ACTIONS
    active = np.zeros((n_agents, n_base + 1), dtype=bool)
    active[:, :n_base] = True
    weights = np.zeros((n_agents, n_base + 1))
    weights[:, :n_base] = 1.0
    glow = np.zeros((n_agents, n_base))
    composing_done = np.zeros(n_agents, dtype=bool)
    trigger_rounds = np.full(n_agents, -1, dtype=np.int64)
    kinds = [""] * n_agents
    composed_angles = np.full(n_agents, np.nan)
    total_glow = np.zeros(n_agents)
    success_jump = np.full(n_agents, np.nan)
    rows = np.arange(n_agents)

    mean_s = np.empty(total_rounds)
    min_s = np.empty(total_rounds)
    max_s = np.empty(total_rounds)
    rbar = np.empty(total_rounds, dtype=complex)

    done = 0
    while done < total_rounds:
        todo = min(chunk_rounds, total_rounds - done)
        uniforms = streams.round_block(todo)
        for t in range(todo):
            q = 0.5 * (1.0 + np.cos(phi - angles)) * active
            p = weights / weights.sum(axis=1, keepdims=True)
            success = (q * p).sum(axis=1)
            mean_s[done + t] = success.mean()
            min_s[done + t] = success.min()
            max_s[done + t] = success.max()
            rbar[done + t] = (p * np.exp(1j * angles) * active).sum() / n_agents

            taken = _select_indices(p, uniforms[:, t, 0])
            rewarded = uniforms[:, t, 1] < q[rows, taken]
            reward = params.reward_scale * rewarded

            learning = composing_done
            if learning.any():
                sub = weights[learning]
                sub -= params.damping * (sub - 1.0) * active[learning]
                sub[np.arange(sub.shape[0]), taken[learning]] += reward[learning]
                weights[learning] = sub
            banking = ~learning
            if banking.any():
                glow[rows[banking], taken[banking]] += reward[banking]

            just_triggered = np.nonzero(banking & (glow.max(axis=1) >= glow_threshold))[0]
            for j in just_triggered:
                net = single_percept_network()
                net.glow[0] = glow[j]
                outcome = composition.glow_compose(net, glow_threshold=glow_threshold,
                                                   proximity_factor=proximity_factor)
                kinds[j] = outcome.kind
                composed_angles[j] = outcome.angle
                total_glow[j] = outcome.weight
                if outcome.kind == "inserted":
                    angles[j, n_base] = net.actions[n_base]
                    active[j, n_base] = True
                weights[j, :len(net.actions)] = net.weights[0]
                composing_done[j] = True
                trigger_rounds[j] = done + t
                q_j = 0.5 * (1.0 + np.cos(phi - angles[j])) * active[j]
                success_jump[j] = float((q_j * weights[j]).sum() / weights[j].sum())
        done += todo

    q = 0.5 * (1.0 + np.cos(phi - angles)) * active
    p = weights / weights.sum(axis=1, keepdims=True)
    final_mean = float((q * p).sum(axis=1).mean())
    curve = EnsembleCurve(mean_s, min_s, max_s, rbar)
    return GlowEnsembleResult(curve, trigger_rounds, kinds, composed_angles,
                              total_glow, success_jump, angles, weights, final_mean)


def race_glow_training(phi: float, n_agents: int, glow_threshold: float,
                       seed: int, reward_scale: float = 1.0) -> np.ndarray:
    """Glow registers at the composition trigger, simulated as a counter race.

    While glow accumulates the agent picks directions uniformly, so rounds
    without a reward never change the registers; the registers at the trigger
    are therefore distributed exactly as the counts of a categorical race
    (increment direction a with probability q_a / sum q) run until the first
    counter reaches the threshold. One stream drives the whole ensemble.
    Used by the Grover sweep, where only the triggered registers matter, not
    the trigger round.
    """
    q = 0.5 * (1.0 + np.cos(phi - np.asarray(CANONICAL_ACTIONS)))
    w = q / q.sum()
    cum_w = np.cumsum(w)
    target = math.ceil(glow_threshold / reward_scale)
    rng = np.random.default_rng(seed)
    expected = target / w.max()
    block = int(expected + 12.0 * math.sqrt(expected)) + 8

    counts = np.zeros((n_agents, 4), dtype=np.int64)
    out = np.empty((n_agents, 4))
    pending = np.arange(n_agents)
    while pending.size:
        draws = np.searchsorted(cum_w, rng.random((pending.size, block)),
                                side="right").astype(np.int8)
        draws = np.minimum(draws, 3)
        finished = np.zeros(pending.size, dtype=bool)
        stop_at = np.full(pending.size, block, dtype=np.int64)
        cums = []
        for a in range(4):
            cum_a = counts[pending, a][:, None] + (draws == a).cumsum(axis=1)
            cums.append(cum_a)
            hit = cum_a[:, -1] >= target
            first = np.where(hit, (cum_a >= target).argmax(axis=1), block)
            stop_at = np.minimum(stop_at, first)
            finished |= hit
        for a in range(4):
            idx = np.minimum(stop_at, block - 1)
            final_a = cums[a][np.arange(pending.size), idx]
            counts[pending, a] = np.where(finished, final_a, cums[a][:, -1])
        out[pending[finished]] = counts[pending[finished]] * reward_scale
        pending = pending[~finished]
    return out


def compose_from_glow_batch(glow_registers: np.ndarray,
                            proximity_factor: float = 0.1):
    """Vectorized glow composition for a batch of register vectors.

    Same rule as composition.glow_compose, restated over arrays: returns
    (action angles (N,5), action probabilities (N,5), inserted mask). For
    strengthened agents the fifth column is inert (probability zero).
    """
    g = np.asarray(glow_registers, dtype=float)
    base = np.asarray(CANONICAL_ACTIONS)
    total = g.sum(axis=1)
    res = g @ np.exp(1j * base)
    magnitude = np.abs(res)
    if np.any(magnitude <= 1e-12):
        raise composition.DegenerateGlow("zero glow resultant in batch")
    composed = np.mod(np.angle(res), 2.0 * math.pi)
    spread = np.sqrt(np.maximum(0.0, -2.0 * np.log(np.minimum(magnitude / total, 1.0))))
    diff = np.abs(composed[:, None] - base[None, :])
    dist = np.minimum(diff, 2.0 * math.pi - diff)
    nearest = dist.argmin(axis=1)
    inserted = dist[np.arange(g.shape[0]), nearest] > proximity_factor * spread

    n = g.shape[0]
    angles = np.zeros((n, 5))
    angles[:, :4] = base
    angles[:, 4] = composed
    weights = np.ones((n, 5))
    weights[:, 4] = 0.0
    weights[inserted, 4] = total[inserted]
    keep = ~inserted
    weights[keep, nearest[keep]] = total[keep]
    probs = weights / weights.sum(axis=1, keepdims=True)
    return angles, probs, inserted


@dataclass
class GroverSweepResult:
    phis: np.ndarray
    success_unadapted: np.ndarray          # sampled, mc_runs per angle
    success_fixed4: np.ndarray             # exact enumeration
    success_glow: np.ndarray               # fraction of the agent ensemble
    inserted_fraction: np.ndarray


def run_grover_sweep(phi_grid: np.ndarray, agents_per_phi: int, seed: int,
                     mc_runs: int = 3000, glow_threshold: float = 500.0,
                     reward_scale: float = 1.0) -> GroverSweepResult:
    """Grover success across the field-angle grid, three ways.

    Unadapted: outcome tuples sampled from the exact 16-branch joint
    distribution (identical in law to independent sequential runs). Fixed-4:
    exact enumeration of the vanishing-damping strategy. Glow: each agent
    trains via the glow race against its own angle, composes, freezes, then
    one Grover run whose success is drawn through the exact branch
    probability for its four sampled directions.
    """
    phi_grid = np.asarray(phi_grid, dtype=float)
    mask = grover.decode_mask((0, 0))
    unadapted = np.empty(phi_grid.size)
    fixed4 = np.empty(phi_grid.size)
    glow_success = np.empty(phi_grid.size)
    inserted_frac = np.empty(phi_grid.size)
    for i, phi in enumerate(phi_grid):
        base_seed = mix_seed(seed, i)
        mc_rng = np.random.default_rng(mix_seed(base_seed, 0))
        joint = grover.joint_outcome_distribution(phi, (0.0, 0.0, 0.0, 0.0))
        joint = np.clip(joint, 0.0, None)
        counts = mc_rng.multinomial(mc_runs, joint / joint.sum())
        unadapted[i] = counts[mask].sum() / mc_runs

        fixed4[i] = grover.fixed4_success(phi)

        registers = race_glow_training(phi, agents_per_phi, glow_threshold,
                                       mix_seed(base_seed, 1), reward_scale)
        angles, probs, inserted = compose_from_glow_batch(registers)
        run_rng = np.random.default_rng(mix_seed(base_seed, 2))
        u = run_rng.random((agents_per_phi, 5))
        directions = np.empty((agents_per_phi, 4))
        for k in range(4):
            directions[:, k] = angles[np.arange(agents_per_phi),
                                      _select_indices(probs, u[:, k])]
        p_ok = grover.batched_success(phi, directions, (0, 0))
        glow_success[i] = float((u[:, 4] < p_ok).mean())
        inserted_frac[i] = float(inserted.mean())
    return GroverSweepResult(phi_grid, unadapted, fixed4, glow_success,
                             inserted_frac)


@dataclass
class SweepRow:
    direction_count: int
    mean_success: float
    min_success: float
    max_success: float


def sweep_asymptotics(direction_counts: Sequence[int], ratio: float,
                      grid_points: int = 720) -> list:
    """Angular mean/min/max of the steady-state success for equidistant
    direction sets of the given sizes."""
    rows = []
    grid = np.linspace(0.0, 2.0 * math.pi, grid_points, endpoint=False)
    for m in direction_counts:
        m = int(m)
        directions = np.array([2.0 * math.pi * k / m for k in range(m)])
        values = np.empty(grid_points)
        warm = None
        for g_idx, phi in enumerate(grid):
            try:
                warm = steady_state_weights(directions, phi, ratio, initial=warm)
            except Exception as exc:
                raise type(exc)(f"direction count {m}, phi {phi:.6f}: {exc}") from exc
            q = 0.5 * (1.0 + np.cos(phi - directions))
            values[g_idx] = float(np.dot(q, warm) / warm.sum())
        rows.append(SweepRow(m, float(values.mean()), float(values.min()),
                             float(values.max())))
    return rows


@dataclass
class EstimatorComparison:
    phi: float
    ps_angles: np.ndarray                  # circular mean of each agent's p_a
    tomography_angles: np.ndarray
    bayes_means: np.ndarray
    bayes_spreads: np.ndarray
    averaged_ps_mean: float                # mean angle of the pooled p_a
    averaged_ps_spread: float


def run_estimator_comparison(phi: float, n_agents: int, n_rounds: int,
                             params: LearningParams, seed: int) -> EstimatorComparison:
    """Let agents generate records, then estimate phi three ways from the
    same data: the agent's own action distribution, expectation-value
    tomography, and the exact Bayesian posterior."""
    ps_angles = np.empty(n_agents)
    tomo_angles = np.empty(n_agents)
    bayes_means = np.empty(n_agents)
    bayes_spreads = np.empty(n_agents)
    pooled = np.zeros(len(CANONICAL_ACTIONS))
    for j in range(n_agents):
        rng = np.random.default_rng(mix_seed(seed, j))
        net = single_percept_network()
        record = MeasurementRecord()
        for _ in range(n_rounds):
            idx = select_action(net, TRIGGER_PERCEPT, rng)
            alpha = net.actions[idx]
            bit = sample_outcome(phi, alpha, rng)
            record.append(alpha, bit)
            apply_update(net, TRIGGER_PERCEPT, idx, params.reward_scale * bit,
                         params, scope="all-edges")
        p = action_distribution(net, TRIGGER_PERCEPT)
        pooled += p
        ps_angles[j] = circular_mean(zip(net.actions, p))
        tomo_angles[j] = estimators.tomography(record).angle
        post = estimators.posterior_from_record(record)
        bayes_means[j], bayes_spreads[j] = estimators.posterior_mean_std(post)
    pooled /= n_agents
    pairs = list(zip(CANONICAL_ACTIONS, pooled))
    return EstimatorComparison(phi, ps_angles, tomo_angles, bayes_means,
                               bayes_spreads, circular_mean(pairs),
                               circular_std(pairs))


# ---------------------------------------------------------------------------
# scenario dispatch and CSV output
# ---------------------------------------------------------------------------

CURVE_COLUMNS = ("round", "mean_success", "min_success", "max_success",
                 "rbar_re", "rbar_im")
SNAPSHOT_COLUMNS = ("agent", "alpha", "p_alpha", "h_alpha")
GROVER_COLUMNS = ("phi", "success_unadapted", "success_fixed4", "success_glow")
SWEEP_COLUMNS = ("direction_count", "mean_success", "min_success", "max_success")
ESTIMATE_COLUMNS = ("agent", "ps_angle", "tomo_angle", "bayes_angle", "bayes_std")


@dataclass
class ScenarioResult:
    """What a scenario produced: per-round curves and/or a table, optional
    per-agent snapshots, and free-form metadata for tests and reports."""

    kind: str
    columns: tuple
    rows: list
    snapshot_rows: Optional[list] = None
    curves: Optional[list] = None
    meta: dict = field(default_factory=dict)


def _curve_rows(curves: Sequence[EnsembleCurve]) -> tuple:
    labeled = any(c.percept is not None for c in curves)
    columns = CURVE_COLUMNS + ("percept",) if labeled else CURVE_COLUMNS
    rows = []
    for curve in curves:
        for n in range(curve.mean_success.size):
            row = [n, curve.mean_success[n], curve.min_success[n],
                   curve.max_success[n], curve.rbar[n].real, curve.rbar[n].imag]
            if labeled:
                row.append(curve.percept)
            rows.append(tuple(row))
    return columns, rows


def _snapshot_rows(action_angles: np.ndarray, weights: np.ndarray) -> list:
    probs = weights / weights.sum(axis=1, keepdims=True)
    rows = []
    for j in range(weights.shape[0]):
        for a in range(weights.shape[1]):
            if weights[j, a] == 0.0:       # inert padding column
                continue
            rows.append((j, action_angles[j, a], probs[j, a], weights[j, a]))
    return rows


def run_scenario(scenario: Scenario) -> ScenarioResult:
    """Validate and execute a scenario; deterministic for a fixed seed."""
    scenario.validate()
    kind = scenario.kind

    if kind in ("static-learn", "relearn-switch", "oscillating-field",
                "drifting-field"):
        phis = field_schedule(scenario)
        result = run_learning_ensemble(phis, scenario.agents, scenario.params,
                                       scenario.seed)
        meta = {"final_mean_success": result.final_mean_success}
        if kind == "static-learn":
            asym = asymptotic_success(CANONICAL_ACTIONS, scenario.phi,
                                      scenario.params.ratio)
            meta["asymptotic_success"] = asym
            try:
                meta["tau90"] = learning_time_tau90(result.curve.mean_success,
                                                    0.9 * asym)
            except NotReached:
                meta["tau90"] = None
        if kind == "relearn-switch":
            switch = (scenario.rounds // 2 if scenario.switch_round is None
                      else scenario.switch_round)
            asym = asymptotic_success(CANONICAL_ACTIONS, scenario.phi_after,
                                      scenario.params.ratio)
            meta["asymptotic_success_after"] = asym
            try:
                meta["tau90_after_switch"] = learning_time_tau90(
                    result.curve.mean_success[switch:], 0.9 * asym)
            except NotReached:
                meta["tau90_after_switch"] = None
        columns, rows = _curve_rows([result.curve])
        snaps = (_snapshot_rows(result.action_angles, result.final_weights)
                 if scenario.snapshots else None)
        return ScenarioResult(kind, columns, rows, snaps, [result.curve], meta)

    if kind == "bisect-compose":
        step = (scenario.rounds // 2 if scenario.compose_round is None
                else scenario.compose_round)
        result = run_bisect_ensemble(scenario.phi, scenario.agents,
                                     scenario.params, scenario.seed, step,
                                     scenario.rounds)
        columns, rows = _curve_rows([result.curve])
        snaps = (_snapshot_rows(result.action_angles, result.final_weights)
                 if scenario.snapshots else None)
        meta = {"composed_angles": result.composed_angles,
                "final_mean_success": result.final_mean_success,
                "compose_round": step}
        return ScenarioResult(kind, columns, rows, snaps, [result.curve], meta)

    if kind == "glow-compose":
        result = run_glow_ensemble(scenario.phi, scenario.agents,
                                   scenario.params, scenario.seed,
                                   scenario.glow_threshold, scenario.rounds,
                                   scenario.proximity_factor)
        columns, rows = _curve_rows([result.curve])
        snaps = (_snapshot_rows(result.action_angles, result.final_weights)
                 if scenario.snapshots else None)
        meta = {"trigger_rounds": result.trigger_rounds,
                "kinds": result.kinds,
                "composed_angles": result.composed_angles,
                "success_at_composition": result.success_at_composition,
                "final_mean_success": result.final_mean_success}
        return ScenarioResult(kind, columns, rows, snaps, [result.curve], meta)

    if kind == "multi-percept":
        fb = run_feedback_ensemble(scenario.phi, scenario.agents,
                                   scenario.rounds, scenario.params,
                                   scenario.seed)
        curves = []
        for p_idx, percept in enumerate(fb.percepts):
            label = f"{percept[0]:.6f},{percept[1]}"
            curves.append(EnsembleCurve(fb.success_curves[p_idx],
                                        fb.min_curves[p_idx],
                                        fb.max_curves[p_idx],
                                        fb.rbar_curves[p_idx], percept=label))
        columns, rows = _curve_rows(curves)
        snaps = None
        if scenario.snapshots:
            snaps = []
            for j in range(scenario.agents):
                for p_idx, percept in enumerate(fb.percepts):
                    w = fb.final_weights[j, p_idx]
                    p = w / w.sum()
                    label = f"{percept[0]:.6f},{percept[1]}"
                    for a, angle in enumerate(CANONICAL_ACTIONS):
                        snaps.append((j, angle, p[a], w[a], label))
        meta = {"final_weights": fb.final_weights, "visit_counts": fb.visit_counts}
        return ScenarioResult(kind, columns, rows, snaps, curves, meta)

    if kind == "projector-sweep":
        rows_raw = sweep_asymptotics(scenario.direction_counts, scenario.ratio,
                                     scenario.grid_points)
        rows = [(r.direction_count, r.mean_success, r.min_success,
                 r.max_success) for r in rows_raw]
        return ScenarioResult(kind, SWEEP_COLUMNS, rows, meta={"rows": rows_raw})

    if kind == "grover-sweep":
        grid = np.arange(0.0, 2.0 * math.pi, scenario.grid_step)
        sweep = run_grover_sweep(grid, scenario.agents, scenario.seed,
                                 scenario.mc_runs, scenario.glow_threshold,
                                 scenario.params.reward_scale)
        rows = [(sweep.phis[i], sweep.success_unadapted[i],
                 sweep.success_fixed4[i], sweep.success_glow[i])
                for i in range(grid.size)]
        return ScenarioResult(kind, GROVER_COLUMNS, rows, meta={"sweep": sweep})

    if kind == "estimator-compare":
        cmp_result = run_estimator_comparison(scenario.phi, scenario.agents,
                                              scenario.rounds, scenario.params,
                                              scenario.seed)
        rows = [(j, cmp_result.ps_angles[j], cmp_result.tomography_angles[j],
                 cmp_result.bayes_means[j], cmp_result.bayes_spreads[j])
                for j in range(scenario.agents)]
        return ScenarioResult(kind, ESTIMATE_COLUMNS, rows,
                              meta={"comparison": cmp_result})

    raise ConfigError("kind", f"unhandled scenario kind {kind!r}")


def _format_cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return str(value)


def emit_csv(result: ScenarioResult, path, *, snapshot_path=None) -> None:
    """Write the scenario's table; bit-stable for a fixed seed and version.

    Floats carry 17 significant digits. Snapshots, when present and
    requested, go to their own file.
    """
    def write(rows, columns, target):
        try:
            with open(target, "w", newline="") as handle:
                writer = csv.writer(handle, lineterminator="\n")
                writer.writerow(columns)
                for row in rows:
                    writer.writerow([_format_cell(v) for v in row])
        except OSError as exc:
            raise OSError(f"while writing {target}: {exc}") from exc

    write(result.rows, result.columns, path)
    if result.snapshot_rows is not None and snapshot_path is not None:
        columns = SNAPSHOT_COLUMNS
        if result.snapshot_rows and len(result.snapshot_rows[0]) == 5:
            columns = SNAPSHOT_COLUMNS + ("percept",)
        write(result.snapshot_rows, columns, snapshot_path)
