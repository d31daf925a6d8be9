import math

import numpy as np
import pytest

from fieldadapt.composition import glow_compose
from fieldadapt.experiments import (ConfigError, Scenario, compose_from_glow_batch,
                                    emit_csv, field_schedule,
                                    race_glow_training, run_bisect_ensemble,
                                    run_glow_ensemble, run_grover_sweep,
                                    run_learning_ensemble, run_scenario,
                                    sweep_asymptotics)
from fieldadapt.grover import grover_analytic_success
from fieldadapt.pscore import (CANONICAL_ACTIONS, LearningParams,
                               asymptotic_success, learning_time_tau90,
                               single_percept_network)
from oracles import run_scalar_agent

HALF_PI = math.pi / 2


# --- scenario plumbing ------------------------------------------------------

def test_scenario_validation_field_messages():
    with pytest.raises(ConfigError) as err:
        run_scenario(Scenario(kind="nope"))
    assert err.value.field == "kind"
    with pytest.raises(ConfigError) as err:
        run_scenario(Scenario(kind="static-learn", agents=0))
    assert err.value.field == "agents"
    with pytest.raises(ConfigError) as err:
        run_scenario(Scenario(kind="relearn-switch"))
    assert err.value.field == "phi_after"
    with pytest.raises(ConfigError) as err:
        run_scenario(Scenario(kind="relearn-switch", phi_after=1.0,
                              switch_round=5000, rounds=100))
    assert err.value.field == "switch_round"


def test_field_schedules():
    relearn = Scenario(kind="relearn-switch", phi=0.0, phi_after=1.0,
                       rounds=10, switch_round=4)
    phis = field_schedule(relearn)
    assert np.allclose(phis, [0, 0, 0, 0, 1, 1, 1, 1, 1, 1])

    wobble = Scenario(kind="oscillating-field", rounds=5, omega=10.0,
                      amplitude=math.pi / 4)
    expected = [-math.pi / 4 * math.cos(10.0 * n) for n in range(5)]
    assert np.allclose(field_schedule(wobble), expected)

    drift = Scenario(kind="drifting-field", rounds=4, omega=0.25)
    assert np.allclose(field_schedule(drift), [0.0, 0.25, 0.5, 0.75])


# --- engine equivalence -----------------------------------------------------

def test_vectorized_learning_matches_scalar_reference_exactly():
    params = LearningParams(1.0, 0.01)
    phis = np.full(300, 0.6)
    seed = 31337
    batch = run_learning_ensemble(phis, 4, params, seed, record_outcomes=True)
    for j in range(4):
        net, outcomes = run_scalar_agent(phis, params, seed, j,
                                         record_outcomes=True)
        assert np.allclose(net.weights[0], batch.final_weights[j],
                           atol=0.0, rtol=0.0)
        assert np.array_equal(np.array(outcomes, dtype=np.uint8),
                              batch.outcomes[j])


def test_learning_curve_starts_uniform_and_approaches_solver():
    params = LearningParams(1.0, 0.01)
    result = run_learning_ensemble(np.zeros(800), 400, params, seed=7)
    assert result.curve.mean_success[0] == pytest.approx(0.5, abs=1e-12)
    target = asymptotic_success(CANONICAL_ACTIONS, 0.0, params.ratio)
    assert abs(result.final_mean_success - target) < 0.03


def test_faster_learning_when_rescaling_reward_and_damping():
    phis = np.zeros(700)
    slow = run_learning_ensemble(phis, 400, LearningParams(1.0, 0.01), seed=8)
    fast = run_learning_ensemble(phis, 400, LearningParams(10.0, 0.1), seed=8)
    target = 0.9 * asymptotic_success(CANONICAL_ACTIONS, 0.0, 100.0)
    tau_slow = learning_time_tau90(slow.curve.mean_success, target)
    tau_fast = learning_time_tau90(fast.curve.mean_success, target)
    assert tau_fast < tau_slow


def test_degenerate_reward_manifold_spreads_difference_not_sum():
    # at phi = pi/4 the 0 and pi/2 directions share one expected reward, so
    # the ensemble fills the manifold: p0 + p1 concentrates, p0 - p1 spreads
    params = LearningParams(1.0, 0.01)
    result = run_learning_ensemble(np.full(1000, math.pi / 4), 500, params, seed=9)
    probs = result.final_weights / result.final_weights.sum(axis=1, keepdims=True)
    sum_var = np.var(probs[:, 0] + probs[:, 1])
    diff_var = np.var(probs[:, 0] - probs[:, 1])
    assert sum_var * 5.0 <= diff_var


def test_oscillating_field_converges_to_average_angle():
    scenario = Scenario(kind="oscillating-field", agents=300, rounds=3000,
                        omega=10.0, seed=10)
    result = run_scenario(scenario)
    rbar = result.curves[0].rbar[-1]
    assert abs(rbar) > 0.8                      # near unit length
    assert abs(math.atan2(rbar.imag, rbar.real)) < 0.15


def test_slow_drift_is_tracked_better_than_fast_drift():
    params = LearningParams(1.0, 0.01)
    slow = run_learning_ensemble(math.pi / 5000 * np.arange(10000), 300,
                                 params, seed=11)
    fast = run_learning_ensemble(math.pi / 500 * np.arange(4000), 300,
                                 params, seed=11)
    tail_slow = np.abs(slow.curve.rbar[-2500:]).mean()
    tail_fast = np.abs(fast.curve.rbar[-1000:]).mean()
    assert tail_slow > tail_fast


def test_relearning_dips_then_recovers_to_new_asymptote():
    scenario = Scenario(kind="relearn-switch", agents=400, rounds=2000,
                        phi=0.0, phi_after=math.pi, seed=12)
    result = run_scenario(scenario)
    curve = result.curves[0].mean_success
    switch = 1000
    assert curve[switch - 1] > 0.9              # trained on the old angle
    assert curve[switch + 5] < 0.25             # the old policy now fails
    target = asymptotic_success(CANONICAL_ACTIONS, math.pi, 100.0)
    assert abs(curve[-1] - target) < 0.03
    assert result.meta["tau90_after_switch"] is not None


def test_relearning_time_is_quarter_turn_commensurate():
    # shifting both angles by pi/2 relabels the directions, so over a 4x4
    # grid of switches the relearning time must agree within ensemble noise
    params = LearningParams(1.0, 0.01)

    def tau(phi, phi_after, seed):
        phis = np.concatenate([np.full(800, phi), np.full(2200, phi_after)])
        result = run_learning_ensemble(phis, 200, params, seed=seed)
        target = 0.9 * asymptotic_success(CANONICAL_ACTIONS, phi_after, 100.0)
        return learning_time_tau90(result.curve.mean_success[800:], target)

    for i, phi in enumerate((0.15, 0.8, 1.45, 2.1)):
        for j, phi_after in enumerate((0.5, 1.2, 1.9, 2.6)):
            base = tau(phi, phi_after, seed=1000 + i * 4 + j)
            shifted = tau(phi + HALF_PI, phi_after + HALF_PI,
                          seed=2000 + i * 4 + j)
            assert abs(base - shifted) <= max(0.12 * max(base, shifted), 40), (
                phi, phi_after, base, shifted)


# --- composition ensembles --------------------------------------------------

def test_bisect_ensemble_inserts_quadrant_midpoint():
    # the fresh edge starts at weight 1, so unlike glow composition the new
    # direction is adopted gradually; success climbs from the 4-direction
    # plateau toward the 5-direction steady state
    result = run_bisect_ensemble(math.pi / 4, 150, LearningParams(1.0, 0.01),
                                 seed=15, compose_round=500, total_rounds=4000)
    near_midpoint = np.isclose(result.composed_angles, math.pi / 4, atol=1e-9)
    assert near_midpoint.mean() > 0.95
    curve = result.curve.mean_success
    plateau = curve[480:500].mean()
    assert plateau == pytest.approx(
        asymptotic_success(CANONICAL_ACTIONS, math.pi / 4, 100.0), abs=0.02)
    assert result.final_mean_success > 0.93    # tracking toward 0.9618
    assert curve[-1] > curve[1500] > plateau
    assert curve.size == 4000


def test_glow_ensemble_composes_accurately_and_jumps():
    result = run_glow_ensemble(math.pi / 4, 250, LearningParams(1.0, 0.01),
                               seed=16, glow_threshold=500.0, total_rounds=4500)
    assert all(kind == "inserted" for kind in result.kinds)
    assert np.all(result.trigger_rounds > 0)
    spread = np.std(np.unwrap(result.composed_angles - math.pi / 4))
    assert abs(np.mean(np.unwrap(result.composed_angles - math.pi / 4))) < 0.01
    assert 0.005 < spread < 0.06
    assert result.success_at_composition.mean() > 0.98
    # curve sits at 1/2 while glow accumulates, then steps up
    assert np.allclose(result.curve.mean_success[:500], 0.5, atol=1e-12)
    assert result.curve.mean_success[-1] > 0.95


def test_glow_ensemble_relaxes_to_augmented_solver_value_from_above():
    # freshly composed weight exceeds its steady-state value, so the curve
    # overshoots and then decays onto the 5-direction solver value
    solver = asymptotic_success(list(CANONICAL_ACTIONS) + [math.pi / 4],
                                math.pi / 4, 100.0)
    result = run_glow_ensemble(math.pi / 4, 300, LearningParams(1.0, 0.01),
                               seed=16, glow_threshold=500.0, total_rounds=6000)
    assert result.trigger_rounds.max() < 3000
    assert result.curve.mean_success[3000] > solver
    assert abs(result.final_mean_success - solver) < 0.01


def test_learning_ensemble_invariant_under_chunking():
    params = LearningParams(1.0, 0.01)
    phis = np.full(150, 0.9)
    small = run_learning_ensemble(phis, 8, params, seed=88, chunk_rounds=7)
    large = run_learning_ensemble(phis, 8, params, seed=88, chunk_rounds=4096)
    assert np.array_equal(small.final_weights, large.final_weights)
    assert np.array_equal(small.curve.mean_success, large.curve.mean_success)


@pytest.mark.parametrize("phi", [0.0, HALF_PI])
def test_glow_ensemble_strengthens_on_matching_field(phi):
    result = run_glow_ensemble(phi, 250, LearningParams(1.0, 0.01),
                               seed=17, glow_threshold=500.0, total_rounds=4500)
    inserted = sum(kind == "inserted" for kind in result.kinds)
    assert inserted / 250 < 0.02
    assert result.success_at_composition.mean() > 0.98


def test_glow_composed_angle_is_unbiased_off_grid():
    # the glow resultant estimates the field angle itself, also when the
    # field is not halfway between directions
    phi = math.pi / 8
    result = run_glow_ensemble(phi, 400, LearningParams(1.0, 0.01),
                               seed=27, glow_threshold=500.0, total_rounds=4500)
    assert all(kind == "inserted" for kind in result.kinds)
    deviations = np.unwrap(result.composed_angles - phi)
    assert abs(deviations.mean()) < 0.01
    assert math.pi / 200 < deviations.std() < 3 * math.pi / 200


def test_race_trainer_matches_round_based_glow_distribution():
    phi = math.pi / 4
    per_round = run_glow_ensemble(phi, 400, LearningParams(1.0, 0.01),
                                  seed=18, glow_threshold=500.0,
                                  total_rounds=4500)
    raced = race_glow_training(phi, 400, 500.0, seed=19)
    angles_round = per_round.composed_angles
    res = raced @ np.exp(1j * np.asarray(CANONICAL_ACTIONS))
    angles_race = np.mod(np.angle(res), 2.0 * math.pi)
    # same law: compare mean and spread of the composed angle and the totals
    assert np.mean(np.unwrap(angles_race - phi)) == pytest.approx(
        np.mean(np.unwrap(angles_round - phi)), abs=0.005)
    assert np.std(np.unwrap(angles_race - phi)) == pytest.approx(
        np.std(np.unwrap(angles_round - phi)), rel=0.35)
    assert raced.sum(axis=1).mean() == pytest.approx(
        per_round.total_glow.mean(), rel=0.02)


def test_batched_composition_matches_scalar_glow_compose():
    rng = np.random.default_rng(20)
    registers = rng.uniform(0.0, 400.0, size=(300, 4))
    registers[np.arange(300), rng.integers(0, 4, size=300)] += 500.0
    angles, probs, inserted = compose_from_glow_batch(registers)
    for j in range(300):
        net = single_percept_network()
        net.glow[0] = registers[j]
        outcome = glow_compose(net)
        if outcome.kind == "inserted":
            assert inserted[j]
            assert angles[j, 4] == pytest.approx(net.actions[4], abs=1e-12)
            expect = net.weights[0] / net.weights[0].sum()
            assert np.allclose(probs[j], expect, atol=1e-12)
        else:
            assert not inserted[j]
            expect = net.weights[0] / net.weights[0].sum()
            assert np.allclose(probs[j, :4], expect, atol=1e-12)
            assert probs[j, 4] == 0.0


# --- sweeps -----------------------------------------------------------------

def test_sweep_asymptotics_symmetry_and_monotone_tail():
    rows = sweep_asymptotics((4, 8), ratio=100.0, grid_points=360)
    four, eight = rows
    assert four.direction_count == 4
    assert four.max_success == pytest.approx(0.9705, abs=0.001)
    assert four.min_success == pytest.approx(0.8341, abs=0.001)
    assert eight.max_success < four.max_success      # more directions, lower best
    assert eight.min_success > four.min_success      # but better worst case


def test_sweep_average_decays_toward_one_half_for_many_directions():
    # constant damping caps how much weight the crowd of near-equivalent
    # directions can hold, so the angular average slides toward chance
    rows = sweep_asymptotics((16, 24, 48, 96), ratio=100.0, grid_points=96)
    means = [row.mean_success for row in rows]
    assert all(a > b for a, b in zip(means, means[1:]))
    assert means[-1] < 0.65
    assert all(m > 0.5 for m in means)


def test_grover_sweep_is_deterministic_for_a_seed():
    grid = np.linspace(0.0, 2.0 * math.pi, 8, endpoint=False)
    first = run_grover_sweep(grid, agents_per_phi=100, seed=30, mc_runs=500)
    second = run_grover_sweep(grid, agents_per_phi=100, seed=30, mc_runs=500)
    assert np.array_equal(first.success_unadapted, second.success_unadapted)
    assert np.array_equal(first.success_glow, second.success_glow)
    third = run_grover_sweep(grid, agents_per_phi=100, seed=31, mc_runs=500)
    assert not np.array_equal(first.success_glow, third.success_glow)


def test_grover_sweep_small_grid():
    grid = np.linspace(0.0, 2.0 * math.pi, 12, endpoint=False)
    sweep = run_grover_sweep(grid, agents_per_phi=150, seed=21, mc_runs=2000)
    for i, phi in enumerate(grid):
        p = grover_analytic_success(phi)
        stderr = math.sqrt(max(p * (1.0 - p), 1e-12) / 2000)
        assert abs(sweep.success_unadapted[i] - p) <= 4.0 * stderr + 1e-9
        assert sweep.success_fixed4[i] >= p - 1e-12
    assert sweep.success_glow.mean() > 0.95


# --- output -----------------------------------------------------------------

def test_run_scenario_deterministic_and_csv_stable(tmp_path):
    scenario = Scenario(kind="static-learn", agents=40, rounds=30, seed=22,
                        snapshots=True)
    first = run_scenario(scenario)
    second = run_scenario(scenario)
    assert first.rows == second.rows
    out_a = tmp_path / "a.csv"
    out_b = tmp_path / "b.csv"
    emit_csv(first, out_a, snapshot_path=tmp_path / "a_snap.csv")
    emit_csv(second, out_b, snapshot_path=tmp_path / "b_snap.csv")
    assert out_a.read_bytes() == out_b.read_bytes()
    assert (tmp_path / "a_snap.csv").read_bytes() == (tmp_path / "b_snap.csv").read_bytes()

    header = out_a.read_text().splitlines()[0]
    assert header == "round,mean_success,min_success,max_success,rbar_re,rbar_im"
    assert len(out_a.read_text().splitlines()) == 31      # header + 30 rounds
    snap_header = (tmp_path / "a_snap.csv").read_text().splitlines()[0]
    assert snap_header == "agent,alpha,p_alpha,h_alpha"


def test_emit_csv_header_only_for_empty_rows(tmp_path):
    from fieldadapt.experiments import CURVE_COLUMNS, ScenarioResult
    empty = ScenarioResult("static-learn", CURVE_COLUMNS, [])
    path = tmp_path / "empty.csv"
    emit_csv(empty, path)
    assert path.read_text() == "round,mean_success,min_success,max_success,rbar_re,rbar_im\n"


def test_emit_csv_errors_carry_path_context(tmp_path):
    result = run_scenario(Scenario(kind="static-learn", agents=2, rounds=2, seed=1))
    bad = tmp_path / "missing_dir" / "x.csv"
    with pytest.raises(OSError) as err:
        emit_csv(result, bad)
    assert "x.csv" in str(err.value)


def test_multi_percept_scenario_rows_have_percept_column():
    scenario = Scenario(kind="multi-percept", agents=20, rounds=50, seed=23)
    result = run_scenario(scenario)
    assert result.columns[-1] == "percept"
    assert len(result.rows) == 8 * 50


def test_glow_scenario_snapshots_skip_inert_column(tmp_path):
    scenario = Scenario(kind="glow-compose", agents=15, rounds=4000, seed=25,
                        phi=0.0, snapshots=True)
    result = run_scenario(scenario)
    strengthened = sum(k == "strengthened" for k in result.meta["kinds"])
    rows_per_agent = {}
    for agent, alpha, p_alpha, h_alpha in result.snapshot_rows:
        rows_per_agent[agent] = rows_per_agent.get(agent, 0) + 1
        assert h_alpha > 0.0
    assert sum(1 for n in rows_per_agent.values() if n == 4) == strengthened


def test_multi_percept_snapshots_append_percept_label(tmp_path):
    scenario = Scenario(kind="multi-percept", agents=3, rounds=10, seed=26,
                        snapshots=True)
    result = run_scenario(scenario)
    assert len(result.snapshot_rows) == 3 * 8 * 4
    assert len(result.snapshot_rows[0]) == 5
    emit_csv(result, tmp_path / "m.csv", snapshot_path=tmp_path / "m_snap.csv")
    header = (tmp_path / "m_snap.csv").read_text().splitlines()[0]
    assert header == "agent,alpha,p_alpha,h_alpha,percept"


def test_estimator_compare_scenario_recovers_the_angle():
    scenario = Scenario(kind="estimator-compare", agents=10, rounds=1500,
                        phi=math.pi / 4, seed=24)
    result = run_scenario(scenario)
    comparison = result.meta["comparison"]
    assert np.allclose(comparison.bayes_means, math.pi / 4, atol=0.12)
    assert np.all(comparison.bayes_spreads < 0.1)
    # ten agents' records pin the tomography angle to within 0.1
    tomo_mean = np.angle(np.exp(1j * comparison.tomography_angles).mean())
    assert abs(tomo_mean - math.pi / 4) < 0.1
    assert len(result.rows) == 10
