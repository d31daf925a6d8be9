import math

from fieldadapt.cli import build_parser, main, scenario_from_args


def test_learn_subcommand_writes_curve_csv(tmp_path):
    out = tmp_path / "learn.csv"
    code = main(["learn", "--phi", "0.5", "--agents", "25", "--rounds", "40",
                 "--seed", "3", "--out", str(out)])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "round,mean_success,min_success,max_success,rbar_re,rbar_im"
    assert len(lines) == 41


def test_snapshots_flag_writes_second_file(tmp_path):
    out = tmp_path / "learn.csv"
    code = main(["learn", "--agents", "10", "--rounds", "10", "--seed", "1",
                 "--out", str(out), "--snapshots"])
    assert code == 0
    snap = tmp_path / "learn_snapshots.csv"
    assert snap.exists()
    assert snap.read_text().splitlines()[0] == "agent,alpha,p_alpha,h_alpha"
    assert len(snap.read_text().splitlines()) == 41          # 10 agents x 4 actions


def test_config_file_supplies_defaults_and_flags_override(tmp_path):
    config = tmp_path / "run.toml"
    config.write_text(
        "[learn]\nphi = 0.25\nagents = 12\nrounds = 15\nseed = 9\n")
    out = tmp_path / "out.csv"
    args = build_parser().parse_args(
        ["learn", "--config", str(config), "--agents", "5", "--out", str(out)])
    scenario = scenario_from_args(args)
    assert scenario.phi == 0.25
    assert scenario.agents == 5           # flag wins
    assert scenario.rounds == 15
    assert scenario.seed == 9


def test_unknown_config_key_is_a_config_error(tmp_path):
    config = tmp_path / "bad.toml"
    config.write_text("[learn]\nwibble = 3\n")
    out = tmp_path / "out.csv"
    code = main(["learn", "--config", str(config), "--out", str(out)])
    assert code == 2


def test_malformed_toml_is_a_config_error(tmp_path):
    config = tmp_path / "broken.toml"
    config.write_text("[learn\nphi = ")
    code = main(["learn", "--config", str(config), "--out", str(tmp_path / "x.csv")])
    assert code == 2


def test_invalid_scenario_value_is_a_config_error(tmp_path):
    code = main(["learn", "--agents", "0", "--out", str(tmp_path / "x.csv")])
    assert code == 2


def test_unwritable_output_is_an_io_error(tmp_path):
    code = main(["learn", "--agents", "2", "--rounds", "2",
                 "--out", str(tmp_path / "nowhere" / "x.csv")])
    assert code == 4


def test_relearn_requires_new_angle(tmp_path):
    code = main(["relearn", "--agents", "2", "--rounds", "4",
                 "--out", str(tmp_path / "x.csv")])
    assert code == 2
    out = tmp_path / "ok.csv"
    code = main(["relearn", "--phi", "0", "--phi-after", "1.0", "--agents", "5",
                 "--rounds", "10", "--out", str(out)])
    assert code == 0


def test_drift_mode_switches_scenario_kind():
    args = build_parser().parse_args(["drift", "--mode", "oscillating"])
    assert scenario_from_args(args).kind == "oscillating-field"
    args = build_parser().parse_args(["drift"])
    assert scenario_from_args(args).kind == "drifting-field"


def test_compose_method_switches_scenario_kind():
    args = build_parser().parse_args(["compose", "--method", "bisect"])
    assert scenario_from_args(args).kind == "bisect-compose"
    args = build_parser().parse_args(["compose"])
    scenario = scenario_from_args(args)
    assert scenario.kind == "glow-compose"
    assert scenario.rounds == 6000        # room for every agent to trigger


def test_sweep_counts_parsing(tmp_path):
    out = tmp_path / "sweep.csv"
    code = main(["sweep", "--counts", "2,4", "--grid-points", "24",
                 "--out", str(out)])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "direction_count,mean_success,min_success,max_success"
    assert len(lines) == 3


def test_estimate_defaults_mirror_reference_setup():
    args = build_parser().parse_args(["estimate"])
    scenario = scenario_from_args(args)
    assert scenario.agents == 10
    assert scenario.rounds == 1500


def test_grover_subcommand_small_run(tmp_path):
    out = tmp_path / "grover.csv"
    code = main(["grover", "--grid-step", str(math.pi / 3), "--agents", "40",
                 "--mc-runs", "200", "--seed", "5", "--out", str(out)])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "phi,success_unadapted,success_fixed4,success_glow"
    assert len(lines) == 7


def test_multi_subcommand_small_run(tmp_path):
    out = tmp_path / "multi.csv"
    code = main(["multi", "--agents", "6", "--rounds", "20", "--out", str(out)])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "round,mean_success,min_success,max_success,rbar_re,rbar_im,percept"
    assert len(lines) == 1 + 8 * 20
