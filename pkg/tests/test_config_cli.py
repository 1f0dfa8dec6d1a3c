import hashlib
from pathlib import Path

import pytest

from misesim.cli import INTERVAL_HEADER, SUMMARY_HEADER, SWEEP_HEADER, main
from misesim.config import load_config, parse_bound, parse_bounds, parse_config_text
from misesim.errors import ConfigurationError
from misesim.policies import MISE_QOS
from misesim.workloads import microbench_spec

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

SMALL = """
[run]
seed = 3
horizon = 60000
epoch_len = 1000
interval_len = 20000

[app]
compute_gap = 0
row_locality = 0.5

[app]
compute_gap = 30
row_locality = 0.2
mlp_limit = 2
"""


@pytest.fixture
def small_cfg(tmp_path):
    p = tmp_path / "small.cfg"
    p.write_text(SMALL)
    return p


def run_cli(args, tmp_path, name="out.csv"):
    out = tmp_path / name
    code = main(args + ["--out", str(out)])
    return code, out.read_text() if out.exists() else None


def blocks(text):
    return [b.splitlines() for b in text.split("\n\n")]


def test_parse_config_sections():
    exp = parse_config_text(
        "seed = 4\n[dram]\nbanks_per_channel = 4\n[qos]\naoi = 1\nbound = 10/4\n"
        "[app]\ncompute_gap = 5\n[app]\nmicrobench = 3\nmlp_limit = 1\n[run]\npolicy = mise-qos\n"
    )
    assert exp.seed == 4 and exp.policy == MISE_QOS
    assert exp.dram.banks_per_channel == 4
    assert exp.qos.aoi == 1 and exp.qos.bound == 2.5
    assert exp.apps[0].compute_gap == 5
    assert exp.apps[1].compute_gap == microbench_spec(3).compute_gap and exp.apps[1].mlp_limit == 1


@pytest.mark.parametrize("text, fragment", [
    ("[app]\ncompute_gap = x\n", "line 2"),
    ("[app]\nspeed = 3\n", "unknown key"),
    ("[cache]\n", "unknown section"),
    ("[app\n", "unterminated"),
    ("[run]\nseed = 1\n", "no [app]"),
    ("[run]\npolicy = atlas\n[app]\n", "unknown policy"),
    ("[run]\nepoch_len = 300\ninterval_len = 1000\n[app]\n", "multiple of epoch_len"),
    ("[qos]\naoi = 2\n[app]\n", "out of range"),
    ("[app]\ntrace_path = missing.trace\n", "not found"),
    ("[app]\nrow_locality = 2\n", "row_locality"),
])
def test_config_errors(text, fragment):
    with pytest.raises(ConfigurationError, match=fragment.replace("[", r"\[")):
        parse_config_text(text)


def test_trace_path_relative_to_config(tmp_path):
    (tmp_path / "a.trace").write_text("3,0\n")
    cfg = tmp_path / "t.cfg"
    cfg.write_text("[app]\ntrace_path = a.trace\n")
    exp = load_config(cfg)
    assert exp.apps[0].kind == "trace" and Path(exp.apps[0].trace_path) == tmp_path / "a.trace"


def test_bounds_parsing():
    assert parse_bound("10/4") == 2.5
    assert parse_bounds("10/1, 2.5,") == (10.0, 2.5)
    with pytest.raises(ConfigurationError):
        parse_bound("ten")
    with pytest.raises(ConfigurationError):
        parse_bound("1/0")


def test_run_minimal_config(small_cfg, tmp_path):
    code, text = run_cli(["run", "--config", str(small_cfg)], tmp_path)
    assert code == 0
    intervals, summary = blocks(text)
    assert intervals[0] == ",".join(INTERVAL_HEADER)
    assert len(intervals) == 1 + 3 * 2
    assert summary[0] == ",".join(SUMMARY_HEADER)
    assert len(summary) == 1 + 2 + 1
    for block in (intervals, summary):
        assert len({line.count(",") for line in block}) == 1


def test_run_short_horizon_emits_intervals_only(small_cfg, tmp_path):
    code, text = run_cli(["run", "--config", str(small_cfg), "--horizon", "20000"], tmp_path)
    assert code == 0
    assert len(blocks(text)) == 1


def test_missing_config_exit_2(tmp_path, capsys):
    code, _ = run_cli(["run", "--config", str(tmp_path / "nope.cfg")], tmp_path)
    assert code == 2
    assert "config error" in capsys.readouterr().err


def test_bad_config_exit_2(tmp_path):
    p = tmp_path / "bad.cfg"
    p.write_text("[app]\ncompute_gap = -4\n")
    assert run_cli(["run", "--config", str(p)], tmp_path)[0] == 2


def test_compare_models_short_horizon_exit_2(small_cfg, tmp_path):
    # under two intervals there is no post-warmup interval to score
    code, _ = run_cli(["compare-models", "--config", str(small_cfg), "--horizon", "30000"], tmp_path)
    assert code == 2


def test_simulation_failure_exit_1(tmp_path, capsys):
    # the trace runs out during warmup, so the app makes no scored progress
    (tmp_path / "a.trace").write_text("3,0\n3,8\n")
    p = tmp_path / "t.cfg"
    p.write_text("[run]\nhorizon = 40000\nepoch_len = 1000\ninterval_len = 20000\n[app]\ntrace_path = a.trace\n")
    assert run_cli(["compare-models", "--config", str(p)], tmp_path)[0] == 1
    assert "simulation failed" in capsys.readouterr().err


def test_unwritable_output_exit_1(small_cfg, tmp_path):
    assert main(["run", "--config", str(small_cfg), "--out", str(tmp_path / "missing" / "x.csv")]) == 1


def test_compare_models_rows(small_cfg, tmp_path):
    code, text = run_cli(["compare-models", "--config", str(small_cfg)], tmp_path)
    assert code == 0
    lines = text.splitlines()
    assert lines[0] == ",".join(SUMMARY_HEADER)
    assert len(lines) == 1 + 2 + 1
    assert lines[-1].startswith("all,")


def test_compare_models_solo_errors_small(tmp_path):
    code, text = run_cli(["compare-models", "--config", str(CONFIGS / "solo.cfg")], tmp_path)
    assert code == 0
    mise, stfm = (float(x) for x in text.splitlines()[-1].split(",")[-2:])
    assert mise <= 5.0 and stfm <= 5.0


def test_sweep_bounds(small_cfg, tmp_path):
    code, text = run_cli(["sweep-bounds", "--config", str(small_cfg), "--bounds", "10/2,10/8"], tmp_path)
    assert code == 0
    lines = text.splitlines()
    assert lines[0] == ",".join(SWEEP_HEADER)
    assert [line.split(",")[0] for line in lines[1:]] == ["mise-qos", "mise-qos", "always-prioritize"]
    assert lines[1].split(",")[1] == "5.000000"


def test_sweep_empty_bounds_exit_2(small_cfg, tmp_path):
    assert run_cli(["sweep-bounds", "--config", str(small_cfg), "--bounds", ""], tmp_path)[0] == 2
    assert run_cli(["sweep-bounds", "--config", str(small_cfg)], tmp_path)[0] == 2


@pytest.mark.parametrize("command", ["run", "compare-models", "sweep-bounds"])
def test_byte_identical_output(small_cfg, tmp_path, command):
    extra = ["--bounds", "10/3"] if command == "sweep-bounds" else []
    args = [command, "--config", str(small_cfg)] + extra
    _, a = run_cli(args, tmp_path, "a.csv")
    _, b = run_cli(args, tmp_path, "b.csv")
    assert hashlib.sha256(a.encode()).hexdigest() == hashlib.sha256(b.encode()).hexdigest()
    assert "\r" not in a


def test_seed_override_changes_output(small_cfg, tmp_path):
    _, a = run_cli(["run", "--config", str(small_cfg)], tmp_path, "a.csv")
    _, b = run_cli(["run", "--config", str(small_cfg), "--seed", "4"], tmp_path, "b.csv")
    assert a != b


def test_stdout_when_no_out(small_cfg, capsys):
    assert main(["compare-models", "--config", str(small_cfg)]) == 0
    assert capsys.readouterr().out.startswith(",".join(SUMMARY_HEADER))


@pytest.mark.parametrize("name", ["solo.cfg", "mix4.cfg", "qos.cfg"])
def test_shipped_configs_load(name):
    exp = load_config(CONFIGS / name)
    assert exp.apps
