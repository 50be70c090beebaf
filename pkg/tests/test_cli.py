import csv
import io
import json
import math
import os
import subprocess
import sys
import textwrap

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hardygauge import Exponents, Interval, OptimizerOptions, PiecewiseConstant, Power, Tabulated
from hardygauge import cli
from hardygauge.cli import (
    HEADER,
    ConfigError,
    GridSpec,
    OutputSpec,
    RunConfig,
    ScenarioSpec,
    applicable,
    emit_report,
    format_report,
    parse_config,
    render_config,
    run_analyze,
)

MINIMAL = textwrap.dedent("""\
    [scenario.unit]
    a = 0
    b = 1
    p = 2
    q = 1
    v = power c=1 alpha=0
    w = power c=1 alpha=0
    """)

TWO = MINIMAL + textwrap.dedent("""\

    [scenario.hardy]
    a = 0
    b = inf
    p = 2
    q = 2
    v = power c=1 alpha=0
    w = power c=1 alpha=-2

    [grid]
    n = 128

    [estimator]
    restarts = 2
    max_iters = 300
    """)


def run_cli(*args, env=None):
    full_env = dict(os.environ, **(env or {}))
    return subprocess.run([sys.executable, "-m", "hardygauge", *args],
                          capture_output=True, text=True, env=full_env)


def test_parse_minimal_defaults():
    cfg = parse_config(MINIMAL)
    assert len(cfg.scenarios) == 1
    sc = cfg.scenarios[0]
    assert sc.name == "unit" and sc.exp == Exponents(2.0, 1.0)
    assert sc.conditions == applicable(sc.exp)
    assert cfg.grid == GridSpec() and cfg.epsilons == "default"
    assert cfg.estimator == OptimizerOptions() and cfg.output == OutputSpec()


def test_parse_weights():
    text = MINIMAL.replace("w = power c=1 alpha=0", "w = piecewise breaks=0.5 values=1,3")
    text = text.replace("v = power c=1 alpha=0", "v = tabulated nodes=0,0.5 values=2,4")
    sc = parse_config(text).scenarios[0]
    assert sc.w == PiecewiseConstant([0.5], [1, 3])
    assert sc.v == Tabulated([0.0, 0.5], [2, 4])


@pytest.mark.parametrize("text, line, needle", [
    (MINIMAL + "\n[epsilons]\nvalues = []\n", 10, "empty"),
    (MINIMAL.replace("q = 1", "q = 3") + "conditions = mazya_rosin\n", 8, "convex"),
    (MINIMAL + "colour = red\n", 8, "unknown key"),
    (MINIMAL.replace("p = 2", "p = two"), 4, "malformed"),
    (MINIMAL.replace("v = power c=1 alpha=0\n", ""), 1, "missing"),
    (MINIMAL + "\n[grid]\nn = 8\n", 10, "16"),
    (MINIMAL + "\n[bogus]\nx = 1\n", 9, "unknown section"),
    (MINIMAL.replace("alpha=0\nw", "alpha=0 beta=1\nw"), 6, "parameter"),
    (MINIMAL.replace("a = 0", "a = -1"), 6, "valid on"),
    (MINIMAL + "\n[epsilons]\nvalues = 1, -2\n", 10, "positive"),
    ("[grid]\nn = 32\n", None, "scenario"),
])
def test_parse_errors(text, line, needle):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.line == line
    assert needle in str(info.value)


finite = st.floats(0.05, 20.0)
weights = st.one_of(
    st.builds(Power, finite, st.floats(-0.9, 2.0)),
    st.builds(lambda vals: PiecewiseConstant([0.25, 0.5, 0.75][:len(vals) - 1], vals),
              st.lists(finite, min_size=1, max_size=4)),
    st.builds(lambda vals: Tabulated([0.0, 0.3, 0.6][:len(vals)], vals),
              st.lists(finite, min_size=1, max_size=3)),
)
exps = st.sampled_from([(1.0, 1.0), (2.0, 2.0), (2.0, 1.0), (3.0, 0.5), (1.5, 4.0), (1.0, 0.5)])


@st.composite
def configs(draw):
    n_sc = draw(st.integers(1, 3))
    scs = []
    for k in range(n_sc):
        exp = Exponents(*draw(exps))
        ok = applicable(exp)
        chosen = draw(st.lists(st.sampled_from(ok), min_size=1, unique=True))
        conds = tuple(c for c in cli.CONDITION_NAMES if c in chosen)
        scs.append(ScenarioSpec(f"s{k}", Interval(0.0, 1.0), draw(weights), draw(weights), exp, conds))
    grid = GridSpec(draw(st.integers(16, 5000)), draw(st.sampled_from(["auto", "linear", "log"])),
                    draw(st.sampled_from([None, 1e-5])), draw(st.sampled_from([None, 0.9])))
    eps = draw(st.one_of(st.just("default"),
                         st.lists(st.floats(0.01, 10.0), min_size=1, max_size=4).map(tuple)))
    est = OptimizerOptions(draw(st.integers(1, 5000)), draw(st.integers(0, 20)),
                           draw(st.floats(0.01, 10.0)), draw(st.floats(1e-14, 1e-3)),
                           draw(st.integers(0, 2 ** 31)))
    out = OutputSpec(draw(st.sampled_from([None, "out.csv"])), draw(st.sampled_from(["csv", "jsonl"])))
    return RunConfig(tuple(scs), grid, eps, est, out)


@settings(max_examples=60, deadline=None)
@given(configs())
def test_render_parse_round_trip(cfg):
    assert parse_config(render_config(cfg)) == cfg


def test_run_analyze_rows():
    rows = run_analyze(parse_config(TWO), threads=2)
    ids = [(r["scenario_id"], r["epsilon"]) for r in rows]
    assert ids == sorted(ids)
    hardy = [r for r in rows if r["scenario_id"] == "hardy"]
    assert [r["epsilon"] for r in hardy] == [0.25, 0.5, 1.0, 2.0, 4.0]
    for r in hardy:
        assert r["B1_eps"] is None and r["mazya_rosin"] is None and r["residual_b1b2"] is None
        # 128 nodes over twelve decades: coarse, hence the loose tolerance
        assert r["A_eps"] == pytest.approx(r["epsilon"] ** -0.5, rel=0.1)
    unit = [r for r in rows if r["scenario_id"] == "unit"]
    assert unit[2]["B1_eps"] == pytest.approx(6 ** -0.5, rel=5e-3)
    assert unit[0]["A_eps"] is None and unit[0]["muckenhoupt"] is None
    assert unit[0]["C_hat"] == pytest.approx(3 ** -0.5, rel=0.01)


def test_infinite_v_reported_as_inf(tmp_path):
    text = MINIMAL.replace("v = power c=1 alpha=0", "v = power c=1 alpha=2") + "\n[grid]\nn = 32\n"
    cfg_path = tmp_path / "c.ini"
    cfg_path.write_text(text)
    res = run_cli("analyze", "--config", str(cfg_path))
    assert res.returncode == 0, res.stderr
    rows = list(csv.DictReader(io.StringIO(res.stdout)))
    assert rows[0]["B1_eps"] == "inf" and rows[0]["B2_eps"] == "inf"
    assert rows[0]["A_eps"] == ""


def test_report_formats():
    row = dict.fromkeys(HEADER)
    row.update(scenario_id="x", p=2.0, q=3.0, epsilon=0.1, A_eps=math.inf, muckenhoupt=1 / 3, grid_n=64)
    text = format_report([row], "csv")
    header, line = text.splitlines()
    assert header == ("scenario_id,p,q,epsilon,A_eps,B1_eps,B2_eps,A_PS,muckenhoupt,"
                      "mazya_rosin,C_hat,witness_lb,residual_b1b2,grid_n")
    assert line == "x,2.0,3.0,0.1,inf,,,,0.3333333333333333,,,,,64"
    obj = json.loads(format_report([row], "jsonl"))
    assert list(obj) == list(HEADER)
    assert obj["A_eps"] == "inf" and obj["B1_eps"] is None and obj["muckenhoupt"] == 1 / 3
    with pytest.raises(ValueError):
        emit_report([], "csv", None)


def test_failed_cell_marks_and_exit_code(tmp_path, monkeypatch):
    def boom(*a, **k):
        raise FloatingPointError("overflow")

    monkeypatch.setattr(cli.cond, "b2_eps", boom)
    cfg = parse_config(MINIMAL + "\n[grid]\nn = 32\n[epsilons]\nvalues = 1\n")
    rows = run_analyze(cfg, threads=1)
    assert rows[0]["B2_eps"] == "failed" and cli.has_failures(rows)
    p = tmp_path / "c.ini"
    p.write_text(render_config(cfg))
    assert cli.main(["analyze", "--config", str(p), "--out", str(tmp_path / "o.csv")]) == 3
    assert "failed" in (tmp_path / "o.csv").read_text()


def test_black_box_determinism_and_exit_codes(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text(TWO)
    outs = []
    for k in range(2):
        out = tmp_path / f"r{k}.csv"
        res = run_cli("analyze", "--config", str(cfg), "--out", str(out),
                      env={"HARDY_GAUGE_THREADS": str(k + 1)})
        assert res.returncode == 0, res.stderr
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    assert outs[0].decode().splitlines()[0] == ",".join(HEADER)

    bad = tmp_path / "bad.ini"
    bad.write_text(MINIMAL + "\n[epsilons]\nvalues = []\n")
    res = run_cli("analyze", "--config", str(bad))
    assert res.returncode == 2 and "line 10" in res.stderr

    res = run_cli("analyze", "--config", str(cfg), "--out", str(tmp_path / "no" / "such" / "dir.csv"))
    assert res.returncode == 3

    res = run_cli("analyze", "--config", str(cfg), env={"HARDY_GAUGE_THREADS": "zero"})
    assert res.returncode == 2


def test_sweep_and_estimate_subcommands(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text(TWO)
    res = run_cli("sweep-eps", "--config", str(cfg), "--eps-min", "0.5", "--eps-max", "2",
                  "--eps-steps", "3", "--format", "jsonl")
    assert res.returncode == 0, res.stderr
    rows = [json.loads(x) for x in res.stdout.splitlines()]
    assert [r["epsilon"] for r in rows if r["scenario_id"] == "hardy"] == pytest.approx([0.5, 1.0, 2.0])
    res = run_cli("sweep-eps", "--config", str(cfg), "--eps-min", "2", "--eps-max", "1", "--eps-steps", "3")
    assert res.returncode == 2

    res = run_cli("estimate", "--config", str(cfg), "--scenario", "hardy")
    assert res.returncode == 0, res.stderr
    est = json.loads(res.stdout)
    assert abs(est["C_hat"] - est["spectral_crosscheck"]) <= 1e-6 * est["C_hat"]
    res = run_cli("estimate", "--config", str(cfg), "--scenario", "nope")
    assert res.returncode == 2
