import json
import math

import numpy as np
import pytest

from katoscope.cli import main
from katoscope.config import (
    ConfigError,
    build_model,
    build_potential,
    build_region,
    emit_config,
    parse_config,
    scenarios_from_text,
)
from katoscope.geometry import (
    ClosedBall,
    ConformalCircle,
    Euclidean,
    Hyperbolic,
    Sphere,
    Torus,
    WholeSpace,
)
from katoscope.potentials import Bump, Constant, LogSingularity, PowerSingularity

SAMPLE = """\
# suite header comment
defaults
  model euclidean:2
  t 0.5

scenario
  name first
  op norm
  potential constant:1.0  # trailing comment

scenario
  name second
  op norm
  model torus:1.0
  potential bump:0.4:2.0
  t 0.25
  t 0.75
"""


def test_parse_emit_roundtrip():
    tree = parse_config(SAMPLE)
    text = emit_config(tree)
    assert parse_config(text) == tree
    # canonical emit is idempotent
    assert emit_config(parse_config(text)) == text


def test_scalar_typing_and_lists():
    tree = parse_config("a 1\nb 2.5\nc true\nd label\na 7\n")
    assert tree["a"] == [1, 7]
    assert tree["b"] == 2.5
    assert tree["c"] is True
    assert tree["d"] == "label"


def test_tabs_are_rejected():
    with pytest.raises(ConfigError):
        parse_config("scenario\n\top norm\n")


def test_model_descriptors():
    assert build_model("euclidean:3") == Euclidean(3)
    assert build_model("torus:0.5:0.5") == Torus(2, (0.5, 0.5))
    assert build_model("sphere:2:0.5") == Sphere(2, 0.5)
    assert build_model("hyperbolic:3:2.0") == Hyperbolic(3, 2.0)
    cc = build_model("conformal:0.0:0.0:0.3")
    assert isinstance(cc, ConformalCircle) and cc.sin_coeffs == (0.3,)
    with pytest.raises(ConfigError):
        build_model("mobius:1")


def test_potential_and_region_descriptors():
    m = Euclidean(3)
    w = build_potential("power:1.5:1.0", m)
    assert isinstance(w, PowerSingularity) and w.exponent == 1.5 and w.cutoff == 1.0
    assert isinstance(build_potential("constant:2.0", m), Constant)
    assert isinstance(build_potential("log:1.0", m), LogSingularity)
    b = build_potential("bump:0.5:3.0", m)
    assert isinstance(b, Bump) and b.radius == 0.5 and b.height == 3.0
    assert isinstance(build_region("whole", m), WholeSpace)
    ball = build_region("ball:1.5", m)
    assert isinstance(ball, ClosedBall) and ball.radius == 1.5
    assert build_region(None, m) is None


def test_scenarios_defaults_and_times():
    scs = scenarios_from_text(SAMPLE)
    assert [s.name for s in scs] == ["first", "second"]
    assert isinstance(scs[0].model, Euclidean)
    assert scs[0].times() == (0.5,)
    # scenario keys beat file defaults
    assert isinstance(scs[1].model, Torus)
    assert scs[1].times() == (0.25, 0.75)
    # caller defaults fill gaps but lose to the file's defaults section
    scs2 = scenarios_from_text(SAMPLE, defaults={"model": "euclidean:3", "seed": 7})
    assert isinstance(scs2[0].model, Euclidean) and scs2[0].model.m == 2
    assert scs2[0].param("seed", None) == 7


def test_stochastic_op_requires_seed():
    text = "op fk\nmodel conformal:0.0\npotential constant:1.0\nt 0.25\n"
    with pytest.raises(ConfigError, match="seed"):
        scenarios_from_text(text)


def test_cli_norm_writes_report(tmp_path):
    out = tmp_path / "out"
    rc = main([
        "norm", "--model", "euclidean:2", "--potential", "constant:1.0",
        "--t", "0.5", "--out", str(out),
    ])
    assert rc == 0
    blob = json.loads((out / "norm.json").read_text())
    assert blob["scenario"]["op"] == "norm"
    csv = (out / "norm.curve.csv").read_text().splitlines()
    assert csv[0] == "t,value,error"
    t, v, _ = csv[1].split(",")
    assert float(v) == pytest.approx(0.5, rel=1e-9)
    assert (out / "norm.curve.png").exists()


def test_cli_no_plots_suppresses_figures(tmp_path):
    out = tmp_path / "out"
    rc = main([
        "norm", "--model", "euclidean:2", "--potential", "constant:1.0",
        "--t", "0.5", "--out", str(out), "--no-plots",
    ])
    assert rc == 0
    assert not list(out.glob("*.png"))


def test_cli_exit_codes(tmp_path):
    ok = main([
        "verify", "--check", "subadditivity", "--model", "euclidean:2",
        "--potential", "bump:1.0:1.0", "--t", "0.25", "--t", "0.6",
        "--out", str(tmp_path / "a"),
    ])
    assert ok == 0
    failed = main([
        "verify", "--check", "subadditivity", "--model", "euclidean:2",
        "--potential", "bump:1.0:1.0", "--t", "0.25", "--t", "0.6",
        "--tol", "-0.99", "--out", str(tmp_path / "b"),
    ])
    assert failed == 1
    bad = main(["norm", "--model", "mobius:1", "--potential", "constant:1.0",
                "--t", "0.5", "--out", str(tmp_path / "c")])
    assert bad == 2


def test_cli_out_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("KATOSCOPE_OUT", str(tmp_path / "envout"))
    rc = main(["norm", "--model", "euclidean:2", "--potential", "constant:2.0",
               "--t", "0.25"])
    assert rc == 0
    assert (tmp_path / "envout" / "norm.json").exists()


def test_cli_run_suite_writes_index(tmp_path):
    cfg = tmp_path / "suite.cfg"
    cfg.write_text(SAMPLE)
    out = tmp_path / "suite-out"
    rc = main(["run", "--config", str(cfg), "--out", str(out), "--no-plots"])
    assert rc == 0
    index = json.loads((out / "index.json").read_text())
    names = {entry["name"] for entry in index["reports"]}
    assert names == {"first", "second"}


def test_cli_report_rerenders(tmp_path):
    out = tmp_path / "orig"
    main(["norm", "--model", "euclidean:2", "--potential", "constant:1.0",
          "--t", "0.5", "--out", str(out), "--no-plots"])
    redo = tmp_path / "redo"
    rc = main(["report", "--input", str(out / "norm.json"), "--out", str(redo)])
    assert rc == 0
    assert (redo / "norm.curve.csv").read_text() == (out / "norm.curve.csv").read_text()
