import json
from pathlib import Path

import jsonschema
import numpy as np
import pytest

from kalzak.cli import main
from kalzak.config import (ConfigError, build_model, config_hash, load_config,
                           make_manifest, write_csv)

GOOD = """
label = "smoke"

[model]
preset = "classic_scalar"

[simulation]
T = 0.2
dt = 0.01
seed = 5

[output]
formats = ["json"]
"""


def cfg_file(tmp_path, text=GOOD, name="run.toml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_load_config_roundtrip(tmp_path):
    cfg = load_config(cfg_file(tmp_path))
    assert cfg["model"]["preset"] == "classic_scalar"
    assert cfg["simulation"]["dt"] == 0.01


def test_schema_violation_names_the_field(tmp_path):
    bad = GOOD.replace('seed = 5', 'seed = 5\nwalrus = 1')
    with pytest.raises(ConfigError, match="simulation"):
        load_config(cfg_file(tmp_path, bad))


def test_unknown_preset_lists_the_choices(tmp_path):
    bad = GOOD.replace("classic_scalar", "mystery_meat")
    with pytest.raises(ConfigError, match="classic_scalar"):
        load_config(cfg_file(tmp_path, bad))


def test_step_must_divide_the_horizon(tmp_path):
    bad = GOOD.replace("dt = 0.01", "dt = 0.03")
    with pytest.raises(ConfigError, match="does not divide"):
        load_config(cfg_file(tmp_path, bad))


def test_explicit_model_block_builds(tmp_path):
    text = """
label = "plane"

[model]
family = "explicit"
d = 2
dy = 1
dw = 3

[model.coefficients]
theta = {kind = "constant", value = [[0.8, 0.0, 0.2], [0.0, 0.7, 0.0]]}
Theta = {kind = "constant", value = [[0.0, 0.0, 1.0]]}
bdot = {kind = "constant", value = [[-0.5, 0.0], [0.0, -0.5]]}
b0 = {kind = "constant", value = [0.0, 0.0]}
Bdot = {kind = "constant", value = [[0.6], [0.0]]}
B0 = {kind = "constant", value = [0.0]}

[simulation]
T = 0.05
dt = 0.005
seed = 11
"""
    cfg = load_config(cfg_file(tmp_path, text))
    spec = build_model(cfg)
    assert (spec.d, spec.dy, spec.dw) == (2, 1, 3)


def test_config_hash_ignores_key_order():
    a = {"label": "x", "model": {"preset": "classic_scalar"},
         "simulation": {"T": 1.0, "dt": 0.1, "seed": 0}}
    b = {"simulation": {"seed": 0, "dt": 0.1, "T": 1.0},
         "model": {"preset": "classic_scalar"}, "label": "x"}
    assert config_hash(a) == config_hash(b)
    c = dict(a, label="y")
    assert config_hash(a) != config_hash(c)


def test_manifest_id_survives_the_clock(tmp_path):
    """The id is a function of config hash, seed and version only."""
    cfg = load_config(cfg_file(tmp_path))
    m1 = make_manifest(cfg, "run simulate")
    m2 = make_manifest(cfg, "run simulate")
    assert m1.manifest_id == m2.manifest_id
    m3 = make_manifest(cfg, "run filter")
    assert m3.manifest_id == m1.manifest_id
    m4 = make_manifest(cfg, "run simulate", seed=77)
    assert m4.manifest_id != m1.manifest_id


def test_csv_floats_roundtrip_exactly(tmp_path):
    vals = np.array([1.0 / 3.0, np.pi, 1e-17, -0.0])
    out = tmp_path / "x.csv"
    write_csv(out, [("v", vals)], "deadbeef00000000")
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# manifest: deadbeef00000000")
    back = np.array([float(s) for s in lines[2:]])
    assert np.array_equal(back, vals)


def test_simulate_writes_a_replayable_rundir(tmp_path):
    cfg = cfg_file(tmp_path)
    d1, d2 = tmp_path / "r1", tmp_path / "r2"
    assert main(["run", "simulate", "--config", str(cfg), "--out", str(d1),
                 "--quiet"]) == 0
    assert main(["run", "simulate", "--config", str(cfg), "--out", str(d2),
                 "--quiet"]) == 0
    assert (d1 / "paths.csv").read_bytes() == (d2 / "paths.csv").read_bytes()
    assert (d1 / "paths.json").read_bytes() == (d2 / "paths.json").read_bytes()
    m1 = json.loads((d1 / "manifest.json").read_text())
    m2 = json.loads((d2 / "manifest.json").read_text())
    assert m1["manifest_id"] == m2["manifest_id"]


def test_every_table_cites_the_manifest(tmp_path):
    cfg = cfg_file(tmp_path)
    out = tmp_path / "r"
    assert main(["run", "filter", "--config", str(cfg), "--out", str(out),
                 "--quiet"]) == 0
    mid = json.loads((out / "manifest.json").read_text())["manifest_id"]
    csvs = list(out.glob("*.csv"))
    jsons = [f for f in out.glob("*.json") if f.name != "manifest.json"]
    assert csvs and jsons
    for f in csvs:
        assert f.read_text().splitlines()[0] == f"# manifest: {mid}", f.name
    for f in jsons:
        assert json.loads(f.read_text())["manifest"] == mid, f.name


def test_filter_csv_header_layout(tmp_path):
    cfg = cfg_file(tmp_path)
    out = tmp_path / "r"
    main(["run", "filter", "--config", str(cfg), "--out", str(out), "--quiet"])
    header = (out / "filter.csv").read_text().splitlines()[1]
    assert header == "t,W00,V0,U,xbar0,Sigma00"


def test_json_export_matches_its_schema(tmp_path):
    schema = json.loads(
        (Path(__file__).resolve().parents[1] / "src" / "kalzak" / "schemas"
         / "export.schema.json").read_text())
    cfg = cfg_file(tmp_path)
    out = tmp_path / "r"
    main(["run", "simulate", "--config", str(cfg), "--out", str(out),
          "--quiet"])
    doc = json.loads((out / "paths.json").read_text())
    jsonschema.validate(doc, schema)


def test_export_reemits_from_arrays_alone(tmp_path):
    cfg = cfg_file(tmp_path)
    out = tmp_path / "r"
    main(["run", "simulate", "--config", str(cfg), "--out", str(out),
          "--quiet"])
    before = (out / "paths.csv").read_bytes()
    (out / "paths.csv").unlink()
    (out / "paths.json").unlink()
    assert main(["export", str(out), "--format", "csv"]) == 0
    assert (out / "paths.csv").read_bytes() == before
    assert main(["export", str(out), "--format", "svg-plot-data"]) == 0
    svg = (out / "paths.svg").read_text()
    assert svg.lstrip().startswith("<!-- manifest:")


def test_exit_codes(tmp_path, monkeypatch):
    bad = cfg_file(tmp_path, GOOD.replace("dt = 0.01", "dt = 0.03"),
                   name="bad.toml")
    assert main(["run", "simulate", "--config", str(bad), "--quiet"]) == 2
    ok = cfg_file(tmp_path)
    assert main(["export", str(tmp_path / "missing"), "--format", "csv"]) == 2
    assert main(["export", str(tmp_path), "--format", "parquet"]) == 1

    cflbreak = cfg_file(tmp_path, GOOD + """
[zakai]
h = 0.02
L = 6.0
cfl = "raise"
""", name="cfl.toml")
    rc = main(["run", "zakai", "--config", str(cflbreak), "--out",
               str(tmp_path / "zz"), "--quiet"])
    assert rc == 3

    import kalzak.cli as climod
    from kalzak.acceptance import CriterionResult

    def fake_run_all(echo=None):
        return [CriterionResult(1, "stub", False, "forced", 0.0)]

    monkeypatch.setattr(climod, "run_all", fake_run_all)
    rc = main(["run", "check", "--config", str(ok), "--out",
               str(tmp_path / "chk"), "--quiet"])
    assert rc == 4


def test_paths_override_controls_the_bundle(tmp_path):
    cfg = cfg_file(tmp_path)
    out = tmp_path / "r"
    main(["run", "simulate", "--config", str(cfg), "--paths", "3", "--out",
          str(out), "--quiet"])
    body = (out / "paths.csv").read_text().splitlines()[2:]
    idx = {line.split(",")[0] for line in body}
    assert idx == {"0", "1", "2"}
