import json
import os
import shutil
from pathlib import Path

import numpy as np
import pytest

from olgreform.demographics import N_AGES
from olgreform.errors import DataLoadError, ValidationError
from olgreform.io_config import (AGGREGATE_COLUMNS, DATA_FILES, ModelConfig, default_data_dir,
                                 emit_results, load_config, load_inputs, read_csv, run_manifest,
                                 write_csv)

ROOT = Path(__file__).resolve().parents[1]


@pytest.fixture
def data_copy(tmp_path):
    d = tmp_path / "data"
    shutil.copytree(default_data_dir(), d)
    return d


def test_bundled_data_loads(inputs):
    assert inputs.population0.shape == (N_AGES, 2, 2)
    assert inputs.type_shares.sum() == pytest.approx(1.0)
    assert inputs.table.lower.size == 14
    assert set(inputs.hashes) == set(DATA_FILES)
    assert np.all(inputs.survival.s[:, -1] == 0)


def test_missing_file_is_named(data_copy):
    (data_copy / "health_costs.csv").unlink()
    with pytest.raises(DataLoadError, match="health_costs.csv"):
        load_inputs(ModelConfig(data_dir=str(data_copy)))


def test_out_of_range_survival_cites_its_row(data_copy):
    p = data_copy / "survival.csv"
    lines = p.read_text().splitlines()
    head, first = lines[0], lines[1].split(",")
    first[-1] = "1.2"
    lines[1] = ",".join(first)
    p.write_text("\n".join(lines) + "\n")
    with pytest.raises(DataLoadError) as exc:
        load_inputs(ModelConfig(data_dir=str(data_copy)))
    assert any(d.startswith("survival.csv:2:") and "1.2" in d for d in exc.value.diagnostics)


def test_all_problems_are_reported_together(data_copy):
    for name in ("type_shares.csv", "tax_table.csv"):
        p = data_copy / name
        lines = p.read_text().splitlines()
        lines[1] = lines[1].rsplit(",", 1)[0] + ",oops"
        p.write_text("\n".join(lines) + "\n")
    with pytest.raises(DataLoadError) as exc:
        load_inputs(ModelConfig(data_dir=str(data_copy)))
    text = "\n".join(exc.value.diagnostics)
    assert "type_shares.csv:2" in text and "tax_table.csv:2" in text


def test_data_dir_from_environment(monkeypatch, data_copy):
    monkeypatch.setenv("OLGREFORM_DATA_DIR", str(data_copy))
    assert default_data_dir() == data_copy


def test_default_config_file_round_trips():
    loaded = load_config(ROOT / "configs" / "default.ini").to_dict()
    assert json.dumps(loaded, sort_keys=True, default=str) == json.dumps(
        ModelConfig().to_dict(), sort_keys=True, default=str)


def test_config_errors(tmp_path):
    with pytest.raises(DataLoadError, match="nothere.ini"):
        load_config(tmp_path / "nothere.ini")
    p = tmp_path / "bad.ini"
    p.write_text("[solver]\nno_such_key = 1\n")
    with pytest.raises(ValidationError):
        load_config(p)
    p.write_text("[weather]\nrain = 1\n")
    with pytest.raises(ValidationError, match="weather"):
        load_config(p)


def test_config_overrides(tmp_path):
    p = tmp_path / "c.ini"
    p.write_text("[solver]\ndamping = 0.3\n[preferences]\nbeta = 0.98\n")
    cfg = load_config(p)
    assert cfg.solver.damping == 0.3 and cfg.preferences.beta == 0.98
    assert cfg.with_solver(damping=0.8).solver.damping == 0.8


def test_csv_round_trip(tmp_path):
    rows = [(2015, 1.0, "a"), (2016, 1 / 3, "b")]
    p = write_csv(tmp_path / "x.csv", ("year", "v", "s"), rows)
    back = read_csv(p)
    np.testing.assert_array_equal(back["year"], [2015, 2016])
    np.testing.assert_allclose(back["v"], [1.0, 1 / 3], rtol=1e-9)
    assert back["s"] == ["a", "b"]


@pytest.mark.slow
def test_emission_is_byte_identical_and_indexed(tmp_path, baseline, cfg, inputs):
    m = run_manifest(cfg, inputs, baseline.label)
    a = emit_results(tmp_path / "a", path=baseline, manifest=m)
    b = emit_results(tmp_path / "b", path=baseline, manifest=m)
    for pa, pb in zip(a, b):
        assert pa.read_bytes() == pb.read_bytes()
    agg = read_csv(tmp_path / "a" / "aggregates.csv")
    assert tuple(agg) == AGGREGATE_COLUMNS
    assert agg["gdp_index"][list(agg["year"]).index(2020)] == 1.0
    assert agg["year"][0] == 2015 and agg["year"][-1] == 2115
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert manifest["outputs"]["aggregates.csv"] and manifest["hash"] == m["hash"]


def test_manifest_hash_tracks_config(inputs):
    a = run_manifest(ModelConfig(), inputs, "baseline:none")
    b = run_manifest(ModelConfig().with_solver(damping=0.3), inputs, "baseline:none")
    c = run_manifest(ModelConfig(), inputs, "baseline:rr50")
    assert a["hash"] == run_manifest(ModelConfig(), inputs, "baseline:none")["hash"]
    assert len({a["hash"], b["hash"], c["hash"]}) == 3


@pytest.mark.skipif(os.geteuid() == 0, reason="root ignores directory permissions")
def test_unwritable_output_directory(tmp_path):
    d = tmp_path / "ro"
    d.mkdir()
    d.chmod(0o500)
    with pytest.raises(ValidationError, match="not writable"):
        emit_results(d / "sub")


def test_output_path_that_is_a_file(tmp_path):
    f = tmp_path / "file"
    f.write_text("")
    with pytest.raises(ValidationError, match="not writable"):
        emit_results(f)
