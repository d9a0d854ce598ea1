import numpy as np
import pytest

from scpkb import experiments as ex
from scpkb._errors import NumericalError


def test_default_grid_sizes():
    assert len(ex._grid("type1-power", {})) == 72
    assert len(ex._grid("regression-fit", {})) == 24
    assert len(ex._grid("discrim", {})) == 48
    assert len(ex._grid("mixture-recovery", {})) == 64
    assert len(ex._grid("mle-speed", {})) == 70


@pytest.mark.parametrize("preset", ex.PRESETS)
def test_cell_labels_unique(preset):
    cells = ex._grid(preset, {})
    labels = [ex._cell_label(preset, c) for c in cells]
    assert len(set(labels)) == len(labels)


def test_type1_grid_dimension_convention():
    cells = ex._grid("type1-power", {})
    null_ds = {c[3] for c in cells if c[0] == 0}
    alt_ds = {c[3] for c in cells if c[0] != 0}
    assert null_ds == {2, 4, 6, 9}
    assert alt_ds == {3, 5, 7, 10}


def test_stream_is_a_pure_function_of_coordinates():
    cell = (0, 50, 30, 2, "sc")
    a = ex._stream(7, "type1-power", cell, 3)
    b = ex._stream(7, "type1-power", cell, 3)
    assert a == b
    assert ex._stream(7, "type1-power", cell, 4) != a
    assert ex._stream(8, "type1-power", cell, 3) != a
    assert ex._stream(7, "discrim", cell, 3) != a


def _small_spec(workers, replicates=6, base_seed=123):
    return ex.ExperimentSpec(
        preset="type1-power",
        replicates=replicates,
        base_seed=base_seed,
        workers=workers,
        overrides={"theta": (0,), "sizes": ((20, 15),), "d": (2,),
                   "data_family": ("sc",)},
    )


def test_results_identical_across_runs_and_worker_counts():
    t1 = ex.run_experiment(_small_spec(workers=1))
    t1b = ex.run_experiment(_small_spec(workers=1))
    t2 = ex.run_experiment(_small_spec(workers=2))
    assert t1.rows == t1b.rows
    assert t1.rows == t2.rows
    assert t1.metadata["workers"] == 1
    assert t2.metadata["workers"] == 2
    (row,) = [r for r in t1.rows if r.statistic == "reject"]
    assert 0.0 <= row.value <= 1.0


def test_base_seed_changes_results():
    a = ex.run_experiment(_small_spec(workers=1, replicates=12, base_seed=1))
    b = ex.run_experiment(_small_spec(workers=1, replicates=12, base_seed=2))
    ra = [r for r in a.rows if r.statistic == "reject"][0]
    rb = [r for r in b.rows if r.statistic == "reject"][0]
    # per-replicate draws differ; the 12-rep averages need not be equal
    va = [ex._rep_type1_power((0, 20, 15, 2, "sc"), ex._stream(1, "type1-power", (0, 20, 15, 2, "sc"), r))["reject"] for r in range(12)]
    vb = [ex._rep_type1_power((0, 20, 15, 2, "sc"), ex._stream(2, "type1-power", (0, 20, 15, 2, "sc"), r))["reject"] for r in range(12)]
    assert ra.value == pytest.approx(np.mean(va))
    assert rb.value == pytest.approx(np.mean(vb))


def test_failures_become_a_table_row(monkeypatch):
    orig = ex._rep_type1_power

    def flaky(cell, stream):
        if stream.generator().random() < 2.0 and stream == ex._stream(
            123, "type1-power", cell, 1
        ):
            raise NumericalError("synthetic failure")
        return orig(cell, stream)

    monkeypatch.setitem(
        ex._REPLICATE_FN, "type1-power",
        lambda cell, stream, model_fams: flaky(cell, stream),
    )
    table = ex.run_experiment(_small_spec(workers=1, replicates=4))
    fail_rows = [r for r in table.rows if r.statistic == "failures"]
    assert len(fail_rows) == 1
    assert fail_rows[0].value == 1.0
    # the mean skips the failed replicate instead of poisoning it
    (reject,) = [r for r in table.rows if r.statistic == "reject"]
    assert np.isfinite(reject.value)


def test_mc_stderr_matches_definition():
    spec = ex.ExperimentSpec(
        preset="regression-fit", replicates=4, base_seed=9, workers=1,
        overrides={"n": (40,), "d": (2,), "data_family": ("sc",),
                   "model_family": ("sc",)},
    )
    table = ex.run_experiment(spec)
    cell = (40, 2, "sc")
    vals = [
        ex._rep_regression(cell, ex._stream(9, "regression-fit", cell, r), ("sc",))["fit[sc]"]
        for r in range(4)
    ]
    row = [r for r in table.rows if r.statistic == "fit[sc]"][0]
    assert row.value == pytest.approx(np.mean(vals), rel=1e-12)
    assert row.mc_stderr == pytest.approx(np.std(vals, ddof=1) / 2.0, rel=1e-12)


def test_report_table_render_csv_and_value(tmp_path):
    table = ex.run_experiment(_small_spec(workers=1, replicates=3))
    text = table.render()
    assert "preset: type1-power" in text
    assert "statistic" in text and "mc_stderr" in text
    assert "theta=0 n1=20 n2=15 d=2 data=sc" in text
    path = tmp_path / "out.csv"
    table.to_csv(path)
    rows = path.read_text().strip().splitlines()
    assert rows[0] == "cell,statistic,value,mc_stderr"
    assert len(rows) == 1 + len(table.rows)
    assert table.value("theta=0 n1=20 n2=15 d=2 data=sc", "reject") >= 0.0
    with pytest.raises(KeyError):
        table.value("nope", "reject")


def test_spec_validation_and_worker_rules(monkeypatch):
    with pytest.raises(ValueError, match="unknown preset"):
        ex.ExperimentSpec(preset="bogus")
    assert ex.ExperimentSpec(preset="mle-speed", workers=8).n_workers == 1
    assert ex.ExperimentSpec(preset="discrim", workers=3).n_workers == 3
    monkeypatch.setenv("SCPKB_THREADS", "5")
    assert ex.ExperimentSpec(preset="discrim").n_workers == 5
    monkeypatch.delenv("SCPKB_THREADS")
    assert ex.ExperimentSpec(preset="discrim").n_workers == 1
    assert ex.ExperimentSpec(preset="discrim").n_replicates == ex._DEFAULT_REPLICATES["discrim"]


def test_parse_config_and_spec(tmp_path):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text(
        "# comment line\n"
        "preset = type1-power\n"
        "replicates=25   # trailing comment\n"
        "sizes = 50:30,70:50\n"
        "theta = 0,15\n"
        "data_family = sc\n"
        "\n"
    )
    config = ex.parse_config(cfg)
    assert config["preset"] == "type1-power"
    spec = ex.spec_from_config(config)
    assert spec.n_replicates == 25
    assert spec.overrides["sizes"] == ((50, 30), (70, 50))
    assert spec.overrides["theta"] == (0, 15)
    assert spec.overrides["data_family"] == ("sc",)
    # CLI overrides win over the file
    spec2 = ex.spec_from_config(config, replicates="10", seed="3")
    assert spec2.n_replicates == 10
    assert spec2.base_seed == 3

    bad = tmp_path / "bad.cfg"
    bad.write_text("preset type1-power\n")
    with pytest.raises(ValueError, match="expected key=value"):
        ex.parse_config(bad)
    with pytest.raises(ValueError, match="needs a preset"):
        ex.spec_from_config({})
    with pytest.raises(ValueError, match="unknown family"):
        ex.spec_from_config({"preset": "discrim", "model_family": "vmf"})
    # a typo'd key must fail loudly, not silently fall back to defaults
    with pytest.raises(ValueError, match="unknown config key.*base_seed"):
        ex.spec_from_config({"preset": "discrim", "base_seed": "2"})


def test_mle_speed_runs_single_cell():
    spec = ex.ExperimentSpec(
        preset="mle-speed", base_seed=0,
        overrides={"n": (200,), "d": (2,), "data_family": ("sc",)},
    )
    table = ex.run_experiment(spec)
    stats = {r.statistic for r in table.rows}
    assert "hybrid_over_nr_time" in stats
    assert {r.cell for r in table.rows} == {"n=200 d=2 data=sc"}
    for r in table.rows:
        if r.statistic.endswith("_time"):
            assert r.value > 0
