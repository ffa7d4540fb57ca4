import hashlib

import numpy as np
import pytest

from sparseindex.bench import (
    CsvSource,
    ExperimentSpec,
    _prepare_repetition,
    emit_link_plot,
    run_experiment,
    summarize,
    write_outputs,
)
from sparseindex.core import GibbsConfig, LinkCoeffs, IndexVector, make_state, eval_link
from sparseindex.data import SyntheticSpec, simulate
from sparseindex.sampler import fit


def _lasso_spec(**kw):
    base = dict(
        source=SyntheticSpec("linear", n=50, p=10, sigma=0.2),
        methods=("lasso",),
        repetitions=kw.pop("repetitions", 4),
        seed=kw.pop("seed", 3),
    )
    base.update(kw)
    return ExperimentSpec(**base)


def test_spec_validation():
    with pytest.raises(ValueError):
        _lasso_spec(repetitions=0)
    with pytest.raises(ValueError):
        _lasso_spec(methods=())
    with pytest.raises(ValueError):
        _lasso_spec(methods=("mystery",))


def test_methods_see_identical_data_per_repetition():
    spec = _lasso_spec()
    h1 = []
    h2 = []
    for target in (h1, h2):
        for rep in range(spec.repetitions):
            train, test, _ = _prepare_repetition(spec, rep)
            blob = train.x.tobytes() + train.y.tobytes() + test.x.tobytes() + test.y.tobytes()
            target.append(hashlib.sha256(blob).hexdigest())
    assert h1 == h2
    assert len(set(h1)) == spec.repetitions  # fresh data every repetition


def test_lasso_model1_median_in_published_band():
    # 20 repetitions of the linear model at n=50, p=10
    spec = _lasso_spec(repetitions=20, seed=13)
    row = run_experiment(spec)[0]
    assert 0.035 <= row.median <= 0.065


def test_zero_noise_linear_lasso_tiny_error():
    spec = ExperimentSpec(
        source=SyntheticSpec("linear", n=200, p=10, sigma=0.0),
        methods=("lasso",),
        repetitions=3,
        seed=5,
    )
    row = run_experiment(spec)[0]
    assert row.median <= 0.005


def test_single_repetition_flags_insufficient_reps():
    row = run_experiment(_lasso_spec(repetitions=1))[0]
    assert row.sd == 0.0
    assert "insufficient reps" in row.note


def test_statistics_recompute_from_per_rep():
    rows = run_experiment(_lasso_spec(repetitions=5))
    r = rows[0]
    ok = r.per_rep[np.isfinite(r.per_rep)]
    assert r.median == pytest.approx(float(np.median(ok)), abs=1e-12)
    assert r.mean == pytest.approx(float(np.mean(ok)), abs=1e-12)
    assert r.sd == pytest.approx(float(np.std(ok, ddof=1)), abs=1e-12)


def test_summarize_markdown_bolds_best_and_ties():
    from sparseindex.bench import ResultRow

    rows = [
        ResultRow("fourier", 0.05, 0.06, 0.01, np.array([0.05])),
        ResultRow("lasso", 0.05, 0.07, 0.01, np.array([0.05])),
        ResultRow("nw", 0.20, 0.21, 0.02, np.array([0.2])),
    ]
    text = summarize(rows, format="markdown")
    assert text.count("**0.050**") == 2
    assert "| median |" in text and "| s.d. |" in text


def test_summary_csv_round_trip(tmp_path):
    rows = run_experiment(_lasso_spec(repetitions=3))
    summary_path, raw_path = write_outputs("toy", rows, tmp_path)
    lines = open(summary_path).read().splitlines()
    header = lines[0].split(",")
    medians = dict(zip(header[1:], lines[1].split(",")[1:]))
    for r in rows:
        assert float(medians[r.method]) == r.median  # repr round-trips exactly
    raw = open(raw_path).read().splitlines()
    assert raw[0] == "rep," + ",".join(r.method for r in rows)
    assert len(raw) == 1 + rows[0].per_rep.size


def test_summarize_deterministic():
    a = summarize(run_experiment(_lasso_spec()), format="csv")
    b = summarize(run_experiment(_lasso_spec()), format="csv")
    assert a == b


def test_experiment_with_csv_source(tmp_path):
    data = simulate(SyntheticSpec("si", n=60, p=3, sigma=0.2, seed=21))
    path = tmp_path / "toy.csv"
    with open(path, "w") as fh:
        fh.write("x1,x2,x3,y\n")
        for i in range(data.n):
            fh.write(",".join(repr(float(v)) for v in [*data.x[i] * 10.0, data.y[i]]) + "\n")
    spec = ExperimentSpec(
        source=CsvSource(str(path), "y", augment=True, factor=2),
        methods=("lasso", "nw"),
        repetitions=2,
        seed=9,
    )
    rows = run_experiment(spec)
    assert [r.method for r in rows] == ["lasso", "nw"]
    assert all(np.isfinite(r.median) for r in rows)
    train, test, sigma = _prepare_repetition(spec, 0)
    assert train.p == 6  # augmented before splitting
    assert np.all(np.abs(train.x) <= 1.0) and np.all(np.abs(test.x) <= 1.0)
    assert sigma == pytest.approx(float(np.std(train.y)) / 2.0)


def test_method_failure_recorded_not_fatal(monkeypatch):
    import sparseindex.bench as bench_mod

    calls = {"n": 0}
    orig = bench_mod.baselines.lasso_fit

    def flaky(data, xi, **kw):
        calls["n"] += 1
        if calls["n"] == 2:
            raise RuntimeError("synthetic failure")
        return orig(data, xi, **kw)

    monkeypatch.setattr(bench_mod.baselines, "lasso_fit", flaky)
    rows = run_experiment(_lasso_spec(repetitions=3))
    r = rows[0]
    assert r.n_missing == 1
    assert "failed" in r.note
    assert np.isfinite(r.median)


def test_emit_link_plot(tmp_path):
    data = simulate(SyntheticSpec("si", n=30, p=4, sigma=0.2, seed=30))
    state, _ = fit(data, GibbsConfig(C=5.0, steps=60, chains=1, seed=2))
    path = tmp_path / "plot.csv"
    emit_link_plot(state, data, path)
    lines = open(path).read().splitlines()
    assert lines[0] == "kind,t,value"
    grid = [l for l in lines[1:] if l.startswith("grid,")]
    scatter = [l for l in lines[1:] if l.startswith("scatter,")]
    assert len(grid) == 512
    assert len(scatter) == data.n
    for row in grid[::97]:
        _, t, v = row.split(",")
        assert float(v) == pytest.approx(eval_link(state.link, float(t)), abs=1e-12)
