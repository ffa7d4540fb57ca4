"""Benchmark harness: repeated train/test evaluation of the four estimators.

Each repetition draws fresh data (synthetic sources) or a fresh half/half
split (CSV sources, normalized on the training half), fits every requested
method on the identical training set, and scores mean squared prediction
error on the test set.  Per-repetition seeds derive deterministically from
the experiment seed, so tables replay byte-identically.

Test MSE includes the irreducible noise, so synthetic scores are floored
near sigma^2.  A method failure inside one repetition is recorded as a
missing value and flagged, never aborting the table.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from . import baselines, sampler
from .core import Dataset, GibbsConfig, link_values
from .data import SyntheticSpec, augment_noise, load_csv, normalize, simulate

__all__ = [
    "CsvSource",
    "ExperimentSpec",
    "ResultRow",
    "run_experiment",
    "summarize",
    "emit_link_plot",
    "write_outputs",
    "METHOD_ORDER",
]

METHOD_ORDER = ("fourier", "hhi", "lasso", "nw")


def max_workers():
    """Repetition-pool size from SPARSE_SI_THREADS (default 1 = serial)."""
    try:
        return max(1, int(os.environ.get("SPARSE_SI_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class CsvSource:
    path: str
    target: str
    augment: bool = False
    factor: int = 4


@dataclass(frozen=True)
class ExperimentSpec:
    source: object  # SyntheticSpec or CsvSource
    methods: tuple = METHOD_ORDER
    repetitions: int = 20
    seed: int = 0
    gibbs: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.repetitions < 1:
            raise ValueError("need at least one repetition")
        methods = tuple(self.methods)
        if not methods:
            raise ValueError("methods must be nonempty")
        unknown = set(methods) - set(METHOD_ORDER)
        if unknown:
            raise ValueError(f"unknown methods {sorted(unknown)}")
        object.__setattr__(self, "methods", methods)


@dataclass
class ResultRow:
    method: str
    median: float
    mean: float
    sd: float
    per_rep: np.ndarray
    n_missing: int = 0
    note: str = ""


def _derived_seed(seed, *key):
    state = np.random.SeedSequence(entropy=seed, spawn_key=tuple(key)).generate_state(2)
    return int(state[0]) | (int(state[1]) << 32)


def _prepare_repetition(spec, rep, csv_cache=None):
    """Train/test pair for one repetition; every method sees these objects."""
    src = spec.source
    if isinstance(src, SyntheticSpec):
        train = simulate(
            SyntheticSpec(src.model, src.n, src.p, src.sigma, _derived_seed(spec.seed, rep, 0))
        )
        test = simulate(
            SyntheticSpec(src.model, src.n, src.p, src.sigma, _derived_seed(spec.seed, rep, 1))
        )
        return train, test, float(src.sigma)
    raw = csv_cache if csv_cache is not None else load_csv(src.path, src.target)
    if src.augment:
        raw = augment_noise(raw, factor=src.factor, seed=_derived_seed(spec.seed, rep, 0))
    rng = np.random.default_rng(_derived_seed(spec.seed, rep, 1))
    perm = rng.permutation(raw.n)
    half = raw.n // 2
    train_raw = Dataset(raw.x[perm[:half]], raw.y[perm[:half]], check_bounds=False)
    test_raw = Dataset(raw.x[perm[half:]], raw.y[perm[half:]], check_bounds=False)
    test, params = normalize(train_raw, test_raw)
    train = params.apply(train_raw)
    # plug-in noise scale: sd(train y)/2 = 0.25 after normalization
    return train, test, float(np.std(train.y)) / 2.0


def _gibbs_config(spec, train, rep):
    over = dict(spec.gibbs)
    p = train.p
    over.setdefault("steps", 1000 if p <= 10 else 5000)
    over.setdefault("warm_start", "none" if p <= 10 else "hhi")
    over.setdefault("seed", _derived_seed(spec.seed, rep, 2))
    return GibbsConfig(**over)


def _fit_predict(method, spec, rep, train, test, sigma):
    if method == "fourier":
        state, _ = sampler.fit(train, _gibbs_config(spec, train, rep))
        return link_values(state.link, test.x @ state.index.values)
    if method == "lasso":
        xi = baselines.default_lasso_xi(train, sigma=sigma)
        model = baselines.lasso_fit(train, xi)
        return model.predict(test.x)
    if method == "hhi":
        xi = baselines.default_lasso_xi(train, sigma=sigma)
        model = baselines.hhi_fit(train, xi=xi)
        return np.array([baselines.hhi_predict(model, train, row) for row in test.x])
    model = baselines.nw_select_bandwidth(train)
    return np.array([baselines.nw_predict(train, model.bandwidth, row) for row in test.x])


def run_experiment(spec):
    """Run the full repetition loop; returns one ResultRow per method.

    Repetitions are independent given their derived seeds, so they may run
    on a thread pool (capped by SPARSE_SI_THREADS, default 1 = serial);
    results are ordered by (repetition, method) either way.
    """
    csv_cache = None
    if isinstance(spec.source, CsvSource):
        csv_cache = load_csv(spec.source.path, spec.source.target)

    def one_rep(rep):
        train, test, sigma = _prepare_repetition(spec, rep, csv_cache)
        out = {}
        for method in spec.methods:
            try:
                pred = _fit_predict(method, spec, rep, train, test, sigma)
                out[method] = float(np.mean((pred - test.y) ** 2))
            except Exception as exc:  # noqa: BLE001 - robustness over abort
                out[method] = f"rep {rep} failed: {exc}"
        return out

    workers = min(max_workers(), spec.repetitions)
    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            rep_results = list(pool.map(one_rep, range(spec.repetitions)))
    else:
        rep_results = [one_rep(rep) for rep in range(spec.repetitions)]

    errors = {m: np.full(spec.repetitions, np.nan) for m in spec.methods}
    notes = {m: set() for m in spec.methods}
    for rep, result in enumerate(rep_results):
        for method, value in result.items():
            if isinstance(value, str):
                notes[method].add(value)
            else:
                errors[method][rep] = value

    rows = []
    for method in METHOD_ORDER:
        if method not in spec.methods:
            continue
        per_rep = errors[method]
        ok = per_rep[np.isfinite(per_rep)]
        n_missing = int(spec.repetitions - ok.size)
        note_bits = sorted(notes[method])
        if spec.repetitions == 1:
            note_bits.append("insufficient reps")
        if ok.size == 0:
            rows.append(
                ResultRow(method, np.nan, np.nan, np.nan, per_rep, n_missing, "; ".join(note_bits))
            )
            continue
        sd = float(np.std(ok, ddof=1)) if ok.size >= 2 else 0.0
        rows.append(
            ResultRow(
                method=method,
                median=float(np.median(ok)),
                mean=float(np.mean(ok)),
                sd=sd,
                per_rep=per_rep,
                n_missing=n_missing,
                note="; ".join(note_bits),
            )
        )
    return rows


def _fmt(v):
    return repr(float(v))


def summarize(rows, format="markdown"):
    """Render the result table; markdown bolds the best (lowest) median."""
    if not rows:
        raise ValueError("no result rows to summarize")
    methods = [r.method for r in rows]
    if format == "csv":
        lines = ["metric," + ",".join(methods)]
        for metric in ("median", "mean", "sd"):
            lines.append(metric + "," + ",".join(_fmt(getattr(r, metric)) for r in rows))
        lines.append("n_missing," + ",".join(str(r.n_missing) for r in rows))
        return "\n".join(lines) + "\n"
    if format != "markdown":
        raise ValueError(f"unknown format {format!r}")
    finite = [r.median for r in rows if np.isfinite(r.median)]
    best = min(finite) if finite else np.nan
    header = "| metric | " + " | ".join(methods) + " |"
    rule = "|---" * (len(methods) + 1) + "|"
    med_cells = [
        f"**{r.median:.3f}**" if np.isfinite(r.median) and r.median == best else f"{r.median:.3f}"
        for r in rows
    ]
    lines = [
        header,
        rule,
        "| median | " + " | ".join(med_cells) + " |",
        "| mean | " + " | ".join(f"{r.mean:.3f}" for r in rows) + " |",
        "| s.d. | " + " | ".join(f"{r.sd:.3f}" for r in rows) + " |",
    ]
    return "\n".join(lines) + "\n"


def emit_link_plot(state, data, path, grid_points=512):
    """CSV with the fitted link on a t-grid plus the projected data scatter.

    Columns kind,t,value: 'grid' rows carry (t, f_hat(t)) over a uniform
    grid on [-1, 1]; 'scatter' rows carry (theta_hat . x_i, y_i).
    """
    grid = np.linspace(-1.0, 1.0, grid_points)
    fhat = link_values(state.link, grid)
    proj = data.x @ state.index.values
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("kind,t,value\n")
        for t, v in zip(grid, fhat):
            fh.write(f"grid,{_fmt(t)},{_fmt(v)}\n")
        for t, v in zip(proj, data.y):
            fh.write(f"scatter,{_fmt(t)},{_fmt(v)}\n")


def write_outputs(name, rows, outdir):
    """Write <name>_summary.csv and the companion <name>_raw.csv."""
    os.makedirs(outdir, exist_ok=True)
    summary_path = os.path.join(outdir, f"{name}_summary.csv")
    with open(summary_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(summarize(rows, format="csv"))
    raw_path = os.path.join(outdir, f"{name}_raw.csv")
    with open(raw_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("rep," + ",".join(r.method for r in rows) + "\n")
        reps = rows[0].per_rep.size
        for i in range(reps):
            cells = ",".join(_fmt(r.per_rep[i]) for r in rows)
            fh.write(f"{i},{cells}\n")
    return summary_path, raw_path
