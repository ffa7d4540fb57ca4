"""Synthetic generators, CSV ingestion, normalization, noise augmentation.

Synthetic inputs are iid uniform on [-1, 1]^p with additive Gaussian noise
on the response; three response surfaces are provided:

* linear:  2 * theta.x
* si:      2 * (theta.x)^2 + theta.x          (single-index, theta sparse)
* np:      2|x_2| sqrt(|x_1|) - x_3^3          (not a single-index model)

with theta = (0.5, 0.5, 0, ..., 0).

Real data enters as CSV (RFC-4180-style, header row, '.' decimal); rows
with missing cells ('' / 'NA' / '?') or non-numeric cells are dropped.
Normalization maps every input column onto [-1, 1] by a per-column affine
min-max map fitted on the training set and rescales y to standard
deviation 0.5; applying the fitted map to other data clips inputs into
[-1, 1] so the modeling assumptions keep holding downstream.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .core import Dataset

__all__ = [
    "SyntheticSpec",
    "NormalizationParams",
    "simulate",
    "load_csv",
    "normalize",
    "augment_noise",
    "MODEL_NAMES",
]

MODEL_NAMES = ("linear", "si", "np")

_MISSING_TOKENS = {"", "NA", "?"}


@dataclass(frozen=True)
class SyntheticSpec:
    model: str
    n: int
    p: int
    sigma: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if self.model not in MODEL_NAMES:
            raise ValueError(f"unknown model {self.model!r}; expected one of {MODEL_NAMES}")
        min_p = 3 if self.model == "np" else 2
        if self.p < min_p:
            raise ValueError(f"model {self.model!r} needs p >= {min_p}")
        if self.n < 2:
            raise ValueError("need n >= 2")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")


def _surface(model, x):
    if model in ("linear", "si"):
        t = 0.5 * x[:, 0] + 0.5 * x[:, 1]
        return 2.0 * t if model == "linear" else 2.0 * t * t + t
    return 2.0 * np.abs(x[:, 1]) * np.sqrt(np.abs(x[:, 0])) - x[:, 2] ** 3


def simulate(spec):
    """Generate a Dataset from the spec; deterministic under the seed."""
    rng = np.random.default_rng(spec.seed)
    x = rng.uniform(-1.0, 1.0, size=(spec.n, spec.p))
    y = _surface(spec.model, x) + rng.normal(0.0, spec.sigma, size=spec.n)
    return Dataset(x, y)


def load_csv(path, target_column, na_policy="drop"):
    """Read a numeric CSV with a header row into a raw (un-normalized) Dataset.

    Rows containing any missing ('' / 'NA' / '?') or non-numeric cell are
    dropped.  The returned dataset skips the unit-bound check; normalize it
    before fitting.
    """
    if na_policy != "drop":
        raise ValueError("only the drop policy for missing values is supported")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if target_column not in header:
            raise ValueError(
                f"{path}: target column {target_column!r} not among {header}"
            )
        t_pos = header.index(target_column)
        rows, dropped = [], 0
        for row in reader:
            if len(row) != len(header):
                dropped += 1
                continue
            try:
                vals = [float(c) if c.strip() not in _MISSING_TOKENS else None for c in row]
            except ValueError:
                dropped += 1
                continue
            if any(v is None for v in vals):
                dropped += 1
                continue
            rows.append(vals)
    if len(rows) < 2:
        raise ValueError(
            f"{path}: empty dataset after dropping incomplete rows "
            f"(kept {len(rows)}, dropped {dropped})"
        )
    table = np.asarray(rows)
    y = table[:, t_pos]
    x = np.delete(table, t_pos, axis=1)
    return Dataset(x, y, check_bounds=False)


@dataclass(frozen=True)
class NormalizationParams:
    """Per-column input min/max plus the output scale, fitted on a training set."""

    x_min: np.ndarray
    x_max: np.ndarray
    y_scale: float

    def apply(self, data, clip=True):
        """Affine-map a dataset with the stored parameters.

        Inputs from outside the training range are clipped into [-1, 1]
        (preserves the sup-norm assumption for the sampler); constant
        training columns map to 0.
        """
        span = self.x_max - self.x_min
        ok = span > 0
        x = np.zeros_like(np.asarray(data.x, dtype=float))
        x[:, ok] = 2.0 * (data.x[:, ok] - self.x_min[ok]) / span[ok] - 1.0
        if clip:
            x = np.clip(x, -1.0, 1.0)
        return Dataset(x, data.y * self.y_scale, check_bounds=clip)


def normalize(train, apply_to):
    """Fit normalization on ``train`` and apply it to ``apply_to``.

    Returns (normalized apply_to, params).  The params map the training
    inputs into [-1, 1] exactly and scale y so the training response has
    standard deviation 0.5 (population convention, ddof=0).
    """
    sd = float(np.std(train.y))
    if sd == 0.0:
        raise ValueError("training response is constant; cannot scale to sd 0.5")
    params = NormalizationParams(
        x_min=train.x.min(axis=0),
        x_max=train.x.max(axis=0),
        y_scale=0.5 / sd,
    )
    return params.apply(apply_to), params


def augment_noise(data, factor=4, seed=0):
    """Embed the data into dimension p * factor with iid uniform [0, 1] columns.

    The original columns are preserved bit-exactly; the appended fake
    coordinates still satisfy the unit sup-norm bound.
    """
    if factor < 2:
        raise ValueError("factor must be >= 2")
    rng = np.random.default_rng(seed)
    fake = rng.uniform(0.0, 1.0, size=(data.n, data.p * (factor - 1)))
    x = np.concatenate([data.x, fake], axis=1)
    return Dataset(x, data.y, check_bounds=data.check_bounds)
