"""Domain types and elementary operations for sparse single-index regression.

A model is a pair (index, link): a direction theta on the positive-signed
unit l1-sphere together with a univariate function represented by its first
m coefficients in the non-normalized trigonometric dictionary

    phi_1(t) = 1,  phi_{2j}(t) = cos(pi*j*t),  phi_{2j+1}(t) = sin(pi*j*t).

Predictions are f(theta^T x), and the empirical risk is the mean squared
residual on a dataset whose inputs live in [-1, 1]^p.  Everything here is a
pure function of its inputs; arrays inside the domain types are frozen.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Dataset",
    "IndexVector",
    "LinkCoeffs",
    "ModelState",
    "GibbsConfig",
    "eval_dictionary",
    "dictionary_matrix",
    "eval_link",
    "link_values",
    "predict",
    "empirical_risk",
    "make_state",
    "theoretical_lambda",
]

L1_TOL = 1e-12  # slack on ||theta||_1 == 1


def _frozen(a, dtype=float):
    out = np.ascontiguousarray(np.asarray(a, dtype=dtype))
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class Dataset:
    """n observations of (x in R^p, y in R).

    Inputs are expected to satisfy the sup-norm bound |x_ij| <= 1; raw
    (un-normalized) files can be represented by passing
    ``check_bounds=False`` at construction and normalizing before any model
    fit.  ``require_unit_bounds`` re-checks the bound where it matters.
    """

    x: np.ndarray
    y: np.ndarray
    check_bounds: bool = True

    def __post_init__(self):
        x = _frozen(np.atleast_2d(self.x))
        y = _frozen(np.atleast_1d(self.y))
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        n, p = x.shape
        if n < 2 or p < 1:
            raise ValueError(f"need n >= 2 and p >= 1, got n={n}, p={p}")
        if y.shape != (n,):
            raise ValueError(f"y has shape {y.shape}, expected ({n},)")
        if not np.all(np.isfinite(x)) or not np.all(np.isfinite(y)):
            raise ValueError("dataset contains non-finite values")
        if self.check_bounds:
            self.require_unit_bounds()

    @property
    def n(self):
        return self.x.shape[0]

    @property
    def p(self):
        return self.x.shape[1]

    def require_unit_bounds(self):
        worst = np.max(np.abs(self.x)) if self.x.size else 0.0
        if worst > 1.0 + 1e-12:
            raise ValueError(
                f"inputs exceed the unit sup-norm bound (max |x| = {worst:.6g}); "
                "normalize the data first"
            )
        return self


@dataclass(frozen=True, eq=False)
class IndexVector:
    """A point of the positive-signed unit l1-sphere with explicit support.

    Invariants: sum_j |values_j| == 1 (to 1e-12), values_j != 0 exactly on
    ``support`` (sorted), and the first supported coordinate is positive.
    """

    values: np.ndarray
    support: np.ndarray = field(default=None)

    def __post_init__(self):
        values = _frozen(np.atleast_1d(self.values))
        support = self.support
        if support is None:
            support = np.flatnonzero(values)
        support = _frozen(np.sort(np.asarray(support)), dtype=np.int64)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "support", support)
        if support.size < 1:
            raise ValueError("index support is empty")
        nz = np.flatnonzero(values)
        if not np.array_equal(nz, support):
            raise ValueError("support does not match the nonzero pattern of values")
        if abs(np.sum(np.abs(values)) - 1.0) > L1_TOL:
            raise ValueError("index is not l1-normalized")
        if values[support[0]] <= 0:
            raise ValueError("sign convention violated: first supported coordinate must be positive")

    @classmethod
    def from_raw(cls, raw):
        """Project an arbitrary nonzero vector: l1-normalize and fix the sign."""
        raw = np.asarray(raw, dtype=float)
        norm = np.sum(np.abs(raw))
        if norm <= 0 or not np.isfinite(norm):
            raise ValueError("cannot normalize a zero or non-finite vector")
        vals = raw / norm
        nz = np.flatnonzero(vals)
        if vals[nz[0]] < 0:
            vals = -vals
        return cls(vals)

    @property
    def k(self):
        return int(self.support.size)


@dataclass(frozen=True, eq=False)
class LinkCoeffs:
    """Coefficients beta of f = sum_j beta_j * phi_j (length m >= 1)."""

    beta: np.ndarray

    def __post_init__(self):
        beta = _frozen(np.atleast_1d(self.beta))
        object.__setattr__(self, "beta", beta)
        if beta.size < 1:
            raise ValueError("link needs at least one coefficient")
        if not np.all(np.isfinite(beta)):
            raise ValueError("link coefficients must be finite")

    @property
    def m(self):
        return int(self.beta.size)

    def weighted_l1(self):
        """sum_j j*|beta_j| — the norm defining the prior's coefficient ball."""
        j = np.arange(1, self.m + 1)
        return float(np.sum(j * np.abs(self.beta)))


@dataclass(frozen=True, eq=False)
class ModelState:
    """Chain state: (index, link) plus the cached empirical risk."""

    index: IndexVector
    link: LinkCoeffs
    risk: float

    def __post_init__(self):
        if not (np.isfinite(self.risk) and self.risk >= 0):
            raise ValueError(f"risk must be a finite nonnegative number, got {self.risk}")


@dataclass(frozen=True)
class GibbsConfig:
    """Sampler settings.

    ``lambda_`` is the inverse temperature; None means "resolve to 4n when
    the dataset is known".  lambda_ == 0 is accepted so that the chain can
    target the prior directly (used by the prior-recovery diagnostics).
    """

    lambda_: float | None = None
    C: float = 1e100
    s: float = 0.1
    delta: float = 0.5
    steps: int = 1000
    chains: int = 3
    seed: int = 0
    warm_start: str = "none"

    def __post_init__(self):
        if self.lambda_ is not None and not (np.isfinite(self.lambda_) and self.lambda_ >= 0):
            raise ValueError("lambda must be a finite nonnegative number or None")
        if not (self.C >= 1):
            raise ValueError("C must be >= 1")
        if not (self.s > 0):
            raise ValueError("s must be positive")
        if not (0 < self.delta <= 1):
            raise ValueError("delta must be in (0, 1]")
        if self.steps < 0:
            raise ValueError("steps must be nonnegative")
        if self.chains < 1:
            raise ValueError("need at least one chain")
        if self.warm_start not in ("none", "hhi", "lasso_direction"):
            raise ValueError(f"unknown warm start policy {self.warm_start!r}")

    def resolve_lambda(self, n):
        return float(self.lambda_) if self.lambda_ is not None else 4.0 * n


def dictionary_matrix(t, m):
    """Evaluate [phi_1 .. phi_m] at each t; returns an array (len(t), m).

    Column j (1-based) is 1 for j=1, cos(pi*h*t) for j=2h, sin(pi*h*t) for
    j=2h+1.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if m < 1:
        raise ValueError("m must be >= 1")
    out = np.empty((t.size, m))
    out[:, 0] = 1.0
    for j in range(2, m + 1):
        h = j // 2
        if j % 2 == 0:
            out[:, j - 1] = np.cos(np.pi * h * t)
        else:
            out[:, j - 1] = np.sin(np.pi * h * t)
    return out


def eval_dictionary(t, m):
    """The first m dictionary functions at a scalar t."""
    return dictionary_matrix(float(t), m)[0]


def link_values(link, t):
    """f(t) for each entry of t (vectorized)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    return dictionary_matrix(t, link.m) @ link.beta


def eval_link(link, t):
    """f(t) = sum_j beta_j phi_j(t) at a scalar t."""
    return float(link_values(link, float(t))[0])


def predict(state, x):
    """Model prediction f(theta^T x) for a single input vector."""
    x = np.asarray(x, dtype=float)
    vals = state.index.values
    if x.shape != vals.shape:
        raise ValueError(f"input has shape {x.shape}, index expects {vals.shape}")
    return eval_link(state.link, float(vals @ x))


def empirical_risk(data, index, link):
    """Mean squared residual (1/n) sum_i (y_i - f(theta^T x_i))^2."""
    if data.n == 0:
        raise ValueError("empty dataset")
    t = data.x @ index.values
    resid = data.y - link_values(link, t)
    return float(np.mean(resid * resid))


def make_state(data, index, link):
    """Assemble a ModelState with its risk cache filled in."""
    return ModelState(index=index, link=link, risk=empirical_risk(data, index, link))


def theoretical_lambda(n, C, sigma, L):
    """Inverse temperature from the oracle-inequality analysis.

    lambda = n / (w + 2[(2C+1)^2 + 4 sigma^2]) with w = 8(2C+1) max(L, 2C+1).
    Provided for documentation and experiments; the practical default used
    by the fitting code is lambda = 4n.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if C < 1:
        raise ValueError("C must be >= 1")
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    if L <= 0:
        raise ValueError("L must be positive")
    w = 8.0 * (2 * C + 1) * max(L, 2 * C + 1)
    return n / (w + 2.0 * ((2 * C + 1) ** 2 + 4.0 * sigma**2))
