"""Shared domain types: perturbation balls, datasets, losses.

Everything here is pure and deterministic; values can be shared freely
across threads.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "PerturbationBall",
    "BinaryLabels",
    "ClassLabels",
    "RealLabels",
    "Dataset",
    "LossSpec",
    "RademacherDraw",
    "dual_exponent",
    "q_norm",
    "q_norm_subgradient",
    "loss_eval",
    "softmax_delta",
    "xe_value_and_derivative",
    "margin_ramp",
    "regression_loss_pm",
    "hinge",
    "hinge_indicator",
    "load_dataset",
    "save_dataset",
]

SUPPORTED_P = (1.0, 2.0, math.inf)


def dual_exponent(p: float) -> float:
    """Return q with 1/p + 1/q = 1, under the conventions 1<->inf, 2<->2."""
    if p == 1:
        return math.inf
    if p == 2:
        return 2.0
    if math.isinf(p):
        return 1.0
    raise ValueError(f"unsupported norm exponent p={p!r}; expected 1, 2, or inf")


def q_norm(v: np.ndarray, q: float) -> float:
    v = np.asarray(v, dtype=float)
    if math.isinf(q):
        return float(np.max(np.abs(v))) if v.size else 0.0
    if q == 1:
        return float(np.sum(np.abs(v)))
    if q == 2:
        return float(np.linalg.norm(v))
    raise ValueError(f"unsupported dual exponent q={q!r}")


def q_norm_subgradient(v: np.ndarray, q: float) -> np.ndarray:
    """Deterministic subgradient of ||v||_q.

    q=1: sign vector (0 at zeros); q=2: v/||v|| (zero vector at v=0);
    q=inf: indicator of the lowest-index maximal-|v_j| coordinate.
    """
    v = np.asarray(v, dtype=float)
    if q == 1:
        return np.sign(v)
    if q == 2:
        nrm = np.linalg.norm(v)
        return v / nrm if nrm > 0 else np.zeros_like(v)
    if math.isinf(q):
        g = np.zeros_like(v)
        if v.size:
            j = int(np.argmax(np.abs(v)))
            g[j] = math.copysign(1.0, v[j]) if v[j] != 0 else 0.0
        return g
    raise ValueError(f"unsupported dual exponent q={q!r}")


@dataclass(frozen=True)
class PerturbationBall:
    """An l_p adversary budget: perturbations w with ||w||_p <= epsilon."""

    p: float
    epsilon: float

    def __post_init__(self):
        if self.p not in SUPPORTED_P:
            raise ValueError(f"unsupported norm exponent p={self.p!r}; expected 1, 2, or inf")
        if not (self.epsilon >= 0):
            raise ValueError(f"epsilon must be nonnegative, got {self.epsilon!r}")

    @property
    def q(self) -> float:
        return dual_exponent(self.p)


@dataclass(frozen=True)
class BinaryLabels:
    values: np.ndarray  # entries in {+1, -1}

    def __post_init__(self):
        v = np.asarray(self.values)
        object.__setattr__(self, "values", v)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("binary labels must be a nonempty 1-D array")
        if not np.all(np.isin(v, (-1, 1))):
            raise ValueError("binary labels must be +1 or -1")

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class ClassLabels:
    """0-based class indices with the +/-1 one-hot encoding used by the bounds."""

    indices: np.ndarray
    num_classes: int

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=int)
        object.__setattr__(self, "indices", idx)
        if idx.ndim != 1 or idx.size == 0:
            raise ValueError("class labels must be a nonempty 1-D array")
        if self.num_classes < 2:
            raise ValueError("need at least 2 classes")
        if idx.min() < 0 or idx.max() >= self.num_classes:
            raise ValueError("class index out of range")

    def one_hot(self) -> np.ndarray:
        """(n, K) matrix with exactly one +1 per row and -1 elsewhere."""
        y = -np.ones((len(self.indices), self.num_classes))
        y[np.arange(len(self.indices)), self.indices] = 1.0
        return y

    def __len__(self):
        return len(self.indices)


@dataclass(frozen=True)
class RealLabels:
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("real labels must be a nonempty 1-D array")
        if not np.all(np.isfinite(v)):
            raise ValueError("real labels must be finite")

    def __len__(self):
        return len(self.values)


Labels = BinaryLabels | ClassLabels | RealLabels


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray  # (n, m)
    labels: Labels

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        object.__setattr__(self, "features", X)
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise ValueError("features must be an n x m matrix with n, m >= 1")
        if not np.all(np.isfinite(X)):
            raise ValueError("features must be finite")
        if len(self.labels) != X.shape[0]:
            raise ValueError("label count does not match number of rows")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def m(self) -> int:
        return self.features.shape[1]

    @property
    def radius(self) -> float:
        """max_i ||x_i||_2"""
        return float(np.max(np.linalg.norm(self.features, axis=1)))


# ---------------------------------------------------------------------------
# Losses
# ---------------------------------------------------------------------------

HINGE = "hinge"
HINGE_TRUNCATED = "hinge_truncated"
ZERO_ONE = "zero_one"
HINGE_INDICATOR = "hinge_indicator"
CROSS_ENTROPY = "cross_entropy_softmax"
MARGIN = "margin"
REGRESSION_POWER = "regression_power"

_BINARY_VARIANTS = (HINGE, HINGE_TRUNCATED, ZERO_ONE, HINGE_INDICATOR, CROSS_ENTROPY)


@dataclass(frozen=True)
class LossSpec:
    variant: str
    rho: float = 1.0  # margin loss only
    r: float = 2.0  # regression only
    B: float = 1.0  # regression only

    def __post_init__(self):
        known = _BINARY_VARIANTS + (MARGIN, REGRESSION_POWER)
        if self.variant not in known:
            raise ValueError(f"unknown loss variant {self.variant!r}")
        if self.variant == MARGIN and not self.rho > 0:
            raise ValueError("margin loss requires rho > 0")
        if self.variant == REGRESSION_POWER and not (self.r > 0 and self.B > 0):
            raise ValueError("regression loss requires r > 0 and B > 0")

    @property
    def is_binary(self) -> bool:
        return self.variant in _BINARY_VARIANTS

    @property
    def upper_bound(self) -> float:
        """Range bound used by the confidence terms; inf if unbounded."""
        if self.variant in (HINGE_TRUNCATED, ZERO_ONE, HINGE_INDICATOR, MARGIN):
            return 1.0
        if self.variant == REGRESSION_POWER:
            return self.B**self.r
        return math.inf


def softmax_delta(a):
    """(e^a - 1)/(e^a + 1); odd, strictly increasing, saturates without overflow."""
    return np.tanh(np.asarray(a, dtype=float) / 2.0)


def xe_value_and_derivative(a, y):
    """Natural-log cross-entropy after the softmax link, and its derivative.

    g_{+1}(a) = -ln(e^a/(e^a+1)), g_{-1}(a) = -ln(1/(e^a+1));
    g'_y(a) = -y / (1 + e^{y a}), so |g'| <= 1.
    """
    a = np.asarray(a, dtype=float)
    y = np.asarray(y, dtype=float)
    value = np.logaddexp(0.0, -y * a)
    deriv = -y / (1.0 + np.exp(y * a))
    return value, deriv


def hinge(pred, y):
    return np.maximum(0.0, 1.0 - np.asarray(y, float) * np.asarray(pred, float))


def hinge_indicator(pred, y):
    return (hinge(pred, y) > 0).astype(float)


def margin_ramp(t, rho: float):
    """phi_rho: 1 below 0, linear on (0, rho), 0 above rho."""
    return np.clip(1.0 - np.asarray(t, dtype=float) / rho, 0.0, 1.0)


def multiclass_margin(scores: np.ndarray, label: int) -> float:
    """m_f(z) = f_label(x) - max_{i != label} f_i(x)."""
    scores = np.asarray(scores, dtype=float)
    others = np.delete(scores, label)
    return float(scores[label] - np.max(others))


def regression_loss_pm(upper, lower, y, r: float, B: float):
    """Two-sided truncated regression loss of an envelope pair.

    max{ min{(upper-y)_+^r, B^r}, min{(lower-y)_-^r, B^r} }.
    With upper = lower = f(x) this is the plain truncated loss.
    """
    upper = np.asarray(upper, dtype=float)
    lower = np.asarray(lower, dtype=float)
    y = np.asarray(y, dtype=float)
    plus = np.minimum(np.maximum(upper - y, 0.0) ** r, B**r)
    minus = np.minimum(np.maximum(y - lower, 0.0) ** r, B**r)
    return np.maximum(plus, minus)


def loss_eval(loss: LossSpec, prediction, label) -> float:
    """Evaluate a loss at a single prediction.

    Binary variants take a scalar prediction and a +/-1 label; the margin
    loss takes a K-vector of scores and a class index; the regression loss
    takes a scalar prediction and a real label.
    """
    if loss.variant == MARGIN:
        scores = np.asarray(prediction, dtype=float)
        if scores.ndim != 1:
            raise ValueError("margin loss expects a score vector")
        if not np.all(np.isfinite(scores)):
            raise ValueError("non-finite prediction")
        return float(margin_ramp(multiclass_margin(scores, int(label)), loss.rho))

    pred = float(prediction)
    if not math.isfinite(pred):
        raise ValueError("non-finite prediction")

    if loss.variant == REGRESSION_POWER:
        return float(min(abs(pred - float(label)) ** loss.r, loss.B**loss.r))

    y = int(label)
    if y not in (-1, 1):
        raise ValueError("binary losses expect a +/-1 label")
    if loss.variant == HINGE:
        return float(hinge(pred, y))
    if loss.variant == HINGE_TRUNCATED:
        return float(min(1.0, hinge(pred, y)))
    if loss.variant == ZERO_ONE:
        return 1.0 if y * pred <= 0 else 0.0
    if loss.variant == HINGE_INDICATOR:
        return float(hinge_indicator(pred, y))
    if loss.variant == CROSS_ENTROPY:
        value, _ = xe_value_and_derivative(pred, y)
        return float(value)
    raise AssertionError(loss.variant)


def binary_loss_batch(loss: LossSpec, pred: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Vectorized binary loss over sample arrays."""
    pred = np.asarray(pred, dtype=float)
    y = np.asarray(y, dtype=float)
    if loss.variant == HINGE:
        return hinge(pred, y)
    if loss.variant == HINGE_TRUNCATED:
        return np.minimum(1.0, hinge(pred, y))
    if loss.variant == ZERO_ONE:
        return (y * pred <= 0).astype(float)
    if loss.variant == HINGE_INDICATOR:
        return hinge_indicator(pred, y)
    if loss.variant == CROSS_ENTROPY:
        value, _ = xe_value_and_derivative(pred, y)
        return value
    raise ValueError(f"{loss.variant} is not a binary loss")


# ---------------------------------------------------------------------------
# Rademacher draws
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RademacherDraw:
    sigma: np.ndarray  # entries in {+1, -1}
    seed: int

    @staticmethod
    def generate(n: int, seed: int) -> "RademacherDraw":
        rng = np.random.default_rng(seed)
        sigma = rng.integers(0, 2, size=n) * 2 - 1
        return RademacherDraw(sigma=sigma.astype(float), seed=seed)


def rademacher_matrix(n: int, draws: int, seed: int) -> np.ndarray:
    """(draws, n) matrix of seeded +/-1 draws."""
    rng = np.random.default_rng(seed)
    return (rng.integers(0, 2, size=(draws, n)) * 2 - 1).astype(float)


# ---------------------------------------------------------------------------
# Dataset file format: UTF-8 CSV, header x0..x{m-1} then `label`
# ---------------------------------------------------------------------------


def save_dataset(dataset: Dataset, path: str | Path) -> None:
    X = dataset.features
    labels = dataset.labels
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{j}" for j in range(dataset.m)] + ["label"])
        for i in range(dataset.n):
            row = [repr(float(v)) for v in X[i]]
            if isinstance(labels, BinaryLabels):
                row.append(str(int(labels.values[i])))
            elif isinstance(labels, ClassLabels):
                row.append(str(int(labels.indices[i])))
            else:
                row.append(repr(float(labels.values[i])))
            writer.writerow(row)


def load_dataset(path: str | Path, kind: str = "auto") -> Dataset:
    """Read the CSV format; `kind` is binary|multiclass|regression|auto."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[-1] != "label":
            raise ValueError("last column must be `label`")
        m = len(header) - 1
        if [h for h in header[:-1]] != [f"x{j}" for j in range(m)]:
            raise ValueError("feature columns must be named x0..x{m-1}")
        feats, raw_labels = [], []
        for row in reader:
            feats.append([float(v) for v in row[:m]])
            raw_labels.append(row[m])
    X = np.asarray(feats, dtype=float)
    vals = np.asarray([float(v) for v in raw_labels])
    if kind == "auto":
        if np.all(np.isin(vals, (-1.0, 1.0))):
            kind = "binary"
        elif np.all(vals == np.round(vals)) and np.all(vals >= 0):
            kind = "multiclass"
        else:
            kind = "regression"
    if kind == "binary":
        labels: Labels = BinaryLabels(vals.astype(int))
    elif kind == "multiclass":
        idx = vals.astype(int)
        labels = ClassLabels(idx, num_classes=int(idx.max()) + 1)
    elif kind == "regression":
        labels = RealLabels(vals)
    else:
        raise ValueError(f"unknown dataset kind {kind!r}")
    return Dataset(features=X, labels=labels)
