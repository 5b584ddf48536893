"""Closed-form supremum transform, linear-model risk certificates, and the
two linear training algorithms (convex robust hinge, regularized grid)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    BinaryLabels,
    ClassLabels,
    Dataset,
    LossSpec,
    PerturbationBall,
    RealLabels,
    binary_loss_batch,
    hinge,
    margin_ramp,
    q_norm,
    q_norm_subgradient,
    regression_loss_pm,
)
from . import core

__all__ = [
    "LinearModel",
    "MulticlassLinearModel",
    "CapacityLinear",
    "BoundReport",
    "sup_transform_linear",
    "sup_transform_multiclass",
    "psi_plus_minus_linear",
    "robust_empirical_risk_linear",
    "gamma_lin",
    "rad_bound_linear",
    "certify_linear",
    "certify_multiclass_linear",
    "certify_linear_regression",
    "train_convex",
    "train_regularized_grid",
    "convex_objective",
    "regularized_objective",
]


@dataclass(frozen=True)
class LinearModel:
    theta: np.ndarray
    b: float

    def __post_init__(self):
        th = np.asarray(self.theta, dtype=float)
        object.__setattr__(self, "theta", th)
        if not (np.all(np.isfinite(th)) and math.isfinite(self.b)):
            raise ValueError("model parameters must be finite")

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X, dtype=float) @ self.theta + self.b

    def to_dict(self) -> dict:
        return {"kind": "linear", "theta": [float(v) for v in self.theta], "b": float(self.b)}

    @staticmethod
    def from_dict(d: dict) -> "LinearModel":
        return LinearModel(theta=np.asarray(d["theta"], dtype=float), b=float(d["b"]))


@dataclass(frozen=True)
class MulticlassLinearModel:
    Theta: np.ndarray  # (K, m), rows theta_k
    b: np.ndarray  # (K,)

    def __post_init__(self):
        Th = np.asarray(self.Theta, dtype=float)
        bv = np.asarray(self.b, dtype=float)
        object.__setattr__(self, "Theta", Th)
        object.__setattr__(self, "b", bv)
        if Th.ndim != 2 or Th.shape[0] < 2:
            raise ValueError("Theta must be K x m with K >= 2")
        if bv.shape != (Th.shape[0],):
            raise ValueError("b must have one entry per class")
        if not (np.all(np.isfinite(Th)) and np.all(np.isfinite(bv))):
            raise ValueError("model parameters must be finite")

    @property
    def num_classes(self) -> int:
        return self.Theta.shape[0]

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X, dtype=float) @ self.Theta.T + self.b

    def to_dict(self) -> dict:
        return {
            "kind": "multiclass_linear",
            "Theta": [[float(v) for v in row] for row in self.Theta],
            "b": [float(v) for v in self.b],
        }

    @staticmethod
    def from_dict(d: dict) -> "MulticlassLinearModel":
        return MulticlassLinearModel(
            Theta=np.asarray(d["Theta"], dtype=float), b=np.asarray(d["b"], dtype=float)
        )


@dataclass(frozen=True)
class CapacityLinear:
    """Norm caps defining the linear function class a bound holds for."""

    M2: float
    Mq: float
    R: float

    @staticmethod
    def from_model(model, dataset: Dataset, q: float) -> "CapacityLinear":
        if isinstance(model, MulticlassLinearModel):
            M2 = float(np.max(np.linalg.norm(model.Theta, axis=1)))
            Mq = float(max(q_norm(row, q) for row in model.Theta))
        else:
            M2 = float(np.linalg.norm(model.theta))
            Mq = q_norm(model.theta, q)
        return CapacityLinear(M2=M2, Mq=Mq, R=dataset.radius)


@dataclass(frozen=True)
class BoundReport:
    """Decomposed adversarial-risk certificate; total = sum of the four terms."""

    empirical_term: float
    perturbation_term: float
    complexity_term: float
    confidence_term: float
    total: float
    delta: float
    epsilon: float
    n: int
    loss: str

    @staticmethod
    def assemble(empirical, perturbation, complexity, confidence, *, delta, epsilon, n, loss):
        terms = (empirical, perturbation, complexity, confidence)
        if any(not math.isfinite(t) or t < 0 for t in terms):
            raise ValueError(f"bound terms must be finite and nonnegative, got {terms}")
        return BoundReport(
            empirical_term=empirical,
            perturbation_term=perturbation,
            complexity_term=complexity,
            confidence_term=confidence,
            total=sum(terms),
            delta=delta,
            epsilon=epsilon,
            n=n,
            loss=loss,
        )


def _check_delta(delta: float) -> None:
    if not (0.0 < delta < 1.0):
        raise ValueError(f"delta must lie in (0, 1), got {delta!r}")


def confidence_term(delta: float, n: int, scale: float = 1.0) -> float:
    return 3.0 * scale * math.sqrt(math.log(2.0 / delta) / (2.0 * n))


# ---------------------------------------------------------------------------
# Supremum transform
# ---------------------------------------------------------------------------


def sup_transform_linear(model: LinearModel, ball: PerturbationBall, x, y) -> float:
    """Psi f(x, y) = theta.x + b - y * eps * ||theta||_q."""
    f = float(np.dot(model.theta, np.asarray(x, dtype=float)) + model.b)
    return f - float(y) * ball.epsilon * q_norm(model.theta, ball.q)


def sup_transform_batch(model: LinearModel, ball: PerturbationBall, X, y) -> np.ndarray:
    return model.predict(X) - np.asarray(y, dtype=float) * ball.epsilon * q_norm(
        model.theta, ball.q
    )


def sup_transform_multiclass(
    model: MulticlassLinearModel, ball: PerturbationBall, x, y_onehot
) -> np.ndarray:
    """Componentwise sup transform: row k uses label y^(k)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y_onehot, dtype=float)
    norms = np.array([q_norm(row, ball.q) for row in model.Theta])
    return model.Theta @ x + model.b - y * ball.epsilon * norms


def psi_plus_minus_linear(model: LinearModel, ball: PerturbationBall, x) -> tuple[float, float]:
    """(sup, inf) of f over the ball: f(x) +/- eps * ||theta||_q."""
    f = float(np.dot(model.theta, np.asarray(x, dtype=float)) + model.b)
    shift = ball.epsilon * q_norm(model.theta, ball.q)
    return f + shift, f - shift


def robust_empirical_risk_linear(model, dataset: Dataset, ball: PerturbationBall, loss: LossSpec) -> float:
    """Empirical risk at the transformed predictions (exact adversarial risk
    for binary/regression, an upper bound componentwise for multiclass)."""
    labels = dataset.labels
    if isinstance(labels, BinaryLabels):
        if not loss.is_binary:
            raise ValueError(f"loss {loss.variant} incompatible with binary labels")
        preds = sup_transform_batch(model, ball, dataset.features, labels.values)
        return float(np.mean(binary_loss_batch(loss, preds, labels.values)))
    if isinstance(labels, ClassLabels):
        if loss.variant != core.MARGIN:
            raise ValueError(f"loss {loss.variant} incompatible with class labels")
        Y = labels.one_hot()
        norms = np.array([q_norm(row, ball.q) for row in model.Theta])
        scores = model.predict(dataset.features) - ball.epsilon * Y * norms
        total = 0.0
        for i, k in enumerate(labels.indices):
            others = np.delete(scores[i], k)
            total += margin_ramp(scores[i, k] - np.max(others), loss.rho)
        return float(total / dataset.n)
    if isinstance(labels, RealLabels):
        if loss.variant != core.REGRESSION_POWER:
            raise ValueError(f"loss {loss.variant} incompatible with real labels")
        f = model.predict(dataset.features)
        shift = ball.epsilon * q_norm(model.theta, ball.q)
        vals = regression_loss_pm(f + shift, f - shift, labels.values, loss.r, loss.B)
        return float(np.mean(vals))
    raise AssertionError(type(labels))


def gamma_lin(model: LinearModel, dataset: Dataset, ball: PerturbationBall) -> int:
    """Number of samples with positive transformed hinge loss."""
    labels = dataset.labels
    if not isinstance(labels, BinaryLabels):
        raise ValueError("gamma_lin requires binary labels")
    preds = sup_transform_batch(model, ball, dataset.features, labels.values)
    return int(np.sum(hinge(preds, labels.values) > 0))


def rad_bound_linear(cap: CapacityLinear, ball: PerturbationBall, n: int) -> float:
    """M2 R / sqrt(n) + eps Mq / (2 sqrt(n))."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rn = math.sqrt(n)
    return cap.M2 * cap.R / rn + ball.epsilon * cap.Mq / (2.0 * rn)


# ---------------------------------------------------------------------------
# Certificates
# ---------------------------------------------------------------------------


def certify_linear(
    model: LinearModel,
    dataset: Dataset,
    ball: PerturbationBall,
    loss: LossSpec,
    delta: float = 0.05,
    form: str = "eq1",
) -> BoundReport:
    """Binary linear certificate.

    eq1: empirical risk of Psi f plus complexity/perturbation/confidence;
    eq2: empirical hinge of f plus the data-dependent regularizer
    eps * ||theta||_q * gamma_lin / n.  Unbounded losses are truncated to 1
    for the empirical term so the confidence term applies.
    """
    _check_delta(delta)
    labels = dataset.labels
    if not isinstance(labels, BinaryLabels):
        raise ValueError("certify_linear requires binary labels")
    if not loss.is_binary:
        raise ValueError(f"loss {loss.variant} incompatible with binary labels")
    n = dataset.n
    cap = CapacityLinear.from_model(model, dataset, ball.q)
    rn = math.sqrt(n)
    complexity = 2.0 * cap.M2 * cap.R / rn
    confidence = confidence_term(delta, n)
    if form == "eq1":
        preds = sup_transform_batch(model, ball, dataset.features, labels.values)
        empirical = float(np.mean(np.minimum(1.0, binary_loss_batch(loss, preds, labels.values))))
        perturbation = ball.epsilon * cap.Mq / rn
    elif form == "eq2":
        if loss.variant not in (core.HINGE, core.HINGE_TRUNCATED):
            raise ValueError("the regularized form applies to the hinge loss")
        empirical = float(np.mean(hinge(model.predict(dataset.features), labels.values)))
        gamma = gamma_lin(model, dataset, ball)
        perturbation = (
            ball.epsilon * q_norm(model.theta, ball.q) * gamma / n + ball.epsilon * cap.Mq / rn
        )
    else:
        raise ValueError(f"unknown form {form!r}; expected eq1 or eq2")
    return BoundReport.assemble(
        empirical, perturbation, complexity, confidence,
        delta=delta, epsilon=ball.epsilon, n=n, loss=f"{loss.variant}:{form}",
    )


def certify_multiclass_linear(
    model: MulticlassLinearModel,
    dataset: Dataset,
    ball: PerturbationBall,
    rho: float = 1.0,
    delta: float = 0.05,
) -> BoundReport:
    """Margin-loss certificate with the 8K/rho and 4K/rho complexity factors."""
    _check_delta(delta)
    if not isinstance(dataset.labels, ClassLabels):
        raise ValueError("certify_multiclass_linear requires class labels")
    if not rho > 0:
        raise ValueError("rho must be positive")
    n = dataset.n
    K = model.num_classes
    cap = CapacityLinear.from_model(model, dataset, ball.q)
    rn = math.sqrt(n)
    empirical = robust_empirical_risk_linear(
        model, dataset, ball, LossSpec(core.MARGIN, rho=rho)
    )
    complexity = (8.0 * K / rho) * cap.M2 * cap.R / rn
    perturbation = (4.0 * K / rho) * ball.epsilon * cap.Mq / rn
    confidence = confidence_term(delta, n)
    return BoundReport.assemble(
        empirical, perturbation, complexity, confidence,
        delta=delta, epsilon=ball.epsilon, n=n, loss=f"margin(rho={rho})",
    )


def certify_linear_regression(
    model: LinearModel,
    dataset: Dataset,
    ball: PerturbationBall,
    r: float,
    B: float,
    delta: float = 0.05,
) -> BoundReport:
    """Truncated power-loss certificate for linear regression."""
    _check_delta(delta)
    if not isinstance(dataset.labels, RealLabels):
        raise ValueError("certify_linear_regression requires real labels")
    if not (r > 0 and B > 0):
        raise ValueError("r and B must be positive")
    n = dataset.n
    cap = CapacityLinear.from_model(model, dataset, ball.q)
    rn = math.sqrt(n)
    empirical = robust_empirical_risk_linear(
        model, dataset, ball, LossSpec(core.REGRESSION_POWER, r=r, B=B)
    )
    lip = 4.0 * r * B ** (r - 1.0)
    complexity = lip * cap.M2 * cap.R / rn
    perturbation = lip * ball.epsilon * cap.Mq / (2.0 * rn)
    confidence = confidence_term(delta, n, scale=B**r)
    return BoundReport.assemble(
        empirical, perturbation, complexity, confidence,
        delta=delta, epsilon=ball.epsilon, n=n, loss=f"regression(r={r},B={B})",
    )


# ---------------------------------------------------------------------------
# Training (Algorithms 1 and 2)
# ---------------------------------------------------------------------------


def convex_objective(model: LinearModel, dataset: Dataset, ball: PerturbationBall) -> float:
    """Sum_i max{0, 1 - y_i f(x_i) + eps ||theta||_q} (the convex robust hinge)."""
    labels = dataset.labels
    if not isinstance(labels, BinaryLabels):
        raise ValueError("binary labels required")
    margins = labels.values * model.predict(dataset.features)
    shift = ball.epsilon * q_norm(model.theta, ball.q)
    return float(np.sum(np.maximum(0.0, 1.0 - margins + shift)))


def regularized_objective(model: LinearModel, dataset: Dataset, ball: PerturbationBall) -> float:
    """Sum_i hinge(f, z_i) + eps ||theta||_q * gamma_lin(f) (selection objective)."""
    labels = dataset.labels
    hinge_sum = float(np.sum(hinge(model.predict(dataset.features), labels.values)))
    return hinge_sum + ball.epsilon * q_norm(model.theta, ball.q) * gamma_lin(
        model, dataset, ball
    )


def _subgrad_descent(dataset, ball, iters, step, reg_gamma, objective, init=None):
    """Projection-free subgradient descent with c/sqrt(t) steps, best-iterate
    tracking.  `reg_gamma` scales an eps*||theta||_q penalty applied either
    per-sample (reg_gamma is None -> convex robust hinge) or once."""
    X = dataset.features
    y = dataset.labels.values.astype(float)
    n = dataset.n
    if init is None:
        theta = np.zeros(dataset.m)
        b = 0.0
    else:
        theta, b = init.theta.copy(), init.b
    best = LinearModel(theta.copy(), b)
    best_obj = objective(best)
    for t in range(1, iters + 1):
        margins = y * (X @ theta + b)
        if reg_gamma is None:
            shift = ball.epsilon * q_norm(theta, ball.q)
            active = (1.0 - margins + shift) > 0
            g_theta = -(y[active] @ X[active]) / n
            if ball.epsilon > 0 and np.any(active):
                g_theta = g_theta + active.mean() * ball.epsilon * q_norm_subgradient(
                    theta, ball.q
                )
        else:
            active = (1.0 - margins) > 0
            g_theta = -(y[active] @ X[active]) / n
            if ball.epsilon > 0 and reg_gamma > 0:
                g_theta = g_theta + (reg_gamma / n) * ball.epsilon * q_norm_subgradient(
                    theta, ball.q
                )
        g_b = -float(np.sum(y[active])) / n
        eta = step / math.sqrt(t)
        theta = theta - eta * g_theta
        b = b - eta * g_b
        cand = LinearModel(theta.copy(), b)
        obj = objective(cand)
        if obj < best_obj:
            best, best_obj = cand, obj
    return best, best_obj


def train_convex(
    dataset: Dataset,
    ball: PerturbationBall,
    iters: int = 5000,
    step: float = 0.5,
    seed: int = 0,
) -> LinearModel:
    """Algorithm 1: subgradient descent on the convex robust hinge objective."""
    if dataset.n == 0:
        raise ValueError("empty dataset")
    if not isinstance(dataset.labels, BinaryLabels):
        raise ValueError("binary labels required")
    model, _ = _subgrad_descent(
        dataset, ball, iters, step, None, lambda f: convex_objective(f, dataset, ball)
    )
    return model


def train_regularized_grid(
    dataset: Dataset,
    ball: PerturbationBall,
    iters: int = 5000,
    step: float = 0.5,
    seed: int = 0,
    grid: int | None = None,
    return_candidates: bool = False,
):
    """Algorithm 2: sweep gamma_i = i/n, minimize hinge + eps ||theta||_q gamma_i,
    then select the candidate with the smallest data-dependent regularized
    objective.  Ties break toward smaller gamma_i.  `grid` subsamples the
    sweep to at most that many points (None = full 0..n sweep)."""
    if dataset.n == 0:
        raise ValueError("empty dataset")
    if not isinstance(dataset.labels, BinaryLabels):
        raise ValueError("binary labels required")
    n = dataset.n
    idx = np.arange(n + 1)
    if grid is not None and grid < n + 1:
        idx = np.unique(np.round(np.linspace(0, n, grid)).astype(int))
    best_model = None
    best_obj = math.inf
    warm = None
    candidates = []
    for i in idx:
        gamma_i = i / n
        def obj(f, g=gamma_i):
            hinge_sum = float(
                np.sum(hinge(f.predict(dataset.features), dataset.labels.values))
            )
            return hinge_sum + ball.epsilon * q_norm(f.theta, ball.q) * g
        cand, _ = _subgrad_descent(dataset, ball, iters, step, gamma_i, obj, init=warm)
        warm = cand
        score = regularized_objective(cand, dataset, ball)
        candidates.append((gamma_i, cand, score))
        if score < best_obj:
            best_model, best_obj = cand, score
    if return_candidates:
        return best_model, candidates
    return best_model
