"""Feed-forward networks, the tree transform (two-channel sign-conditioned
dynamic program plus a naive recursive oracle), network risk certificates,
robust training, and the restricted fast transform."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import core
from .core import (
    BinaryLabels,
    ClassLabels,
    Dataset,
    LossSpec,
    PerturbationBall,
    RealLabels,
    binary_loss_batch,
    margin_ramp,
    q_norm,
    q_norm_subgradient,
    regression_loss_pm,
    xe_value_and_derivative,
)
from .linear import BoundReport, confidence_term, _check_delta

__all__ = [
    "NeuralNet",
    "Architecture",
    "CapacityNet",
    "init_net",
    "forward",
    "forward_batch",
    "tree_transform_eval",
    "tree_transform_batch",
    "tree_transform_naive",
    "restricted_tree_eval",
    "net_capacity",
    "rad_bound_tree",
    "certify_nn",
    "certify_multiclass_nn",
    "certify_nn_regression",
    "train_tree",
    "TreeTrainResult",
    "robust_empirical_risk_tree",
]


def _relu(z):
    return np.maximum(0.0, z)


def _relu_grad(z):
    # subgradient 0 at the kink
    return (z > 0).astype(float)


def _tanh_grad(z):
    return 1.0 - np.tanh(z) ** 2


ACTIVATIONS = {"relu": (_relu, _relu_grad), "tanh": (np.tanh, _tanh_grad)}


@dataclass(frozen=True)
class NeuralNet:
    """f(x) = A^(d+1) s_d(A^(d) ... s_1(A^(1) x)); activations are
    monotone, 1-Lipschitz, and fix 0."""

    layers: tuple  # matrices A^(1)..A^(d+1)
    activations: tuple  # names s_1..s_d

    def __post_init__(self):
        layers = tuple(np.asarray(A, dtype=float) for A in self.layers)
        object.__setattr__(self, "layers", layers)
        object.__setattr__(self, "activations", tuple(self.activations))
        if len(layers) < 2:
            raise ValueError("need at least one hidden layer (depth d >= 1)")
        if len(self.activations) != len(layers) - 1:
            raise ValueError("need one activation per hidden layer")
        for name in self.activations:
            if name not in ACTIVATIONS:
                raise ValueError(f"unknown activation {name!r}")
        for k in range(1, len(layers)):
            if layers[k].shape[1] != layers[k - 1].shape[0]:
                raise ValueError(
                    f"dimension mismatch between layers {k} and {k + 1}: "
                    f"{layers[k - 1].shape} -> {layers[k].shape}"
                )

    @property
    def depth(self) -> int:
        return len(self.layers) - 1

    @property
    def input_dim(self) -> int:
        return self.layers[0].shape[1]

    @property
    def output_dim(self) -> int:
        return self.layers[-1].shape[0]

    @property
    def widths(self) -> tuple:
        return (self.input_dim,) + tuple(A.shape[0] for A in self.layers)

    def to_dict(self) -> dict:
        return {
            "kind": "nn",
            "layers": [[[float(v) for v in row] for row in A] for A in self.layers],
            "activations": list(self.activations),
        }

    @staticmethod
    def from_dict(d: dict) -> "NeuralNet":
        return NeuralNet(
            layers=tuple(np.asarray(A, dtype=float) for A in d["layers"]),
            activations=tuple(d["activations"]),
        )


@dataclass(frozen=True)
class Architecture:
    widths: tuple  # J_0 .. J_{d+1}
    activations: tuple  # one name per hidden layer

    def __post_init__(self):
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        object.__setattr__(self, "activations", tuple(self.activations))
        if len(self.widths) < 3:
            raise ValueError("need at least input, one hidden, and output widths")
        if len(self.activations) != len(self.widths) - 2:
            raise ValueError("need one activation per hidden layer")


def init_net(arch: Architecture, seed: int = 0) -> NeuralNet:
    """Uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)], seeded."""
    rng = np.random.default_rng(seed)
    layers = []
    for k in range(1, len(arch.widths)):
        fan_in = arch.widths[k - 1]
        bound = 1.0 / math.sqrt(fan_in)
        layers.append(rng.uniform(-bound, bound, size=(arch.widths[k], fan_in)))
    return NeuralNet(layers=tuple(layers), activations=arch.activations)


# ---------------------------------------------------------------------------
# Forward passes
# ---------------------------------------------------------------------------


def forward_batch(net: NeuralNet, X: np.ndarray) -> np.ndarray:
    """(n, m) -> (n,) for scalar output, else (n, K)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    h = X.T
    for k, A in enumerate(net.layers[:-1]):
        act = ACTIVATIONS[net.activations[k]][0]
        h = act(A @ h)
    out = net.layers[-1] @ h
    return out[0] if net.output_dim == 1 else out.T


def forward(net: NeuralNet, x: np.ndarray):
    x = np.asarray(x, dtype=float)
    if x.shape != (net.input_dim,):
        raise ValueError(f"expected input of length {net.input_dim}, got shape {x.shape}")
    out = forward_batch(net, x[None, :])
    return float(out[0]) if net.output_dim == 1 else np.asarray(out[0])


def _first_layer_qnorms(net: NeuralNet, q: float) -> np.ndarray:
    return np.array([q_norm(row, q) for row in net.layers[0]])


def _split_signs(A: np.ndarray):
    """Nonnegative/negative parts; sgn(0) := +1, and zero weights vanish."""
    pos = np.where(A >= 0, A, 0.0)
    neg = np.where(A < 0, A, 0.0)
    return pos, neg


def _tree_channels(net: NeuralNet, ball: PerturbationBall, X: np.ndarray, cache=None):
    """Run the two-channel DP up to layer d.

    Channel tau in {+1, -1} carries the value each unit takes when the
    product of the label and the downstream path sign equals tau.  Returns
    (u_plus, u_minus) of shape (J_d, n); fills `cache` with pre-activations
    when a dict is supplied (used by backprop).
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    norms = _first_layer_qnorms(net, ball.q)
    lin = net.layers[0] @ X.T
    z_p = lin - ball.epsilon * norms[:, None]
    z_m = lin + ball.epsilon * norms[:, None]
    act = ACTIVATIONS[net.activations[0]][0]
    u_p, u_m = act(z_p), act(z_m)
    if cache is not None:
        cache["z"] = [(z_p, z_m)]
        cache["u"] = [(u_p, u_m)]
    for k in range(1, net.depth):
        A = net.layers[k]
        pos, neg = _split_signs(A)
        z_p = pos @ u_p + neg @ u_m
        z_m = pos @ u_m + neg @ u_p
        act = ACTIVATIONS[net.activations[k]][0]
        u_p, u_m = act(z_p), act(z_m)
        if cache is not None:
            cache["z"].append((z_p, z_m))
            cache["u"].append((u_p, u_m))
    return u_p, u_m


def _tree_readouts(net: NeuralNet, u_p, u_m):
    """Per-class readouts for labels +1 and -1: (out_plus, out_minus), (K, n)."""
    pos, neg = _split_signs(net.layers[-1])
    out_plus = pos @ u_p + neg @ u_m
    out_minus = pos @ u_m + neg @ u_p
    return out_plus, out_minus


def tree_transform_batch(net: NeuralNet, ball: PerturbationBall, X: np.ndarray, y):
    """Tree transform over a batch.

    y may be a scalar label in {+1,-1} applied to every output component, an
    (n,) array of binary labels, or an (n, K) one-hot +/-1 matrix for
    multiclass.  Output shape matches forward_batch.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n = X.shape[0]
    K = net.output_dim
    u_p, u_m = _tree_channels(net, ball, X)
    out_plus, out_minus = _tree_readouts(net, u_p, u_m)
    y = np.asarray(y, dtype=float)
    if y.ndim == 0:
        Y = np.full((K, n), float(y))
    elif y.ndim == 1:
        if y.shape[0] != n:
            raise ValueError("label array length must match the batch")
        Y = np.broadcast_to(y, (K, n))
    else:
        if y.shape != (n, K):
            raise ValueError(f"one-hot labels must have shape ({n}, {K})")
        Y = y.T
    out = np.where(Y > 0, out_plus, out_minus)
    return out[0] if K == 1 else out.T


def tree_transform_eval(net: NeuralNet, ball: PerturbationBall, x: np.ndarray, y):
    """Exact tree transform of a single input via the two-channel DP."""
    x = np.asarray(x, dtype=float)
    if x.shape != (net.input_dim,):
        raise ValueError(f"expected input of length {net.input_dim}, got shape {x.shape}")
    y = np.asarray(y, dtype=float)
    yy = y[None, :] if y.ndim == 1 else y
    out = tree_transform_batch(net, ball, x[None, :], yy)
    return float(out[0]) if net.output_dim == 1 else np.asarray(out[0])


def _path_count(net: NeuralNet) -> int:
    count = 1
    for w in net.widths[1:]:
        count *= w
    return count


def tree_transform_naive(net: NeuralNet, ball: PerturbationBall, x: np.ndarray, y,
                         max_paths: int = 10**5):
    """Literal nested-sum evaluation of the tree transform, one worst-case
    shift per input-to-output path.  Oracle for tree_transform_eval."""
    x = np.asarray(x, dtype=float)
    if _path_count(net) > max_paths:
        raise ValueError("path count exceeds the naive-evaluation guard")
    norms = _first_layer_qnorms(net, ball.q)
    first = net.layers[0] @ x

    def sgn(a: float) -> float:
        return -1.0 if a < 0 else 1.0

    def unit(k: int, j: int, tau: float) -> float:
        # value of unit j at hidden layer k when label * downstream path sign = tau
        act = ACTIVATIONS[net.activations[k - 1]][0]
        if k == 1:
            return float(act(first[j] - tau * ball.epsilon * norms[j]))
        A = net.layers[k - 1]
        total = 0.0
        for jp in range(A.shape[1]):
            a = A[j, jp]
            if a != 0.0:
                total += a * unit(k - 1, jp, tau * sgn(a))
        return float(act(total))

    A_out = net.layers[-1]
    y = np.asarray(y, dtype=float)
    ys = np.full(net.output_dim, float(y)) if y.ndim == 0 else y
    out = np.zeros(net.output_dim)
    for k in range(net.output_dim):
        for j in range(A_out.shape[1]):
            a = A_out[k, j]
            if a != 0.0:
                out[k] += a * unit(net.depth, j, ys[k] * sgn(a))
    return float(out[0]) if net.output_dim == 1 else out


def restricted_tree_eval(net: NeuralNet, ball: PerturbationBall, x: np.ndarray, y: float,
                         c_q: float) -> float:
    """Fast transform for the sign-constrained class: A^(1..d) elementwise
    nonnegative, J_d = 2, output weights (>=0, <=0), first-layer row q-norms
    at most c_q.  Each branch uses one uniform first-layer shift -y*eps*c_q."""
    x = np.asarray(x, dtype=float)
    if net.output_dim != 1:
        raise ValueError("restricted transform is defined for scalar output")
    if net.layers[-1].shape[1] != 2:
        raise ValueError("restricted transform requires J_d = 2")
    for k in range(net.depth):
        if np.any(net.layers[k] < 0):
            raise ValueError(f"layer {k + 1} must be elementwise nonnegative")
    a_out = net.layers[-1][0]
    if not (a_out[0] >= 0 >= a_out[1]):
        raise ValueError("output weights must satisfy a1 >= 0 >= a2")
    norms = _first_layer_qnorms(net, ball.q)
    if np.max(norms) > c_q * (1 + 1e-12):
        raise ValueError("first-layer row q-norms exceed c_q")

    def branch(label: float) -> np.ndarray:
        # pre-activation vector of layer d under the uniform shift -label*eps*c_q
        h = net.layers[0] @ x - label * ball.epsilon * c_q
        for k in range(1, net.depth):
            act = ACTIVATIONS[net.activations[k - 1]][0]
            h = net.layers[k] @ act(h)
        return h

    s_d = ACTIVATIONS[net.activations[-1]][0]
    v1 = branch(float(y))[0]
    v2 = branch(-float(y))[1]
    return float(a_out[0] * s_d(v1) + a_out[1] * s_d(v2))


# ---------------------------------------------------------------------------
# Capacity and risk bounds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CapacityNet:
    alpha_j: tuple  # operator-inf norms of every layer
    alpha: float  # product
    alpha_1F: float  # first-layer Frobenius norm
    alpha_1q: float  # max first-layer row q-norm
    R: float


def net_capacity(net: NeuralNet, q: float, dataset: Dataset | None = None) -> CapacityNet:
    alpha_j = tuple(float(np.max(np.sum(np.abs(A), axis=1))) for A in net.layers)
    return CapacityNet(
        alpha_j=alpha_j,
        alpha=float(np.prod(alpha_j)),
        alpha_1F=float(np.linalg.norm(net.layers[0])),
        alpha_1q=float(np.max(_first_layer_qnorms(net, q))),
        R=dataset.radius if dataset is not None else 0.0,
    )


def _tree_rad_parts(cap: CapacityNet, ball: PerturbationBall, n: int, d: int):
    """(R part, eps part) of the tree Rademacher bound; their sum is the bound."""
    if n < 1 or d < 1:
        raise ValueError("need n >= 1 and d >= 1")
    kappa = (math.sqrt(2.0 * d * math.log(2.0)) + 1.0) / math.sqrt(n)
    a1 = cap.alpha_j[0]
    if a1 == 0.0:
        return 0.0, 0.0
    scale = cap.alpha / a1
    return scale * cap.alpha_1F * cap.R * kappa, scale * cap.alpha_1q * ball.epsilon * kappa


def rad_bound_tree(cap: CapacityNet, ball: PerturbationBall, n: int, d: int) -> float:
    """alpha (alpha_1F/alpha_1 R + alpha_1q/alpha_1 eps) (sqrt(2 d ln 2)+1)/sqrt(n)."""
    r_part, e_part = _tree_rad_parts(cap, ball, n, d)
    return r_part + e_part


def robust_empirical_risk_tree(net: NeuralNet, dataset: Dataset, ball: PerturbationBall,
                               loss: LossSpec, truncate: bool = False) -> float:
    """Mean loss at the tree transform (upper bound on the adversarial risk)."""
    labels = dataset.labels
    if isinstance(labels, BinaryLabels):
        if not loss.is_binary:
            raise ValueError(f"loss {loss.variant} incompatible with binary labels")
        t = tree_transform_batch(net, ball, dataset.features, labels.values)
        vals = binary_loss_batch(loss, t, labels.values)
    elif isinstance(labels, ClassLabels):
        if loss.variant != core.MARGIN:
            raise ValueError(f"loss {loss.variant} incompatible with class labels")
        T = tree_transform_batch(net, ball, dataset.features, labels.one_hot())
        vals = np.empty(dataset.n)
        for i, k in enumerate(labels.indices):
            others = np.delete(T[i], k)
            vals[i] = margin_ramp(T[i, k] - np.max(others), loss.rho)
    elif isinstance(labels, RealLabels):
        if loss.variant != core.REGRESSION_POWER:
            raise ValueError(f"loss {loss.variant} incompatible with real labels")
        t_plus = tree_transform_batch(net, ball, dataset.features, -1.0)
        t_minus = tree_transform_batch(net, ball, dataset.features, +1.0)
        vals = regression_loss_pm(t_plus, t_minus, labels.values, loss.r, loss.B)
    else:
        raise AssertionError(type(labels))
    if truncate:
        vals = np.minimum(1.0, vals)
    return float(np.mean(vals))


def certify_nn(net: NeuralNet, dataset: Dataset, ball: PerturbationBall, loss: LossSpec,
               delta: float = 0.05, form: str = "generic") -> BoundReport:
    """Binary network certificate.

    generic: empirical risk of Tf (truncated to 1) plus twice the tree
    Rademacher bound; xe: empirical cross-entropy of f plus the
    derivative-weighted perturbation term."""
    _check_delta(delta)
    labels = dataset.labels
    if not isinstance(labels, BinaryLabels):
        raise ValueError("certify_nn requires binary labels")
    if net.output_dim != 1:
        raise ValueError("binary certificate requires scalar output")
    n = dataset.n
    cap = net_capacity(net, ball.q, dataset)
    r_part, e_part = _tree_rad_parts(cap, ball, n, net.depth)
    complexity = 2.0 * r_part
    confidence = confidence_term(delta, n)
    if form == "generic":
        empirical = robust_empirical_risk_tree(net, dataset, ball, loss, truncate=True)
        perturbation = 2.0 * e_part
    elif form == "xe":
        if loss.variant != core.CROSS_ENTROPY:
            raise ValueError("the xe form applies to the cross-entropy loss")
        f_vals = forward_batch(net, dataset.features)
        xe_f, _ = xe_value_and_derivative(f_vals, labels.values)
        empirical = float(np.mean(np.minimum(1.0, xe_f)))
        t = tree_transform_batch(net, ball, dataset.features, labels.values)
        _, g_prime = xe_value_and_derivative(t, labels.values)
        tail_alpha = float(np.prod(cap.alpha_j[1:]))
        perturbation = (
            ball.epsilon * cap.alpha_1q * tail_alpha * float(np.mean(np.abs(g_prime)))
            + 2.0 * e_part
        )
    else:
        raise ValueError(f"unknown form {form!r}; expected generic or xe")
    return BoundReport.assemble(
        empirical, perturbation, complexity, confidence,
        delta=delta, epsilon=ball.epsilon, n=n, loss=f"{loss.variant}:{form}",
    )


def certify_multiclass_nn(net: NeuralNet, dataset: Dataset, ball: PerturbationBall,
                          rho: float = 1.0, delta: float = 0.05) -> BoundReport:
    _check_delta(delta)
    if not isinstance(dataset.labels, ClassLabels):
        raise ValueError("certify_multiclass_nn requires class labels")
    if not rho > 0:
        raise ValueError("rho must be positive")
    n = dataset.n
    K = net.output_dim
    cap = net_capacity(net, ball.q, dataset)
    r_part, e_part = _tree_rad_parts(cap, ball, n, net.depth)
    empirical = robust_empirical_risk_tree(
        net, dataset, ball, LossSpec(core.MARGIN, rho=rho)
    )
    factor = 8.0 * K / rho
    return BoundReport.assemble(
        empirical, factor * e_part, factor * r_part, confidence_term(delta, n),
        delta=delta, epsilon=ball.epsilon, n=n, loss=f"margin(rho={rho})",
    )


def certify_nn_regression(net: NeuralNet, dataset: Dataset, ball: PerturbationBall,
                          r: float, B: float, delta: float = 0.05) -> BoundReport:
    _check_delta(delta)
    if not isinstance(dataset.labels, RealLabels):
        raise ValueError("certify_nn_regression requires real labels")
    if net.output_dim != 1:
        raise ValueError("regression certificate requires scalar output")
    if not (r > 0 and B > 0):
        raise ValueError("r and B must be positive")
    n = dataset.n
    cap = net_capacity(net, ball.q, dataset)
    r_part, e_part = _tree_rad_parts(cap, ball, n, net.depth)
    empirical = robust_empirical_risk_tree(
        net, dataset, ball, LossSpec(core.REGRESSION_POWER, r=r, B=B)
    )
    lip = 4.0 * r * B ** (r - 1.0)
    return BoundReport.assemble(
        empirical, lip * e_part, lip * r_part, confidence_term(delta, n, scale=B**r),
        delta=delta, epsilon=ball.epsilon, n=n, loss=f"regression(r={r},B={B})",
    )


# ---------------------------------------------------------------------------
# Training (subgradients through the DP, weight signs frozen per evaluation)
# ---------------------------------------------------------------------------


def _tree_backprop(net: NeuralNet, ball: PerturbationBall, X: np.ndarray, cache,
                   d_plus: np.ndarray, d_minus: np.ndarray):
    """Gradients of sum_i L_i w.r.t. every layer matrix.

    d_plus / d_minus are (K, n) loss gradients w.r.t. the readout taken with
    label +1 / label -1 respectively.  Sign routing (and the q-norm of each
    first-layer row inside the shift) is differentiated with the frozen
    deterministic subgradients."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    u_list = cache["u"]
    z_list = cache["z"]
    grads = [np.zeros_like(A) for A in net.layers]

    A_out = net.layers[-1]
    pos_mask = A_out >= 0
    u_p, u_m = u_list[-1]
    # readout with label +1 pairs nonnegative weights with the +1 channel
    grad_pos = d_plus @ u_p.T + d_minus @ u_m.T
    grad_neg = d_plus @ u_m.T + d_minus @ u_p.T
    grads[-1] = np.where(pos_mask, grad_pos, grad_neg)
    pos, neg = _split_signs(A_out)
    g_p = pos.T @ d_plus + neg.T @ d_minus
    g_m = neg.T @ d_plus + pos.T @ d_minus

    for k in range(net.depth - 1, 0, -1):
        dact = ACTIVATIONS[net.activations[k]][1]
        z_p, z_m = z_list[k]
        delta_p = g_p * dact(z_p)
        delta_m = g_m * dact(z_m)
        A = net.layers[k]
        up_prev, um_prev = u_list[k - 1]
        grad_pos = delta_p @ up_prev.T + delta_m @ um_prev.T
        grad_neg = delta_p @ um_prev.T + delta_m @ up_prev.T
        grads[k] = np.where(A >= 0, grad_pos, grad_neg)
        pos, neg = _split_signs(A)
        g_p, g_m = pos.T @ delta_p + neg.T @ delta_m, neg.T @ delta_p + pos.T @ delta_m

    dact = ACTIVATIONS[net.activations[0]][1]
    z_p, z_m = z_list[0]
    delta_p = g_p * dact(z_p)
    delta_m = g_m * dact(z_m)
    grads[0] = (delta_p + delta_m) @ X
    if ball.epsilon > 0:
        shift_coef = np.sum(delta_m, axis=1) - np.sum(delta_p, axis=1)
        qsub = np.array([q_norm_subgradient(row, ball.q) for row in net.layers[0]])
        grads[0] += ball.epsilon * shift_coef[:, None] * qsub
    return grads


def _tree_loss_grads(net, ball, dataset: Dataset, loss: LossSpec):
    """(mean loss, per-layer gradients of the mean loss)."""
    X = dataset.features
    n = dataset.n
    K = net.output_dim
    cache: dict = {}
    u_p, u_m = _tree_channels(net, ball, X, cache=cache)
    out_plus, out_minus = _tree_readouts(net, u_p, u_m)  # (K, n)
    labels = dataset.labels
    d_plus = np.zeros((K, n))
    d_minus = np.zeros((K, n))

    if isinstance(labels, BinaryLabels):
        y = labels.values.astype(float)
        t = np.where(y > 0, out_plus[0], out_minus[0])
        if loss.variant in (core.HINGE, core.HINGE_TRUNCATED):
            vals = np.maximum(0.0, 1.0 - y * t)
            dL = np.where(vals > 0, -y, 0.0)
            if loss.variant == core.HINGE_TRUNCATED:
                dL = np.where(vals < 1.0, dL, 0.0)
                vals = np.minimum(1.0, vals)
        elif loss.variant == core.CROSS_ENTROPY:
            vals, dL = xe_value_and_derivative(t, y)
        else:
            raise ValueError(f"unsupported training loss {loss.variant}")
        d_plus[0] = np.where(y > 0, dL, 0.0)
        d_minus[0] = np.where(y < 0, dL, 0.0)
    elif isinstance(labels, ClassLabels):
        if loss.variant != core.MARGIN:
            raise ValueError("class labels require the margin loss")
        Y = labels.one_hot().T  # (K, n)
        T = np.where(Y > 0, out_plus, out_minus)
        vals = np.empty(n)
        for i in range(n):
            k = labels.indices[i]
            others = np.delete(T[:, i], k)
            jmax = int(np.argmax(others))
            if jmax >= k:
                jmax += 1
            m = T[k, i] - T[jmax, i]
            vals[i] = margin_ramp(m, loss.rho)
            if 0.0 < m < loss.rho:
                slope = -1.0 / loss.rho
                for cls, dm in ((k, 1.0), (jmax, -1.0)):
                    if Y[cls, i] > 0:
                        d_plus[cls, i] += slope * dm
                    else:
                        d_minus[cls, i] += slope * dm
    elif isinstance(labels, RealLabels):
        if loss.variant != core.REGRESSION_POWER:
            raise ValueError("real labels require the regression loss")
        yv = labels.values
        t_plus, t_minus = out_minus[0], out_plus[0]  # T+ uses label -1, T- label +1
        r, B = loss.r, loss.B
        vp = np.minimum(np.maximum(t_plus - yv, 0.0) ** r, B**r)
        vm = np.minimum(np.maximum(yv - t_minus, 0.0) ** r, B**r)
        vals = np.maximum(vp, vm)
        plus_active = (vp >= vm) & (vp < B**r) & (t_plus > yv)
        minus_active = (vm > vp) & (vm < B**r) & (t_minus < yv)
        with np.errstate(invalid="ignore"):
            d_minus[0] = np.where(
                plus_active, r * np.maximum(t_plus - yv, 0.0) ** (r - 1.0), 0.0
            )
            d_plus[0] = np.where(
                minus_active, -r * np.maximum(yv - t_minus, 0.0) ** (r - 1.0), 0.0
            )
    else:
        raise AssertionError(type(labels))

    grads = _tree_backprop(net, ball, X, cache, d_plus / n, d_minus / n)
    return float(np.mean(vals)), grads


@dataclass
class TreeTrainResult:
    model: NeuralNet
    log: list  # rows (iter, objective, grad_norm)
    best_objective: float


def train_tree(
    dataset: Dataset,
    ball: PerturbationBall,
    architecture: Architecture,
    loss: LossSpec,
    iters: int = 2000,
    step: float = 0.5,
    seed: int = 0,
) -> TreeTrainResult:
    """Subgradient descent on the mean loss of Tf; best iterate returned."""
    if architecture.widths[0] != dataset.m:
        raise ValueError("architecture input width must match the dataset")
    labels = dataset.labels
    if isinstance(labels, ClassLabels) and architecture.widths[-1] != labels.num_classes:
        raise ValueError("output width must equal the number of classes")
    if isinstance(labels, (BinaryLabels, RealLabels)) and architecture.widths[-1] != 1:
        raise ValueError("output width must be 1 for binary/regression labels")
    net = init_net(architecture, seed)
    layers = [A.copy() for A in net.layers]
    best_net = net
    best_obj = math.inf
    log = []
    for t in range(1, iters + 1):
        current = NeuralNet(layers=tuple(A.copy() for A in layers),
                            activations=net.activations)
        obj, grads = _tree_loss_grads(current, ball, dataset, loss)
        gnorm = math.sqrt(sum(float(np.sum(g * g)) for g in grads))
        log.append((t, obj, gnorm))
        if obj < best_obj:
            best_net, best_obj = current, obj
        eta = step / math.sqrt(t)
        for A, g in zip(layers, grads):
            A -= eta * g
    final = NeuralNet(layers=tuple(layers), activations=net.activations)
    obj, _ = _tree_loss_grads(final, ball, dataset, loss)
    log.append((iters + 1, obj, 0.0))
    if obj < best_obj:
        best_net, best_obj = final, obj
    return TreeTrainResult(model=best_net, log=log, best_objective=best_obj)
