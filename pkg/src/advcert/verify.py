"""Verification harness: brute-force adversaries, projected-gradient attacks,
Monte-Carlo Rademacher estimation, SDP value certification via explicit
primal/dual pairs, and the runnable property suites."""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import core
from .core import (
    Dataset,
    LossSpec,
    PerturbationBall,
    loss_eval,
    margin_ramp,
    multiclass_margin,
    q_norm,
    rademacher_matrix,
    xe_value_and_derivative,
)
from .linear import (
    CapacityLinear,
    LinearModel,
    rad_bound_linear,
    sup_transform_batch,
    sup_transform_linear,
)
from .network import (
    ACTIVATIONS,
    Architecture,
    NeuralNet,
    forward,
    forward_batch,
    init_net,
    net_capacity,
    rad_bound_tree,
    tree_transform_batch,
    tree_transform_eval,
    tree_transform_naive,
)

__all__ = [
    "AttackReport",
    "corner_adversary_linear",
    "pgd_attack",
    "LinearCapFamily",
    "NetCapFamily",
    "mc_rademacher",
    "SdpInstance",
    "SdpCertificate",
    "build_Q",
    "appendix_instance",
    "appendix_certificate",
    "sdp_certificate_check",
    "IncomparabilityResult",
    "incomparability_demo",
    "CheckResult",
    "run_suite_linear",
    "run_suite_tree",
    "run_suite_sdp",
    "write_report",
]


# ---------------------------------------------------------------------------
# Attacks (sound lower-bound oracles for the transforms)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AttackReport:
    best_w: np.ndarray
    achieved_loss: float
    method: str
    iterations: int
    restarts: int


def corner_adversary_linear(model: LinearModel, ball: PerturbationBall, x, y,
                            loss: LossSpec) -> AttackReport:
    """Exact max loss over the 2^m corners of the l_inf ball; for a linear
    predictor and any loss this equals the sup over the whole ball."""
    if not math.isinf(ball.p):
        raise ValueError("corner enumeration applies to p = inf only")
    x = np.asarray(x, dtype=float)
    m = x.size
    if m > 15:
        raise ValueError("corner enumeration limited to m <= 15")
    corners = ball.epsilon * np.array(list(itertools.product((-1.0, 1.0), repeat=m)))
    preds = (x + corners) @ model.theta + model.b
    if loss.is_binary:
        losses = core.binary_loss_batch(loss, preds, np.full(preds.shape, float(y)))
    else:
        losses = np.array([loss_eval(loss, p, y) for p in preds])
    j = int(np.argmax(losses))
    return AttackReport(
        best_w=corners[j], achieved_loss=float(losses[j]),
        method="corner", iterations=2**m, restarts=1,
    )


def _binary_loss_grad(loss: LossSpec, pred: float, y: float) -> float:
    """Deterministic subgradient of the loss w.r.t. the scalar prediction."""
    if loss.variant in (core.HINGE, core.HINGE_TRUNCATED):
        v = 1.0 - y * pred
        if v <= 0 or (loss.variant == core.HINGE_TRUNCATED and v >= 1.0):
            return 0.0
        return -y
    if loss.variant == core.CROSS_ENTROPY:
        _, g = xe_value_and_derivative(pred, y)
        return float(g)
    if loss.variant in (core.ZERO_ONE, core.HINGE_INDICATOR):
        return 0.0  # piecewise constant; restarts do the exploring
    raise ValueError(f"no gradient for loss {loss.variant!r}")


def _net_input_gradient(net: NeuralNet, x: np.ndarray, dout: np.ndarray) -> np.ndarray:
    """Gradient of dout . f(x) w.r.t. the input of a plain forward pass."""
    h = np.asarray(x, dtype=float)
    zs = []
    for k, A in enumerate(net.layers[:-1]):
        z = A @ h
        zs.append(z)
        h = ACTIVATIONS[net.activations[k]][0](z)
    g = net.layers[-1].T @ np.atleast_1d(dout)
    for k in range(net.depth - 1, -1, -1):
        g = net.layers[k].T @ (g * ACTIVATIONS[net.activations[k]][1](zs[k]))
    return g


def _loss_and_input_grad(predictor, loss: LossSpec, x: np.ndarray, y):
    """Loss at x and its (sub)gradient w.r.t. x, for linear or network models."""
    if isinstance(predictor, LinearModel):
        pred = float(predictor.theta @ x + predictor.b)
        return loss_eval(loss, pred, y), _binary_loss_grad(loss, pred, float(y)) * predictor.theta
    if isinstance(predictor, NeuralNet):
        out = forward(predictor, x)
        if loss.variant == core.MARGIN:
            scores = np.asarray(out)
            k = int(y)
            others = np.delete(scores, k)
            jmax = int(np.argmax(others))
            if jmax >= k:
                jmax += 1
            mval = scores[k] - scores[jmax]
            value = float(margin_ramp(mval, loss.rho))
            dout = np.zeros(predictor.output_dim)
            if 0.0 < mval < loss.rho:
                dout[k], dout[jmax] = -1.0 / loss.rho, 1.0 / loss.rho
            return value, _net_input_gradient(predictor, x, dout)
        pred = float(out)
        dL = _binary_loss_grad(loss, pred, float(y))
        return loss_eval(loss, pred, y), _net_input_gradient(predictor, x, np.array([dL]))
    raise TypeError(f"unsupported predictor {type(predictor)!r}")


def project_ball(w: np.ndarray, ball: PerturbationBall) -> np.ndarray:
    """Euclidean projection of w onto the l_p ball of radius epsilon."""
    w = np.asarray(w, dtype=float)
    eps = ball.epsilon
    if math.isinf(ball.p):
        return np.clip(w, -eps, eps)
    if ball.p == 2:
        nrm = np.linalg.norm(w)
        return w if nrm <= eps else w * (eps / nrm)
    # p = 1: sorted-threshold projection onto the l1 ball
    if np.sum(np.abs(w)) <= eps:
        return w
    u = np.sort(np.abs(w))[::-1]
    css = np.cumsum(u)
    ks = np.arange(1, w.size + 1)
    rho_idx = np.max(np.nonzero(u * ks > css - eps)[0])
    tau = (css[rho_idx] - eps) / (rho_idx + 1.0)
    return np.sign(w) * np.maximum(np.abs(w) - tau, 0.0)


def _sample_in_ball(rng, m: int, ball: PerturbationBall) -> np.ndarray:
    w = rng.uniform(-ball.epsilon, ball.epsilon, size=m)
    return project_ball(w, ball)


def pgd_attack(predictor, ball: PerturbationBall, x, y, loss: LossSpec,
               steps: int = 100, restarts: int = 10, step: float | None = None,
               seed: int = 0) -> AttackReport:
    """Projected gradient ascent on the loss over w in B(eps); best over
    restarts with seeded uniform starts.  Sound lower bound of the sup."""
    x = np.asarray(x, dtype=float)
    if step is None:
        step = ball.epsilon / 10.0
    best_w = np.zeros_like(x)
    best_loss, _ = _loss_and_input_grad(predictor, loss, x, y)
    for rs in range(restarts):
        rng = np.random.default_rng(seed + rs)
        w = _sample_in_ball(rng, x.size, ball) if ball.epsilon > 0 else np.zeros_like(x)
        for _ in range(steps):
            value, g = _loss_and_input_grad(predictor, loss, x + w, y)
            if value > best_loss:
                best_loss, best_w = value, w.copy()
            gn = np.linalg.norm(g)
            if gn == 0:
                break
            w = project_ball(w + step * g / gn, ball)
        value, _ = _loss_and_input_grad(predictor, loss, x + w, y)
        if value > best_loss:
            best_loss, best_w = value, w.copy()
    return AttackReport(best_w=best_w, achieved_loss=float(best_loss),
                        method="pgd", iterations=steps, restarts=restarts)


# ---------------------------------------------------------------------------
# Monte-Carlo Rademacher estimation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LinearCapFamily:
    """Bias-free linear predictors inside the (M2, Mq) caps, valued through
    the supremum transform."""

    cap: CapacityLinear
    ball: PerturbationBall

    def sample_values(self, dataset: Dataset, draws: int, rng) -> np.ndarray:
        X = dataset.features
        y = dataset.labels.values.astype(float)
        V = np.empty((draws, dataset.n))
        for f in range(draws):
            direction = rng.standard_normal(dataset.m)
            nrm = np.linalg.norm(direction)
            theta = np.zeros(dataset.m) if nrm == 0 else direction / nrm
            theta *= self.cap.M2 * rng.uniform() ** (1.0 / dataset.m)
            qn = q_norm(theta, self.ball.q)
            if qn > self.cap.Mq > 0:
                theta *= self.cap.Mq / qn
            model = LinearModel(theta, 0.0)
            V[f] = sup_transform_batch(model, self.ball, X, y)
        return V


@dataclass(frozen=True)
class NetCapFamily:
    """Networks sampled inside per-layer operator-inf caps (plus the
    first-layer Frobenius and row-q caps), valued through the tree transform."""

    architecture: Architecture
    alpha_caps: tuple
    alpha_1F_cap: float
    alpha_1q_cap: float
    ball: PerturbationBall

    def sample_values(self, dataset: Dataset, draws: int, rng) -> np.ndarray:
        y = dataset.labels.values.astype(float)
        V = np.empty((draws, dataset.n))
        for f in range(draws):
            net = self._sample_net(rng)
            V[f] = tree_transform_batch(net, self.ball, dataset.features, y)
        return V

    def _sample_net(self, rng) -> NeuralNet:
        widths = self.architecture.widths
        layers = []
        for k in range(1, len(widths)):
            A = rng.uniform(-1.0, 1.0, size=(widths[k], widths[k - 1]))
            inf_norm = np.max(np.sum(np.abs(A), axis=1))
            scale = self.alpha_caps[k - 1] / inf_norm if inf_norm > 0 else 0.0
            if k == 1:
                fro = np.linalg.norm(A)
                if fro > 0:
                    scale = min(scale, self.alpha_1F_cap / fro)
                rowq = max(q_norm(row, self.ball.q) for row in A)
                if rowq > 0:
                    scale = min(scale, self.alpha_1q_cap / rowq)
            layers.append(A * (scale * rng.uniform()))
        return NeuralNet(layers=tuple(layers), activations=self.architecture.activations)


def mc_rademacher(family, dataset: Dataset, draws_sigma: int, draws_function: int,
                  seed: int) -> tuple[float, float]:
    """Estimate (from below) the empirical Rademacher complexity of the
    transformed family: mean over sigma-draws of the best achieved
    (1/n) sum_i sigma_i v_f(x_i, y_i); returns (estimate, standard error)."""
    rng = np.random.default_rng(seed)
    V = family.sample_values(dataset, draws_function, rng)
    sigma = rademacher_matrix(dataset.n, draws_sigma, seed + 1)
    per_draw = np.max(sigma @ V.T / dataset.n, axis=1)
    estimate = float(np.mean(per_draw))
    stderr = float(np.std(per_draw, ddof=1) / math.sqrt(draws_sigma)) if draws_sigma > 1 else 0.0
    return estimate, stderr


# ---------------------------------------------------------------------------
# SDP value certification (explicit primal/dual pairs, no solver)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SdpInstance:
    """max <Q, P> over P PSD with diag(P) <= 1, in the block layout
    [scalar; input block; first-layer unit block]."""

    Q: np.ndarray

    def __post_init__(self):
        Q = np.asarray(self.Q, dtype=float)
        object.__setattr__(self, "Q", Q)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise ValueError("Q must be square")
        if not np.allclose(Q, Q.T, atol=0.0):
            raise ValueError("Q must be symmetric")

    @property
    def size(self) -> int:
        return self.Q.shape[0]


@dataclass(frozen=True)
class SdpCertificate:
    primal_P: np.ndarray
    dual_y: np.ndarray
    z_sign: float  # the problem certified is max <z Q, P>


def build_Q(v: np.ndarray, W: np.ndarray) -> SdpInstance:
    """Block matrix coupling the scalar, the input, and the unit block:
    off-diagonal blocks 1^T W^T diag(v) and W^T diag(v), zero elsewhere."""
    v = np.asarray(v, dtype=float)
    W = np.asarray(W, dtype=float)
    J, m = W.shape
    if v.shape != (J,):
        raise ValueError(f"v must have one entry per row of W, got {v.shape}")
    N = 1 + m + J
    Q = np.zeros((N, N))
    DvW = np.diag(v) @ W  # (J, m)
    Q[0, 1 + m:] = DvW.sum(axis=1)
    Q[1:1 + m, 1 + m:] = DvW.T
    Q[1 + m:, 0] = DvW.sum(axis=1)
    Q[1 + m:, 1:1 + m] = DvW
    return SdpInstance(Q=Q)


def sdp_certificate_check(instance: SdpInstance, cert: SdpCertificate,
                          tol: float = 1e-9) -> float:
    """Verify the primal/dual pair and return the certified SDP value.

    Primal: P symmetric PSD with diag <= 1, value <z Q, P>.  Dual: y >= 0,
    L = diag(y) - z Q diagonally dominant with nonnegative diagonal
    (sufficient for PSD), value sum(y).  Certifies when the values match."""
    P = np.asarray(cert.primal_P, dtype=float)
    y = np.asarray(cert.dual_y, dtype=float)
    z = float(cert.z_sign)
    N = instance.size
    if P.shape != (N, N) or y.shape != (N,):
        raise ValueError("certificate shapes do not match the instance")
    if not np.allclose(P, P.T, atol=tol):
        raise ValueError("primal matrix is not symmetric")
    min_eig = float(np.min(np.linalg.eigvalsh((P + P.T) / 2.0)))
    if min_eig < -tol:
        raise ValueError(f"primal matrix is not PSD (min eigenvalue {min_eig})")
    if np.max(np.diag(P)) > 1.0 + tol:
        raise ValueError("primal diagonal exceeds 1")
    if np.min(y) < -tol:
        raise ValueError("dual vector has a negative entry")
    L = np.diag(y) - z * instance.Q
    diag = np.diag(L)
    off = np.sum(np.abs(L), axis=1) - np.abs(diag)
    if np.min(diag) < -tol:
        raise ValueError("dual matrix has a negative diagonal entry")
    worst = float(np.max(off - diag))
    if worst > tol:
        raise ValueError(f"dual matrix is not diagonally dominant (slack {worst})")
    primal_value = float(np.sum(z * instance.Q * P))
    dual_value = float(np.sum(y))
    if abs(primal_value - dual_value) > tol:
        raise ValueError(
            f"primal/dual gap {primal_value} vs {dual_value} exceeds tolerance"
        )
    return primal_value


# The two-layer demonstration network behind the SDP instance family.
DEMO_A1 = np.array([[1.0, 2.0, 3.0], [10.0, 20.0, 30.0]])
_DEMO_DUAL_Y = np.array([66.0, 11.0, 22.0, 33.0, 12.0, 120.0])
_DEMO_NEG_V = np.array([-1.0, -1.0, -1.0, -1.0, 1.0, 1.0])


def demo_network(a: float, b: float) -> NeuralNet:
    A2 = np.array([[1.0, 1.0], [-a, -a], [-b, -b]])
    return NeuralNet(layers=(DEMO_A1, A2), activations=("relu",))


def appendix_instance(scale: float = 1.0) -> SdpInstance:
    """The instance built from the demo first layer and output row scale*(1,1)."""
    return build_Q(scale * np.ones(2), DEMO_A1)


def appendix_certificate(scale: float = 1.0, z_sign: float = 1.0) -> SdpCertificate:
    """Exact primal/dual pair certifying 264*|scale| for the scaled instance.

    For max <z Q, P>: when z*scale >= 0 the all-ones rank-1 primal is
    optimal; otherwise the signed rank-1 vector (-1,-1,-1,-1,1,1) is."""
    s = z_sign * scale
    v = np.ones(6) if s >= 0 else _DEMO_NEG_V
    return SdpCertificate(
        primal_P=np.outer(v, v), dual_y=abs(scale) * _DEMO_DUAL_Y, z_sign=z_sign
    )


def certified_sdp_value(scale: float) -> float:
    """Certified value of the scaled instance (equals 264*|scale|)."""
    return sdp_certificate_check(appendix_instance(scale), appendix_certificate(scale))


@dataclass(frozen=True)
class IncomparabilityResult:
    l_hat: float
    l_rho_tree: float
    margin_f: float
    margin_tree: float
    sdp_values: tuple
    sdp_term: float
    mode: str


def incomparability_demo(a: float, b: float, c: float, epsilon: float, rho: float,
                         sdp_mode: str = "max-over-k", k: int = 2) -> IncomparabilityResult:
    """Compare the SDP-relaxation margin loss against the tree-transform loss
    on the two-layer demo network, x = (c, c, c), true class 1, p = inf.

    sdp_mode selects the SDP term: the max over all output rows, or the
    single row k (0-based).  The two modes can order the losses differently;
    both are reported, neither is asserted to dominate."""
    if not (a > 0 and b > 0 and c > 0 and epsilon > 0 and rho > 0):
        raise ValueError("a, b, c, epsilon, rho must be positive")
    if not epsilon < c:
        raise ValueError("requires epsilon < c")
    net = demo_network(a, b)
    ball = PerturbationBall(p=math.inf, epsilon=epsilon)
    x = np.array([c, c, c])
    scores = forward(net, x)
    margin_f = multiclass_margin(scores, 0)
    y_onehot = np.array([1.0, -1.0, -1.0])
    tree_scores = tree_transform_eval(net, ball, x, y_onehot)
    margin_tree = multiclass_margin(tree_scores, 0)
    l_rho_tree = float(margin_ramp(margin_tree, rho))
    sdp_values = tuple(certified_sdp_value(s) for s in (1.0, -a, -b))
    if sdp_mode == "max-over-k":
        sdp_term = max(sdp_values)
    elif sdp_mode == "class-k":
        sdp_term = sdp_values[k]
    else:
        raise ValueError(f"unknown sdp_mode {sdp_mode!r}")
    l_hat = float(margin_ramp(margin_f - (epsilon / 2.0) * sdp_term, rho))
    return IncomparabilityResult(
        l_hat=l_hat, l_rho_tree=l_rho_tree, margin_f=margin_f,
        margin_tree=margin_tree, sdp_values=sdp_values, sdp_term=sdp_term,
        mode=sdp_mode,
    )


# ---------------------------------------------------------------------------
# Property suites
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CheckResult:
    check_name: str
    instances: int
    max_violation: float
    passed: bool


def _result(name: str, instances: int, violation: float, tol: float = 1e-9) -> CheckResult:
    return CheckResult(check_name=name, instances=instances,
                       max_violation=float(violation), passed=violation <= tol)


def _random_linear(rng, m: int) -> LinearModel:
    return LinearModel(rng.standard_normal(m), float(rng.standard_normal()))


def _random_net(rng, depth_max: int = 3, width_max: int = 8, m: int | None = None,
                out: int = 1, activations=("relu", "tanh")) -> NeuralNet:
    d = int(rng.integers(1, depth_max + 1))
    m = int(rng.integers(1, 5)) if m is None else m
    widths = [m] + [int(rng.integers(1, width_max + 1)) for _ in range(d)] + [out]
    layers = tuple(rng.standard_normal((widths[k + 1], widths[k])) for k in range(d + 1))
    acts = tuple(str(rng.choice(activations)) for _ in range(d))
    return NeuralNet(layers=layers, activations=acts)


def run_suite_linear(seed: int = 0, instances: int = 200) -> list:
    """Supremum-transform exactness, the hinge sandwich, and the linear
    Monte-Carlo Rademacher consistency check."""
    rng = np.random.default_rng(seed)
    results = []

    worst = 0.0
    for _ in range(instances):
        m = int(rng.integers(1, 7))
        model = _random_linear(rng, m)
        ball = PerturbationBall(p=math.inf, epsilon=float(rng.uniform(0.0, 1.0)))
        x = rng.standard_normal(m)
        y = float(rng.choice((-1.0, 1.0)))
        for loss in (LossSpec(core.HINGE), LossSpec(core.CROSS_ENTROPY)):
            oracle = corner_adversary_linear(model, ball, x, y, loss).achieved_loss
            transformed = loss_eval(loss, sup_transform_linear(model, ball, x, y), y)
            worst = max(worst, abs(oracle - transformed))
    results.append(_result("sup_transform_corner_exactness", instances, worst))

    worst = 0.0
    for _ in range(instances):
        m = int(rng.integers(1, 6))
        n = int(rng.integers(2, 20))
        model = _random_linear(rng, m)
        ball = PerturbationBall(p=float(rng.choice((1.0, 2.0, math.inf))),
                                epsilon=float(rng.uniform(0.0, 1.0)))
        X = rng.standard_normal((n, m))
        y = rng.choice((-1.0, 1.0), size=n)
        f_vals = model.predict(X)
        psi_vals = sup_transform_batch(model, ball, X, y)
        eqn = ball.epsilon * q_norm(model.theta, ball.q)
        diff = float(np.mean(core.hinge(psi_vals, y) - core.hinge(f_vals, y)))
        lower = eqn * float(np.mean(core.hinge_indicator(f_vals, y)))
        upper = eqn * float(np.mean(core.hinge_indicator(psi_vals, y)))
        worst = max(worst, lower - diff, diff - upper)
    results.append(_result("hinge_sandwich_two_sided", instances, worst))

    n, m = 50, 3
    rng2 = np.random.default_rng(seed + 1)
    X = rng2.standard_normal((n, m))
    y = rng2.choice((-1.0, 1.0), size=n)
    data = Dataset(X, core.BinaryLabels(y.astype(int)))
    ball = PerturbationBall(p=2.0, epsilon=0.3)
    cap = CapacityLinear(M2=1.0, Mq=1.0, R=data.radius)
    est, se = mc_rademacher(LinearCapFamily(cap, ball), data, 200, 200, seed + 2)
    bound = rad_bound_linear(cap, ball, n)
    results.append(_result("mc_rademacher_linear_below_bound", 200, est - bound - 3 * se, 0.0))
    return results


def run_suite_tree(seed: int = 0, instances: int = 200, perturbations: int = 100) -> list:
    """DP/naive agreement, envelope ordering, sampled-adversary domination,
    and the cross-entropy perturbation inequality."""
    rng = np.random.default_rng(seed)
    results = []

    worst = 0.0
    for _ in range(instances):
        net = _random_net(rng, depth_max=3, width_max=4)
        ball = PerturbationBall(p=float(rng.choice((1.0, 2.0, math.inf))),
                                epsilon=float(rng.uniform(0.0, 0.5)))
        x = rng.standard_normal(net.input_dim)
        y = float(rng.choice((-1.0, 1.0)))
        worst = max(worst, abs(tree_transform_eval(net, ball, x, y)
                               - tree_transform_naive(net, ball, x, y)))
    results.append(_result("tree_dp_naive_equivalence", instances, worst))

    worst = 0.0
    dom_worst = 0.0
    for _ in range(instances):
        net = _random_net(rng, depth_max=3, width_max=8)
        ball = PerturbationBall(p=float(rng.choice((1.0, 2.0, math.inf))),
                                epsilon=float(rng.uniform(0.0, 0.5)))
        x = rng.standard_normal(net.input_dim)
        y = float(rng.choice((-1.0, 1.0)))
        f_val = forward(net, x)
        t_plus = tree_transform_eval(net, ball, x, -1.0)
        t_minus = tree_transform_eval(net, ball, x, +1.0)
        worst = max(worst, t_minus - f_val, f_val - t_plus)
        t_label = t_minus if y > 0 else t_plus
        for loss in (LossSpec(core.HINGE), LossSpec(core.CROSS_ENTROPY)):
            t_loss = loss_eval(loss, t_label, y)
            for _ in range(perturbations):
                w = _sample_in_ball(rng, x.size, ball)
                dom_worst = max(dom_worst,
                                loss_eval(loss, forward(net, x + w), y) - t_loss)
    results.append(_result("tree_envelope_ordering", instances, worst))
    results.append(_result("tree_domination_sampled", instances * perturbations, dom_worst))

    worst = 0.0
    for _ in range(instances):
        net = _random_net(rng, depth_max=2, width_max=5)
        ball = PerturbationBall(p=float(rng.choice((1.0, 2.0, math.inf))),
                                epsilon=float(rng.uniform(0.0, 0.5)))
        n = int(rng.integers(2, 10))
        X = rng.standard_normal((n, net.input_dim))
        y = rng.choice((-1.0, 1.0), size=n)
        t = tree_transform_batch(net, ball, X, y)
        f = forward_batch(net, X)
        xe_t, g_t = xe_value_and_derivative(t, y)
        xe_f, _ = xe_value_and_derivative(f, y)
        cap = net_capacity(net, ball.q)
        rhs = (ball.epsilon * cap.alpha_1q * float(np.prod(cap.alpha_j[1:]))
               * float(np.mean(np.abs(g_t))))
        worst = max(worst, float(np.mean(xe_t - xe_f)) - rhs)
    results.append(_result("xe_perturbation_upper_bound", instances, worst))
    return results


def run_suite_sdp(tol: float = 1e-9) -> list:
    """Certified values of the demonstration SDP family and both directions
    of the loss-incomparability demo."""
    results = []
    a, b = 0.5, 0.6
    targets = ((1.0, 264.0), (-a, 264.0 * a), (-b, 264.0 * b))
    worst = max(abs(certified_sdp_value(s) - v) for s, v in targets)
    results.append(_result("sdp_certified_values", len(targets), worst, tol))

    neg_value = sdp_certificate_check(appendix_instance(1.0),
                                      appendix_certificate(1.0, z_sign=-1.0))
    results.append(_result("sdp_negative_direction_value", 1, abs(neg_value - 264.0), tol))

    scales = (0.25, 2.0, -3.0)
    worst = max(abs(certified_sdp_value(s) - 264.0 * abs(s)) for s in scales)
    results.append(_result("sdp_scaling_family", len(scales), worst, tol))

    d1 = incomparability_demo(a=0.5, b=10.0, c=2.0, epsilon=1.0, rho=1.0,
                              sdp_mode="max-over-k")
    worst = max(abs(d1.l_rho_tree - 0.0), abs(d1.l_hat - 1.0))
    results.append(_result("incomparability_direction_1", 1, worst, tol))

    d2 = incomparability_demo(a=0.5, b=0.6, c=2.0, epsilon=1.0, rho=120.0,
                              sdp_mode="class-k", k=2)
    gap = d2.l_rho_tree - d2.l_hat  # relaxation loss is the smaller one here
    ok = 0.0 if gap > 0 else 1.0
    results.append(_result("incomparability_direction_2", 1, ok, tol))
    return results


def write_report(results: list, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["check_name", "instances", "max_violation", "pass"])
        for r in results:
            writer.writerow([r.check_name, r.instances, repr(r.max_violation),
                             str(r.passed).lower()])
