"""Acceptance suite: ten end-to-end criteria, one pass/fail line each.

Each test prints its verdict (visible under pytest -s or on failure) and
asserts it, at the stated instance counts and tolerances.
"""

import math

import numpy as np

from advcert import core
from advcert import network as N
from advcert.core import (
    BinaryLabels,
    ClassLabels,
    Dataset,
    LossSpec,
    PerturbationBall,
    RealLabels,
    binary_loss_batch,
    hinge,
    hinge_indicator,
    loss_eval,
    q_norm,
    xe_value_and_derivative,
)
from advcert.linear import (
    CapacityLinear,
    LinearModel,
    certify_linear,
    certify_linear_regression,
    certify_multiclass_linear,
    MulticlassLinearModel,
    convex_objective,
    rad_bound_linear,
    regularized_objective,
    sup_transform_batch,
    sup_transform_linear,
    train_convex,
    train_regularized_grid,
)
from advcert.network import (
    Architecture,
    CapacityNet,
    NeuralNet,
    certify_multiclass_nn,
    certify_nn,
    certify_nn_regression,
    forward_batch,
    init_net,
    net_capacity,
    rad_bound_tree,
    tree_transform_batch,
    tree_transform_eval,
    tree_transform_naive,
)
from advcert.verify import (
    LinearCapFamily,
    NetCapFamily,
    appendix_certificate,
    appendix_instance,
    certified_sdp_value,
    corner_adversary_linear,
    incomparability_demo,
    mc_rademacher,
    pgd_attack,
    project_ball,
    sdp_certificate_check,
)


def verdict(name: str, ok: bool, detail: str = ""):
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name} failed ({detail})"


def random_net(rng, depth_max=3, width_max=8, out=1):
    d = int(rng.integers(1, depth_max + 1))
    m = int(rng.integers(1, 5))
    widths = [m] + [int(rng.integers(1, width_max + 1)) for _ in range(d)] + [out]
    layers = tuple(rng.standard_normal((widths[k + 1], widths[k]))
                   for k in range(d + 1))
    acts = tuple(str(rng.choice(("relu", "tanh"))) for _ in range(d))
    return NeuralNet(layers=layers, activations=acts)


def sample_ball(rng, m, ball):
    w = rng.uniform(-ball.epsilon, ball.epsilon, size=m)
    return project_ball(w, ball)


def test_criterion_01_sdp_values():
    a, b = 0.5, 0.6
    targets = [(1.0, 264.0), (-a, 264.0 * a), (-b, 264.0 * b)]
    dev = max(abs(certified_sdp_value(s) - v) for s, v in targets)
    neg = sdp_certificate_check(appendix_instance(1.0),
                                appendix_certificate(1.0, z_sign=-1.0))
    dev = max(dev, abs(neg - 264.0))
    verdict("criterion 1 (SDP values 264 / 132 / 158.4)", dev <= 1e-9,
            f"max deviation {dev:.3g}")


def test_criterion_02_incomparability_directions():
    d1 = incomparability_demo(a=0.5, b=10.0, c=2.0, epsilon=1.0, rho=1.0,
                              sdp_mode="max-over-k")
    ok1 = d1.l_rho_tree == 0.0 and d1.l_hat == 1.0
    # second direction inside the proof window 0 <= 99c - 79.2 eps <= rho,
    # per-class mode k = 3 (0-based 2): the relaxation loss is the smaller one
    d2 = incomparability_demo(a=0.5, b=0.6, c=2.0, epsilon=1.0, rho=120.0,
                              sdp_mode="class-k", k=2)
    window = 0.0 <= 99.0 * 2.0 - 79.2 * 1.0 <= 120.0
    ok2 = window and d2.l_hat < d2.l_rho_tree
    # under a literal max-over-k reading the same parameters do not reverse
    # the order; reported as a discrepancy, not asserted
    d2max = incomparability_demo(a=0.5, b=0.6, c=2.0, epsilon=1.0, rho=120.0,
                                 sdp_mode="max-over-k")
    note = ("max-over-k keeps l_hat above the tree loss"
            if d2max.l_hat >= d2max.l_rho_tree else "max-over-k also reverses")
    verdict("criterion 2 (loss incomparability, both directions)", ok1 and ok2,
            f"dir1 ({d1.l_rho_tree}, {d1.l_hat}), dir2 gap "
            f"{d2.l_rho_tree - d2.l_hat:.4g}; {note}")


def test_criterion_03_sup_transform_exactness():
    rng = np.random.default_rng(30)
    worst = 0.0
    for i in range(1000):
        m = int(rng.integers(1, 13))
        model = LinearModel(rng.standard_normal(m), float(rng.standard_normal()))
        ball = PerturbationBall(p=math.inf, epsilon=float(rng.uniform(0, 1)))
        x = rng.standard_normal(m)
        y = int(rng.choice([-1, 1]))
        loss = LossSpec(core.HINGE if i % 2 == 0 else core.CROSS_ENTROPY)
        oracle = corner_adversary_linear(model, ball, x, y, loss).achieved_loss
        psi = loss_eval(loss, sup_transform_linear(model, ball, x, y), y)
        worst = max(worst, abs(oracle - psi))
    verdict("criterion 3 (corner-exact supremum transform, 10^3 models)",
            worst <= 1e-9, f"max deviation {worst:.3g}")


def test_criterion_04_tree_domination():
    rng = np.random.default_rng(40)
    worst = -math.inf
    for i in range(1000):
        net = random_net(rng)
        ball = PerturbationBall(p=float(rng.choice([1.0, 2.0, math.inf])),
                                epsilon=float(rng.uniform(0.01, 0.5)))
        x = rng.standard_normal(net.input_dim)
        y = float(rng.choice([-1.0, 1.0]))
        loss = LossSpec(core.HINGE if i % 2 == 0 else core.CROSS_ENTROPY)
        t_loss = loss_eval(loss, tree_transform_eval(net, ball, x, y), y)
        W = np.array([sample_ball(rng, x.size, ball) for _ in range(1000)])
        preds = forward_batch(net, x + W)
        sampled = float(np.max(binary_loss_batch(loss, preds, np.full(1000, y))))
        worst = max(worst, sampled - t_loss)
        if i < 20:
            rep = pgd_attack(net, ball, x, y, loss, steps=50, restarts=3, seed=i)
            worst = max(worst, rep.achieved_loss - t_loss)
    verdict("criterion 4 (tree-transform domination, 10^3 nets x 10^3 attacks)",
            worst <= 1e-9, f"max excess {worst:.3g}")


def test_criterion_05_dp_naive_equivalence():
    rng = np.random.default_rng(50)
    worst = 0.0
    for _ in range(1000):
        net = random_net(rng, width_max=4)
        assert math.prod(net.widths[1:]) <= 10**5
        ball = PerturbationBall(p=float(rng.choice([1.0, 2.0, math.inf])),
                                epsilon=float(rng.uniform(0, 0.6)))
        x = rng.standard_normal(net.input_dim)
        y = float(rng.choice([-1.0, 1.0]))
        worst = max(worst, abs(tree_transform_eval(net, ball, x, y)
                               - tree_transform_naive(net, ball, x, y)))
    verdict("criterion 5 (DP vs naive tree evaluation, 10^3 nets)",
            worst <= 1e-9, f"max deviation {worst:.3g}")


def test_criterion_06_rademacher_consistency():
    rng = np.random.default_rng(60)
    failures = []
    settings = []
    for n, eps, m2 in ((50, 0.0, 1.0), (50, 0.5, 1.0), (100, 0.25, 2.0),
                       (200, 0.0, 0.5), (100, 1.0, 1.0), (30, 0.1, 3.0)):
        settings.append(("linear", n, eps, m2))
    for n, eps, cap in ((50, 0.0, 1.0), (50, 0.4, 1.5), (100, 0.2, 2.0),
                        (80, 0.6, 1.0)):
        settings.append(("net", n, eps, cap))
    margin = math.inf
    for idx, (kind, n, eps, capval) in enumerate(settings):
        X = rng.standard_normal((n, 3))
        ds = Dataset(X, BinaryLabels(rng.choice([-1, 1], n)))
        ball = PerturbationBall(2, eps)
        if kind == "linear":
            cap = CapacityLinear(M2=capval, Mq=capval, R=ds.radius)
            est, se = mc_rademacher(LinearCapFamily(cap, ball), ds, 1000, 1000,
                                    seed=600 + idx)
            bound = rad_bound_linear(cap, ball, n)
        else:
            arch = Architecture((3, 4, 1), ("relu",))
            fam = NetCapFamily(architecture=arch, alpha_caps=(capval, capval),
                               alpha_1F_cap=capval, alpha_1q_cap=capval, ball=ball)
            cap = CapacityNet(alpha_j=(capval, capval), alpha=capval**2,
                              alpha_1F=capval, alpha_1q=capval, R=ds.radius)
            est, se = mc_rademacher(fam, ds, 1000, 1000, seed=600 + idx)
            bound = rad_bound_tree(cap, ball, n, d=1)
        margin = min(margin, bound + 3 * se - est)
        if est > bound + 3 * se:
            failures.append((kind, n, eps, capval, est, bound, se))
    verdict("criterion 6 (MC Rademacher below closed forms, 10 settings)",
            not failures, f"min slack {margin:.4g}; failures {failures}")


def test_criterion_07_eps_zero_reduction():
    rng = np.random.default_rng(70)
    zero = PerturbationBall(2, 0.0)
    n = 40
    X = rng.standard_normal((n, 3))
    rn = math.sqrt(n)
    worst = 0.0
    checks = 0

    bin_ds = Dataset(X, BinaryLabels(rng.choice([-1, 1], n)))
    lm = LinearModel(rng.standard_normal(3), 0.5)
    cap = CapacityLinear.from_model(lm, bin_ds, 2.0)
    for form in ("eq1", "eq2"):
        rep = certify_linear(lm, bin_ds, zero, LossSpec(core.HINGE), form=form)
        worst = max(worst, abs(rep.perturbation_term),
                    abs(rep.complexity_term - 2 * cap.M2 * cap.R / rn))
        checks += 1

    mc_ds = Dataset(X, ClassLabels(rng.integers(0, 3, n), num_classes=3))
    mcm = MulticlassLinearModel(rng.standard_normal((3, 3)), rng.standard_normal(3))
    mcap = CapacityLinear.from_model(mcm, mc_ds, 2.0)
    rep = certify_multiclass_linear(mcm, mc_ds, zero, rho=1.0)
    worst = max(worst, abs(rep.perturbation_term),
                abs(rep.complexity_term - 24 * mcap.M2 * mcap.R / rn))
    checks += 1

    reg_ds = Dataset(X, RealLabels(rng.standard_normal(n)))
    rep = certify_linear_regression(lm, reg_ds, zero, r=2.0, B=1.5)
    lip = 4 * 2.0 * 1.5
    worst = max(worst, abs(rep.perturbation_term),
                abs(rep.complexity_term - lip * cap.M2 * cap.R / rn))
    checks += 1

    net = random_net(rng, depth_max=2, out=1)
    Xn = rng.standard_normal((n, net.input_dim))
    nb_ds = Dataset(Xn, BinaryLabels(rng.choice([-1, 1], n)))
    ncap = net_capacity(net, 2.0, nb_ds)
    tree_base = rad_bound_tree(ncap, zero, n, net.depth)
    for form, spec in (("generic", LossSpec(core.HINGE_TRUNCATED)),
                       ("xe", LossSpec(core.CROSS_ENTROPY))):
        rep = certify_nn(net, nb_ds, zero, spec, form=form)
        worst = max(worst, abs(rep.perturbation_term),
                    abs(rep.complexity_term - 2 * tree_base))
        checks += 1

    net3 = random_net(rng, depth_max=2, out=3)
    X3 = rng.standard_normal((n, net3.input_dim))
    nm_ds = Dataset(X3, ClassLabels(rng.integers(0, 3, n), num_classes=3))
    ncap3 = net_capacity(net3, 2.0, nm_ds)
    rep = certify_multiclass_nn(net3, nm_ds, zero, rho=1.0)
    worst = max(worst, abs(rep.perturbation_term),
                abs(rep.complexity_term - 24 * rad_bound_tree(ncap3, zero, n,
                                                              net3.depth)))
    checks += 1

    nr_ds = Dataset(Xn, RealLabels(rng.standard_normal(n)))
    rep = certify_nn_regression(net, nr_ds, zero, r=2.0, B=1.5)
    worst = max(worst, abs(rep.perturbation_term),
                abs(rep.complexity_term - lip * tree_base))
    checks += 1

    verdict("criterion 7 (eps = 0 reduces every certificate)",
            worst <= 1e-12, f"{checks} certificate forms, max deviation {worst:.3g}")


def test_criterion_08_training_algorithms():
    toy = Dataset(np.array([[1.0], [-1.0]]), BinaryLabels(np.array([1, -1])))
    ball = PerturbationBall(p=math.inf, epsilon=0.1)
    model = train_convex(toy, ball, iters=3000)
    obj = convex_objective(model, toy, ball)
    grid = np.linspace(0, 5, 5001)
    oracle = min(convex_objective(LinearModel(np.array([t]), 0.0), toy, ball)
                 for t in grid)
    ok1 = obj <= 1e-3 and oracle <= 1e-12

    rng = np.random.default_rng(80)
    X = np.vstack([rng.normal(3, 0.5, (10, 1)), rng.normal(-3, 0.5, (10, 1))])
    ds = Dataset(X, BinaryLabels(np.array([1] * 10 + [-1] * 10)))
    best, candidates = train_regularized_grid(ds, ball, iters=400, grid=8,
                                              return_candidates=True)
    best_score = regularized_objective(best, ds, ball)
    ok2 = best_score == min(score for _, _, score in candidates)
    verdict("criterion 8 (convex trainer optimum + grid argmin contract)",
            ok1 and ok2, f"toy objective {obj:.3g}, grid scores match: {ok2}")


def test_criterion_09_gradient_checks():
    rng = np.random.default_rng(90)
    worst = 0.0
    for _ in range(100):
        d = int(rng.integers(1, 3))
        m = int(rng.integers(2, 4))
        widths = (m,) + tuple(int(rng.integers(2, 5)) for _ in range(d)) + (1,)
        arch = Architecture(widths, ("tanh",) * d)
        net = init_net(arch, seed=int(rng.integers(100000)))
        X = rng.standard_normal((4, m))
        ds = Dataset(X, BinaryLabels(rng.choice([-1, 1], 4)))
        ball = PerturbationBall(p=2, epsilon=float(rng.uniform(0.05, 0.4)))
        loss = LossSpec(core.CROSS_ENTROPY)
        _, grads = N._tree_loss_grads(net, ball, ds, loss)
        li = int(rng.integers(len(net.layers)))
        idx = tuple(int(rng.integers(s)) for s in net.layers[li].shape)
        h = 1e-6

        def perturbed(sign):
            layers = [A.copy() for A in net.layers]
            layers[li][idx] += sign * h
            obj, _ = N._tree_loss_grads(NeuralNet(tuple(layers), net.activations),
                                        ball, ds, loss)
            return obj

        fd = (perturbed(+1) - perturbed(-1)) / (2 * h)
        an = grads[li][idx]
        rel = abs(fd - an) / max(abs(fd), abs(an), 1e-8)
        worst = max(worst, rel)
    verdict("criterion 9 (analytic vs finite-difference gradients, 10^2 points)",
            worst <= 1e-5, f"max relative error {worst:.3g}")


def test_criterion_10_sandwich_lemmas():
    rng = np.random.default_rng(100)
    worst_b1 = 0.0
    for _ in range(1000):
        n, m = int(rng.integers(2, 15)), int(rng.integers(1, 5))
        ds = Dataset(rng.standard_normal((n, m)), BinaryLabels(rng.choice([-1, 1], n)))
        model = LinearModel(rng.standard_normal(m), float(rng.standard_normal()))
        ball = PerturbationBall(p=float(rng.choice([1.0, 2.0, math.inf])),
                                epsilon=float(rng.uniform(0, 1)))
        y = ds.labels.values
        f = model.predict(ds.features)
        psi = sup_transform_batch(model, ball, ds.features, y)
        shift = ball.epsilon * q_norm(model.theta, ball.q)
        diff = float(np.mean(hinge(psi, y) - hinge(f, y)))
        lower = shift * float(np.mean(hinge_indicator(f, y)))
        upper = shift * float(np.mean(hinge_indicator(psi, y)))
        worst_b1 = max(worst_b1, lower - diff, diff - upper)

    worst_b2 = 0.0
    for _ in range(1000):
        net = random_net(rng, depth_max=2, width_max=5)
        ball = PerturbationBall(p=float(rng.choice([1.0, 2.0, math.inf])),
                                epsilon=float(rng.uniform(0, 0.5)))
        n = int(rng.integers(2, 10))
        X = rng.standard_normal((n, net.input_dim))
        y = rng.choice([-1.0, 1.0], n)
        t = tree_transform_batch(net, ball, X, y)
        f = forward_batch(net, X)
        xe_t, g_t = xe_value_and_derivative(t, y)
        xe_f, _ = xe_value_and_derivative(f, y)
        cap = net_capacity(net, ball.q)
        rhs = (ball.epsilon * cap.alpha_1q * float(np.prod(cap.alpha_j[1:]))
               * float(np.mean(np.abs(g_t))))
        worst_b2 = max(worst_b2, float(np.mean(xe_t - xe_f)) - rhs)
    worst = max(worst_b1, worst_b2)
    verdict("criterion 10 (hinge sandwich + cross-entropy bound, 10^3 each)",
            worst <= 1e-9, f"max violation {worst:.3g}")
