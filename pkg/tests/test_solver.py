import numpy as np
import pytest

from lrr import errors, imageio
from lrr import groups as grp
from lrr import operators as ops
from lrr.harness import default_config
from lrr.metrics import psnr
from lrr.oracles import equivalence_oracle, partition_oracle
from lrr.shrinkage import svd_shrink_wnnm
from lrr.solver import (
    SolverConfig,
    SolverState,
    admm_solve,
    alpha_step,
    ist_solve,
    lambda_for_group,
    weights_for_group,
)

from conftest import DATA


def crop64(name="cameraman"):
    return imageio.read_image(DATA / f"{name}.pgm")[32:96, 32:96]


def test_lambda_examples():
    assert lambda_for_group(np.full(5, 3.0), 2.0, 0.1) == pytest.approx(113.1370849, rel=1e-9)
    assert lambda_for_group(np.array([4.0, 1.0]), 0.0, 0.1) == 0.0
    assert lambda_for_group(np.array([3.0, 1.0]), 1.0, 0.1) == pytest.approx(2.0 * np.sqrt(2) / 1.1)
    assert lambda_for_group(np.array([3.0, 1.0]), 1.0, 0.1) == pytest.approx(2.571297, abs=1e-6)


def test_weight_examples():
    assert weights_for_group(np.array([1.0]), 0.35)[0] == pytest.approx(0.740740, abs=1e-6)
    assert weights_for_group(np.array([0.0]), 0.35)[0] == pytest.approx(1 / 0.35)
    w = weights_for_group(np.array([10.0, 1.0, 0.0]), 0.35)
    np.testing.assert_allclose(w, [0.096618, 0.740740, 2.857142], atol=1e-6)
    assert np.all(np.diff(w) >= 0)
    with pytest.raises(errors.PreconditionError):
        weights_for_group(np.array([1.0, -0.1]), 0.35)


def test_config_validation():
    with pytest.raises(errors.ConfigurationError):
        SolverConfig(rho=0).validate()
    with pytest.raises(errors.ConfigurationError):
        SolverConfig(mode="l1").validate()
    with pytest.raises(errors.ConfigurationError):
        SolverConfig(max_iters=0).validate()
    with pytest.raises(errors.ConfigurationError):
        SolverConfig(delta=-1).validate()
    with pytest.raises(errors.ConfigurationError):
        SolverConfig(init="zeros").validate()


def _independent_shrink(L, cfg, rho):
    """Group shrinkage recomputed with the shrinkage module only."""
    layout = grp.match(L, cfg.grouping)
    stack = grp.gather(L, layout)
    scale = layout.n_elements / (rho * L.size)
    out = np.empty_like(stack)
    for g in range(stack.shape[0]):
        gamma = np.linalg.svd(stack[g], compute_uv=False) / cfg.peak
        tau = 2 * np.sqrt(2) * (cfg.delta / cfg.peak) ** 2 / (np.var(gamma) + cfg.varrho) * scale
        w = 1.0 / (gamma + cfg.epsilon) if cfg.mode == "wnnm" else np.ones_like(gamma)
        out[g] = svd_shrink_wnnm(stack[g], tau * w * cfg.peak)
    return grp.aggregate_stack(out, layout)


@pytest.mark.parametrize("mode", ["wnnm", "nnm"])
def test_alpha_step_matches_independent_shrinkage(mode):
    L = crop64()[:32, :32] + np.random.default_rng(0).standard_normal((32, 32)) * 5
    cfg = SolverConfig(mode=mode, delta=6.0, grouping=grp.GroupingConfig(6, 3, 14, 12))
    state = SolverState(U=L, C=np.zeros_like(L), Dalpha=L)
    got = alpha_step(L, cfg, state)
    np.testing.assert_allclose(got, _independent_shrink(L, cfg, cfg.rho), atol=1e-8)


def test_alpha_step_first_order_optimality():
    L = np.random.default_rng(1).uniform(0, 255, (24, 24))
    cfg = SolverConfig(delta=10.0, grouping=grp.GroupingConfig(4, 4, 12, 8))
    state = SolverState(U=L, C=np.zeros_like(L), Dalpha=L)
    alpha_step(L, cfg, state)
    grid = np.linspace(0, state.gamma.max() * 1.5, 200_001)
    for g in range(0, state.gamma.shape[0], 5):
        for gam, thr, a in zip(state.gamma[g], state.thresholds[g], state.alpha[g]):
            f = lambda x: 0.5 * (x - gam) ** 2 + thr * x
            assert f(a) <= f(grid).min() + 1e-9


def test_zero_field_gives_zero_coefficients():
    L = np.zeros((20, 20))
    cfg = SolverConfig(grouping=grp.GroupingConfig(4, 4, 12, 5))
    state = SolverState(U=L, C=L, Dalpha=L)
    out = alpha_step(L, cfg, state)
    assert np.all(state.alpha == 0) and np.all(out == 0)


def test_nnm_is_wnnm_with_constant_weights():
    L = np.random.default_rng(2).uniform(0, 255, (32, 32))
    g = grp.GroupingConfig(6, 4, 16, 10)
    s1 = SolverState(U=L, C=L, Dalpha=L)
    s2 = SolverState(U=L, C=L, Dalpha=L)
    a = alpha_step(L, SolverConfig(mode="nnm", delta=8.0, grouping=g), s1)
    b = alpha_step(L, SolverConfig(mode="wnnm", delta=8.0, grouping=g), s2, weights=np.ones_like(s1.gamma))
    assert np.max(np.abs(a - b)) <= 1e-10


def test_partition_and_equivalence_identities():
    assert partition_oracle() < 1e-12
    assert partition_oracle(patch=4, size=16) < 1e-12
    assert equivalence_oracle() < 1e-8


def test_thread_count_does_not_change_result():
    L = np.random.default_rng(3).uniform(0, 255, (48, 48))
    g = grp.GroupingConfig(6, 4, 16, 20)
    outs = []
    for threads in (1, 3):
        st = SolverState(U=L, C=L, Dalpha=L)
        outs.append(alpha_step(L, SolverConfig(delta=5.0, grouping=g, threads=threads), st))
    assert np.max(np.abs(outs[0] - outs[1])) <= 1e-12


def test_admm_identity_fixed_point():
    X = crop64()[:32, :32]
    H = ops.Mask(np.ones(X.shape, dtype=bool))
    cfg = SolverConfig(mode="nnm", delta=0.0, max_iters=5, grouping=grp.GroupingConfig(4, 4, 12, 6))
    out, trace = admm_solve(X, H, cfg, ground_truth=X)
    assert np.max(np.abs(out - X)) < 1e-6
    assert len(trace) == 5


def test_ist_identity_fixed_point():
    X = crop64()[:32, :32]
    H = ops.Mask(np.ones(X.shape, dtype=bool))
    cfg = SolverConfig(mode="nnm", delta=0.0, max_iters=3, grouping=grp.GroupingConfig(4, 4, 12, 6))
    out, _ = ist_solve(X, H, cfg)
    assert np.max(np.abs(out - X)) < 1e-6


def test_ist_first_iteration_shrinks_scaled_backprojection():
    X = crop64()
    H = ops.BlockCS(X.shape, 0.3, seed=1)
    Y = H.apply(X)
    cfg = SolverConfig(delta=3.0, max_iters=1, init="zero", grouping=grp.GroupingConfig(6, 4, 20, 20))
    out, _ = ist_solve(Y, H, cfg)
    g = H.adjoint(Y)
    eta = float(np.sum(g * g) / np.sum(H.apply(g) ** 2))
    expected = _independent_shrink(eta * g, cfg, 1.0 / eta)
    np.testing.assert_allclose(out, np.clip(expected, 0, 255), atol=1e-8)


def test_shape_checks():
    H = ops.Mask(np.ones((16, 16), dtype=bool))
    with pytest.raises(errors.DimensionError):
        admm_solve(np.zeros((8, 8)), H, SolverConfig(grouping=grp.GroupingConfig(4, 4, 8, 4)))
    with pytest.raises(errors.DimensionError):
        admm_solve(np.zeros((16, 16)), H, SolverConfig(grouping=grp.GroupingConfig(4, 4, 8, 4)),
                   ground_truth=np.zeros((4, 4)))


def test_delta_schedules():
    from lrr.solver import _delta_for

    X = crop64()
    H = ops.Blur(ops.uniform_kernel(9), X.shape)
    Y = H.apply(X)
    assert _delta_for(SolverConfig(delta=2.0), H, Y, X) == 2.0
    prop = _delta_for(SolverConfig(delta=2.0, delta_schedule="propagated", rho=0.0225), H, Y, X)
    assert prop == pytest.approx(2.0 * ops.noise_gain(H, 0.0225))
    # a perfect fit leaves delta unchanged; a misfit of 1 per pixel removes 1 from delta^2
    res = SolverConfig(delta=2.0, delta_schedule="residual")
    assert _delta_for(res, H, Y, X) == pytest.approx(2.0)
    assert _delta_for(res, H, Y + 1.0, X) == pytest.approx(np.sqrt(3.0))
    assert _delta_for(res, H, Y + 5.0, X) == 0.0


def test_admm_is_deterministic():
    X = crop64()[:32, :32]
    H = ops.Blur(ops.uniform_kernel(5), X.shape)
    Y = H.apply(X) + np.random.default_rng(4).standard_normal(X.shape)
    cfg = SolverConfig(max_iters=3, delta=1.0, grouping=grp.GroupingConfig(6, 4, 16, 10))
    a, ta = admm_solve(Y, H, cfg, ground_truth=X)
    b, tb = admm_solve(Y, H, cfg, ground_truth=X)
    assert a.tobytes() == b.tobytes()
    assert [s.psnr_db for s in ta] == [s.psnr_db for s in tb]


def _deblur_case(mode, iters=40):
    X = crop64()
    H = ops.Blur(ops.uniform_kernel(9), X.shape)
    Y = np.clip(H.apply(X) + 2.0 * np.random.default_rng(0).standard_normal(X.shape), 0, 255)
    cfg = SolverConfig(mode=mode, rho=0.0225, varrho=0.1, delta=2.0, max_iters=iters)
    out, trace = admm_solve(Y, H, cfg, ground_truth=X)
    return psnr(X, Y), psnr(X, out), trace


@pytest.mark.slow
def test_deblur_wnnm_beats_nnm_and_observation():
    obs, w, trace = _deblur_case("wnnm")
    _, n, _ = _deblur_case("nnm")
    assert w > n
    assert w > obs
    res = np.array([s.residual for s in trace])
    # multiplier residual trends down: each 10-iteration window mean no larger than the previous
    means = res[: len(res) // 10 * 10].reshape(-1, 10).mean(axis=1)
    assert np.all(np.diff(means[1:]) <= 1e-9 + 0.05 * means[1:-1])


def _cs_case(solver, ratio, iters, mode="wnnm"):
    X = crop64()
    H = ops.BlockCS(X.shape, ratio, seed=1)
    cfg = default_config("cs", ratio=ratio, mode=mode, max_iters=iters)
    return solver(H.apply(X), H, cfg, ground_truth=X)


@pytest.mark.slow
def test_low_ratio_cs_trace_rises_then_flattens():
    _, trace = _cs_case(admm_solve, 0.1, 120)
    p = np.array([s.psnr_db for s in trace])
    after = p[5:]
    assert np.all(np.maximum.accumulate(after) - after <= 0.1)
    assert np.ptp(p[-10:]) < 0.05


@pytest.mark.slow
def test_admm_not_worse_than_ist_on_cs():
    a, _ = _cs_case(admm_solve, 0.2, 60)
    X = crop64()
    b, _ = _cs_case(ist_solve, 0.2, 60)
    assert psnr(X, a) >= psnr(X, b)
