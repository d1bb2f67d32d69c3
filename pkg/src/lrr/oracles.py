"""Brute-force oracles for the shrinkage, dictionary and partition identities.

Each oracle compares a closed-form result against an independent
computation (grid search, random perturbation, direct summation) and
reports the largest violation found. All randomness uses fixed seeds.
"""

import time
from dataclasses import dataclass

import numpy as np

from . import groups as grp
from .dictionary import build_dictionary, decode, isometry_gap
from .shrinkage import shrink_objective, svd_shrink_nnm, svd_shrink_wnnm, soft_threshold, weighted_soft_threshold

TOLERANCE = 1e-8


@dataclass
class OracleResult:
    name: str
    max_violation: float
    tolerance: float
    seconds: float

    @property
    def passed(self):
        return bool(np.isfinite(self.max_violation) and self.max_violation < self.tolerance)

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: max violation {self.max_violation:.3e} (tol {self.tolerance:g}, {self.seconds:.2f}s)"


def _grid_around(center, half_width, wide):
    # a fine local grid catches small errors, the wide one catches gross ones
    fine = center + np.linspace(-1.0, 1.0, 20_001) * half_width
    return np.concatenate([fine, wide])


def scalar_soft_oracle(soft=soft_threshold, trials=200, seed=0):
    """Soft thresholding against grid minimisation of ``0.5 (x - a)^2 + tau |x|``."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        a = rng.uniform(-10, 10)
        tau = rng.uniform(0, 5)
        x = soft(a, tau)
        grid = _grid_around(x, 2.0, np.linspace(-20, 20, 4001))
        f = lambda z: 0.5 * (z - a) ** 2 + tau * np.abs(z)
        worst = max(worst, float(f(x) - f(grid).min()))
    return worst


def weighted_soft_oracle(soft=weighted_soft_threshold, trials=100, seed=1):
    """Weighted shrinkage of ordered inputs against a per-coordinate grid search."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        n = int(rng.integers(1, 7))
        a = np.sort(rng.uniform(0, 10, n))[::-1]
        w = np.sort(rng.uniform(0, 4, n))
        x = np.asarray(soft(a, w), dtype=float)
        if np.any(np.diff(x) > 0):
            worst = max(worst, float(np.max(np.diff(x))))
        for ai, wi, xi in zip(a, w, x):
            grid = _grid_around(xi, 2.0, np.linspace(0, 25, 2501))
            grid = grid[grid >= 0]
            f = lambda z: 0.5 * (z - ai) ** 2 + wi * z
            worst = max(worst, float(f(xi) - f(grid).min()))
    return worst


def perturbation_oracle(kind, shrink=None, trials=5, samples=1000, radius=0.1, seed=2):
    """Largest objective decrease found by random perturbations of the closed-form minimiser."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        m, k = (int(v) for v in rng.integers(2, 7, size=2))
        Y = rng.standard_normal((m, k)) * 2
        if kind == "nnm":
            param = float(rng.uniform(0.1, 1.5))
            X = (shrink or svd_shrink_nnm)(Y, param)
        else:
            param = np.sort(rng.uniform(0, 1.5, min(m, k)))
            X = (shrink or svd_shrink_wnnm)(Y, param)
        base = shrink_objective(kind, Y, X, param)
        for _ in range(samples):
            d = rng.standard_normal(X.shape)
            d *= radius * rng.uniform() / np.linalg.norm(d)
            worst = max(worst, base - shrink_objective(kind, Y, X + d, param))
    return worst


def isometry_oracle(groups=100, seed=3):
    """``||Y - X||_F^2 = ||mu - alpha||^2`` for random groups and coefficient vectors."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(groups):
        m, k = (int(v) for v in rng.integers(2, 40, size=2))
        d = build_dictionary(rng.standard_normal((m, k)) * 10)
        alpha = rng.uniform(0, 10, d.n_atoms)
        scale = 1.0 + float(np.sum(d.mu ** 2))
        worst = max(worst, isometry_gap(d, alpha) / scale)
    return worst


def partition_oracle(patch=8, size=32, seed=4):
    """``(1/N)||X - L||^2 = (1/K) sum ||X_i - L_i||_F^2`` when groups tile the image (k = 1)."""
    rng = np.random.default_rng(seed)
    X = rng.uniform(0, 255, (size, size))
    L = X + rng.standard_normal(X.shape) * 5
    cfg = grp.GroupingConfig(patch_side=patch, exemplar_stride=patch, window_side=patch, group_size=1)
    layout = grp.match(L, cfg)
    gx, gl = grp.gather(X, layout), grp.gather(L, layout)
    lhs = float(np.sum((X - L) ** 2)) / X.size
    rhs = float(np.sum((gx - gl) ** 2)) / layout.n_elements
    return abs(lhs - rhs) / max(lhs, 1.0)


def equivalence_oracle(seed=5):
    """Decoding the shrunk coefficients equals weighted SVD shrinkage of every group."""
    from .solver import SolverConfig, SolverState, alpha_step

    rng = np.random.default_rng(seed)
    field = np.outer(rng.uniform(50, 200, 16), rng.uniform(0.5, 1.0, 16))
    field += rng.standard_normal(field.shape)
    cfg = SolverConfig(
        mode="wnnm", delta=5.0, grouping=grp.GroupingConfig(4, 2, 8, 8)
    )
    state = SolverState(U=field, C=np.zeros_like(field), Dalpha=field)
    alpha_step(field, cfg, state)
    stack = grp.gather(field, state.layout)
    worst = 0.0
    for g in range(stack.shape[0]):
        d = build_dictionary(stack[g])
        via_dict = decode(d, state.alpha[g])
        direct = svd_shrink_wnnm(stack[g], state.thresholds[g])
        worst = max(worst, float(np.linalg.norm(via_dict - direct)))
    return worst


ORACLES = {
    "soft-threshold grid": scalar_soft_oracle,
    "weighted soft-threshold grid": weighted_soft_oracle,
    "nnm perturbation": lambda: perturbation_oracle("nnm"),
    "wnnm perturbation": lambda: perturbation_oracle("wnnm", seed=6),
    "dictionary isometry": isometry_oracle,
    "partition identity": partition_oracle,
    "decode/shrink equivalence": equivalence_oracle,
}


def oracle_suite(overrides=None):
    """Run every oracle and return a list of :class:`OracleResult`.

    ``overrides`` maps oracle names to replacement callables (used to
    check that a deliberately broken shrinkage is caught). Exceptions are
    reported as failures with an infinite violation.
    """
    table = dict(ORACLES)
    table.update(overrides or {})
    results = []
    for name, fn in table.items():
        t0 = time.perf_counter()
        try:
            v = float(fn())
        except Exception:  # reported, not raised
            v = float("inf")
        results.append(OracleResult(name, v, TOLERANCE, time.perf_counter() - t0))
    return results
