"""ADMM and IST solvers for group-sparse restoration with (weighted) nuclear-norm shrinkage.

One ADMM iteration:

1. U-step: closed form for Blur/Mask, one exact line-search gradient step
   for BlockCS;
2. ``L = U - C``;
3. alpha-step: block-match ``L`` into groups, take one SVD per group
   (``gamma`` = singular values), set
   ``lambda_i = 2 sqrt(2) delta^2 / (var(gamma_i) + varrho)``,
   ``tau_i = lambda_i K / (rho N)``, weights ``1 / (gamma + epsilon)``
   (WNNM) or 1 (NNM), and ``alpha_i = max(gamma_i - tau_i w_i, 0)``;
4. ``D alpha`` = aggregate of the decoded groups;
5. ``C <- C - (U - D alpha)``.
"""

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import groups as grp
from .dictionary import AdaptiveDictionary
from .metrics import psnr
from .errors import ConfigurationError, DimensionError, PreconditionError
from .operators import BlockCS, Blur, Mask, fill_missing, noise_gain, u_step_closed_form, u_step_gradient
from .shrinkage import SvdTriple, fix_signs

log = logging.getLogger(__name__)

MODES = ("wnnm", "nnm")
DELTA_SCHEDULES = ("fixed", "propagated", "residual")
INITS = ("auto", "backprojection", "zero")


@dataclass(frozen=True)
class SolverConfig:
    mode: str = "wnnm"
    rho: float = 0.0225
    epsilon: float = 0.35
    varrho: float = 0.1
    delta: float = 2.0
    grouping: grp.GroupingConfig = field(default_factory=grp.GroupingConfig)
    max_iters: int = 200
    rematch_every: int = 1
    u_steps: int = 1
    delta_schedule: str = "fixed"
    init: str = "auto"
    threads: int = 1
    peak: float = 255.0
    seed: int = 0

    def validate(self):
        if self.mode not in MODES:
            raise ConfigurationError(f"mode must be one of {MODES}, got {self.mode!r}")
        for name in ("rho", "epsilon", "varrho"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name} must be positive, got {getattr(self, name)}")
        if self.delta < 0:
            raise ConfigurationError(f"delta must be non-negative, got {self.delta}")
        if self.max_iters < 1 or self.rematch_every < 1 or self.u_steps < 1:
            raise ConfigurationError("max_iters, rematch_every and u_steps must be >= 1")
        if self.delta_schedule not in DELTA_SCHEDULES:
            raise ConfigurationError(f"delta_schedule must be one of {DELTA_SCHEDULES}")
        if self.init not in INITS:
            raise ConfigurationError(f"init must be one of {INITS}, got {self.init!r}")
        if not self.peak > 0:
            raise ConfigurationError("peak must be positive")
        if self.threads < 0:
            raise ConfigurationError("threads must be >= 0")
        self.grouping.validate()

    def replace(self, **changes):
        return replace(self, **changes)


@dataclass
class IterStat:
    iter: int
    psnr_db: float
    residual: float


@dataclass
class SolverState:
    U: np.ndarray
    C: np.ndarray
    Dalpha: np.ndarray
    layout: grp.GroupLayout = None
    alpha: np.ndarray = None  # (n, n0)
    left: np.ndarray = None  # (n, m, n0)
    right_t: np.ndarray = None  # (n, n0, k)
    gamma: np.ndarray = None
    tau: np.ndarray = None
    thresholds: np.ndarray = None
    delta: float = 0.0
    iter: int = 0
    psnr_trace: list = field(default_factory=list)

    @property
    def dicts(self):
        """Per-group :class:`AdaptiveDictionary` views of the last alpha-step."""
        return [
            AdaptiveDictionary(SvdTriple(self.left[g], self.gamma[g], self.right_t[g].T), self.gamma[g])
            for g in range(self.gamma.shape[0])
        ]


def lambda_for_group(gamma, delta, varrho):
    """Regularisation weight ``2 sqrt(2) delta^2 / (theta + varrho)``, theta = population variance of gamma."""
    gamma = np.asarray(gamma, dtype=float)
    if gamma.size == 0:
        raise DimensionError("gamma must be non-empty")
    return 2.0 * np.sqrt(2.0) * delta ** 2 / (float(np.var(gamma)) + varrho)


def weights_for_group(gamma, epsilon):
    """Reweighting ``1 / (gamma + epsilon)``; non-decreasing for sorted singular values."""
    gamma = np.asarray(gamma, dtype=float)
    if np.any(gamma < 0):
        raise PreconditionError("gamma entries must be non-negative")
    return 1.0 / (gamma + epsilon)


def _resolve_threads(threads):
    if threads == 0:
        return os.cpu_count() or 1
    return threads


def batched_svd(stack, threads=1):
    """Thin SVD of every (m, k) slice of ``stack`` with the package sign convention."""
    threads = _resolve_threads(threads)
    if threads <= 1 or stack.shape[0] < 2 * threads:
        U, s, Vt = np.linalg.svd(stack, full_matrices=False)
    else:
        chunks = np.array_split(np.arange(stack.shape[0]), threads)
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(lambda ix: np.linalg.svd(stack[ix], full_matrices=False), chunks))
        U = np.concatenate([p[0] for p in parts])
        s = np.concatenate([p[1] for p in parts])
        Vt = np.concatenate([p[2] for p in parts])
    U, Vt = fix_signs(U, Vt)
    return U, s, Vt


def group_thresholds(gamma, cfg, scale, delta, weights=None):
    """Per-coefficient thresholds ``tau_i * w_ij`` for a (n, n0) array of singular values.

    ``gamma`` and ``delta`` are in unit-range intensities (data / ``cfg.peak``),
    the units ``epsilon`` and ``varrho`` are expressed in. ``scale`` is
    ``K / (rho N)``. ``weights`` overrides the mode's weight rule (used to
    verify that NNM is WNNM with constant weights).
    """
    theta = np.var(gamma, axis=1)
    lam = 2.0 * np.sqrt(2.0) * delta ** 2 / (theta + cfg.varrho)
    tau = lam * scale
    if weights is None:
        if cfg.mode == "wnnm":
            weights = 1.0 / (gamma + cfg.epsilon)
        else:
            weights = np.ones_like(gamma)
    return tau, tau[:, None] * weights


def alpha_step(L, cfg, state, rho=None, delta=None, weights=None):
    """Group-wise shrinkage of ``L``; updates ``state`` and returns ``D alpha``.

    ``L`` and ``delta`` (default ``cfg.delta``) are in data units. ``rho``
    defaults to ``cfg.rho``; the IST solver passes ``1 / eta``. After the
    call ``state.gamma``, ``state.alpha`` and ``state.thresholds`` hold the
    per-group singular values, shrunk coefficients and thresholds, in data
    units.
    """
    rho = cfg.rho if rho is None else rho
    delta = cfg.delta if delta is None else delta
    if state.layout is None or state.iter % cfg.rematch_every == 0:
        state.layout = grp.match(L, cfg.grouping)
    layout = state.layout
    stack = grp.gather(L, layout)
    U, gamma, Vt = batched_svd(stack, cfg.threads)
    scale = layout.n_elements / (rho * L.size)
    tau, thr = group_thresholds(gamma / cfg.peak, cfg, scale, delta / cfg.peak, weights)
    thr = thr * cfg.peak
    alpha = np.maximum(gamma - thr, 0.0)
    decoded = np.matmul(U * alpha[:, None, :], Vt)
    state.alpha, state.gamma, state.tau, state.thresholds = alpha, gamma, tau, thr
    state.left, state.right_t = U, Vt
    return grp.aggregate_stack(decoded, layout)


def _psnr(ref, img, peak):
    return psnr(ref, np.clip(img, 0.0, peak), peak=peak)


def _delta_for(cfg, H, Y, U):
    """Noise level assumed for ``L`` this iteration.

    ``fixed`` uses ``cfg.delta``; ``propagated`` scales it by the noise gain
    of the closed-form U-step filter; ``residual`` subtracts the data misfit
    of ``U`` from ``cfg.delta ** 2``.
    """
    if cfg.delta_schedule == "fixed":
        return cfg.delta
    if cfg.delta_schedule == "propagated":
        return cfg.delta * noise_gain(H, cfg.rho)
    r = np.asarray(Y, dtype=float) - H.apply(U)
    return float(np.sqrt(max(cfg.delta ** 2 - float(np.mean(r * r)), 0.0)))


def _check_problem(Y, H, cfg, ground_truth):
    cfg.validate()
    Y = np.asarray(Y, dtype=float)
    if Y.shape != tuple(H.output_shape):
        raise DimensionError(f"observation shape {Y.shape} != operator output {H.output_shape}")
    if ground_truth is not None and np.shape(ground_truth) != tuple(H.input_shape):
        raise DimensionError("ground truth shape does not match the operator input")
    return Y


def initial_estimate(Y, H, init="auto"):
    """Starting image ``U^0``.

    ``"backprojection"`` is plain ``H^T Y`` and ``"zero"`` is all zeros. ``"auto"`` (default) keeps that
    for blur, fills masked pixels from known neighbours, and uses the
    smoothness-prior estimate for block CS, where ``H^T Y`` has no DC and
    leaves the shrinkage nothing to work with.
    """
    if init == "backprojection":
        return H.adjoint(Y)
    if init == "zero":
        return np.zeros(H.input_shape)
    if isinstance(H, Mask):
        return fill_missing(Y, H.known)
    if isinstance(H, BlockCS):
        return H.smooth_estimate(Y)
    return H.adjoint(Y)


def admm_solve(Y, H, cfg, ground_truth=None, callback=None):
    """Restore an image from ``Y = H X + noise``.

    Returns ``(image, trace)`` where ``image`` is ``D alpha`` clipped to
    [0, peak] and ``trace`` is a list of :class:`IterStat` (``psnr_db`` is
    ``nan`` when no ground truth is supplied). ``callback(state)`` is invoked
    after every iteration.
    """
    Y = _check_problem(getattr(Y, "data", Y), H, cfg, ground_truth)
    HtY = H.adjoint(Y)
    U0 = initial_estimate(Y, H, cfg.init)
    state = SolverState(U=U0, C=np.zeros_like(U0), Dalpha=U0.copy())
    closed = isinstance(H, (Blur, Mask))
    trace = []
    for t in range(cfg.max_iters):
        state.iter = t
        target_C = state.C
        if closed:
            state.U = u_step_closed_form(H, Y, state.Dalpha, target_C, cfg.rho, HtY=HtY)
        else:
            for _ in range(cfg.u_steps):
                state.U = u_step_gradient(H, Y, state.Dalpha, target_C, cfg.rho, state.U, HtY=HtY)
        L = state.U - state.C
        state.delta = _delta_for(cfg, H, Y, state.U)
        state.Dalpha = alpha_step(L, cfg, state, delta=state.delta)
        state.C = state.C - (state.U - state.Dalpha)
        residual = float(np.linalg.norm(state.U - state.Dalpha))
        p = _psnr(ground_truth, state.Dalpha, cfg.peak) if ground_truth is not None else float("nan")
        trace.append(IterStat(t + 1, p, residual))
        log.debug("admm iter %d psnr %.3f residual %.4g", t + 1, p, residual)
        if callback is not None:
            callback(state)
    state.psnr_trace = [(s.iter, s.psnr_db) for s in trace]
    return np.clip(state.Dalpha, 0.0, cfg.peak), trace


def ist_solve(Y, H, cfg, ground_truth=None, callback=None):
    """Iterative shrinkage baseline: data gradient step then group shrinkage.

    The step ``eta`` is the exact line search on ``0.5||Y - H X||^2`` and the
    threshold scaling uses ``1 / eta`` in place of ``rho``. ``X`` starts
    from the same ``cfg.init`` estimate as :func:`admm_solve`.
    """
    Y = _check_problem(getattr(Y, "data", Y), H, cfg, ground_truth)
    X = initial_estimate(Y, H, cfg.init)
    state = SolverState(U=X, C=np.zeros_like(X), Dalpha=X)
    trace = []
    for t in range(cfg.max_iters):
        state.iter = t
        g = H.adjoint(H.apply(X) - Y)
        gg = float(np.sum(g * g))
        if gg > 0:
            Hg = H.apply(g)
            eta = gg / float(np.sum(Hg * Hg))
            Z = X - eta * g
        else:
            eta, Z = 1.0, X
        state.U = Z
        state.delta = _delta_for(cfg, H, Y, Z)
        X = alpha_step(Z, cfg, state, rho=1.0 / eta, delta=state.delta)
        state.Dalpha = X
        residual = float(np.linalg.norm(Z - X))
        p = _psnr(ground_truth, X, cfg.peak) if ground_truth is not None else float("nan")
        trace.append(IterStat(t + 1, p, residual))
        if callback is not None:
            callback(state)
    state.psnr_trace = [(s.iter, s.psnr_db) for s in trace]
    return np.clip(X, 0.0, cfg.peak), trace
