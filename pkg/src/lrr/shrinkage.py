"""Scalar and singular-value shrinkage operators.

All functions are pure and operate on NumPy arrays. Singular value
decompositions follow one convention throughout the package (see
:func:`svd`), so that dictionaries built from the same matrix are
reproducible bit for bit.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, InvalidArgumentError, InvalidInputError, PreconditionError


@dataclass(frozen=True)
class SvdTriple:
    """Thin SVD ``Y = left @ diag(singular_values) @ right.T``.

    ``left`` is m x n0, ``right`` is k x n0 with n0 = min(m, k).
    """

    left: np.ndarray
    singular_values: np.ndarray
    right: np.ndarray

    def reconstruct(self, values=None):
        s = self.singular_values if values is None else np.asarray(values, dtype=float)
        return (self.left * s) @ self.right.T


def _finite_matrix(Y):
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got shape {Y.shape}")
    if not np.all(np.isfinite(Y)):
        raise InvalidInputError("matrix contains non-finite entries")
    return Y


def fix_signs(U, Vt):
    """Flip singular vector pairs so the largest-magnitude entry of each left vector is >= 0.

    Works on single (m x n0, n0 x k) or batched (..., m, n0), (..., n0, k) factors.
    """
    idx = np.argmax(np.abs(U), axis=-2)
    pivot = np.take_along_axis(U, idx[..., None, :], axis=-2)
    sign = np.where(pivot < 0, -1.0, 1.0)
    return U * sign, Vt * np.swapaxes(sign, -1, -2)


def svd(Y):
    """Thin SVD of ``Y`` with non-increasing singular values and fixed signs."""
    Y = _finite_matrix(Y)
    U, s, Vt = np.linalg.svd(Y, full_matrices=False)
    U, Vt = fix_signs(U, Vt)
    return SvdTriple(U, s, Vt.T)


def soft_threshold(a, tau):
    """Proximal map of ``tau * |x|``: ``sign(a) * max(|a| - tau, 0)``.

    Accepts scalars or arrays (applied element-wise); returns a float for
    scalar input.
    """
    tau_arr = np.asarray(tau, dtype=float)
    if np.any(tau_arr < 0) or not np.all(np.isfinite(tau_arr)):
        raise InvalidArgumentError(f"threshold must be finite and non-negative, got {tau}")
    a_arr = np.asarray(a, dtype=float)
    if not np.all(np.isfinite(a_arr)):
        raise InvalidInputError("soft_threshold input must be finite")
    out = np.sign(a_arr) * np.maximum(np.abs(a_arr) - tau_arr, 0.0)
    if out.ndim == 0:
        return float(out)
    return out


def _check_ordered_weights(w, n=None):
    w = np.asarray(w, dtype=float)
    if w.ndim != 1:
        raise DimensionError("weights must be a 1-D vector")
    if n is not None and w.shape[0] != n:
        raise DimensionError(f"expected {n} weights, got {w.shape[0]}")
    if not np.all(np.isfinite(w)) or np.any(w < 0):
        raise PreconditionError("weights must be finite and non-negative")
    if np.any(np.diff(w) < 0):
        raise PreconditionError("weights must be non-decreasing")
    return w


def weighted_soft_threshold(a, w):
    """Solve ``min_{x >= 0} sum_i 0.5 (x_i - a_i)^2 + w_i x_i`` in closed form.

    The element-wise answer ``max(a_i - w_i, 0)`` is the global optimum only
    when ``a`` is non-increasing and non-negative and ``w`` is non-decreasing,
    so both orderings are enforced rather than silently repaired.
    """
    a = np.asarray(a, dtype=float)
    w = np.asarray(w, dtype=float)
    if a.ndim != 1 or w.ndim != 1 or a.shape != w.shape:
        raise DimensionError(f"length mismatch: {a.shape} vs {w.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError("coefficients must be finite")
    if np.any(a < 0) or np.any(np.diff(a) > 0):
        raise PreconditionError("coefficients must be non-negative and non-increasing")
    _check_ordered_weights(w)
    return np.maximum(a - w, 0.0)


def svd_shrink_nnm(Y, lam):
    """Singular value soft-thresholding, the minimiser of ``0.5||Y-X||_F^2 + lam ||X||_*``."""
    if lam < 0 or not np.isfinite(lam):
        raise InvalidArgumentError(f"lambda must be non-negative, got {lam}")
    t = svd(Y)
    return t.reconstruct(np.maximum(t.singular_values - lam, 0.0))


def svd_shrink_wnnm(Y, w):
    """Weighted singular value thresholding with non-decreasing weights.

    Returns ``U diag(max(sigma_i - w_i, 0)) V^T``, the global minimiser of
    ``0.5||Y-X||_F^2 + sum_i w_i sigma_i(X)`` under the weight ordering.
    """
    Y = _finite_matrix(Y)
    w = _check_ordered_weights(w, min(Y.shape))
    t = svd(Y)
    return t.reconstruct(np.maximum(t.singular_values - w, 0.0))


def shrink_objective(kind, Y, X, lambda_or_w):
    """Evaluate the NNM or WNNM objective at ``X``.

    ``kind`` is ``"nnm"`` (scalar ``lambda_or_w``) or ``"wnnm"`` (weight vector
    of length min(m, k)).
    """
    Y = np.asarray(Y, dtype=float)
    X = np.asarray(X, dtype=float)
    if Y.shape != X.shape or Y.ndim != 2:
        raise DimensionError(f"shape mismatch: {Y.shape} vs {X.shape}")
    fit = 0.5 * float(np.sum((Y - X) ** 2))
    s = np.linalg.svd(X, compute_uv=False)
    if kind == "nnm":
        return fit + float(lambda_or_w) * float(np.sum(s))
    if kind == "wnnm":
        w = np.asarray(lambda_or_w, dtype=float)
        if w.shape != s.shape:
            raise DimensionError(f"expected {s.shape[0]} weights, got {w.shape}")
        return fit + float(np.dot(w, s))
    raise InvalidArgumentError(f"unknown objective kind {kind!r}")
