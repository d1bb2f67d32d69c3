"""Per-group adaptive dictionaries built from a single SVD.

Atom ``j`` of the dictionary of a group ``Y`` is the rank-one matrix
``u_j v_j^T``. Atoms are kept implicitly in the SVD factors; decoding a
coefficient vector is ``U diag(alpha) V^T``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .shrinkage import SvdTriple, svd


@dataclass(frozen=True)
class AdaptiveDictionary:
    svd: SvdTriple
    mu: np.ndarray

    @property
    def n_atoms(self):
        return self.mu.shape[0]

    @property
    def shape(self):
        return (self.svd.left.shape[0], self.svd.right.shape[0])

    def atom(self, j):
        """Dense m x k atom ``u_j v_j^T`` (for inspection and tests)."""
        return np.outer(self.svd.left[:, j], self.svd.right[:, j])

    def source(self):
        return decode(self, self.mu)


def build_dictionary(Y):
    """Adaptive dictionary of group matrix ``Y`` (m x k); ``mu`` are its singular values."""
    t = svd(Y)
    return AdaptiveDictionary(svd=t, mu=t.singular_values)


def decode(dictionary, alpha):
    """Group matrix ``sum_j alpha_j d_j`` for coefficient vector ``alpha``."""
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape != dictionary.mu.shape:
        raise DimensionError(
            f"expected {dictionary.n_atoms} coefficients, got shape {alpha.shape}"
        )
    return dictionary.svd.reconstruct(alpha)


def isometry_gap(dictionary, alpha, X_target=None):
    """``| ||Y - X||_F^2 - ||mu - alpha||_2^2 |`` where ``Y`` is the dictionary's source group.

    ``X_target`` defaults to ``decode(dictionary, alpha)``; passing any other
    matrix returns the raw discrepancy between the two sides.
    """
    alpha = np.asarray(alpha, dtype=float)
    if X_target is None:
        X_target = decode(dictionary, alpha)
    X_target = np.asarray(X_target, dtype=float)
    if X_target.shape != dictionary.shape:
        raise DimensionError(f"target shape {X_target.shape} != {dictionary.shape}")
    if alpha.shape != dictionary.mu.shape:
        raise DimensionError("coefficient length mismatch")
    lhs = float(np.sum((dictionary.source() - X_target) ** 2))
    rhs = float(np.sum((dictionary.mu - alpha) ** 2))
    return abs(lhs - rhs)
