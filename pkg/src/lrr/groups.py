"""Overlapping patches, windowed block matching and group aggregation.

Patches are ``patch_side x patch_side`` squares addressed by their top-left
pixel and vectorised in row-major order. Exemplars sit on a regular grid of
``exemplar_stride`` pixels whose last row/column is clamped to the image
border, so every pixel is covered by at least one exemplar patch.

For an exemplar at ``(r, c)`` the search window is the ``window_side``
square centred on the exemplar patch, clipped to the image. The ``k``
members of its group are the exemplar itself followed by the ``k - 1``
nearest other window patches in squared Euclidean distance, ties broken in
raster order. Windows with fewer than ``k`` candidates repeat the sorted
candidate list cyclically.
"""

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from . import _backend
from .errors import ConfigurationError, DimensionError, InternalConsistencyError, InvalidInputError


@dataclass(frozen=True)
class GroupingConfig:
    patch_side: int = 8
    exemplar_stride: int = 4
    window_side: int = 40
    group_size: int = 60

    def validate(self, shape=None):
        if self.patch_side < 1 or self.exemplar_stride < 1 or self.group_size < 1:
            raise ConfigurationError(f"grouping parameters must be positive: {self}")
        if self.window_side < self.patch_side:
            raise ConfigurationError("window_side must be at least patch_side")
        if shape is not None:
            if min(shape) < self.patch_side:
                raise InvalidInputError(f"image {shape} smaller than one {self.patch_side}px patch")
            if self.window_side > min(shape):
                raise ConfigurationError(f"window_side {self.window_side} exceeds image {shape}")

    @property
    def patch_size(self):
        return self.patch_side * self.patch_side


@dataclass
class PatchGroup:
    """m x k matrix of similar patches; column 0 is the exemplar."""

    data: np.ndarray
    exemplar_pos: tuple
    member_pos: list


@dataclass(frozen=True)
class GroupLayout:
    """Positions of all groups of an image, shape (n, k) for rows and cols."""

    rows: np.ndarray
    cols: np.ndarray
    patch_side: int
    image_shape: tuple

    @property
    def n_groups(self):
        return self.rows.shape[0]

    @property
    def group_size(self):
        return self.rows.shape[1]

    @property
    def n_elements(self):
        """Total entries over all groups, m * k * n."""
        return self.patch_side ** 2 * self.rows.size


def exemplar_grid(length, patch, stride):
    pos = list(range(0, length - patch + 1, stride))
    if pos[-1] != length - patch:
        pos.append(length - patch)
    return np.asarray(pos, dtype=np.int64)


def match(image, cfg):
    """Block-match every exemplar of ``image``; returns a :class:`GroupLayout`."""
    image = np.ascontiguousarray(image, dtype=float)
    if image.ndim != 2:
        raise DimensionError(f"expected a 2-D image, got shape {image.shape}")
    cfg.validate(image.shape)
    if not np.all(np.isfinite(image)):
        raise InvalidInputError("image contains non-finite values")
    gr = exemplar_grid(image.shape[0], cfg.patch_side, cfg.exemplar_stride)
    gc = exemplar_grid(image.shape[1], cfg.patch_side, cfg.exemplar_stride)
    ex_r, ex_c = (a.ravel() for a in np.meshgrid(gr, gc, indexing="ij"))
    rows, cols = _backend.block_match(
        image,
        np.ascontiguousarray(ex_r),
        np.ascontiguousarray(ex_c),
        cfg.patch_side,
        cfg.window_side,
        cfg.group_size,
    )
    return GroupLayout(rows, cols, cfg.patch_side, image.shape)


def gather(image, layout):
    """Stack of group matrices, shape (n, m, k)."""
    p = layout.patch_side
    windows = sliding_window_view(np.asarray(image, dtype=float), (p, p))
    stack = windows[layout.rows, layout.cols]  # (n, k, p, p)
    n, k = layout.rows.shape
    return np.ascontiguousarray(stack.reshape(n, k, p * p).transpose(0, 2, 1))


def aggregate_stack(stack, layout):
    """Average overlapping patch contributions of a (n, m, k) stack into an image."""
    stack = np.ascontiguousarray(stack, dtype=float)
    if stack.shape != (layout.n_groups, layout.patch_side ** 2, layout.group_size):
        raise DimensionError(f"stack shape {stack.shape} does not match layout")
    sums, counts = _backend.aggregate(
        stack, layout.rows, layout.cols, layout.image_shape, layout.patch_side
    )
    if np.any(counts == 0):
        raise InternalConsistencyError(f"{int(np.sum(counts == 0))} pixels not covered by any patch")
    return sums / counts


def extract_groups(image, cfg):
    """Block-matched groups of ``image`` as a list of :class:`PatchGroup`."""
    layout = match(image, cfg)
    stack = gather(image, layout)
    return [
        PatchGroup(
            data=stack[g],
            exemplar_pos=(int(layout.rows[g, 0]), int(layout.cols[g, 0])),
            member_pos=list(zip(layout.rows[g].tolist(), layout.cols[g].tolist())),
        )
        for g in range(layout.n_groups)
    ]


def aggregate_groups(groups, image_shape):
    """Rebuild an image from processed groups by per-pixel averaging."""
    if not groups:
        raise InternalConsistencyError("no groups to aggregate")
    H, W = image_shape
    p = int(round(np.sqrt(groups[0].data.shape[0])))
    if p * p != groups[0].data.shape[0]:
        raise DimensionError("group rows are not a square patch size")
    k = max(len(g.member_pos) for g in groups)
    if any(len(g.member_pos) != k or g.data.shape[1] != k for g in groups):
        raise DimensionError("groups must all have the same number of members")
    rows = np.array([[r for r, _ in g.member_pos] for g in groups], dtype=np.int64)
    cols = np.array([[c for _, c in g.member_pos] for g in groups], dtype=np.int64)
    if rows.min() < 0 or cols.min() < 0 or rows.max() > H - p or cols.max() > W - p:
        raise DimensionError("member position out of bounds")
    layout = GroupLayout(rows, cols, p, (H, W))
    return aggregate_stack(np.stack([g.data for g in groups]), layout)
