"""Degradation operators ``H`` and the two solvers for the U-subproblem.

Three operators are provided:

``Blur``
    periodic 2-D convolution, diagonalised by the FFT;
``Mask``
    pixel-wise product with a boolean "known" indicator;
``BlockCS``
    a shared Gaussian projection applied to every 32 x 32 block.

The U-subproblem is ``min_U 0.5||Y - H U||^2 + rho/2 ||U - T||^2`` with
``T = D alpha + C``. Blur and Mask admit the closed form
``(H^T H + rho I)^{-1} (H^T Y + rho T)``; for BlockCS one exact line-search
gradient step is taken instead.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, InvalidArgumentError, UnsupportedOperatorError


def uniform_kernel(size=9):
    return np.full((size, size), 1.0 / (size * size))


def gaussian_kernel(size=25, std=1.6):
    ax = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(ax[:, None] ** 2 + ax[None, :] ** 2) / (2.0 * std * std))
    return g / g.sum()


def motion_kernel(length=20, angle=45.0, oversample=8):
    """Line of ``length`` pixels at ``angle`` degrees (counter-clockwise), bilinearly rasterised."""
    theta = np.deg2rad(angle)
    # row axis points down, so a counter-clockwise angle moves up (negative rows)
    dr, dc = -np.sin(theta), np.cos(theta)
    half = (length - 1) / 2.0
    t = np.linspace(-half, half, int(length * oversample) + 1)
    r, c = t * dr, t * dc
    rad = int(np.ceil(half)) + 1
    size = 2 * rad + 1
    k = np.zeros((size, size))
    r0, c0 = np.floor(r), np.floor(c)
    fr, fc = r - r0, c - c0
    for drow, dcol, wgt in (
        (0, 0, (1 - fr) * (1 - fc)),
        (1, 0, fr * (1 - fc)),
        (0, 1, (1 - fr) * fc),
        (1, 1, fr * fc),
    ):
        np.add.at(k, ((r0 + drow).astype(int) + rad, (c0 + dcol).astype(int) + rad), wgt)
    # crop empty border rows/cols symmetrically so the centre stays at the middle
    while size > 1 and not k[0].any() and not k[-1].any() and not k[:, 0].any() and not k[:, -1].any():
        k = k[1:-1, 1:-1]
        size -= 2
    return k / k.sum()


KERNELS = {
    "uniform9": lambda: uniform_kernel(9),
    "gaussian": lambda: gaussian_kernel(25, 1.6),
    "motion": lambda: motion_kernel(20, 45.0),
}


def _check_image(x, shape):
    x = np.asarray(x, dtype=float)
    if x.shape != tuple(shape):
        raise DimensionError(f"expected shape {tuple(shape)}, got {x.shape}")
    return x


@dataclass
class Blur:
    """Periodic convolution with ``kernel`` on images of ``shape``.

    The kernel centre is element ``(kh // 2, kw // 2)``.
    """

    kernel: np.ndarray
    shape: tuple

    def __post_init__(self):
        kern = np.asarray(self.kernel, dtype=float)
        if kern.ndim != 2:
            raise DimensionError("blur kernel must be 2-D")
        total = kern.sum()
        if not np.isfinite(total) or total == 0:
            raise InvalidArgumentError("blur kernel must have a non-zero finite sum")
        self.kernel = kern / total
        self.shape = tuple(int(s) for s in self.shape)
        kh, kw = self.kernel.shape
        if kh > self.shape[0] or kw > self.shape[1]:
            raise DimensionError("blur kernel larger than the image")
        psf = np.zeros(self.shape)
        psf[:kh, :kw] = self.kernel
        psf = np.roll(psf, (-(kh // 2), -(kw // 2)), axis=(0, 1))
        self.otf = np.fft.fft2(psf)

    @property
    def input_shape(self):
        return self.shape

    @property
    def output_shape(self):
        return self.shape

    def apply(self, x):
        x = _check_image(x, self.shape)
        return np.real(np.fft.ifft2(self.otf * np.fft.fft2(x)))

    def adjoint(self, y):
        y = _check_image(y, self.shape)
        return np.real(np.fft.ifft2(np.conj(self.otf) * np.fft.fft2(y)))


@dataclass
class Mask:
    known: np.ndarray

    def __post_init__(self):
        self.known = np.asarray(self.known, dtype=bool)
        if self.known.ndim != 2:
            raise DimensionError("mask must be 2-D")
        if not self.known.any():
            raise InvalidArgumentError("mask has no known pixels")

    @property
    def input_shape(self):
        return self.known.shape

    @property
    def output_shape(self):
        return self.known.shape

    @property
    def known_fraction(self):
        return float(self.known.mean())

    def apply(self, x):
        return _check_image(x, self.known.shape) * self.known

    def adjoint(self, y):
        return _check_image(y, self.known.shape) * self.known


def fill_missing(y, known):
    """Fill unknown pixels with the local mean of known ones (normalised box filtering).

    The box grows until every pixel has at least one known neighbour; known
    pixels are returned unchanged.
    """
    known = np.asarray(known, dtype=bool)
    y = np.where(known, np.asarray(y, dtype=float), 0.0)
    out = y.copy()
    todo = ~known
    size = 3
    while todo.any():
        if size > min(known.shape):
            raise InvalidArgumentError("mask too sparse to interpolate missing pixels")
        box = Blur(uniform_kernel(size), known.shape)
        num = box.apply(y)
        den = box.apply(known.astype(float))
        ok = todo & (den > 1e-9)
        out[ok] = num[ok] / den[ok]
        todo &= ~ok
        size += 2
    return out


def random_mask(shape, missing, seed=0):
    """Mask with ``round(missing * N)`` unknown pixels drawn without replacement."""
    if not 0.0 <= missing < 1.0:
        raise InvalidArgumentError(f"missing fraction must be in [0, 1), got {missing}")
    n = int(np.prod(shape))
    known = np.ones(n, dtype=bool)
    rng = np.random.default_rng(seed)
    known[rng.choice(n, size=int(round(missing * n)), replace=False)] = False
    return Mask(known.reshape(shape))


@dataclass
class BlockCS:
    """Block compressive sensing with one Gaussian matrix shared by all blocks.

    Blocks are vectorised row-major and measured in raster block order; the
    observation is the concatenation of the per-block measurement vectors.
    """

    shape: tuple
    ratio: float = 0.1
    seed: int = 0
    block_side: int = 32
    projection: np.ndarray = field(default=None)

    def __post_init__(self):
        self.shape = tuple(int(s) for s in self.shape)
        b = self.block_side
        if self.shape[0] % b or self.shape[1] % b:
            raise DimensionError(f"image shape {self.shape} is not a multiple of {b}")
        if self.projection is None:
            if not 0.0 < self.ratio <= 1.0:
                raise InvalidArgumentError(f"measurement ratio must be in (0, 1], got {self.ratio}")
            rows = int(round(self.ratio * b * b))
            rng = np.random.default_rng(self.seed)
            self.projection = rng.standard_normal((rows, b * b)) / np.sqrt(b * b)
        else:
            self.projection = np.asarray(self.projection, dtype=float)
            if self.projection.ndim != 2 or self.projection.shape[1] != b * b:
                raise DimensionError(f"projection must have {b * b} columns")
        self.nb = (self.shape[0] // b, self.shape[1] // b)

    @property
    def rows_per_block(self):
        return self.projection.shape[0]

    @property
    def input_shape(self):
        return self.shape

    @property
    def output_shape(self):
        return (self.nb[0] * self.nb[1] * self.rows_per_block,)

    def _blocks(self, x):
        b = self.block_side
        return x.reshape(self.nb[0], b, self.nb[1], b).transpose(0, 2, 1, 3).reshape(-1, b * b)

    def _unblock(self, blocks):
        b = self.block_side
        return blocks.reshape(self.nb[0], self.nb[1], b, b).transpose(0, 2, 1, 3).reshape(self.shape)

    def apply(self, x):
        x = _check_image(x, self.shape)
        return (self._blocks(x) @ self.projection.T).ravel()

    def adjoint(self, y):
        y = _check_image(y, self.output_shape)
        return self._unblock(y.reshape(-1, self.rows_per_block) @ self.projection)

    def smooth_estimate(self, y, power=2.0):
        """Per-block minimum-energy solution of ``Phi u = y`` under a 1/f^power DCT prior.

        This is the linear MMSE estimate for a Gaussian block model whose DCT
        coefficient at radial frequency ``f`` has variance ``(1 + f)^-power``.
        It is consistent with the measurements and, unlike ``H^T y``, fills
        the null space of ``Phi`` with smooth content.
        """
        y = _check_image(y, self.output_shape)
        b = self.block_side
        D = dct_matrix(b)
        D2 = np.kron(D, D)  # orthonormal 2-D DCT on row-major vectorised blocks
        f = np.arange(b)
        var = (1.0 + np.hypot(f[:, None], f[None, :]).ravel()) ** -power
        P = (D2.T * var) @ D2
        Phi = self.projection
        PPt = P @ Phi.T
        G = np.linalg.solve(Phi @ PPt, PPt.T).T  # P Phi^T (Phi P Phi^T)^-1
        return self._unblock(y.reshape(-1, self.rows_per_block) @ G.T)


def dct_matrix(n):
    """Orthonormal DCT-II matrix (rows are basis vectors)."""
    k = np.arange(n)[:, None]
    i = np.arange(n)[None, :]
    D = np.cos(np.pi * (2 * i + 1) * k / (2 * n)) * np.sqrt(2.0 / n)
    D[0] /= np.sqrt(2.0)
    return D


def apply(H, X):
    return H.apply(X)


def adjoint(H, r):
    return H.adjoint(r)


def _check_rho(rho):
    if not rho > 0:
        raise InvalidArgumentError(f"rho must be positive, got {rho}")


def noise_gain(H, rho):
    """RMS gain of ``(H^T H + rho I)^{-1} H^T`` on white noise.

    This is how much observation noise of unit std is amplified in the
    closed-form U-step estimate. Operators without a closed form return 1.
    """
    _check_rho(rho)
    if isinstance(H, Blur):
        a = np.abs(H.otf) ** 2
        return float(np.sqrt(np.mean(a / (a + rho) ** 2)))
    if isinstance(H, Mask):
        return float(np.sqrt(H.known_fraction)) / (1.0 + rho)
    return 1.0


def u_step_closed_form(H, Y, Dalpha, C, rho, HtY=None):
    """Exact minimiser of ``0.5||Y - H U||^2 + rho/2 ||U - Dalpha - C||^2``.

    ``HtY`` may be passed to reuse a precomputed back-projection.
    """
    _check_rho(rho)
    if HtY is None:
        HtY = H.adjoint(Y)
    rhs = HtY + rho * (np.asarray(Dalpha, dtype=float) + np.asarray(C, dtype=float))
    if isinstance(H, Mask):
        return rhs / (H.known + rho)
    if isinstance(H, Blur):
        denom = np.abs(H.otf) ** 2 + rho
        return np.real(np.fft.ifft2(np.fft.fft2(rhs) / denom))
    raise UnsupportedOperatorError(
        f"{type(H).__name__} has no closed-form U-step; use u_step_gradient"
    )


def q1_objective(H, Y, Dalpha, C, rho, U):
    """Value of the U-subproblem objective at ``U``."""
    r = np.asarray(Y, dtype=float) - H.apply(U)
    return 0.5 * float(np.sum(r * r)) + 0.5 * rho * float(np.sum((U - Dalpha - C) ** 2))


def u_step_gradient(H, Y, Dalpha, C, rho, U_prev, HtY=None):
    """One steepest-descent step with exact line search on the U-subproblem."""
    _check_rho(rho)
    U = np.asarray(U_prev, dtype=float)
    if HtY is None:
        HtY = H.adjoint(Y)
    q = H.adjoint(H.apply(U)) - HtY + rho * (U - Dalpha - C)
    qq = float(np.sum(q * q))
    if qq == 0.0:
        return U.copy()
    Hq = H.apply(q)
    eta = qq / (float(np.sum(Hq * Hq)) + rho * qq)
    return U - eta * q
