"""Image fidelity metrics."""

import numpy as np

from .errors import DimensionError

PSNR_CAP = 100.0


def psnr(reference, candidate, peak=255.0):
    """Peak signal-to-noise ratio in dB; identical images return ``PSNR_CAP``."""
    a = np.asarray(reference, dtype=float)
    b = np.asarray(candidate, dtype=float)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch: {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return PSNR_CAP
    return min(10.0 * np.log10(peak * peak / mse), PSNR_CAP)
