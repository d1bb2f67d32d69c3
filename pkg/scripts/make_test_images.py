"""Write the 128x128 grayscale test crops used by the test suite.

Sources are the public-domain sample images shipped with scikit-image.
"""

import sys
from pathlib import Path

import numpy as np
from skimage import color, data

from lrr.imageio import write_image

CROPS = {
    "cameraman": (data.camera, (60, 200)),
    "astronaut": (lambda: color.rgb2gray(data.astronaut()) * 255, (40, 160)),
    "coffee": (lambda: color.rgb2gray(data.coffee()) * 255, (100, 200)),
    "brick": (data.brick, (0, 0)),
    "moon": (data.moon, (200, 200)),
}


def main(out):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    for name, (load, (r, c)) in CROPS.items():
        img = np.asarray(load(), dtype=float)
        write_image(img[r:r + 128, c:c + 128], out / f"{name}.pgm")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "tests/data")
