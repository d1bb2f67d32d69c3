"""Select the compiled kernels when importable, the NumPy fallback otherwise.

Set ``LRR_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _fallback

if os.environ.get("LRR_PURE_PYTHON", "") not in ("", "0"):
    kernels = _fallback
    NAME = "python"
else:
    try:
        from . import _kernels as kernels
        NAME = "compiled"
    except ImportError:
        kernels = _fallback
        NAME = "python"

block_match = kernels.block_match
aggregate = kernels.aggregate
