"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the numpy twin.
Set ``CDQVI_PURE_PYTHON=1`` to force the fallback.
"""

import os

if os.environ.get("CDQVI_PURE_PYTHON", "") not in ("", "0"):
    from ._kernels_py import (
        enumerate_active_sets, fb_partials, fb_smoothed_vec, fb_vec, smoothed_root_terms,
    )
    BACKEND = "python"
else:
    try:
        from ._kernels import (
            enumerate_active_sets, fb_partials, fb_smoothed_vec, fb_vec, smoothed_root_terms,
        )
        BACKEND = "cython"
    except ImportError:
        from ._kernels_py import (
            enumerate_active_sets, fb_partials, fb_smoothed_vec, fb_vec, smoothed_root_terms,
        )
        BACKEND = "python"

__all__ = [
    "BACKEND",
    "enumerate_active_sets",
    "fb_partials",
    "fb_smoothed_vec",
    "fb_vec",
    "smoothed_root_terms",
]
