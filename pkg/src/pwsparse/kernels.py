"""Backend selection for the hot loops.

The compiled ``_kernels_c`` extension is used when it was built; otherwise the
NumPy reference in ``_kernels_py`` takes over.  Setting the environment
variable ``PWSPARSE_PURE_PYTHON=1`` forces the fallback.
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("PWSPARSE_PURE_PYTHON", "").lower() in ("1", "true", "yes"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels_c as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

topk_prefix_max = _impl.topk_prefix_max
first_dependent_subset = _impl.first_dependent_subset
fitting_subsets = _impl.fitting_subsets


def available_backends() -> dict:
    """Name -> module for every backend importable in this environment."""
    out = {"python": _kernels_py}
    try:
        from . import _kernels_c
    except ImportError:
        pass
    else:
        out["cython"] = _kernels_c
    return out
