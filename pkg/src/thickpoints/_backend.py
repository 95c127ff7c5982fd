"""Import-time selection of the path-kernel backend.

The compiled extension is preferred; the numpy fallback is selected when the
extension is missing or when THICKPOINTS_FORCE_FALLBACK=1 is set (useful for
the backend-comparison benchmark and for debugging).
"""

import os
import warnings

if os.environ.get("THICKPOINTS_FORCE_FALLBACK") == "1":
    from . import _kernels_py as kernels

    BACKEND = "python"
else:
    try:
        from . import _kernels as kernels  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:  # pragma: no cover - depends on the build
        from . import _kernels_py as kernels

        BACKEND = "python"
        warnings.warn(
            "compiled kernels unavailable; using the slower numpy fallback",
            RuntimeWarning,
            stacklevel=2,
        )


def get_kernels(backend=None):
    """Kernel module for an explicit backend name, or the selected one."""
    if backend in (None, BACKEND):
        return kernels
    if backend == "python":
        from . import _kernels_py

        return _kernels_py
    if backend == "compiled":
        from . import _kernels  # type: ignore[attr-defined]

        return _kernels
    raise ValueError(f"unknown backend {backend!r}")
