"""Numeric kernels: the compiled extension when built, numpy otherwise.

Set ``DEHNFILL_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("DEHNFILL_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _kernels_py

lobachevsky = _impl.lobachevsky
tetra_volume = _impl.tetra_volume
tetra_volumes = _impl.tetra_volumes
_residual_jacobian = _impl.residual_jacobian


def residual_jacobian(A1, A2, C, L1, L2, z):
    # the compiled kernel uses a fixed-size scratch buffer
    if BACKEND == "cython" and len(z) > 64:
        return _kernels_py.residual_jacobian(A1, A2, C, L1, L2, z)
    return _residual_jacobian(A1, A2, C, L1, L2, z)


__all__ = ["BACKEND", "lobachevsky", "tetra_volume", "tetra_volumes", "residual_jacobian"]
