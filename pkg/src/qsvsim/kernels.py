"""Selects the eigensolver backend at import.

The compiled ``_jacobi`` extension is used when it was built; otherwise, or
when ``QSVSIM_PURE_PYTHON`` is set to a non-empty value, the numpy fallback in
``_jacobi_fallback`` is used. Both run the identical rotation sequence.
"""
import os

from . import _jacobi_fallback

_force_python = bool(os.environ.get("QSVSIM_PURE_PYTHON"))

if _force_python:
    from ._jacobi_fallback import jacobi_eigh
    BACKEND = "python"
else:
    try:
        from ._jacobi import jacobi_eigh
        BACKEND = "cython"
    except ImportError:  # extension not built
        from ._jacobi_fallback import jacobi_eigh
        BACKEND = "python"

python_jacobi_eigh = _jacobi_fallback.jacobi_eigh

__all__ = ["BACKEND", "jacobi_eigh", "python_jacobi_eigh"]
