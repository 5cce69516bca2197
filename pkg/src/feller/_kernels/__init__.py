"""Hot numeric kernels.

Two interchangeable implementations share one set of signatures: a numba
``@njit`` path and a pure-numpy path. The numba path is used when numba
imports cleanly, unless ``FELLER_DISABLE_NUMBA`` is set to a non-empty value
other than ``0``. Integer output (the Philox words, Poisson counts) is
bit-identical across backends; floating-point transforms may differ by an
ulp because numpy and LLVM use different libm routines.
"""
import os
import warnings

from . import _numpy as numpy_backend

_disabled = os.environ.get("FELLER_DISABLE_NUMBA", "").strip() not in ("", "0")

numba_backend = None
if not _disabled:
    try:
        from . import _numba as numba_backend
    except ImportError:  # pragma: no cover - numba is a declared dependency
        warnings.warn("numba unavailable; falling back to the numpy kernels")

_impl = numba_backend if numba_backend is not None else numpy_backend
BACKEND = "numba" if numba_backend is not None else "numpy"

philox4x64 = _impl.philox4x64
uniforms = _impl.uniforms
box_muller = _impl.box_muller
cms_symmetric = _impl.cms_symmetric
poisson_inverse = _impl.poisson_inverse
stable_like_increments = _impl.stable_like_increments

__all__ = [
    "BACKEND",
    "box_muller",
    "cms_symmetric",
    "numba_backend",
    "numpy_backend",
    "philox4x64",
    "poisson_inverse",
    "stable_like_increments",
    "uniforms",
]
