"""Backend selection for the distance kernels.

At import time the compiled extension (``glsreg._core``) is preferred; the
pure-NumPy module (``glsreg._core_py``) is the fallback. Setting the
environment variable ``GLSREG_PURE_PYTHON=1`` forces the fallback. The two
backends agree to within a few ulp; ``benchmarks/bench_kernels.py``
compares their throughput.
"""

import os

import numpy as np

from . import _core_py as python_core

try:
    from . import _core as compiled_core
except ImportError:  # extension not built
    compiled_core = None

if compiled_core is not None and os.environ.get("GLSREG_PURE_PYTHON", "") != "1":
    _active = compiled_core
    BACKEND = "compiled"
else:
    _active = python_core
    BACKEND = "python"


def set_backend(name):
    """Switch kernel backend at runtime ('compiled' or 'python').

    Used by the benchmark and by tests; library code goes through the
    module-level wrappers below, so a switch takes effect immediately.
    """
    global _active, BACKEND
    if name == "compiled":
        if compiled_core is None:
            raise RuntimeError("compiled kernel extension is not available")
        _active = compiled_core
    elif name == "python":
        _active = python_core
    else:
        raise ValueError(f"unknown backend {name!r}")
    BACKEND = name


def _as_c_double(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def rao_distance_many(mu1, s1, mu2, s2):
    """Elementwise Rao geodesic distances between N(mu1, s1^2) and N(mu2, s2^2)."""
    mu1 = _as_c_double(mu1)
    out = np.empty(mu1.shape[0])
    _active.rao_distance_many(mu1, _as_c_double(s1), _as_c_double(mu2),
                              _as_c_double(s2), out)
    return out


def sum_sq_rao(mu1, s1, mu2, s2):
    """Sum over rows of squared Rao geodesic distances."""
    return _active.sum_sq_rao(_as_c_double(mu1), _as_c_double(s1),
                              _as_c_double(mu2), _as_c_double(s2))
