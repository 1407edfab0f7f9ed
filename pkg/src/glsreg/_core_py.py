"""Pure-NumPy fallback for the distance kernels in ``_core``.

Same contracts as the compiled module; used when the extension is not
built or when ``GLSREG_PURE_PYTHON=1`` is set. NumPy's pairwise summation
keeps ``sum_sq_rao`` order-stable to well below the 1e-12 tolerances used
throughout the test suite.
"""

import numpy as np

SQRT2 = 1.4142135623730951
DELTA_CAP = 1.0 - 1e-15


def rao_distance_many(mu1, s1, mu2, s2, out):
    dmu2 = (mu1 - mu2) ** 2
    num = dmu2 + 2.0 * (s1 - s2) ** 2
    den = dmu2 + 2.0 * (s1 + s2) ** 2
    delta = np.sqrt(num / den)
    np.minimum(delta, DELTA_CAP, out=delta)
    np.arctanh(delta, out=out)
    out *= 2.0 * SQRT2
    return None


def sum_sq_rao(mu1, s1, mu2, s2):
    out = np.empty_like(mu1)
    rao_distance_many(mu1, s1, mu2, s2, out)
    return float(np.sum(out * out))
