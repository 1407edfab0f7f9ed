"""Kernel backends: compiled vs pure-Python equivalence."""

import numpy as np
import pytest

from glsreg import GaussianPoint, kernels, rao_distance

needs_compiled = pytest.mark.skipif(kernels.compiled_core is None,
                                    reason="compiled extension not built")


def random_quads(n, seed=0):
    rng = np.random.default_rng(seed)
    mu1, mu2 = rng.uniform(-100, 100, (2, n))
    s1, s2 = rng.uniform(0.01, 100, (2, n))
    return mu1, s1, mu2, s2


class TestAgainstReference:
    def test_batch_matches_scalar_reference(self):
        mu1, s1, mu2, s2 = random_quads(500)
        batch = kernels.rao_distance_many(mu1, s1, mu2, s2)
        for i in range(500):
            ref = rao_distance(GaussianPoint(mu1[i], s1[i]),
                               GaussianPoint(mu2[i], s2[i]))
            assert batch[i] == pytest.approx(ref, rel=1e-14, abs=1e-300)

    def test_sum_sq_matches_batch(self):
        mu1, s1, mu2, s2 = random_quads(1000, seed=1)
        d = kernels.rao_distance_many(mu1, s1, mu2, s2)
        assert kernels.sum_sq_rao(mu1, s1, mu2, s2) == pytest.approx(
            float(np.sum(d * d)), rel=1e-13)


@needs_compiled
class TestBackendParity:
    def test_backends_agree(self):
        mu1, s1, mu2, s2 = random_quads(2000, seed=2)
        results = {}
        for backend in ("compiled", "python"):
            kernels.set_backend(backend)
            try:
                results[backend] = (kernels.rao_distance_many(mu1, s1, mu2, s2),
                                    kernels.sum_sq_rao(mu1, s1, mu2, s2))
            finally:
                kernels.set_backend("compiled")
        d_c, ss_c = results["compiled"]
        d_p, ss_p = results["python"]
        assert np.allclose(d_c, d_p, rtol=1e-14, atol=0)
        assert ss_c == pytest.approx(ss_p, rel=1e-12)

    def test_default_backend_is_compiled(self):
        assert kernels.BACKEND == "compiled"

    def test_unknown_backend_rejected(self):
        with pytest.raises(ValueError):
            kernels.set_backend("gpu")

    def test_compiled_sum_deterministic(self):
        mu1, s1, mu2, s2 = random_quads(10_000, seed=3)
        a = kernels.sum_sq_rao(mu1, s1, mu2, s2)
        b = kernels.sum_sq_rao(mu1, s1, mu2, s2)
        assert a == b
