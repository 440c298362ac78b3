"""Shared construction helpers for the test suite."""

import numpy as np

from formevol import HilbertScale, Semibound, build_scale


def random_hermitian(rng, n, scale=1.0):
    M = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return scale * 0.5 * (M + M.conj().T)


def random_scale(rng, n, spread=2.0) -> HilbertScale:
    """Random scale with eigenvalues in roughly [1, 1 + spread + ...]."""
    H = random_hermitian(rng, n)
    lam_min = float(np.linalg.eigvalsh(H)[0])
    m = max(0.0, -lam_min) + rng.uniform(0.0, spread)
    return build_scale(H, Semibound(m))


def random_unit_vector(rng, n):
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return v / np.linalg.norm(v)
