import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_symplectic(rng, n_modes, scale=0.5):
    """exp(J S) with S symmetric is symplectic."""
    from scipy.linalg import expm

    from gaussent import symplectic_form

    s = rng.normal(scale=scale, size=(2 * n_modes, 2 * n_modes))
    return expm(symplectic_form(n_modes) @ (s + s.T) / 2)
