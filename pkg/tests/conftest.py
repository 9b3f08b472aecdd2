from __future__ import annotations

import numpy as np
import pytest

from poisson_malliavin import (
    Configuration,
    ExactBackend,
    GroundSpace,
    bounded_sigmoid,
    constant,
    indicator_leq,
    linear_count,
    poly_count,
    product_of,
    affine_of,
)

CANONICAL_WEIGHTS = (0.5, 1.0, 1.5)


@pytest.fixture(scope="session")
def space() -> GroundSpace:
    return GroundSpace(CANONICAL_WEIGHTS)


@pytest.fixture(scope="session")
def exact(space) -> ExactBackend:
    # one tight table shared by the whole run; construction is cheap but
    # there is no point rebuilding it per test
    return ExactBackend(space, tol=1e-12)


@pytest.fixture()
def eta102(space) -> Configuration:
    return Configuration(space, (1, 0, 2))


def functional_pool(space: GroundSpace):
    """A fixed, registry-spanning family used by randomized property tests.

    Coefficients are dyadic and count polynomials are integer-valued, so the
    algebraic identities below hold to rounding level even without bounds.
    """
    lin1 = linear_count(space, [1])
    lin12 = linear_count(space, [1, 2])
    sig = bounded_sigmoid(space, [1, 2], 1.0)
    ind = indicator_leq(space, [1, 2, 3], 2)
    return [
        constant(space, 1.5),
        lin1,
        lin12,
        linear_count(space, [1, 2, 3]),
        poly_count(space, [1, 2, 3], 2),
        poly_count(space, [1, 3], 3),
        sig,
        ind,
        product_of(sig, ind),
        affine_of([(0.5, lin12), (-0.25, sig)], 1.0),
    ]


def sample_batch(space: GroundSpace, seed: int, m: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    return rng.poisson(lam=np.asarray(space.weights), size=(m, space.n)).astype(
        np.int64
    )
