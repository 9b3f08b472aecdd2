"""Evaluable functionals F(eta), random fields u(eta, z), and the add-one /
drop-one difference operators

    D+_z F(eta) = F(eta + delta_z) - F(eta)
    D-_z F(eta) = (F(eta) - F(eta - delta_z)) 1_{z in eta}

which are the Poisson-space analogue of a derivative.  Functionals are
closures over their ground space rather than symbolic expressions: the
identity suite only needs evaluation.

Everything evaluates on batches.  A counts array of shape (..., n) maps to
values of shape (...) for functionals and (..., n) for fields (one value per
site), so the exact oracle can sweep a whole truncated state table and the
Monte Carlo engine a whole sample block in single numpy calls.  Evaluations
are pure, hence safe for concurrent use.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import ShapeError
from .ground import Configuration, GroundSpace

__all__ = [
    "Functional",
    "RandomField",
    "add_diff",
    "drop_diff",
    "second_add_diff",
    "derivative_field",
    "product_field",
    "add_diff_all",
    "drop_diff_all",
    "field_add_tensor",
    "field_dropped_diag",
]


@lru_cache(maxsize=None)
def _eye(n: int) -> np.ndarray:
    e = np.eye(n, dtype=np.int64)
    e.setflags(write=False)
    return e


def _as_counts(space: GroundSpace, counts) -> np.ndarray:
    arr = np.asarray(counts, dtype=np.int64)
    if arr.ndim == 0 or arr.shape[-1] != space.n:
        raise ShapeError(
            f"counts array with trailing dimension {arr.shape} does not match"
            f" a ground space with {space.n} sites"
        )
    return arr


@dataclass(frozen=True, eq=False)
class Functional:
    """Deterministic, total map from configurations to reals.

    ``fn`` receives an integer counts array of shape (..., n) and must return
    values of shape (...).  ``bound`` is an optional certified sup-norm bound;
    when present the exact oracle turns truncation mass into a rigorous
    expectation error bound instead of a heuristic one.
    """

    space: GroundSpace
    fn: Callable[[np.ndarray], np.ndarray]
    name: str
    params: dict = field(default_factory=dict)
    bound: float | None = None

    def batch(self, counts) -> np.ndarray:
        """Evaluate on a counts array of shape (..., n); returns shape (...)."""
        arr = _as_counts(self.space, counts)
        return np.asarray(self.fn(arr), dtype=np.float64)

    def __call__(self, eta: Configuration) -> float:
        if eta.space != self.space:
            raise ShapeError(f"configuration space does not match {self.name!r}")
        return float(self.batch(eta.array))

    def __repr__(self) -> str:
        return f"Functional({self.name!r}, params={self.params!r}, bound={self.bound!r})"


@dataclass(frozen=True, eq=False)
class RandomField:
    """Deterministic, total map u(eta, z) over configurations and sites.

    ``fn`` receives counts of shape (..., n) and returns all site values at
    once, shape (..., n); column z - 1 is u(eta, z).
    """

    space: GroundSpace
    fn: Callable[[np.ndarray], np.ndarray]
    name: str
    params: dict = field(default_factory=dict)
    bound: float | None = None

    def values(self, counts) -> np.ndarray:
        """Evaluate on counts of shape (..., n); returns shape (..., n)."""
        arr = _as_counts(self.space, counts)
        return np.asarray(self.fn(arr), dtype=np.float64)

    def __call__(self, eta: Configuration, z: int) -> float:
        if eta.space != self.space:
            raise ShapeError(f"configuration space does not match {self.name!r}")
        z = self.space.validate_site(z)
        return float(self.values(eta.array)[..., z - 1])

    def __repr__(self) -> str:
        return f"RandomField({self.name!r}, params={self.params!r}, bound={self.bound!r})"


# ---------------------------------------------------------------------------
# difference operators
# ---------------------------------------------------------------------------

def add_diff(F: Functional, eta: Configuration, z: int) -> float:
    """Add operator D+_z F(eta) = F(eta + delta_z) - F(eta)."""
    z = F.space.validate_site(z)
    c = eta.array
    shifted = c.copy()
    shifted[z - 1] += 1
    return float(F.batch(shifted) - F.batch(c))


def drop_diff(F: Functional, eta: Configuration, z: int) -> float:
    """Drop operator D-_z F(eta); the indicator absorbs absent points."""
    z = F.space.validate_site(z)
    if eta.counts[z - 1] == 0:
        return 0.0
    c = eta.array
    shifted = c.copy()
    shifted[z - 1] -= 1
    return float(F.batch(c) - F.batch(shifted))


def second_add_diff(u: RandomField, eta: Configuration, z: int, zp: int) -> float:
    """D+_z u(eta, zp) = u(eta + delta_z, zp) - u(eta, zp)."""
    z = u.space.validate_site(z)
    zp = u.space.validate_site(zp)
    c = eta.array
    shifted = c.copy()
    shifted[z - 1] += 1
    return float(u.values(shifted)[..., zp - 1] - u.values(c)[..., zp - 1])


def add_diff_all(F: Functional, counts: np.ndarray) -> np.ndarray:
    """All add differences at once: out[..., z-1] = D+_z F.  Shape (..., n)."""
    n = F.space.n
    plus = counts[..., None, :] + _eye(n)
    return F.batch(plus) - F.batch(counts)[..., None]


def drop_diff_all(F: Functional, counts: np.ndarray) -> np.ndarray:
    """All drop differences at once, indicator included.  Shape (..., n)."""
    n = F.space.n
    # clip keeps the evaluation total; the indicator zeroes the clipped rows
    minus = np.maximum(counts[..., None, :] - _eye(n), 0)
    present = counts > 0
    return (F.batch(counts)[..., None] - F.batch(minus)) * present


def derivative_field(F: Functional) -> RandomField:
    """The gradient field DF: (eta, z) -> D+_z F(eta).

    A sup-norm bound M on F certifies |D+_z F| <= 2M, so boundedness is
    inherited with the doubled constant.
    """
    n = F.space.n

    def fn(counts: np.ndarray) -> np.ndarray:
        plus = counts[..., None, :] + _eye(n)
        return F.fn(plus) - np.asarray(F.fn(counts))[..., None]

    return RandomField(
        space=F.space,
        fn=fn,
        name=f"D({F.name})",
        params=dict(F.params),
        bound=None if F.bound is None else 2.0 * F.bound,
    )


def product_field(F: Functional, u: RandomField) -> RandomField:
    """The field (eta, z) -> F(eta) u(eta, z)."""
    if F.space != u.space:
        raise ShapeError("functional and field live on different ground spaces")

    def fn(counts: np.ndarray) -> np.ndarray:
        return np.asarray(F.fn(counts))[..., None] * np.asarray(u.fn(counts))

    bound = None
    if F.bound is not None and u.bound is not None:
        bound = F.bound * u.bound
    return RandomField(
        space=F.space,
        fn=fn,
        name=f"({F.name})*({u.name})",
        params={},
        bound=bound,
    )


# ---------------------------------------------------------------------------
# batch helpers used by the divergence, brackets, and engines
# ---------------------------------------------------------------------------

def field_add_tensor(u: RandomField, counts: np.ndarray) -> np.ndarray:
    """T[..., z-1, zp-1] = u(eta + delta_z, zp).  Shape (..., n, n)."""
    n = u.space.n
    return u.values(counts[..., None, :] + _eye(n))


def field_dropped_diag(u: RandomField, counts: np.ndarray) -> np.ndarray:
    """out[..., z-1] = u(eta - delta_z, z) 1_{z in eta}.  Shape (..., n).

    This shifted evaluation is what the eta-integral of the divergence and
    the minus bracket pair with the multiplicity k_z.
    """
    n = u.space.n
    minus = np.maximum(counts[..., None, :] - _eye(n), 0)
    diag = np.diagonal(u.values(minus), axis1=-2, axis2=-1)
    return diag * (counts > 0)
