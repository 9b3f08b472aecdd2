"""Pathwise operators: Skorokhod divergence, Ornstein-Uhlenbeck generator,
carre du champ, Dirichlet energy, and the three energy brackets.

All maps here are exact configuration-wise evaluations; expectations are
delegated to the exact-enumeration and Monte Carlo backends.

The divergence evaluates its eta-integral at the reduced configuration,

    delta u(eta) = sum_z k_z u(eta - delta_z, z) - sum_z lambda_z u(eta, z),

which is the unique pathwise form that is actually adjoint to the add
operator under the Mecke equation: pairing E[F delta u] against
E int u D+F dnu and shifting the eta-integral with Mecke forces the
u(eta - delta_z, z) evaluation.  (For fields with no dependence on whether
z carries a point, e.g. deterministic or predictable ones, the shift is
invisible and the familiar "integral against eta minus integral against nu"
reading coincides with this one.)  The Skorokhod isometry and the Heisenberg
commutation relation then hold exactly, pathwise, on a finite ground set.

Likewise the generator L = -delta D takes the birth-death form

    L F(eta) = sum_z lambda_z (F(eta+delta_z) - F(eta))
             - sum_z k_z (F(eta) - F(eta-delta_z)),

whose matrix on a truncated state table the exact engine builds and whose
kernel contains the constants.

Everything is pure: concurrent evaluation over disjoint arguments needs no
shared mutable state.
"""
from __future__ import annotations

import enum

import numpy as np

from .errors import ShapeError
from .functionals import (
    Functional,
    RandomField,
    add_diff_all,
    derivative_field,
    field_dropped_diag,
    product_field,
)
from .ground import Configuration

__all__ = [
    "BracketKind",
    "divergence",
    "divergence_batch",
    "ou_generator",
    "ou_generator_batch",
    "bracket",
    "bracket_batch",
    "gamma",
    "gamma_batch",
    "dirichlet_integrand",
    "dirichlet_energy",
    "divergence_product_defect",
    "PairedValue",
]


class BracketKind(enum.Enum):
    """The three brackets of square-integrable fields.

    GAMMA is the energy bracket (the average of the other two), PLUS the
    plain scalar product in L2(nu), MINUS the shifted eta-integral bracket.
    """

    GAMMA = "gamma"
    PLUS = "plus"
    MINUS = "minus"


def _check_same_space(a, b) -> None:
    if a.space != b.space:
        raise ShapeError("operands live on different ground spaces")


def divergence_batch(u: RandomField, counts: np.ndarray) -> np.ndarray:
    """delta u on a counts batch of shape (..., n); returns shape (...)."""
    w = u.space.weights_array
    dropped = field_dropped_diag(u, counts)
    return (counts * dropped).sum(axis=-1) - (w * u.values(counts)).sum(axis=-1)


def divergence(u: RandomField, eta: Configuration) -> float:
    """Pathwise Skorokhod divergence delta u(eta)."""
    _check_same_space(u, eta)
    return float(divergence_batch(u, eta.array))


def ou_generator_batch(F: Functional, counts: np.ndarray) -> np.ndarray:
    """L F = -delta(DF) on a counts batch; returns shape (...)."""
    return -divergence_batch(derivative_field(F), counts)


def ou_generator(F: Functional, eta: Configuration) -> float:
    """Ornstein-Uhlenbeck generator L F(eta) = -delta(DF)(eta)."""
    _check_same_space(F, eta)
    return float(ou_generator_batch(F, eta.array))


def bracket_batch(
    u: RandomField, v: RandomField, kind: BracketKind, counts: np.ndarray
) -> np.ndarray:
    """[u, v]_kind on a counts batch; returns shape (...)."""
    _check_same_space(u, v)
    w = u.space.weights_array

    def plus() -> np.ndarray:
        return (w * u.values(counts) * v.values(counts)).sum(axis=-1)

    def minus() -> np.ndarray:
        # both factors evaluated at eta - delta_z; k_z = 0 contributes nothing
        ud = field_dropped_diag(u, counts)
        vd = field_dropped_diag(v, counts)
        return (counts * ud * vd).sum(axis=-1)

    if kind is BracketKind.PLUS:
        return plus()
    if kind is BracketKind.MINUS:
        return minus()
    return 0.5 * plus() + 0.5 * minus()


def bracket(
    u: RandomField, v: RandomField, kind: BracketKind, eta: Configuration
) -> float:
    """Energy bracket [u, v]_Gamma, or the plus / minus comparison brackets."""
    _check_same_space(u, eta)
    return float(bracket_batch(u, v, kind, eta.array))


def gamma_batch(F: Functional, G: Functional, counts: np.ndarray) -> np.ndarray:
    """Carre du champ Gamma(F, G) = [DF, DG]_Gamma on a counts batch."""
    return bracket_batch(
        derivative_field(F), derivative_field(G), BracketKind.GAMMA, counts
    )


def gamma(F: Functional, G: Functional, eta: Configuration) -> float:
    """Carre du champ density

    Gamma(F, G)(eta) = 1/2 sum_z lambda_z D+F D+G
                     + 1/2 sum_z k_z D+F(eta-delta_z) D+G(eta-delta_z).

    At F = G the second sum equals the drop-operator integral
    1/2 int (D-F)^2 d eta by the drop/add conjugation identity.
    """
    _check_same_space(F, eta)
    return float(gamma_batch(F, G, eta.array))


def dirichlet_integrand(F: Functional, G: Functional) -> Functional:
    """The configuration functional sum_z lambda_z D+F D+G whose expectation
    is the Dirichlet energy."""
    _check_same_space(F, G)
    space = F.space
    w = space.weights_array

    def fn(counts: np.ndarray) -> np.ndarray:
        return (w * add_diff_all(F, counts) * add_diff_all(G, counts)).sum(axis=-1)

    bound = None
    if F.bound is not None and G.bound is not None:
        bound = 4.0 * F.bound * G.bound * space.total_mass
    return Functional(space, fn, f"dirichlet[{F.name},{G.name}]", {}, bound=bound)


def dirichlet_energy(F: Functional, G: Functional, backend) -> float:
    """Dirichlet form value E(F, G) = E[ sum_z lambda_z D+F D+G ].

    ``backend`` is either expectation engine (exact or Monte Carlo); both
    expose ``expectation(functional).value``.
    """
    return float(backend.expectation(dirichlet_integrand(F, G)).value)


def divergence_product_defect(
    F: Functional, u: RandomField, eta: Configuration
) -> float:
    """Pathwise defect of the product formula delta(Fu) = F delta u - [DF, u]_-.

    Returns delta(Fu)(eta) - F(eta) delta u(eta) + [DF, u]_-(eta); identically
    zero on a finite ground set.
    """
    _check_same_space(F, u)
    _check_same_space(F, eta)
    c = eta.array
    lhs = divergence_batch(product_field(F, u), c)
    rhs = F.batch(c) * divergence_batch(u, c)
    correction = bracket_batch(derivative_field(F), u, BracketKind.MINUS, c)
    return float(lhs - rhs + correction)


class PairedValue:
    """Result of a paired LHS/RHS expectation sweep.

    ``defect`` is the expectation of the per-configuration difference, never
    the difference of two independently estimated expectations, so Monte
    Carlo standard errors gate the actual quantity under test.  Exact sweeps
    carry a truncation ``error_bound`` instead of a ``std_error``.
    """

    __slots__ = ("lhs", "rhs", "defect", "n", "error_bound", "std_error")

    def __init__(self, lhs, rhs, defect, n, error_bound=None, std_error=None):
        self.lhs = float(lhs)
        self.rhs = float(rhs)
        self.defect = float(defect)
        self.n = int(n)
        self.error_bound = None if error_bound is None else float(error_bound)
        self.std_error = None if std_error is None else float(std_error)

    def __repr__(self) -> str:
        extra = (
            f"error_bound={self.error_bound!r}"
            if self.error_bound is not None
            else f"std_error={self.std_error!r}"
        )
        return (
            f"PairedValue(lhs={self.lhs!r}, rhs={self.rhs!r},"
            f" defect={self.defect!r}, n={self.n}, {extra})"
        )
