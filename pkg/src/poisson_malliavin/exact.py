"""Exact expectation oracle on a truncated product-Poisson state space.

Under the product-Poisson law each site's multiplicity is an independent
Poisson(lambda_i) variable, so capping site i at K_i and enumerating the box
prod_i {0..K_i} makes every expectation a finite weighted sum.  Caps are
chosen by exact Poisson tail partial sums per site, and a union bound over
sites yields a rigorous ``tail_bound`` on the probability mass the box
misses.  Every exact value is reported together with an expectation error
bound derived from that mass: rigorous when the integrand carries a certified
sup-norm bound, heuristic (sup over enumerated states) otherwise.

The Ornstein-Uhlenbeck generator is assembled as a sparse matrix in the state
indicator basis.  Transitions that would leave the box are dropped while the
diagonal keeps the full outflow rate, so the matrix is the honest restriction
of the generator with out-of-box jumps killed; the killed mass is surfaced as
``boundary_leak`` rather than silently folded back in.  Rows at interior
states (no site at its cap) agree with the untruncated operator exactly.

State enumeration order is lexicographic in the counts and fixed, so values
and reports are byte-reproducible run to run.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import (
    BoundaryLeakError,
    BudgetExceededError,
    NonFiniteValueError,
    SolverError,
)
from .functionals import Functional, RandomField, add_diff_all
from .ground import GroundSpace
from .operators import PairedValue

__all__ = [
    "TruncationPlan",
    "StateTable",
    "plan_truncation",
    "ExactExpectation",
    "exact_expectation",
    "exact_pairing",
    "GeneratorMatrix",
    "build_generator_matrix",
    "state_vector",
    "ou_pseudo_inverse",
    "ExactBackend",
    "DEFAULT_BUDGET",
]

DEFAULT_BUDGET = 4_000_000
_MAX_CAP = 100_000


def _poisson_pmf_vector(lam: float, cap: int) -> np.ndarray:
    """pmf(0..cap) of Poisson(lam), by the stable multiplicative recursion."""
    out = np.empty(cap + 1, dtype=np.float64)
    out[0] = math.exp(-lam)
    for k in range(1, cap + 1):
        out[k] = out[k - 1] * lam / k
    return out


def _poisson_tail(lam: float, cap: int) -> float:
    """P(Poisson(lam) > cap) by forward summation of the tail terms.

    Summing the tail directly (rather than 1 - cdf) keeps tiny tails accurate
    in absolute terms; terms decay superexponentially past the mode.
    """
    log_term = -lam + (cap + 1) * math.log(lam) - math.lgamma(cap + 2)
    term = math.exp(log_term)
    total = 0.0
    k = cap + 1
    while term > 0.0:
        total += term
        k += 1
        term *= lam / k
        if k > cap + 1 + 10 * (cap + lam + 10):
            break
    return total


@dataclass(frozen=True)
class TruncationPlan:
    """Per-site caps plus a rigorous bound on the omitted probability mass."""

    caps: tuple[int, ...]
    site_tails: tuple[float, ...]
    tail_bound: float

    @property
    def state_count(self) -> int:
        count = 1
        for k in self.caps:
            count *= k + 1
        return count


def plan_truncation(
    space: GroundSpace, tol: float, budget: int = DEFAULT_BUDGET
) -> TruncationPlan:
    """Find minimal caps with total tail mass at most ``tol``.

    Each site gets an equal share tol/n of the tolerance and the smallest cap
    (at least 1) whose exact Poisson tail fits the share; the union bound over
    sites then certifies ``tail_bound <= tol``.  Fails with the required state
    count when the box would exceed ``budget`` states.
    """
    if not tol > 0.0:
        raise ValueError(f"tolerance must be > 0, got {tol}")
    if budget < 1:
        raise ValueError(f"budget must be >= 1, got {budget}")
    share = tol / space.n
    caps = []
    tails = []
    for lam in space.weights:
        cap = 1
        tail = _poisson_tail(lam, cap)
        while tail > share:
            cap += 1
            tail = _poisson_tail(lam, cap)
            if cap > _MAX_CAP:
                raise ValueError(
                    f"no cap below {_MAX_CAP} reaches tail share {share:g}"
                    f" for weight {lam}"
                )
        caps.append(cap)
        tails.append(tail)
    plan = TruncationPlan(tuple(caps), tuple(tails), float(sum(tails)))
    if plan.state_count > budget:
        raise BudgetExceededError(plan.state_count, budget)
    return plan


@dataclass(frozen=True, eq=False)
class StateTable:
    """All configurations under the caps with their product-Poisson weights.

    ``states`` has shape (S, n) in fixed lexicographic order, ``probs`` the
    matching probabilities; their sum is at least 1 - tail_bound.
    """

    space: GroundSpace
    plan: TruncationPlan
    states: np.ndarray
    probs: np.ndarray

    @classmethod
    def build(cls, space: GroundSpace, plan: TruncationPlan) -> "StateTable":
        grids = np.meshgrid(
            *[np.arange(cap + 1, dtype=np.int64) for cap in plan.caps], indexing="ij"
        )
        states = np.stack(grids, axis=-1).reshape(-1, space.n)
        probs = np.ones(1, dtype=np.float64)
        for lam, cap in zip(space.weights, plan.caps):
            probs = np.multiply.outer(probs, _poisson_pmf_vector(lam, cap))
        probs = probs.reshape(-1)
        states.setflags(write=False)
        probs.setflags(write=False)
        return cls(space, plan, states, probs)

    @classmethod
    def from_tolerance(
        cls, space: GroundSpace, tol: float, budget: int = DEFAULT_BUDGET
    ) -> "StateTable":
        return cls.build(space, plan_truncation(space, tol, budget))

    @property
    def state_count(self) -> int:
        return self.states.shape[0]

    @cached_property
    def interior(self) -> np.ndarray:
        """Mask of states with every site strictly below its cap."""
        caps = np.asarray(self.plan.caps, dtype=np.int64)
        mask = (self.states < caps).all(axis=1)
        mask.setflags(write=False)
        return mask

    @property
    def total_prob(self) -> float:
        return float(self.probs.sum())


@dataclass(frozen=True)
class ExactExpectation:
    """An exactly enumerated expectation with its truncation error bound."""

    value: float
    error_bound: float


def _check_finite(values: np.ndarray, states: np.ndarray, what: str) -> None:
    finite = np.isfinite(values)
    if not finite.all():
        bad = int(np.argmin(finite.reshape(-1)))
        raise NonFiniteValueError(
            f"{what} produced a non-finite value at configuration"
            f" counts={states.reshape(-1, states.shape[-1])[bad].tolist()}"
        )


def exact_expectation(F: Functional, table: StateTable) -> ExactExpectation:
    """E[F] = sum_s probs(s) F(s) over the truncated table.

    The error bound is tail_bound times the certified sup-norm bound when F
    carries one, and tail_bound times the enumerated sup otherwise (heuristic
    for unbounded F, reported as such).
    """
    values = F.batch(table.states)
    _check_finite(values, table.states, F.name)
    value = float(table.probs @ values)
    sup = F.bound if F.bound is not None else float(np.abs(values).max())
    return ExactExpectation(value, table.plan.tail_bound * sup)


def exact_pairing(F: Functional, u: RandomField, table: StateTable) -> float:
    """E[ int u D+F dnu ] = sum_s probs(s) sum_z lambda_z u(s,z) D+_z F(s)."""
    w = table.space.weights_array
    vals = (w * u.values(table.states) * add_diff_all(F, table.states)).sum(axis=-1)
    _check_finite(vals, table.states, f"pairing[{F.name},{u.name}]")
    return float(table.probs @ vals)


# ---------------------------------------------------------------------------
# generator matrix and pseudo-inverse
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GeneratorMatrix:
    """Sparse OU generator on the truncated box, in the state indicator basis.

    ``boundary_leak`` is the probability-weighted rate of the dropped
    out-of-box transitions, sum over states of probs(s) times the total birth
    rate at capped sites; ``interior`` marks the rows equal to the exact
    untruncated operator.
    """

    matrix: sp.csr_matrix
    boundary_leak: float
    interior: np.ndarray


def build_generator_matrix(table: StateTable) -> GeneratorMatrix:
    """Assemble L f(s) = sum_z lambda_z (f(s+dz) - f(s)) - sum_z k_z (f(s) - f(s-dz)).

    Up-transitions at capped sites are dropped while the diagonal keeps the
    full outflow, so leaked mass is visible (rows at capped states sum to
    minus their killed rate) instead of being reflected back.
    """
    space = table.space
    caps = np.asarray(table.plan.caps, dtype=np.int64)
    counts = table.states
    S, n = counts.shape
    idx = np.arange(S, dtype=np.int64)
    # lexicographic mixed-radix strides: last site varies fastest
    strides = np.ones(n, dtype=np.int64)
    for z in range(n - 2, -1, -1):
        strides[z] = strides[z + 1] * (caps[z + 1] + 1)

    rows: list[np.ndarray] = []
    cols: list[np.ndarray] = []
    data: list[np.ndarray] = []
    diag = np.zeros(S, dtype=np.float64)
    for z in range(n):
        lam = space.weights[z]
        up_ok = counts[:, z] < caps[z]
        rows.append(idx[up_ok])
        cols.append(idx[up_ok] + strides[z])
        data.append(np.full(int(up_ok.sum()), lam))
        diag -= lam  # full outflow, including the killed part at capped states

        down_ok = counts[:, z] > 0
        rows.append(idx[down_ok])
        cols.append(idx[down_ok] - strides[z])
        data.append(counts[down_ok, z].astype(np.float64))
        diag -= counts[:, z]

    rows.append(idx)
    cols.append(idx)
    data.append(diag)
    matrix = sp.csr_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(S, S),
    )
    at_cap = counts == caps
    leak = float(table.probs @ (at_cap @ space.weights_array))
    return GeneratorMatrix(matrix, leak, table.interior)


def state_vector(F: Functional, table: StateTable) -> np.ndarray:
    """F evaluated at every enumerated state, aligned with the table order."""
    return F.batch(table.states)


def ou_pseudo_inverse(
    F: Functional,
    table: StateTable,
    tol: float = 1e-9,
    max_leak: float = 1e-6,
    generator: GeneratorMatrix | None = None,
) -> np.ndarray:
    """Solve L g = F - E[F] on the truncated box with sum_s probs(s) g(s) = 0.

    The truncated generator is nearly singular along the constants (its only
    loss of mass is the boundary killing), so solving it directly would
    amplify any stray kernel component of the right-hand side.  Instead the
    equation at the all-caps corner state, which is never interior, is
    replaced by the centering constraint; the resulting bordered system is
    well conditioned, pins the kernel exactly, and leaves every interior row
    solved to rounding level.  Centering uses the box-normalised mean (the
    difference from E[F] is below the tail bound), so a constant F maps to
    the zero vector exactly.

    Refuses to solve when the boundary leak exceeds ``max_leak``, and reports
    the achieved residual if the interior contract
    ``|L g - (F - E F)| <= tol`` is missed.
    """
    gen = generator if generator is not None else build_generator_matrix(table)
    if gen.boundary_leak > max_leak:
        raise BoundaryLeakError(
            f"boundary leak {gen.boundary_leak:.3e} exceeds {max_leak:.3e};"
            f" tighten the truncation before inverting the generator"
        )
    f = state_vector(F, table)
    centered = f - float(table.probs @ f) / table.total_prob
    S = table.state_count
    # Solve on the censored (conservative) variant: adding the killed rates
    # back to the diagonal makes the kernel exactly the constants, and its
    # interior rows still agree with the untruncated generator.  Grounding
    # the system at the most probable state (the chain returns there at an
    # O(1) rate, so the reduced matrix is well conditioned) fixes one
    # representative; centering the right-hand side with the box-normalised
    # mean makes the dropped equation hold automatically.
    caps = np.asarray(table.plan.caps, dtype=np.int64)
    killed_rate = (table.states == caps) @ table.space.weights_array
    conservative = (gen.matrix + sp.diags(killed_rate)).tocsr()
    mode = int(np.argmax(table.probs))
    keep = np.ones(S, dtype=bool)
    keep[mode] = False
    reduced = conservative[keep][:, keep].tocsc()
    y = np.zeros(S)
    y[keep] = spla.splu(reduced).solve(centered[keep])
    g = y - float(table.probs @ y) / table.total_prob
    residual = gen.matrix @ g - (f - exact_expectation(F, table).value)
    worst = float(np.abs(residual[gen.interior]).max())
    if not np.isfinite(worst) or worst > tol:
        raise SolverError(
            f"generator solve missed the interior residual contract:"
            f" {worst:.3e} > {tol:.3e}"
        )
    return g


# ---------------------------------------------------------------------------
# backend facade used by the identity suite
# ---------------------------------------------------------------------------

class ExactBackend:
    """Expectation engine backed by full enumeration of a truncated table."""

    label = "exact"

    def __init__(
        self,
        space: GroundSpace,
        tol: float = 1e-12,
        budget: int = DEFAULT_BUDGET,
    ):
        self.space = space
        self.plan = plan_truncation(space, tol, budget)
        self.table = StateTable.build(space, self.plan)

    @property
    def tail_bound(self) -> float:
        return self.plan.tail_bound

    @property
    def state_count(self) -> int:
        return self.table.state_count

    def expectation(self, F: Functional) -> ExactExpectation:
        return exact_expectation(F, self.table)

    def paired(self, kernel) -> PairedValue:
        """Sweep a paired LHS/RHS kernel over the table.

        ``kernel(states) -> (lhs_values, rhs_values)``; the defect expectation
        is accumulated from the per-state differences.
        """
        lhs, rhs = kernel(self.table.states)
        lhs = np.asarray(lhs, dtype=np.float64)
        rhs = np.asarray(rhs, dtype=np.float64)
        _check_finite(lhs, self.table.states, "paired lhs")
        _check_finite(rhs, self.table.states, "paired rhs")
        diff = lhs - rhs
        sup = float(np.abs(diff).max()) if diff.size else 0.0
        return PairedValue(
            lhs=self.table.probs @ lhs,
            rhs=self.table.probs @ rhs,
            defect=self.table.probs @ diff,
            n=self.table.state_count,
            error_bound=self.plan.tail_bound * sup,
        )
