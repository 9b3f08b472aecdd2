"""The identity suite: every operator identity as a scalar-defect check.

Each check reduces one identity to a single scalar defect with an explicit
gate, so tolerances always apply to one number:

* expectation-level identities (Mecke, duality, Skorokhod isometry, the
  integrated chain rule, the carre du champ representation, the bracket
  expectation identities) sweep a paired LHS/RHS kernel through a backend;
  the exact gate is an absolute tolerance plus the reported truncation bound,
  the Monte Carlo gate a z-multiplier times the paired standard error;
* pathwise identities (Heisenberg commutation, the divergence product
  formula) are checked pointwise on a seeded batch of configurations against
  a rounding-level gate;
* the chain-rule counterexample search inverts the pass convention: it must
  exhibit a defect strictly above its gate, confirming that the Dirichlet
  form is non-local (its generator is not a diffusion).

Reports serialize deterministically; the measured wall time stays on the
in-memory report only, so equal configurations yield byte-identical report
files.
"""
from __future__ import annotations

import time
import zlib
from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .functionals import (
    Functional,
    RandomField,
    add_diff_all,
    derivative_field,
    field_add_tensor,
    product_field,
    _eye,
)
from .ground import GroundSpace, SiteSet
from .montecarlo import sample_counts
from .operators import (
    BracketKind,
    bracket_batch,
    dirichlet_integrand,
    divergence_batch,
    gamma_batch,
)
from .registry import ScalarMap, compose, product_of, scalar_map

__all__ = [
    "Gates",
    "DEFAULT_GATES",
    "VerificationReport",
    "mecke_kernel",
    "mecke_check",
    "duality_check",
    "skorokhod_check",
    "commutation_check",
    "product_formula_check",
    "energy_derivation_check",
    "gamma_representation_check",
    "gamma_form_bound_check",
    "bracket_expectation_check",
    "non_diffusion_counterexample",
    "chain_rule_control_check",
]


@dataclass(frozen=True)
class Gates:
    """Tolerance policy for the whole suite.

    ``exact`` is the absolute gate on exact-backend defects (truncation error
    bounds are added on top per check); ``mc_z`` multiplies the paired
    standard error (4 sigma is roughly a 6e-5 false-alarm rate per check);
    ``pointwise`` gates pathwise identities; the counterexample must exceed
    ``counterexample_factor * exact``.
    """

    exact: float = 1e-10
    mc_z: float = 4.0
    pointwise: float = 1e-12
    counterexample_factor: float = 10.0


DEFAULT_GATES = Gates()


@dataclass(frozen=True)
class VerificationReport:
    """Outcome of one identity check.

    ``gate_kind`` is "upper" (pass iff ``|defect| <= gate``) for every
    ordinary check and "lower" (pass iff ``defect > gate``) for the
    counterexample search, whose whole point is a nonzero defect.
    ``wall_time`` is measured and therefore excluded from serialization;
    reports with equal inputs must be byte-identical.
    """

    case: str
    lhs: float
    rhs: float
    defect: float
    gate: float
    gate_kind: str
    passed: bool
    seed: int | None
    n: int
    tail_bound: float | None = None
    boundary_leak: float | None = None
    wall_time: float = 0.0
    error: str | None = None

    def to_dict(self) -> dict:
        out = {
            "case": self.case,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "defect": self.defect,
            "gate": self.gate,
            "gate_kind": self.gate_kind,
            "pass": self.passed,
            "seed": self.seed,
            "n": self.n,
        }
        if self.tail_bound is not None:
            out["tail_bound"] = self.tail_bound
        if self.boundary_leak is not None:
            out["boundary_leak"] = self.boundary_leak
        if self.error is not None:
            out["error"] = self.error
        return out


def _gate_for(pv, backend, gates: Gates) -> float:
    if pv.std_error is not None:
        return gates.mc_z * pv.std_error
    return gates.exact + (pv.error_bound or 0.0)


def _diagnostics(backend) -> dict:
    return {
        "seed": getattr(backend, "seed", None),
        "tail_bound": getattr(backend, "tail_bound", None),
    }


def _paired_report(case: str, kernel, backend, gates: Gates) -> VerificationReport:
    t0 = time.perf_counter()
    pv = backend.paired(kernel)
    gate = _gate_for(pv, backend, gates)
    return VerificationReport(
        case=case,
        lhs=pv.lhs,
        rhs=pv.rhs,
        defect=pv.defect,
        gate=gate,
        gate_kind="upper",
        passed=abs(pv.defect) <= gate,
        n=pv.n,
        wall_time=time.perf_counter() - t0,
        **_diagnostics(backend),
    )


def _pointwise_counts(space: GroundSpace, seed: int, case: str, points: int) -> np.ndarray:
    # per-case salt keeps different checks on decorrelated streams
    salt = zlib.crc32(case.encode("utf-8"))
    ss = np.random.SeedSequence([int(seed), salt])
    return sample_counts(space, np.random.default_rng(ss), points)


def _check_binding(backend, *objs) -> None:
    for obj in objs:
        if obj.space != backend.space:
            raise ShapeError(
                f"{obj.name!r} is bound to a different ground space than the backend"
            )


# ---------------------------------------------------------------------------
# expectation-level identities
# ---------------------------------------------------------------------------

def mecke_kernel(u: RandomField):
    """Paired kernel for E int u d eta = E int u(eta + delta_z, z) nu(dz)."""
    w = u.space.weights_array

    def kernel(counts: np.ndarray):
        lhs = (counts * u.values(counts)).sum(axis=-1)
        added = np.diagonal(field_add_tensor(u, counts), axis1=-2, axis2=-1)
        rhs = (w * added).sum(axis=-1)
        return lhs, rhs

    return kernel


def mecke_check(
    u: RandomField, backend, gates: Gates = DEFAULT_GATES, case: str = "mecke"
) -> VerificationReport:
    """Mecke equation, the identity characterising the Poisson law."""
    _check_binding(backend, u)
    return _paired_report(case, mecke_kernel(u), backend, gates)


def duality_check(
    F: Functional,
    u: RandomField,
    backend,
    gates: Gates = DEFAULT_GATES,
    case: str = "duality",
) -> VerificationReport:
    """Integration by parts: E[F delta u] = E int u D+F dnu."""
    _check_binding(backend, F, u)
    w = F.space.weights_array

    def kernel(counts: np.ndarray):
        lhs = F.batch(counts) * divergence_batch(u, counts)
        rhs = (w * u.values(counts) * add_diff_all(F, counts)).sum(axis=-1)
        return lhs, rhs

    return _paired_report(case, kernel, backend, gates)


def skorokhod_check(
    u: RandomField, backend, gates: Gates = DEFAULT_GATES, case: str = "skorokhod"
) -> VerificationReport:
    """Skorokhod isometry:

    E (delta u)^2 = E int u^2 dnu
                  + E int int D+_z u(., z') D+_{z'} u(., z) nu(dz) nu(dz').
    """
    _check_binding(backend, u)
    w = u.space.weights_array

    def kernel(counts: np.ndarray):
        lhs = divergence_batch(u, counts) ** 2
        vals = u.values(counts)
        diffs = field_add_tensor(u, counts) - vals[..., None, :]
        rhs = (w * vals * vals).sum(axis=-1) + np.einsum(
            "...ij,...ji,i,j->...", diffs, diffs, w, w
        )
        return lhs, rhs

    return _paired_report(case, kernel, backend, gates)


def energy_derivation_check(
    F: Functional,
    G: Functional,
    u: RandomField,
    backend,
    gates: Gates = DEFAULT_GATES,
    case: str = "energy_derivation",
) -> VerificationReport:
    """Integrated chain rule: the energy acts as a derivation,

    E [D(FG), u]_Gamma = E F [DG, u]_Gamma + E G [DF, u]_Gamma,

    for bounded F, G.  With u = DH this is the derivation property of the
    Dirichlet form itself.
    """
    _check_binding(backend, F, G, u)
    dF, dG = derivative_field(F), derivative_field(G)
    dFG = derivative_field(product_of(F, G))

    def kernel(counts: np.ndarray):
        lhs = bracket_batch(dFG, u, BracketKind.GAMMA, counts)
        rhs = F.batch(counts) * bracket_batch(
            dG, u, BracketKind.GAMMA, counts
        ) + G.batch(counts) * bracket_batch(dF, u, BracketKind.GAMMA, counts)
        return lhs, rhs

    return _paired_report(case, kernel, backend, gates)


def gamma_representation_check(
    F: Functional,
    Phi: Functional,
    backend,
    gates: Gates = DEFAULT_GATES,
    case: str = "gamma_representation",
) -> VerificationReport:
    """Carre du champ representation: for bounded F and test factor Phi,

    E(F, F Phi) - 1/2 E(F^2, Phi) = E[ Gamma(F) Phi ]

    with Gamma(F) = [DF, DF]_Gamma.
    """
    _check_binding(backend, F, Phi)
    lhs_fun = dirichlet_integrand(F, product_of(F, Phi))
    mid_fun = dirichlet_integrand(product_of(F, F), Phi)

    def kernel(counts: np.ndarray):
        lhs = lhs_fun.batch(counts)
        rhs = 0.5 * mid_fun.batch(counts) + gamma_batch(F, F, counts) * Phi.batch(
            counts
        )
        return lhs, rhs

    return _paired_report(case, kernel, backend, gates)


def gamma_form_bound_check(
    F: Functional,
    Phi: Functional,
    backend,
    gates: Gates = DEFAULT_GATES,
    case: str = "gamma_form_bound",
) -> VerificationReport:
    """Two-sided bound on the functional carre du champ:

    0 <= E(F, F Phi) - 1/2 E(F^2, Phi) <= sup|Phi| * E(F, F)

    for bounded F and bounded non-negative Phi; sup|Phi| is the certified
    registry bound.  The report's defect is the worst constraint violation
    (negative part on the left, excess on the right); its gate absorbs the
    error terms of both estimated quantities.
    """
    _check_binding(backend, F, Phi)
    if Phi.bound is None:
        raise ShapeError("gamma_form_bound needs a Phi with a certified bound")
    t0 = time.perf_counter()
    lhs_fun = dirichlet_integrand(F, product_of(F, Phi))
    mid_fun = dirichlet_integrand(product_of(F, F), Phi)

    def kernel(counts: np.ndarray):
        return lhs_fun.batch(counts), 0.5 * mid_fun.batch(counts)

    pv = backend.paired(kernel)
    energy = backend.expectation(dirichlet_integrand(F, F))
    value = pv.defect  # the linear form value Gamma_a(F)[Phi]
    upper = Phi.bound * energy.value
    if pv.std_error is not None:
        gate = gates.mc_z * (pv.std_error + Phi.bound * energy.std_error)
    else:
        gate = gates.exact + pv.error_bound + Phi.bound * energy.error_bound
    defect = max(-value, value - upper)
    return VerificationReport(
        case=case,
        lhs=value,
        rhs=upper,
        defect=defect,
        gate=gate,
        gate_kind="upper",
        passed=defect <= gate,
        n=pv.n,
        wall_time=time.perf_counter() - t0,
        **_diagnostics(backend),
    )


def bracket_expectation_check(
    u: RandomField,
    v: RandomField,
    backend,
    gates: Gates = DEFAULT_GATES,
    case: str = "bracket_expectation",
) -> VerificationReport:
    """Bracket expectation identities: E[u,v]_Gamma = E[u,v]_+ = E[u,v]_-.

    Both comparisons against the energy bracket are run as paired sweeps; the
    report keeps the worse of the two (relative to its own gate), with
    lhs = E[u,v]_+ and rhs = E[u,v]_-.
    """
    _check_binding(backend, u, v)
    t0 = time.perf_counter()

    def against(kind: BracketKind):
        def kernel(counts: np.ndarray):
            return (
                bracket_batch(u, v, BracketKind.GAMMA, counts),
                bracket_batch(u, v, kind, counts),
            )

        pv = backend.paired(kernel)
        return pv, _gate_for(pv, backend, gates)

    pv_plus, gate_plus = against(BracketKind.PLUS)
    pv_minus, gate_minus = against(BracketKind.MINUS)
    # keep the comparison with the larger gate excess
    if abs(pv_plus.defect) - gate_plus >= abs(pv_minus.defect) - gate_minus:
        defect, gate = pv_plus.defect, gate_plus
    else:
        defect, gate = pv_minus.defect, gate_minus
    return VerificationReport(
        case=case,
        lhs=pv_plus.rhs,
        rhs=pv_minus.rhs,
        defect=defect,
        gate=gate,
        gate_kind="upper",
        passed=abs(defect) <= gate,
        n=pv_plus.n,
        wall_time=time.perf_counter() - t0,
        **_diagnostics(backend),
    )


# ---------------------------------------------------------------------------
# pathwise identities, checked pointwise on seeded configurations
# ---------------------------------------------------------------------------

def _shifted_diff_field(u: RandomField, z_index: int) -> RandomField:
    """The field (eta, y) -> D+_z u(eta, y) for a fixed site index."""
    row = _eye(u.space.n)[z_index]

    def fn(counts: np.ndarray) -> np.ndarray:
        return np.asarray(u.fn(counts + row)) - np.asarray(u.fn(counts))

    return RandomField(u.space, fn, f"D+_{z_index + 1}({u.name})", {})


def commutation_check(
    u: RandomField,
    sites: SiteSet | None = None,
    *,
    seed: int = 0,
    points: int = 200,
    gates: Gates = DEFAULT_GATES,
    case: str = "commutation",
) -> VerificationReport:
    """Heisenberg commutation relation, pathwise:

    D+_z (delta u)(eta) = u(eta, z) + delta(D+_z u(., .))(eta)

    checked at every sampled configuration and every requested site.
    """
    space = u.space
    zs = sorted(sites.members) if sites is not None else list(space.sites)
    if sites is not None:
        sites.validate_for(space)
    t0 = time.perf_counter()
    counts = _pointwise_counts(space, seed, case, points)
    base_div = divergence_batch(u, counts)
    vals = u.values(counts)
    worst = 0.0
    lhs_mag = 0.0
    rhs_mag = 0.0
    eye = _eye(space.n)
    for z in zs:
        zi = z - 1
        lhs = divergence_batch(u, counts + eye[zi]) - base_div
        rhs = vals[:, zi] + divergence_batch(_shifted_diff_field(u, zi), counts)
        worst = max(worst, float(np.abs(lhs - rhs).max()))
        lhs_mag = max(lhs_mag, float(np.abs(lhs).max()))
        rhs_mag = max(rhs_mag, float(np.abs(rhs).max()))
    return VerificationReport(
        case=case,
        lhs=lhs_mag,
        rhs=rhs_mag,
        defect=worst,
        gate=gates.pointwise,
        gate_kind="upper",
        passed=worst <= gates.pointwise,
        seed=seed,
        n=points * len(zs),
        wall_time=time.perf_counter() - t0,
    )


def product_formula_check(
    F: Functional,
    u: RandomField,
    *,
    seed: int = 0,
    points: int = 200,
    gates: Gates = DEFAULT_GATES,
    case: str = "product_formula",
) -> VerificationReport:
    """Divergence product formula, pathwise:

    delta(F u) = F delta u - [DF, u]_-

    checked at every sampled configuration.
    """
    if F.space != u.space:
        raise ShapeError("F and u live on different ground spaces")
    t0 = time.perf_counter()
    counts = _pointwise_counts(F.space, seed, case, points)
    lhs = divergence_batch(product_field(F, u), counts)
    rhs = F.batch(counts) * divergence_batch(u, counts) - bracket_batch(
        derivative_field(F), u, BracketKind.MINUS, counts
    )
    worst = float(np.abs(lhs - rhs).max())
    return VerificationReport(
        case=case,
        lhs=float(np.abs(lhs).max()),
        rhs=float(np.abs(rhs).max()),
        defect=worst,
        gate=gates.pointwise,
        gate_kind="upper",
        passed=worst <= gates.pointwise,
        seed=seed,
        n=points,
        wall_time=time.perf_counter() - t0,
    )


# ---------------------------------------------------------------------------
# the non-diffusion counterexample
# ---------------------------------------------------------------------------

def _chain_rule_defects(phi: ScalarMap, F: Functional, G: Functional, backend):
    """Both failure modes of the diffusion chain rule for one (phi, F, G).

    Returns the paired integrated defect of

        E(phi(F), G) = E[ phi'(F) [DF, DG]_Gamma ]

    and the maximal pointwise defect of the carre du champ chain rule

        Gamma(phi(F), G) = phi'(F) Gamma(F, G)

    over the enumerated states.  The integrated identity is a theorem for
    affine and quadratic phi (it is the derivation lemma), so only the
    pointwise defect can witness non-diffusion there; genuinely nonlinear
    phi (cube, tanh) break both.
    """
    phiF = compose(phi, F)
    energy_fun = dirichlet_integrand(phiF, G)

    def kernel(counts: np.ndarray):
        lhs = energy_fun.batch(counts)
        rhs = phi.deriv(F.batch(counts)) * gamma_batch(F, G, counts)
        return lhs, rhs

    pv = backend.paired(kernel)
    states = backend.table.states
    pointwise = float(
        np.abs(
            gamma_batch(phiF, G, states)
            - phi.deriv(F.batch(states)) * gamma_batch(F, G, states)
        ).max()
    )
    return pv, pointwise


def non_diffusion_counterexample(
    backend,
    phis: list[str | ScalarMap],
    Fs: list[Functional],
    Gs: list[Functional],
    budget: int = 100,
    gates: Gates = DEFAULT_GATES,
    case: str = "non_diffusion",
) -> VerificationReport:
    """Search for a violation of the diffusion chain rule.

    Sweeps the (phi, F, G) grid on the exact backend, up to ``budget``
    combinations, and returns the largest defect found (integrated or
    pointwise).  The pass convention is inverted: the check passes only when
    the defect clears ``counterexample_factor * exact`` (the report's
    gate_kind says "lower"), because a local chain rule holding everywhere
    would mean the generator is a diffusion, which it is not.
    """
    t0 = time.perf_counter()
    maps = [scalar_map(p) if isinstance(p, str) else p for p in phis]
    best_integrated = 0.0
    best_pointwise = 0.0
    evaluated = 0
    for phi in maps:
        for F in Fs:
            for G in Gs:
                if evaluated >= budget:
                    break
                pv, pointwise = _chain_rule_defects(phi, F, G, backend)
                best_integrated = max(best_integrated, abs(pv.defect))
                best_pointwise = max(best_pointwise, pointwise)
                evaluated += 1
    gate = gates.counterexample_factor * gates.exact
    defect = max(best_integrated, best_pointwise)
    return VerificationReport(
        case=case,
        lhs=best_integrated,
        rhs=best_pointwise,
        defect=defect,
        gate=gate,
        gate_kind="lower",
        passed=defect > gate,
        n=backend.state_count,
        wall_time=time.perf_counter() - t0,
        **_diagnostics(backend),
    )


def chain_rule_control_check(
    F: Functional,
    G: Functional,
    backend,
    gates: Gates = DEFAULT_GATES,
    case: str = "non_diffusion_control",
) -> VerificationReport:
    """Control for the counterexample search: phi = identity is linear, so
    both chain-rule defects must vanish (up to truncation)."""
    _check_binding(backend, F, G)
    t0 = time.perf_counter()
    pv, pointwise = _chain_rule_defects(scalar_map("identity"), F, G, backend)
    gate = gates.exact + (pv.error_bound or 0.0)
    defect = max(abs(pv.defect), pointwise)
    return VerificationReport(
        case=case,
        lhs=abs(pv.defect),
        rhs=pointwise,
        defect=defect,
        gate=gate,
        gate_kind="upper",
        passed=defect <= gate,
        n=pv.n,
        wall_time=time.perf_counter() - t0,
        **_diagnostics(backend),
    )
