"""Solutions of ``f(f(-x) + x) = f(-f(x)) + f(x)`` with a prescribed negative branch.

A solution is assembled from a *generator* (its restriction to the
non-positive half-line) and checked through residuals: the equation itself on
a symmetric grid, and the equivalent pair of commutator identities on the
positive half-line.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import funcalg as fa
from .errors import ConeViolation
from .funcalg import Grid, RealFunction, ResidualReport, ConeReport

#: "Solves" thresholds on the sup residual.
CLOSED_FORM_TOL = 1e-9
INTERPOLANT_TOL = 1e-6

PROVENANCES = ("corollary1", "theorem2", "homogeneous", "user")


@dataclass(frozen=True)
class Generator:
    branch: RealFunction
    validated: ConeReport

    @property
    def strict(self) -> bool:
        return self.validated.strict


@dataclass(frozen=True)
class CandidateSolution:
    f: RealFunction
    provenance: str
    generator: Generator
    cone: ConeReport
    notes: tuple = field(default=())

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")

    @property
    def neg(self) -> RealFunction:
        return fa.restrict(self.f, "neg")

    @property
    def pos(self) -> RealFunction:
        return fa.restrict(self.f, "pos")


def make_generator(branch: RealFunction, grid: Grid | None = None,
                   require: bool = True) -> Generator:
    """Validate a negative branch against the bow-tie cone on ``grid``.

    Raises :class:`ConeViolation` when ``require`` is set and the branch is
    not a cone member; strictness is recorded, not enforced.
    """
    grid = grid or fa.default_negative_grid()
    branch = fa.restrict(branch, "neg")
    report = fa.cone_check(branch, "neg", grid, strict=True)
    if require and not report.member:
        raise ConeViolation(f"generator {branch.label()} leaves the cone: {report.first_violation}",
                            report)
    return Generator(branch, report)


def as_candidate(f: RealFunction, provenance: str = "user",
                 grid: Grid | None = None) -> CandidateSolution:
    """Wrap an arbitrary full-line function as a candidate; membership is recorded."""
    grid = grid or fa.default_symmetric_grid()
    gen = make_generator(fa.restrict(f, "neg"), require=False)
    cone = fa.cone_check(f, "real", grid, strict=True)
    notes = () if cone.member else (f"cone violation at {cone.first_violation}",)
    return CandidateSolution(f, provenance, gen, cone, notes)


def _as_function(f) -> RealFunction:
    return f.f if isinstance(f, CandidateSolution) else f


def eq1_pointwise(f: RealFunction, x: np.ndarray) -> np.ndarray:
    """Signed defect ``f(f(-x) + x) - f(-f(x)) - f(x)``."""
    fx = f(x)
    return f(f(-x) + x) - f(-fx) - fx


def eq1_residual(f, grid: Grid | None = None) -> ResidualReport:
    f = _as_function(f)
    grid = grid or fa.default_symmetric_grid()
    return fa.pointwise_residual(lambda x: eq1_pointwise(f, x), grid, "eq1")


def lemma_pairs(f) -> tuple[tuple[RealFunction, RealFunction], tuple[RealFunction, RealFunction]]:
    """The two commuting pairs whose commutators encode the equation on the positive side."""
    f = _as_function(f)
    neg = fa.restrict(f, "neg")
    pos = fa.restrict(f, "pos")
    reflected = fa.conjugate_neg(neg)
    return (fa.displacement(reflected), pos), (reflected, fa.displacement(pos))


def lemma_residuals(f, grid: Grid | None = None) -> tuple[ResidualReport, ResidualReport]:
    grid = grid or fa.default_positive_grid()
    (g1, h1), (g2, h2) = lemma_pairs(f)
    return fa.commutator_residual(g1, h1, grid), fa.commutator_residual(g2, h2, grid)


def corollary1_extend(phi, grid: Grid | None = None) -> CandidateSolution:
    """Extend a generator by ``x - (-phi(-x))`` on the positive half-line.

    The result solves the equation for every strict cone member; non-strict
    generators are accepted with a warning and their cone verdict recorded.
    """
    gen = phi if isinstance(phi, Generator) else make_generator(phi, grid)
    notes = ()
    if not gen.strict:
        msg = f"generator is not strictly inside the cone: {gen.validated.first_violation}"
        warnings.warn(msg, stacklevel=2)
        notes = (msg,)
    neg = gen.branch
    pos = fa.displacement(fa.conjugate_neg(neg))
    f = fa.Piecewise(neg, pos, 0.0)
    cone = fa.cone_check(f, "real", fa.symmetric_grid(fa.log_grid()), strict=True)
    return CandidateSolution(f, "corollary1", gen, cone, notes)


def homogeneous_solution(a: float, b: float) -> CandidateSolution:
    """The two-slope solution ``a x`` on the negative, ``b x`` on the positive half-line."""
    if not (0 < a < 1 and 0 < b < 1):
        raise ConeViolation(f"slopes must lie in (0, 1), got a={a!r}, b={b!r}")
    f = fa.TwoSlope(a, b)
    gen = make_generator(fa.Linear(a, fa.NONPOS))
    return CandidateSolution(f, "homogeneous", gen, ConeReport(True, True))


def displacement_dual(f: CandidateSolution) -> CandidateSolution:
    """``id - f``, a solution generated by ``id - psi`` whenever f solves for psi."""
    g = fa.displacement(f.f)
    gen = make_generator(fa.displacement(f.generator.branch), require=False)
    cone = fa.cone_check(g, "real", fa.default_symmetric_grid(), strict=True)
    return CandidateSolution(g, f.provenance, gen, cone, f.notes)


def rotate_dual(f: CandidateSolution) -> CandidateSolution:
    """``x -> -f(-x)``, the half-turn of the graph about the origin."""
    g = fa.conjugate_neg(f.f)
    gen = make_generator(fa.restrict(g, "neg"), require=False)
    cone = fa.cone_check(g, "real", fa.default_symmetric_grid(), strict=True)
    return CandidateSolution(g, f.provenance, gen, cone, f.notes)
