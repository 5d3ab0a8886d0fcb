"""Cross-equation residual checks.

* the conditional Cauchy equation ``F(x) = F(r1(x)) + F(r2(x))`` for a
  decomposition ``r1 + r2 = id``;
* the additive decomposition of the reflected generator along a solution;
* a homogeneity detector for generators;
* ``g(x) = g(x - g(x)) + g(g(x))`` and its equivalence with ``[g, id - g] = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import abel
from . import funcalg as fa
from . import solutions as so
from .errors import ConeViolation, DomainError
from .funcalg import EXTENDED, Grid, RealFunction, ResidualReport

DEFAULT_TOL = 1e-8
PAIR_TOL = 1e-12
LIMIT_DECADES = (1e-4, 1e-5, 1e-6)
LIMIT_RTOL = 1e-3
X_SMALL = 1e-6


class PairError(ValueError):
    """A decomposition pair fails ``r1 + r2 = id`` or ``0 < r_i < id``."""

    def __init__(self, message: str, x: float | None = None):
        super().__init__(message)
        self.x = x


@dataclass(frozen=True)
class DecompositionPair:
    r1: RealFunction
    r2: RealFunction

    @classmethod
    def complement(cls, r1: RealFunction) -> "DecompositionPair":
        """``(r1, id - r1)``."""
        return cls(r1, fa.displacement(r1))

    def validate(self, grid: Grid, tol: float = PAIR_TOL) -> None:
        xs = grid.points
        if np.any(xs <= 0):
            raise PairError("decomposition pairs live on the open positive half-line")
        x = xs.astype(EXTENDED)
        a, b = self.r1(x), self.r2(x)
        defect = np.abs(a + b - x) > tol * np.maximum(1.0, x)
        if defect.any():
            i = int(np.argmax(defect))
            raise PairError(f"r1 + r2 != id at x={xs[i]!r} (defect {float(a[i] + b[i] - x[i]):.3g})",
                            float(xs[i]))
        for name, r in (("r1", a), ("r2", b)):
            bad = (r <= 0) | (r >= x)
            if bad.any():
                i = int(np.argmax(bad))
                raise PairError(f"0 < {name} < id fails at x={xs[i]!r}", float(xs[i]))


def sablik_residual(F: RealFunction, pair: DecompositionPair, grid: Grid,
                    validate: bool = True) -> ResidualReport:
    """Sup of ``|F(x) - F(r1(x)) - F(r2(x))|``; the pair is validated first."""
    if validate:
        pair.validate(grid)
    return fa.pointwise_residual(lambda x: F(x) - F(pair.r1(x)) - F(pair.r2(x)), grid, "sablik")


@dataclass(frozen=True)
class LimitEvidence:
    points: tuple
    ratios: tuple
    rtol: float

    @property
    def consistent(self) -> bool:
        r = np.asarray(self.ratios)
        scale = np.maximum(np.abs(r[1:]), 1e-300)
        return bool(np.all(np.abs(np.diff(r)) <= self.rtol * scale))

    def to_dict(self) -> dict:
        return {"points": list(self.points), "ratios": list(self.ratios), "rtol": self.rtol,
                "consistent": self.consistent,
                "note": "finite-sample evidence for a finite limit of F(x)/x at 0+, not a proof"}


def limit_evidence(F: RealFunction, points=LIMIT_DECADES, rtol: float = LIMIT_RTOL) -> LimitEvidence:
    """``F(x)/x`` at a few decades near 0; successive ratios must agree to ``rtol``."""
    xs = np.asarray(points, dtype=EXTENDED)
    ratios = tuple(float(v) for v in F(xs) / xs)
    return LimitEvidence(tuple(float(p) for p in points), ratios, rtol)


def theorem1_decomposition(psi, f0, grid: Grid | None = None) -> ResidualReport:
    """Sup of ``|u(x) - u(x - f(x)) - u(f(x))|`` with ``u = -psi(-x)`` and ``f`` the positive branch.

    Both commutator identities of a solution imply this additivity of ``u``
    along the decomposition ``x = f(x) + (x - f(x))``.
    """
    grid = grid or fa.default_positive_grid()
    branch = psi.branch if isinstance(psi, so.Generator) else psi
    u = fa.conjugate_neg(fa.restrict(branch, "neg"))
    f = f0.f if isinstance(f0, so.CandidateSolution) else f0
    pos = fa.restrict(f, "pos")
    fx = pos(grid.points)
    escape = (fx <= 0) | (fx >= grid.points)
    if escape.any():
        i = int(np.argmax(escape))
        raise DomainError(f"f(x) or x - f(x) leaves the positive half-line at x={grid.points[i]!r}",
                          x=float(grid.points[i]))

    def defect(x):
        fx = pos(x)
        return u(x) - u(x - fx) - u(fx)
    return fa.pointwise_residual(defect, grid, "decomposition")


def infer_homogeneity(psi, grid: Grid | None = None,
                      x_small: float = X_SMALL) -> tuple[float, ResidualReport]:
    """Slope estimate ``u(x_small)/x_small`` of ``u = -psi(-x)`` and the sup defect from linearity."""
    grid = grid or fa.default_positive_grid()
    branch = psi.branch if isinstance(psi, so.Generator) else psi
    u = fa.conjugate_neg(fa.restrict(branch, "neg"))
    if not x_small > 0:
        raise DomainError(f"x_small must be positive, got {x_small!r}", x=x_small)
    xs = EXTENDED(x_small)
    a = u(np.array([xs]))[0] / xs
    report = fa.pointwise_residual(lambda x: u(x) - a * x, grid, "homogeneity")
    return float(a), report


def require_cone_interior(g: RealFunction, grid: Grid) -> fa.ConeReport:
    """``0 < g(x) < x`` on the grid, or :class:`ConeViolation`."""
    try:
        report = fa.cone_check(g, "pos", grid, strict=True)
    except DomainError as exc:
        raise ConeViolation(f"g is not defined on the grid: {exc}") from exc
    if not report.strict:
        x, which, value = report.first_violation
        raise ConeViolation(f"g leaves the open cone at x={x!r}: {which} fails ({value:.3g})", report)
    return report


def eq13_pointwise(g: RealFunction, x):
    gx = g(x)
    return gx - g(x - gx) - g(gx)


def eq13_residual(g: RealFunction, grid: Grid | None = None) -> ResidualReport:
    """Sup of ``|g(x) - g(x - g(x)) - g(g(x))|``; needs ``0 < g < id`` on the grid."""
    grid = grid or fa.default_positive_grid()
    require_cone_interior(g, grid)
    return fa.pointwise_residual(lambda x: eq13_pointwise(g, x), grid, "eq13")


@dataclass(frozen=True)
class EquivalenceReport:
    commute: ResidualReport
    eq13: ResidualReport
    tol: float
    grid: str
    witness: ResidualReport | None = None

    @property
    def common_abel_plausible(self) -> bool:
        return self.commute.sup <= self.tol and self.eq13.sup <= self.tol

    @property
    def agree(self) -> bool:
        """Both residuals on the same side of the tolerance."""
        return (self.commute.sup <= self.tol) == (self.eq13.sup <= self.tol)

    def to_dict(self) -> dict:
        out = {"grid": self.grid, "tol": self.tol,
               "commute_residual": self.commute.sup, "commute_argmax": self.commute.argmax,
               "eq13_residual": self.eq13.sup, "eq13_argmax": self.eq13.argmax,
               "verdicts_agree": self.agree,
               "common_abel_plausible": self.common_abel_plausible}
        if self.witness is not None:
            out["witness_periodicity_residual"] = self.witness.sup
            out["witness_certified"] = self.witness.sup <= self.tol
        return out


def proposition5_check(g: RealFunction, grid: Grid | None = None, tol: float = DEFAULT_TOL,
                       witness: bool = False) -> EquivalenceReport:
    """Commutation of ``g`` with ``id - g`` against the single-map equation.

    With ``witness`` set, an Abel function of ``g`` is built and the
    periodicity defect of ``id - g`` over it is reported: when it vanishes the
    conjugacy of ``g`` also linearises ``id - g``, which is the common Abel
    function, realised.
    """
    grid = grid or fa.default_positive_grid()
    require_cone_interior(g, grid)
    dual = fa.displacement(g)
    require_cone_interior(dual, grid)
    commute = fa.commutator_residual(g, dual, grid)
    eq13 = fa.pointwise_residual(lambda x: eq13_pointwise(g, x), grid, "eq13")
    wit = None
    if witness:
        x0 = abel.balanced_base_point(g, grid.min, grid.max)
        c = abel.solve_abel(g, 1.0, x0, "linear", check=False)
        wit = abel.extract_periodic(dual, c)[1]
    return EquivalenceReport(commute, eq13, tol, grid.description, wit)
