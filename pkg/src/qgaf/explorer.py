"""Derivative-free search for non-homogeneous solutions of ``g = g(id - g) + g o g``.

Candidates are charted by the logarithmic Abel function of ``a * id``:
``g = alpha^-1(P(alpha) + alpha)`` with ``P = p + sum_k c_k cos + s_k sin``.
Zero coefficients give ``a**(p/omega) * id``, the homogeneous locus; the
search is pushed away from it by a penalty on ``max |c_k|``.

Outcomes are evidence about whether the homogeneous maps are the only
solutions, never a proof either way.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import abel
from . import funcalg as fa
from .funcalg import Grid

VERDICT_NONE = "no sub-tolerance non-homogeneous candidate found"
VERDICT_FOUND = "candidate found (flagged for closed-form audit)"
VERDICT_THRESHOLD = 1e-9
EVIDENCE_NOTE = ("numerical evidence only: a search that finds nothing does not prove that "
                 "homogeneous maps are the only solutions, and a flagged candidate is not a "
                 "counterexample until audited in closed form")
THRESHOLD_NOTE = "the verdict threshold is an engineering choice, not a derived bound"
A_RANGE = (0.05, 0.95)


def default_grid() -> Grid:
    """``log[1e-2, 1]``: since ``g(a x) = a g(x)`` on the family, this covers a full scale period."""
    return fa.log_grid(1e-2, 1.0, 128)


@dataclass(frozen=True)
class SearchConfig:
    objective: str = "eq13"
    grid: Grid = field(default_factory=default_grid)
    coeffs: int = 4
    amplitude: float = 0.15
    reflection: float = 1.0
    expansion: float = 2.0
    contraction: float = 0.5
    shrink: float = 0.5
    xtol: float = 1e-10
    max_iter: int = 2000
    restarts: int = 20
    seed: int = 42
    delta: float = 0.05
    penalty: float = 1e3
    threshold: float = VERDICT_THRESHOLD
    omega: float = 1.0
    p: float = 1.0

    def __post_init__(self):
        if self.objective not in ("eq13", "eq12"):
            raise ValueError(f"unknown objective {self.objective!r}")
        if self.coeffs < 1 or self.restarts < 1 or self.max_iter < 1:
            raise ValueError("coefficient count, restarts and iterations must be positive")
        if not 0 <= self.amplitude < self.p:
            raise ValueError("amplitude must lie in [0, p) so that P stays positive")
        for name in ("reflection", "expansion", "contraction", "shrink", "xtol", "omega", "p"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.delta < 0 or self.penalty < 0 or self.threshold <= 0:
            raise ValueError("delta, penalty and threshold must be non-negative")
        if self.grid.min <= 0:
            raise ValueError("the explorer grid must be positive")

    def to_dict(self) -> dict:
        out = {k: getattr(self, k) for k in self.__dataclass_fields__ if k != "grid"}
        out["grid"] = self.grid.description
        return out


@dataclass(frozen=True)
class FamilyPoint:
    a: float
    coeffs: tuple
    omega: float = 1.0
    p: float = 1.0

    def periodic(self) -> abel.PeriodicFunction:
        return abel.PeriodicFunction.harmonic(self.omega, self.p, self.coeffs)

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.coeffs))) if len(self.coeffs) else 0.0

    def feasible(self, amplitude: float) -> bool:
        """P positive and ``u + P(u)`` increasing, so g is an increasing map inside the cone."""
        if not A_RANGE[0] <= self.a <= A_RANGE[1]:
            return False
        c = np.asarray(self.coeffs, dtype=float)
        if not np.all(np.isfinite(c)) or np.sum(np.abs(c)) > amplitude:
            return False
        return self.periodic().lipschitz_bound() < 1.0

    def g(self) -> abel.AbelBranch:
        return abel.build_branch(abel.log_conjugacy(self.a, self.omega), self.periodic())

    def to_dict(self) -> dict:
        return {"a": self.a, "coeffs": list(self.coeffs), "omega": self.omega, "p": self.p}


def _family_eval(pt: FamilyPoint, P: abel.PeriodicFunction, x: np.ndarray) -> np.ndarray:
    # the closed-form log gauge with x0 = 1, written exactly as AbelBranch evaluates it
    rate = math.log(pt.a)
    u = pt.omega * np.log(x / 1.0) / rate
    return 1.0 * np.exp((P(u) + u) * rate / pt.omega)


def eq13_family_residual(pt: FamilyPoint, grid: Grid) -> float:
    P = pt.periodic()
    x = grid.points
    gx = _family_eval(pt, P, x)
    return float(np.max(np.abs(gx - _family_eval(pt, P, x - gx) - _family_eval(pt, P, gx))))


def eq12_family_residual(pt: FamilyPoint, grid: Grid) -> float:
    """``h1 + h2 - id`` with ``h1`` on the gauge of ``a * id`` and ``h2 = (1-a)**(q/omega) * id``.

    ``q`` is matched so that the zero-perturbation point is the homogeneous
    solution ``a**(p/omega) + (1-a)**(q/omega) = 1``.
    """
    P = pt.periodic()
    x = grid.points
    b = pt.a ** (pt.p / pt.omega)
    h2 = (1.0 - b) * x
    return float(np.max(np.abs(_family_eval(pt, P, x) + h2 - x)))


def objective_eval(pt: FamilyPoint, config: SearchConfig) -> float:
    """The selected residual sup; ``inf`` outside the feasible chart."""
    if not pt.feasible(config.amplitude):
        return math.inf
    with np.errstate(all="ignore"):
        if config.objective == "eq13":
            r = eq13_family_residual(pt, config.grid)
        else:
            r = eq12_family_residual(pt, config.grid)
    return r if math.isfinite(r) else math.inf


# ---------------------------------------------------------------------------
# Nelder-Mead
# ---------------------------------------------------------------------------


@dataclass
class _Run:
    best: np.ndarray
    value: float
    iterations: int
    converged: bool
    history: list


def nelder_mead(fun, x0: np.ndarray, steps: np.ndarray, config: SearchConfig) -> _Run:
    """Plain Nelder-Mead with configurable coefficients.

    Stops when the simplex diameter (max distance from the best vertex) falls
    below ``xtol`` or after ``max_iter`` iterations.  ``history`` holds the
    best value after every iteration.
    """
    rho, chi, gamma, sigma = config.reflection, config.expansion, config.contraction, config.shrink
    n = x0.size
    simplex = np.vstack([x0] + [x0 + steps[i] * np.eye(n)[i] for i in range(n)])
    values = np.array([fun(v) for v in simplex])
    history = []
    converged = False
    it = 0
    for it in range(1, config.max_iter + 1):
        order = np.argsort(values, kind="stable")
        simplex, values = simplex[order], values[order]
        centroid = simplex[:-1].mean(axis=0)
        worst = simplex[-1]
        xr = centroid + rho * (centroid - worst)
        fr = fun(xr)
        if fr < values[0]:
            xe = centroid + chi * (xr - centroid)
            fe = fun(xe)
            if fe < fr:
                simplex[-1], values[-1] = xe, fe
            else:
                simplex[-1], values[-1] = xr, fr
        elif fr < values[-2]:
            simplex[-1], values[-1] = xr, fr
        else:
            if fr < values[-1]:
                xc = centroid + gamma * (xr - centroid)
                fc = fun(xc)
                accept = fc <= fr
            else:
                xc = centroid + gamma * (worst - centroid)
                fc = fun(xc)
                accept = fc < values[-1]
            if accept:
                simplex[-1], values[-1] = xc, fc
            else:
                simplex[1:] = simplex[0] + sigma * (simplex[1:] - simplex[0])
                values[1:] = [fun(v) for v in simplex[1:]]
        b = int(np.argmin(values))
        history.append(float(values[b]))
        diameter = float(np.max(np.linalg.norm(simplex - simplex[b], axis=1)))
        if diameter <= config.xtol:
            converged = True
            break
    b = int(np.argmin(values))
    return _Run(simplex[b].copy(), float(values[b]), it, converged, history)


# ---------------------------------------------------------------------------
# search
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RestartResult:
    restart: int
    point: FamilyPoint
    residual: float
    iterations: int
    converged: bool
    projected: bool


@dataclass(frozen=True)
class SearchOutcome:
    best: FamilyPoint | None
    best_residual: float
    best_restart: int | None
    verdict: str
    trace: tuple
    restarts: tuple
    config: SearchConfig

    def trace_csv(self) -> str:
        from .specs import csv_text
        return csv_text(["restart", "iteration", "objective", "residual"], self.trace)

    def to_dict(self) -> dict:
        return {
            "objective": self.config.objective,
            "verdict": self.verdict,
            "best_residual": self.best_residual,
            "best_restart": self.best_restart,
            "best_point": None if self.best is None else self.best.to_dict(),
            "verdict_threshold": self.config.threshold,
            "threshold_note": THRESHOLD_NOTE,
            "evidence_note": EVIDENCE_NOTE,
            "restarts": [{"restart": r.restart, "residual": r.residual, "iterations": r.iterations,
                          "converged": r.converged, "projected_to_delta": r.projected,
                          "point": r.point.to_dict()} for r in self.restarts],
            "config": self.config.to_dict(),
        }


def _point(theta: np.ndarray, config: SearchConfig) -> FamilyPoint:
    return FamilyPoint(float(theta[0]), tuple(float(c) for c in theta[1:]), config.omega, config.p)


def _start(rng: np.random.Generator, config: SearchConfig) -> np.ndarray:
    a = rng.uniform(0.1, 0.9)
    v = rng.uniform(-1.0, 1.0, config.coeffs)
    total = np.sum(np.abs(v))
    scale = rng.uniform(0.5, 1.0) * config.amplitude / total if total > 0 else 0.0
    c = v * scale
    # keep the start inside the monotone chart
    lip = FamilyPoint(a, tuple(c), config.omega, config.p).periodic().lipschitz_bound()
    if lip >= 0.9:
        c = c * 0.9 / lip
    return np.concatenate([[a], c])


def search(config: SearchConfig | None = None) -> SearchOutcome:
    """Multi-restart penalised Nelder-Mead; deterministic given ``config.seed``."""
    config = config or SearchConfig()
    rng = np.random.default_rng(config.seed)
    starts = [_start(rng, config) for _ in range(config.restarts)]

    def penalised(theta):
        pt = _point(theta, config)
        r = objective_eval(pt, config)
        if not math.isfinite(r):
            return math.inf
        return r + config.penalty * max(0.0, config.delta - pt.sup_norm)

    trace = []
    results = []
    steps = np.concatenate([[0.05], np.full(config.coeffs, max(config.amplitude / (4 * config.coeffs), 1e-4))])
    for k, x0 in enumerate(starts):
        run = nelder_mead(penalised, x0, steps, config)
        for i, value in enumerate(run.history, start=1):
            trace.append((k, i, value))
        pt = _point(run.best, config)
        projected = False
        if pt.sup_norm < config.delta and pt.sup_norm > 0:
            pt = replace(pt, coeffs=tuple(c * config.delta / pt.sup_norm for c in pt.coeffs))
            projected = True
        elif pt.sup_norm < config.delta and config.delta > 0:
            coeffs = (config.delta,) + tuple(0.0 for _ in pt.coeffs[1:])
            pt = replace(pt, coeffs=coeffs)
            projected = True
        residual = objective_eval(pt, config)
        results.append(RestartResult(k, pt, residual, run.iterations, run.converged, projected))
    # residual column: unpenalised residual of the restart's reported candidate
    by_restart = {r.restart: r.residual for r in results}
    rows = tuple((k, i, value, by_restart[k]) for k, i, value in trace)
    finite = [r for r in results if math.isfinite(r.residual)]
    if finite:
        best = min(finite, key=lambda r: (r.residual, r.restart))
        nonhomogeneous = best.point.sup_norm > 0
        verdict = VERDICT_FOUND if (best.residual <= config.threshold and nonhomogeneous) else VERDICT_NONE
        return SearchOutcome(best.point, best.residual, best.restart, verdict, rows, tuple(results), config)
    return SearchOutcome(None, math.inf, None, VERDICT_NONE, rows, tuple(results), config)


def perturbation_scan(a: float, amplitudes, config: SearchConfig | None = None,
                      harmonic: int = 0) -> list[tuple[float, float]]:
    """Objective versus the amplitude of one harmonic coefficient at slope ``a``."""
    config = config or SearchConfig()
    out = []
    for amp in amplitudes:
        coeffs = [0.0] * max(config.coeffs, harmonic + 1)
        coeffs[harmonic] = float(amp)
        pt = FamilyPoint(float(a), tuple(coeffs), config.omega, config.p)
        if not pt.feasible(max(config.amplitude, abs(amp))) or abs(amp) >= config.p:
            raise ValueError(f"amplitude {amp!r} leaves the positive monotone chart")
        out.append((float(amp), objective_eval(pt, replace(config, amplitude=max(config.amplitude, abs(amp))))))
    return out


def scan_csv(rows) -> str:
    from .specs import csv_text
    return csv_text(["amplitude", "residual"], rows)
