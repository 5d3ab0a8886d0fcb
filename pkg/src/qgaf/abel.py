"""Abel conjugacies and the periodic-displacement representation of commuting maps.

For a continuous, strictly increasing ``g`` with ``0 < g < id`` on the open
positive half-line, an Abel function is a decreasing homeomorphism ``alpha``
with ``alpha(g(x)) = alpha(x) + omega``.  It is built here from a seed on the
fundamental domain ``(g(x0), x0]`` and extended along g-orbits, which makes the
Abel equation hold by construction.  Any ``h`` commuting with ``g`` is then
``alpha^-1(P(alpha(x)) + alpha(x))`` for an ``omega``-periodic ``P``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import optimize

from . import funcalg as fa
from . import solutions as so
from .errors import AbelError, ConeViolation, MonotonicityError, SpecError
from .funcalg import Grid, RealFunction, ResidualReport

DEFAULT_MAX_STEPS = 10_000
CERTIFY_SAMPLES = 4096
PERIOD_MATCH_RTOL = 1e-12


# ---------------------------------------------------------------------------
# periodic functions
# ---------------------------------------------------------------------------


class PeriodicFunction:
    """An ``period``-periodic map of the real line.

    Either ``constant + sum_k cos_k cos(2 pi k u / period) + sin_k sin(...)``
    or a one-period table of equally spaced samples, linearly interpolated
    with wrap-around.  Arguments are reduced modulo the period before
    evaluation, so ``P(u + period) == P(u)`` up to the reduction.
    """

    def __init__(self, period: float, constant: float = 0.0,
                 cos_coeffs: Sequence[float] = (), sin_coeffs: Sequence[float] = (),
                 samples: Sequence[float] | None = None):
        if not (math.isfinite(period) and period > 0):
            raise ValueError("period must be positive and finite")
        self.period = float(period)
        if samples is not None:
            if cos_coeffs or sin_coeffs or constant:
                raise ValueError("give either samples or trigonometric coefficients")
            samples = np.array(samples, dtype=float)
            if samples.ndim != 1 or samples.size < 2 or not np.all(np.isfinite(samples)):
                raise ValueError("samples must be a finite 1-d table of >= 2 values")
            samples.setflags(write=False)
        self.samples = samples
        self.constant = float(constant)
        self.cos_coeffs = np.array(cos_coeffs, dtype=float)
        self.sin_coeffs = np.array(sin_coeffs, dtype=float)

    @classmethod
    def const(cls, period: float, value: float) -> "PeriodicFunction":
        return cls(period, constant=value)

    @classmethod
    def harmonic(cls, period: float, constant: float, coeffs: Sequence[float]) -> "PeriodicFunction":
        """Interleaved coefficients ``(c1, s1, c2, s2, ...)``."""
        coeffs = np.asarray(coeffs, dtype=float)
        return cls(period, constant, coeffs[0::2], coeffs[1::2])

    @property
    def is_table(self) -> bool:
        return self.samples is not None

    @property
    def is_constant(self) -> bool:
        if self.is_table:
            return bool(np.all(self.samples == self.samples[0]))
        return not (np.any(self.cos_coeffs) or np.any(self.sin_coeffs))

    def reduce(self, u):
        u = np.asarray(u, dtype=float)
        t = u - self.period * np.floor(u / self.period)
        return np.where(t >= self.period, t - self.period, t)

    def table_nodes(self) -> np.ndarray:
        return self.period * np.arange(self.samples.size) / self.samples.size

    def __call__(self, u):
        scalar = np.ndim(u) == 0
        t = self.reduce(u)
        if self.is_table:
            nodes = np.append(self.table_nodes(), self.period)
            vals = np.append(self.samples, self.samples[0])
            out = np.interp(t, nodes, vals)
        else:
            out = np.full(t.shape, self.constant)
            theta = 2.0 * np.pi * t / self.period
            for k, a in enumerate(self.cos_coeffs, start=1):
                if a:
                    out = out + a * np.cos(k * theta)
            for k, b in enumerate(self.sin_coeffs, start=1):
                if b:
                    out = out + b * np.sin(k * theta)
        return float(out) if scalar else out

    def derivative(self, u):
        if self.is_table:
            raise TypeError("derivative is defined for trigonometric bodies only")
        t = self.reduce(u)
        w = 2.0 * np.pi / self.period
        out = np.zeros(t.shape)
        for k, a in enumerate(self.cos_coeffs, start=1):
            out = out - a * k * w * np.sin(k * w * t)
        for k, b in enumerate(self.sin_coeffs, start=1):
            out = out + b * k * w * np.cos(k * w * t)
        return out

    def lipschitz_bound(self) -> float:
        if self.is_table:
            vals = np.append(self.samples, self.samples[0])
            h = self.period / self.samples.size
            return float(np.max(np.abs(np.diff(vals))) / h)
        w = 2.0 * np.pi / self.period
        k_c = np.arange(1, self.cos_coeffs.size + 1)
        k_s = np.arange(1, self.sin_coeffs.size + 1)
        return float(w * (np.sum(k_c * np.abs(self.cos_coeffs)) + np.sum(k_s * np.abs(self.sin_coeffs))))

    def positivity_bound(self, samples: int = CERTIFY_SAMPLES) -> float:
        """A lower bound for ``min P``: sampled minimum less the Lipschitz padding."""
        if self.is_table:
            # piecewise linear: the minimum sits at a node
            return float(np.min(self.samples))
        u = self.period * np.arange(samples) / samples
        pad = self.lipschitz_bound() * 0.5 * self.period / samples
        return float(np.min(self(u)) - pad)

    def certified_positive(self, samples: int = CERTIFY_SAMPLES) -> bool:
        return self.positivity_bound(samples) > 0

    def to_json(self) -> dict:
        if self.is_table:
            return {"period": self.period, "samples": self.samples.tolist()}
        return {"period": self.period, "constant": self.constant,
                "cos_coeffs": self.cos_coeffs.tolist(), "sin_coeffs": self.sin_coeffs.tolist()}

    @classmethod
    def from_json(cls, spec: dict) -> "PeriodicFunction":
        if not isinstance(spec, dict) or "period" not in spec:
            raise SpecError("periodic spec must be an object with a period")
        keys = set(spec) - {"period"}
        try:
            if "samples" in spec:
                if keys != {"samples"}:
                    raise SpecError(f"unknown periodic keys {sorted(keys - {'samples'})}")
                return cls(spec["period"], samples=spec["samples"])
            unknown = keys - {"constant", "cos_coeffs", "sin_coeffs"}
            if unknown:
                raise SpecError(f"unknown periodic keys {sorted(unknown)}")
            return cls(spec["period"], spec.get("constant", 0.0),
                       spec.get("cos_coeffs", ()), spec.get("sin_coeffs", ()))
        except (TypeError, ValueError) as exc:
            if isinstance(exc, SpecError):
                raise
            raise SpecError(f"invalid periodic spec: {exc}") from exc


# ---------------------------------------------------------------------------
# the conjugacy
# ---------------------------------------------------------------------------


def _bisect_increasing(g: RealFunction, y: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Per-element bisection for ``g(x) = y`` with ``g(lo) <= y <= g(hi)``, to the last float."""
    lo, hi = lo.copy(), hi.copy()
    for _ in range(2200):
        mid = 0.5 * (lo + hi)
        active = (mid > lo) & (mid < hi)
        if not active.any():
            break
        idx = np.flatnonzero(active)
        gm = g.raw(mid[idx])
        right = gm < y[idx]
        lo[idx[right]] = mid[idx[right]]
        hi[idx[~right]] = mid[idx[~right]]
    return 0.5 * (lo + hi)


class AbelConjugacy:
    """A decreasing Abel function ``alpha`` of ``g`` with translation ``omega``.

    ``alpha`` equals the (rescaled) seed on the fundamental domain
    ``(g(x0), x0]``, so ``alpha(x0) = 0``, and is extended by
    ``alpha(x) = alpha(g^-n(x)) + n omega`` below and
    ``alpha(x) = alpha(g^n(x)) - n omega`` above.  ``alpha_inverse`` walks the
    same orbits backwards.  When ``g`` is exactly linear and the seed is the
    logarithmic profile, both are evaluated in closed form.
    """

    def __init__(self, g: RealFunction, omega: float = 1.0, x0: float = 1.0,
                 seed="linear", max_steps: int = DEFAULT_MAX_STEPS):
        if not (math.isfinite(omega) and omega > 0):
            raise ValueError("omega must be positive")
        if not (math.isfinite(x0) and x0 > 0):
            raise ValueError("x0 must be positive")
        self.g = g
        self.omega = float(omega)
        self.x0 = float(x0)
        self.max_steps = int(max_steps)
        self.lower = float(g(self.x0))
        if not 0 < self.lower < self.x0:
            raise ConeViolation(f"need 0 < g(x0) < x0, got g({x0!r}) = {self.lower!r}")
        self._log_rate = None
        if isinstance(seed, str):
            if seed == "linear":
                self.seed_profile = "linear"
                self._seed = fa.MonotoneInterpolant([self.lower, self.x0], [self.omega, 0.0],
                                                    "decreasing")
            elif seed == "log":
                self.seed_profile = "log"
                rate = math.log(self.lower / self.x0)
                self._seed = fa.Closed(lambda x, r=rate: self.omega * np.log(x / self.x0) / r,
                                       fa.POSITIVE, "log-seed",
                                       inverse=lambda s, r=rate: self.x0 * np.exp(s * r / self.omega))
                slope = g.linear_slope
                if slope is not None and 0 < slope < 1:
                    self._log_rate = math.log(slope)
            else:
                raise ValueError(f"unknown seed profile {seed!r}")
        else:
            self.seed_profile = "custom"
            self._seed = self._rescale(seed)
        self._check_seed()
        probe = self.g.inverse(np.array([self.lower]))
        self._closed_inverse = probe is not None and bool(np.all(np.isfinite(probe)))

    def _rescale(self, seed: RealFunction) -> RealFunction:
        top, bottom = float(seed(self.lower)), float(seed(self.x0))
        if not top > bottom:
            raise MonotonicityError("seed profile must decrease across the fundamental domain")
        if isinstance(seed, fa.MonotoneInterpolant) and seed.nodes[0] == self.lower \
                and seed.nodes[-1] == self.x0 and top == self.omega and bottom == 0.0:
            return seed
        span = top - bottom
        return fa.Closed(lambda x: self.omega * (seed(x) - bottom) / span,
                         seed.domain, f"rescaled({seed.label()})")

    def _check_seed(self):
        xs = np.linspace(self.lower, self.x0, 65)
        vals = self._seed(xs)
        if not np.all(np.diff(vals) < 0):
            raise MonotonicityError("seed is not strictly decreasing on the fundamental domain")

    @property
    def closed_form(self) -> bool:
        return self._log_rate is not None

    def seed_value(self, x):
        return self._seed(x)

    def seed_inverse(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        y = self._seed.inverse(r)
        if y is None:
            lo = np.full(r.shape, self.lower)
            hi = np.full(r.shape, self.x0)
            y = _bisect_decreasing(self._seed, r, lo, hi)
        return np.clip(y, self.lower, self.x0)

    def _g_inverse_raw(self, y: np.ndarray) -> np.ndarray:
        if self._closed_inverse:
            return np.minimum(self.g.inverse(y), self.x0) if y.size else y
        return np.minimum(self.g_inverse(y), self.x0)

    def g_inverse(self, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        x = self.g.inverse(y)
        if x is not None:
            x = np.asarray(x, dtype=float)
            if np.all(np.isfinite(x)) and np.all(x > 0):
                return x
        lo = y.copy()
        hi = 2.0 * y
        for _ in range(2000):
            short = self.g.raw(hi) < y
            if not short.any():
                break
            hi[short] = lo[short] + 2.0 * (hi[short] - lo[short])
        else:
            raise AbelError("could not bracket g^-1: g appears bounded above")
        return _bisect_increasing(self.g, y, lo, hi)

    # -- alpha ---------------------------------------------------------------

    def alpha(self, x):
        scalar = np.ndim(x) == 0
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if not (np.all(np.isfinite(x)) and np.all(x > 0)):
            raise fa.DomainError("alpha is defined on the open positive half-line")
        if self.closed_form:
            out = self.omega * np.log(x / self.x0) / self._log_rate
            return float(out[0]) if scalar else out
        with np.errstate(all="ignore"):
            y, n = self._walk_to_domain(x)
        out = self._seed(y) + n * self.omega
        return float(out[0]) if scalar else out

    def _walk_to_domain(self, x: np.ndarray):
        y = x.copy()
        n = np.zeros(x.shape)
        down = (self.g.raw, lambda v: (v <= self.x0) | ~np.isfinite(v), -1.0, "down", x.max)
        up = (self._g_inverse_raw, lambda v: (v > self.lower) | ~np.isfinite(v), 1.0, "up", x.min)
        for step, arrived, sign, way, extreme in (down, up):
            idx = np.flatnonzero(~arrived(y))
            vals = y[idx]
            steps = 0
            while idx.size:
                steps += 1
                if steps > self.max_steps:
                    raise AbelError(f"iteration cap {self.max_steps} exceeded walking {way} to the "
                                    f"fundamental domain (x = {extreme():g})")
                vals = step(vals)
                done = arrived(vals)
                if done.any():
                    y[idx[done]] = vals[done]
                    n[idx[done]] = sign * steps
                    idx, vals = idx[~done], vals[~done]
        if not (np.all(np.isfinite(y)) and np.all(y > 0)):
            raise AbelError("orbit left the open positive half-line")
        return y, n

    def alpha_inverse(self, u):
        scalar = np.ndim(u) == 0
        u = np.atleast_1d(np.asarray(u, dtype=float))
        if not np.all(np.isfinite(u)):
            raise fa.DomainError("alpha_inverse needs finite arguments")
        if self.closed_form:
            out = self.x0 * np.exp(u * self._log_rate / self.omega)
            if not np.all((out > 0) & np.isfinite(out)):
                raise AbelError("alpha_inverse left the representable range")
            return float(out[0]) if scalar else out
        k = np.floor(u / self.omega)
        r = u - k * self.omega
        wrap = r >= self.omega
        r[wrap] -= self.omega
        k[wrap] += 1
        neg = r < 0
        r[neg] += self.omega
        k[neg] -= 1
        if np.any(np.abs(k) > self.max_steps):
            raise AbelError(f"alpha_inverse needs more than {self.max_steps} orbit steps")
        x = self.seed_inverse(r)
        with np.errstate(all="ignore"):
            self._walk_orbits(x, k)
        if not np.all((x > 0) & np.isfinite(x)):
            raise AbelError("alpha_inverse left the representable range")
        return float(x[0]) if scalar else x

    def _walk_orbits(self, x: np.ndarray, k: np.ndarray) -> None:
        ginv = (lambda v: self.g.inverse(v)) if self._closed_inverse else self.g_inverse
        for sign, step in ((1, self.g.raw), (-1, ginv)):
            idx = np.flatnonzero(sign * k > 0)
            target = (sign * k[idx]).astype(np.int64)
            vals = x[idx]
            steps = 0
            while idx.size:
                steps += 1
                vals = step(vals)
                done = target == steps
                if done.any():
                    x[idx[done]] = vals[done]
                    keep = ~done
                    idx, vals, target = idx[keep], vals[keep], target[keep]

    def abel_residual(self, grid: Grid) -> ResidualReport:
        """Sup of ``|alpha(g(x)) - alpha(x) - omega|`` over the grid."""
        def defect(x):
            x = np.asarray(x, dtype=float)
            return self.alpha(self.g(x)) - self.alpha(x) - self.omega
        return fa.pointwise_residual(defect, grid, "abel")

    def to_json(self) -> dict:
        if isinstance(self._seed, fa.MonotoneInterpolant):
            nodes, values = self._seed.nodes.tolist(), self._seed.values.tolist()
        else:
            nodes = np.linspace(self.lower, self.x0, 65)
            values = self._seed(nodes)
            nodes, values = nodes.tolist(), values.tolist()
        out = {"x0": self.x0, "omega": self.omega, "seed_nodes": nodes, "seed_values": values,
               "g_spec": self.g.to_spec()}
        if self.seed_profile == "log":
            out["seed_profile"] = "log"
        if self.max_steps != DEFAULT_MAX_STEPS:
            out["max_steps"] = self.max_steps
        return out

    @classmethod
    def from_json(cls, spec: dict) -> "AbelConjugacy":
        from .specs import function_from_spec
        required = {"x0", "omega", "seed_nodes", "seed_values", "g_spec"}
        if not isinstance(spec, dict):
            raise SpecError("conjugacy spec must be an object")
        missing = required - set(spec)
        unknown = set(spec) - required - {"seed_profile", "max_steps"}
        if missing or unknown:
            raise SpecError(f"conjugacy spec: missing {sorted(missing)}, unknown {sorted(unknown)}")
        g = function_from_spec(spec["g_spec"])
        if spec.get("seed_profile") == "log":
            seed = "log"
        else:
            seed = fa.MonotoneInterpolant(spec["seed_nodes"], spec["seed_values"], "decreasing")
        try:
            return cls(g, float(spec["omega"]), float(spec["x0"]), seed,
                       int(spec.get("max_steps", DEFAULT_MAX_STEPS)))
        except (TypeError, ValueError) as exc:
            raise SpecError(f"invalid conjugacy: {exc}") from exc


def _bisect_decreasing(f: RealFunction, y, lo, hi):
    neg = fa.Closed(lambda x: -f(x), f.domain)
    return _bisect_increasing(neg, -np.asarray(y, dtype=float), lo, hi)


def validate_map(g: RealFunction, lo: float = fa.WORKING_MIN, hi: float = fa.WORKING_MAX,
                 points: int = 257) -> None:
    """Check ``g`` is strictly increasing with ``0 < g < id`` on a log sample."""
    a = max(lo, g.domain.lo)
    b = min(hi, g.domain.hi)
    xs = np.geomspace(a if a > 0 else lo, b, points)
    gx = g(xs)
    if not np.all(np.diff(gx) > 0):
        i = int(np.argmax(np.diff(gx) <= 0))
        raise MonotonicityError(f"g is not strictly increasing near x={xs[i]:.6g}")
    if np.any(gx >= xs):
        i = int(np.argmax(gx >= xs))
        raise ConeViolation(f"g(x) >= x at x={xs[i]:.6g}")
    if np.any(gx <= 0):
        i = int(np.argmax(gx <= 0))
        raise ConeViolation(f"g(x) <= 0 at x={xs[i]:.6g}")


def solve_abel(g: RealFunction, omega: float = 1.0, x0: float = 1.0, seed="linear",
               max_steps: int = DEFAULT_MAX_STEPS, check: bool = True) -> AbelConjugacy:
    """Build an Abel conjugacy for ``g`` on the open positive half-line.

    ``seed`` is ``"linear"`` (linear in x across the fundamental domain),
    ``"log"`` (linear in log x), or any strictly decreasing function, which is
    rescaled to run from ``omega`` down to 0.
    """
    if check:
        validate_map(g)
    return AbelConjugacy(g, omega, x0, seed, max_steps)


def log_conjugacy(slope: float, omega: float = 1.0, x0: float = 1.0) -> AbelConjugacy:
    """The logarithmic gauge ``omega ln(x/x0) / ln(slope)`` of ``slope * id``."""
    if not 0 < slope < 1:
        raise ValueError("slope must lie in (0, 1)")
    return AbelConjugacy(fa.Linear(slope, fa.POSITIVE), omega, x0, "log")


def balanced_base_point(g: RealFunction, lo: float, hi: float,
                        max_steps: int = DEFAULT_MAX_STEPS) -> float:
    """A base point splitting the g-orbit from ``hi`` down past ``lo`` in half."""
    orbit = [float(hi)]
    z = np.array([float(hi)])
    while orbit[-1] >= lo:
        if len(orbit) > 2 * max_steps:
            raise AbelError(f"[{lo:g}, {hi:g}] spans more than {2 * max_steps} orbit steps")
        z = g(z)
        orbit.append(float(z[0]))
    return orbit[(len(orbit) - 1) // 2]


# ---------------------------------------------------------------------------
# branches built from a conjugacy
# ---------------------------------------------------------------------------


class AbelBranch(RealFunction):
    """``x -> alpha^-1(P(alpha(x)) + alpha(x))`` on the open positive half-line."""

    kind = "abel_branch"

    def __init__(self, conjugacy: AbelConjugacy, periodic: PeriodicFunction):
        self.conjugacy = conjugacy
        self.periodic = periodic
        self.domain = fa.POSITIVE

    def _eval(self, x):
        c = self.conjugacy
        u = c.alpha(np.asarray(x, dtype=float))
        return c.alpha_inverse(self.periodic(u) + u)

    def label(self):
        return f"abel-branch(omega={self.conjugacy.omega:g})"


def reconstruct_g(c: AbelConjugacy) -> RealFunction:
    """``x -> alpha^-1(alpha(x) + omega)``."""
    return AbelBranch(c, PeriodicFunction.const(c.omega, c.omega))


def build_branch(c: AbelConjugacy, P: PeriodicFunction) -> AbelBranch:
    """The map commuting with ``c.g`` whose periodic displacement is ``P``."""
    if abs(P.period - c.omega) > PERIOD_MATCH_RTOL * c.omega:
        raise ValueError(f"period {P.period!r} does not match omega {c.omega!r}")
    return AbelBranch(c, P)


def periodic_displacement(h: RealFunction, c: AbelConjugacy, u) -> np.ndarray:
    """``alpha(h(alpha^-1(u))) - u``."""
    u = np.asarray(u, dtype=float)
    return c.alpha(h(c.alpha_inverse(u))) - u


def extract_periodic(h: RealFunction, c: AbelConjugacy, samples: int = 256,
                     shifts: Sequence[int] = (-2, -1, 1, 2)) -> tuple[PeriodicFunction, ResidualReport]:
    """Recover ``P`` over one period, with the periodicity defect as a report.

    The report is the sup over one period of ``|P(u + k omega) - P(u)|`` for
    the given shifts; it vanishes exactly when ``h`` commutes with ``g``.
    """
    us = c.omega * np.arange(samples) / samples
    base = periodic_displacement(h, c, us)
    worst = np.zeros(samples)
    for k in shifts:
        diff = periodic_displacement(h, c, us + k * c.omega) - base
        worst = np.where(np.abs(diff) > np.abs(worst), diff, worst)
    report = fa.residual_report(us, worst, f"periodicity over one period ({samples} samples)")
    return PeriodicFunction(c.omega, samples=base), report


@dataclass(frozen=True)
class FixedZeroReport:
    fixed_points: list
    alpha_of_fixed: list
    zeros: list
    mismatches: list
    identically_fixed: bool = False

    @property
    def consistent(self) -> bool:
        return not self.mismatches

    def to_dict(self) -> dict:
        return {"fixed_points": self.fixed_points, "alpha_of_fixed": self.alpha_of_fixed,
                "zeros_of_P": self.zeros, "mismatches": self.mismatches,
                "identically_fixed": self.identically_fixed, "consistent": self.consistent}


def _roots(fn, xs: np.ndarray, tol: float, periodic: float | None = None) -> list[float]:
    """Zeros of a sampled function: sign changes plus touching minima of |fn|."""
    vals = fn(xs)
    found = []
    if periodic is not None:
        xs = np.append(xs, xs[0] + periodic)
        vals = np.append(vals, vals[0])
    scale = lambda x: tol * max(1.0, abs(x))
    f1 = lambda x: float(fn(np.array([x]))[0])
    for i in range(xs.size - 1):
        a, b, fa_, fb_ = xs[i], xs[i + 1], vals[i], vals[i + 1]
        if abs(fa_) <= scale(a):
            found.append(float(a))
        elif fa_ * fb_ < 0 and abs(fb_) > scale(b):
            found.append(float(optimize.brentq(f1, a, b, xtol=1e-15 * max(1.0, abs(a)), rtol=1e-15)))
    mags = np.abs(vals)
    for i in range(1, xs.size - 1):
        if mags[i] <= mags[i - 1] and mags[i] <= mags[i + 1] and mags[i] > scale(xs[i]):
            if vals[i - 1] * vals[i + 1] <= 0 or vals[i] * vals[i - 1] <= 0:
                continue
            res = optimize.minimize_scalar(lambda x: abs(f1(x)), bounds=(xs[i - 1], xs[i + 1]),
                                           method="bounded",
                                           options={"xatol": 1e-14 * max(1.0, abs(xs[i]))})
            if abs(res.fun) <= scale(res.x):
                found.append(float(res.x))
    found.sort()
    merged = []
    for x in found:
        if not merged or abs(x - merged[-1]) > 1e-7 * max(1.0, abs(x)):
            merged.append(x)
    if periodic is not None:
        merged = [x - periodic if x >= periodic else x for x in merged]
        merged = sorted(set(merged))
    return merged


def fixed_zero_correspondence(h: RealFunction, c: AbelConjugacy, grid: Grid,
                              tol: float = 1e-9, period_samples: int = 1024,
                              loc_tol: float = 1e-6) -> FixedZeroReport:
    """Locate fixed points of ``h`` and zeros of its periodic displacement, and pair them.

    A fixed point x pairs with the zero ``alpha(x)`` reduced modulo omega; every
    zero whose lifts land inside the grid range must pair with a fixed point.
    """
    xs = grid.points
    diff = lambda x: h(x) - x
    us = c.omega * np.arange(period_samples) / period_samples
    if np.all(np.abs(diff(xs)) <= tol * np.maximum(1.0, xs)):
        return FixedZeroReport(xs.tolist(), c.alpha(xs).tolist(), us.tolist(), [], True)
    fixed = _roots(diff, xs, tol)
    P = lambda u: periodic_displacement(h, c, u)
    zeros = _roots(P, us, tol, periodic=c.omega)
    alpha_fixed = [float(c.alpha(x)) for x in fixed]
    mismatches = []

    def circular(a, b):
        d = abs((a - b) % c.omega)
        return min(d, c.omega - d)

    for x, a in zip(fixed, alpha_fixed):
        if not any(circular(a, z) <= loc_tol * c.omega for z in zeros):
            mismatches.append({"fixed_point": x, "alpha": a, "reason": "no matching zero of P"})
    if zeros:
        a_hi, a_lo = c.alpha(grid.min), c.alpha(grid.max)
        for z in zeros:
            k_min = math.ceil((a_lo - z) / c.omega)
            k_max = math.floor((a_hi - z) / c.omega)
            for k in range(k_min, k_max + 1):
                x_exp = float(c.alpha_inverse(z + k * c.omega))
                if not any(abs(x - x_exp) <= loc_tol * max(1.0, x_exp) for x in fixed):
                    mismatches.append({"zero": z, "lift": k, "expected_fixed_point": x_exp,
                                       "reason": "no matching fixed point"})
    return FixedZeroReport(fixed, alpha_fixed, zeros, mismatches)


# ---------------------------------------------------------------------------
# positive branches of solutions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PositiveBranchResult:
    candidate: so.CandidateSolution
    conjugacy: AbelConjugacy
    first: ResidualReport
    second: ResidualReport = field()

    @property
    def report(self) -> ResidualReport:
        return self.second


def check_continuous_increasing(branch: RealFunction, grid: Grid | None = None) -> None:
    grid = grid or fa.default_negative_grid()
    xs = grid.points
    vals = branch(xs)
    if not np.all(np.diff(vals) > 0):
        i = int(np.argmax(np.diff(vals) <= 0))
        raise MonotonicityError(f"generator is not strictly increasing near x={xs[i]:.6g}")
    eps = 1e-12
    if abs(float(branch(-eps))) > eps:
        raise MonotonicityError("generator does not tend to 0 at 0-")


def theorem2_construct(psi, P2: PeriodicFunction, grid: Grid | None = None,
                       x0: float | None = None, seed="log",
                       max_steps: int = DEFAULT_MAX_STEPS) -> PositiveBranchResult:
    """Positive branch from the Abel conjugacy of ``id - (-psi(-x))`` and a periodic P2.

    The first commutator identity holds by construction; the second, returned
    as ``report``, decides whether the candidate actually solves the equation.
    ``x0=None`` picks the base point that balances orbit lengths over ``grid``.
    """
    gen = psi if isinstance(psi, so.Generator) else so.make_generator(psi)
    if not gen.strict:
        raise ConeViolation("generator must lie strictly inside the cone", gen.validated)
    check_continuous_increasing(gen.branch)
    if not P2.certified_positive():
        raise ConeViolation(f"P2 is not certified positive (lower bound {P2.positivity_bound():.3g})")
    grid = grid or fa.default_positive_grid()
    reflected = fa.conjugate_neg(gen.branch)
    g2 = fa.displacement(reflected)
    validate_map(g2, grid.min, grid.max)
    if x0 is None:
        x0 = 1.0 if g2.linear_slope is not None else balanced_base_point(g2, grid.min, grid.max, max_steps)
    c2 = AbelConjugacy(g2, P2.period, x0, seed, max_steps)
    fpos = build_branch(c2, P2)
    f = fa.Piecewise(gen.branch, fpos, 0.0)
    cone = fa.cone_check(f, "real", fa.symmetric_grid(grid), strict=True)
    first = fa.commutator_residual(g2, fpos, grid)
    second = fa.commutator_residual(reflected, fa.displacement(fpos), grid)
    cand = so.CandidateSolution(f, "theorem2", gen, cone)
    return PositiveBranchResult(cand, c2, first, second)


def eq12_residual(cA: AbelConjugacy, P: PeriodicFunction, cB: AbelConjugacy,
                  Q: PeriodicFunction, grid: Grid) -> ResidualReport:
    """Sup of ``|alpha^-1(P(alpha) + alpha) + beta^-1(Q(beta) + beta) - x|``."""
    h1 = build_branch(cA, P)
    h2 = build_branch(cB, Q)
    return fa.pointwise_residual(lambda x: h1(x) + h2(x) - x, grid, "eq12")
