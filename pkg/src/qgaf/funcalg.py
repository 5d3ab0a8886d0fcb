"""Real functions on intervals and their algebra.

Every map in the toolkit is a :class:`RealFunction`: an object with a domain
and a vectorised evaluation.  Concrete bodies are closed forms (linear maps,
two-slope maps, the rational generator ``x/(c - x)``), monotone piecewise
linear interpolants, piecewise pairs split at 0, and the derived bodies
produced by :func:`compose`, :func:`conjugate_neg`, :func:`displacement` and
:func:`restrict`.

The derived constructors normalise a few algebraic identities structurally
(``conjugate_neg`` and ``displacement`` are involutions, and they commute),
so that the identities hold bit-for-bit in floating point and not merely to
rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import (
    BracketError,
    DomainError,
    EvaluationError,
    MonotonicityError,
    NonFiniteError,
)

INF = math.inf

#: Residuals are evaluated in extended precision where the platform has it.
EXTENDED = np.longdouble


def _as_array(x):
    arr = np.asarray(x)
    if arr.dtype != EXTENDED:
        arr = arr.astype(float)
    return arr, arr.ndim == 0


#: Default inverse tolerances (absolute bracket width).
CLOSED_FORM_INVERSE_TOL = 1e-12
INTERPOLANT_INVERSE_TOL = 1e-9


# ---------------------------------------------------------------------------
# intervals and grids
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Interval:
    lo: float = -INF
    hi: float = INF
    lo_open: bool = False
    hi_open: bool = False

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    def contains(self, x):
        x = _as_array(x)[0]
        lo_ok = x > self.lo if (self.lo_open or self.lo == -INF) else x >= self.lo
        hi_ok = x < self.hi if (self.hi_open or self.hi == INF) else x <= self.hi
        return lo_ok & hi_ok

    def reflect(self) -> "Interval":
        return Interval(-self.hi, -self.lo, self.hi_open, self.lo_open)

    def intersect(self, other: "Interval") -> "Interval":
        if self.lo > other.lo or (self.lo == other.lo and self.lo_open):
            lo, lo_open = self.lo, self.lo_open
        else:
            lo, lo_open = other.lo, other.lo_open
        if self.hi < other.hi or (self.hi == other.hi and self.hi_open):
            hi, hi_open = self.hi, self.hi_open
        else:
            hi, hi_open = other.hi, other.hi_open
        return Interval(lo, hi, lo_open, hi_open)

    def __str__(self):
        left = "(" if (self.lo_open or self.lo == -INF) else "["
        right = ")" if (self.hi_open or self.hi == INF) else "]"
        return f"{left}{self.lo:g}, {self.hi:g}{right}"


REALS = Interval()
NONPOS = Interval(-INF, 0.0)
NONNEG = Interval(0.0, INF)
POSITIVE = Interval(0.0, INF, lo_open=True)
NEGATIVE = Interval(-INF, 0.0, hi_open=True)

SIDES = {"neg": NONPOS, "pos": NONNEG, "real": REALS}

#: Default working domain on the positive half-line, mirrored for negatives.
WORKING_MIN = 1e-6
WORKING_MAX = 1e6
WORKING_POINTS = 2048


@dataclass(frozen=True)
class Grid:
    """A finite, strictly increasing set of sample abscissae."""

    points: np.ndarray
    description: str = "explicit"

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).ravel()
        if pts.size == 0:
            raise ValueError("grid must be nonempty")
        if not np.all(np.isfinite(pts)):
            raise ValueError("grid points must be finite")
        if pts.size > 1 and not np.all(np.diff(pts) > 0):
            raise ValueError("grid points must be strictly increasing")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return self.points.size

    @property
    def min(self) -> float:
        return float(self.points[0])

    @property
    def max(self) -> float:
        return float(self.points[-1])

    def within(self, interval: Interval) -> bool:
        return bool(np.all(interval.contains(self.points)))

    def reflect(self) -> "Grid":
        return Grid(-self.points[::-1], f"reflected({self.description})")

    def positive_part(self) -> "Grid":
        return Grid(self.points[self.points > 0], f"positive({self.description})")


def log_grid(lo: float = WORKING_MIN, hi: float = WORKING_MAX,
             points: int = WORKING_POINTS) -> Grid:
    if not 0 < lo < hi:
        raise ValueError("log grid needs 0 < min < max")
    pts = np.geomspace(lo, hi, int(points))
    return Grid(pts, f"log[{lo:g},{hi:g};{int(points)}]")


def linear_grid(lo: float, hi: float, points: int) -> Grid:
    pts = np.linspace(lo, hi, int(points))
    return Grid(pts, f"linear[{lo:g},{hi:g};{int(points)}]")


def symmetric_grid(positive: Grid | None = None) -> Grid:
    """Union of a positive grid, its negation, and 0."""
    if positive is None:
        positive = log_grid()
    pos = positive.points[positive.points > 0]
    pts = np.concatenate([-pos[::-1], [0.0], pos])
    return Grid(pts, f"symmetric({positive.description})")


def default_positive_grid() -> Grid:
    return log_grid(WORKING_MIN, WORKING_MAX, WORKING_POINTS)


def default_negative_grid() -> Grid:
    pos = default_positive_grid()
    return Grid(np.concatenate([-pos.points[::-1], [0.0]]), f"nonpositive({pos.description})")


def default_symmetric_grid() -> Grid:
    return symmetric_grid(default_positive_grid())


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ResidualReport:
    """Sup-norm residual over a grid, with the signed per-point trace.

    ``trace`` holds the signed pointwise defect; ``sup`` is the maximum of its
    absolute value and ``argmax`` the smallest abscissa attaining it.
    """

    sup: float
    argmax: float
    xs: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    description: str = ""

    @property
    def trace(self):
        return list(zip(self.xs.tolist(), self.values.tolist()))

    def passes(self, tol: float) -> bool:
        return self.sup <= tol

    def to_dict(self, tol: float | None = None) -> dict:
        out = {"sup": self.sup, "argmax": self.argmax, "points": int(self.xs.size),
               "grid": self.description}
        if tol is not None:
            out["tol"] = tol
            out["passes"] = self.passes(tol)
        return out


def residual_report(xs, values, description: str = "") -> ResidualReport:
    xs = np.asarray(xs, dtype=float)
    values = np.asarray(values, dtype=float)
    bad = ~np.isfinite(values)
    if bad.any():
        x_bad = float(xs[np.argmax(bad)])
        raise EvaluationError(f"non-finite residual at x={x_bad!r}", x=x_bad)
    mags = np.abs(values)
    # np.argmax returns the first maximiser, i.e. the smallest x on a sorted grid
    i = int(np.argmax(mags))
    return ResidualReport(float(mags[i]), float(xs[i]), xs, values, description)


@dataclass(frozen=True)
class ConeReport:
    member: bool
    strict: bool
    first_violation: tuple | None = None

    def to_dict(self) -> dict:
        out = {"member": self.member, "strict": self.strict}
        if self.first_violation is not None:
            x, which, value = self.first_violation
            out["first_violation"] = {"x": x, "inequality": which, "value": value}
        return out


# ---------------------------------------------------------------------------
# functions
# ---------------------------------------------------------------------------


class RealFunction:
    """An evaluable real map on an interval.

    Subclasses implement ``_eval`` on arrays already checked against the
    domain.  ``__call__`` accepts scalars or arrays and returns the same shape.
    """

    domain: Interval = REALS
    kind: str = "function"

    def __call__(self, x):
        arr, scalar = _as_array(x)
        inside = self.domain.contains(arr)
        if not np.all(inside):
            bad = float(arr[~inside].flat[0])
            raise DomainError(f"{self.label()}: x={bad!r} outside domain {self.domain}", x=bad)
        with np.errstate(all="ignore"):
            y = self._eval(arr)
        y = np.asarray(y)
        if y.dtype != EXTENDED:
            y = y.astype(float)
        if not np.all(np.isfinite(y)):
            bad = float(arr[~np.isfinite(y)].flat[0])
            raise NonFiniteError(f"{self.label()}: non-finite value at x={bad!r}", x=bad)
        return float(y) if scalar else y

    def _eval(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def raw(self, x: np.ndarray) -> np.ndarray:
        """Unchecked evaluation for hot loops that validate their own output."""
        return self._eval(x)

    def label(self) -> str:
        return self.kind

    def to_spec(self) -> dict:
        raise TypeError(f"{self.label()} has no JSON representation")

    # Closed-form slope when the body is exactly linear on its domain.
    @property
    def linear_slope(self) -> float | None:
        return None

    def inverse(self, y) -> np.ndarray | None:
        """Closed-form inverse, or None when only bisection is available."""
        return None

    def solve_displacement(self, t) -> np.ndarray | None:
        """Closed-form solution of ``x - self(x) = t``, or None."""
        return None

    def __repr__(self):
        return f"<{type(self).__name__} {self.label()} on {self.domain}>"


class Linear(RealFunction):
    kind = "linear"

    def __init__(self, slope: float, domain: Interval = REALS):
        self.slope = float(slope)
        self.domain = domain

    def _eval(self, x):
        return self.slope * x

    @property
    def linear_slope(self):
        return self.slope

    def label(self):
        return f"{self.slope:g}*id"

    def inverse(self, y):
        if self.slope == 0:
            return None
        return np.asarray(y, dtype=float) / self.slope

    def solve_displacement(self, t):
        if self.slope == 1:
            return None
        return np.asarray(t, dtype=float) / (1.0 - self.slope)

    def to_spec(self):
        spec = {"kind": "linear", "slope": self.slope}
        if self.domain != REALS:
            spec["domain"] = _interval_spec(self.domain)
        return spec


class TwoSlope(RealFunction):
    """``x -> a*x`` for ``x <= 0`` and ``x -> b*x`` for ``x >= 0``."""

    kind = "piecewise_linear_slopes"

    def __init__(self, slope_neg: float, slope_pos: float):
        self.slope_neg = float(slope_neg)
        self.slope_pos = float(slope_pos)
        self.domain = REALS

    def _eval(self, x):
        return np.where(x < 0, self.slope_neg * x, self.slope_pos * x)

    @property
    def linear_slope(self):
        return self.slope_neg if self.slope_neg == self.slope_pos else None

    def label(self):
        return f"two-slope({self.slope_neg:g},{self.slope_pos:g})"

    def inverse(self, y):
        if self.slope_neg <= 0 or self.slope_pos <= 0:
            return None
        y = np.asarray(y, dtype=float)
        return np.where(y < 0, y / self.slope_neg, y / self.slope_pos)

    def to_spec(self):
        return {"kind": "piecewise_linear_slopes", "slope_neg": self.slope_neg,
                "slope_pos": self.slope_pos}


class RationalNeg(RealFunction):
    """``x -> x / (c - x)`` on the non-positive half-line (``c = 2`` by default)."""

    kind = "rational_neg"

    def __init__(self, c: float = 2.0):
        if not c >= 1:
            raise ValueError("rational_neg needs c >= 1 to stay in the cone")
        self.c = float(c)
        self.domain = NONPOS

    def _eval(self, x):
        return x / (self.c - x)

    def label(self):
        return f"x/({self.c:g}-x)"

    def inverse(self, y):
        y = np.asarray(y, dtype=float)
        # range is (-1, 0]
        return self.c * y / (1.0 + y)

    def solve_displacement(self, t):
        # x - x/(c - x) = t  <=>  x^2 - (c - 1 + t) x + c t = 0, root with x <= 0
        t = np.asarray(t, dtype=float)
        b = self.c - 1.0 + t
        arg = b * b - 4.0 * self.c * t
        disc = np.sqrt(np.maximum(arg, 0.0))
        denom = b + disc
        # pick the cancellation-free form of the root; written to raise no warnings
        stable = np.where(b >= 0, 2.0 * self.c * t / np.where(denom > 0, denom, 1.0), 0.5 * (b - disc))
        return np.where(arg < 0, np.nan, np.where(t == 0, 0.0, stable))

    def to_spec(self):
        spec = {"kind": "rational_neg"}
        if self.c != 2.0:
            spec["c"] = self.c
        return spec


EXTENSIONS = ("error", "clamp", "asymptotic-linear-in-log")


class MonotoneInterpolant(RealFunction):
    """Strictly monotone piecewise-linear interpolant.

    Outside the node range the ``extension`` policy applies: ``error`` rejects
    the argument, ``clamp`` holds the end values, and
    ``asymptotic-linear-in-log`` continues the end segments as power laws
    (straight lines in ``log|x|``/``log|y|``), which needs single-signed,
    nonzero nodes and values.
    """

    kind = "interpolant"

    def __init__(self, nodes: Sequence[float], values: Sequence[float],
                 direction: str | None = None, extension: str = "error"):
        nodes = np.array(nodes, dtype=float)
        values = np.array(values, dtype=float)
        if nodes.ndim != 1 or nodes.shape != values.shape or nodes.size < 2:
            raise ValueError("interpolant needs matching 1-d nodes and values (>= 2)")
        if not (np.all(np.isfinite(nodes)) and np.all(np.isfinite(values))):
            raise ValueError("interpolant nodes and values must be finite")
        if not np.all(np.diff(nodes) > 0):
            raise ValueError("interpolant nodes must be strictly increasing")
        dv = np.diff(values)
        if direction is None:
            direction = "increasing" if dv[0] > 0 else "decreasing"
        if direction == "increasing":
            ok = np.all(dv > 0)
        elif direction == "decreasing":
            ok = np.all(dv < 0)
        else:
            raise ValueError(f"unknown direction {direction!r}")
        if not ok:
            raise MonotonicityError(f"values are not strictly {direction}")
        if extension not in EXTENSIONS:
            raise ValueError(f"unknown extension policy {extension!r}")
        if extension == "asymptotic-linear-in-log":
            if not (np.all(nodes > 0) or np.all(nodes < 0)):
                raise ValueError("log extension needs single-signed nonzero nodes")
            if not (np.all(values > 0) or np.all(values < 0)):
                raise ValueError("log extension needs single-signed nonzero values")
        nodes.setflags(write=False)
        values.setflags(write=False)
        self.nodes = nodes
        self.values = values
        self.direction = direction
        self.extension = extension
        if extension == "error":
            self.domain = Interval(nodes[0], nodes[-1])
        elif extension == "clamp":
            self.domain = REALS
        else:
            self.domain = POSITIVE if nodes[0] > 0 else NEGATIVE
        if extension == "asymptotic-linear-in-log":
            lx, ly = np.log(np.abs(nodes)), np.log(np.abs(values))
            self._left_slope = (ly[1] - ly[0]) / (lx[1] - lx[0])
            self._right_slope = (ly[-1] - ly[-2]) / (lx[-1] - lx[-2])

    def label(self):
        return f"interpolant[{self.nodes.size} nodes,{self.direction}]"

    def raw(self, x):
        # np.interp clamps silently; keep the domain check when extension is "error"
        return self(x) if self.extension == "error" else self._eval(np.asarray(x))

    def _eval(self, x):
        shape = np.shape(x)
        x = np.atleast_1d(x).astype(float)
        y = np.interp(x, self.nodes, self.values)
        if self.extension == "asymptotic-linear-in-log":
            left = x < self.nodes[0]
            right = x > self.nodes[-1]
            if left.any() or right.any():
                sign = np.sign(self.values[0])
                lx = np.log(np.abs(x))
                if left.any():
                    y[left] = sign * np.exp(np.log(abs(self.values[0]))
                                            + self._left_slope * (lx[left] - math.log(abs(self.nodes[0]))))
                if right.any():
                    y[right] = sign * np.exp(np.log(abs(self.values[-1]))
                                             + self._right_slope * (lx[right] - math.log(abs(self.nodes[-1]))))
        return y.reshape(shape)

    def inverse(self, y):
        y = np.asarray(y, dtype=float)
        if self.direction == "increasing":
            vals, nds = self.values, self.nodes
        else:
            vals, nds = self.values[::-1], self.nodes[::-1]
        if self.extension != "asymptotic-linear-in-log":
            if self.extension == "error" and (np.any(y < vals[0]) or np.any(y > vals[-1])):
                return None
            return np.interp(y, vals, nds)
        x = np.interp(y, vals, nds)
        lo = y < vals[0]
        hi = y > vals[-1]
        for mask, node, value in ((lo, nds[0], vals[0]), (hi, nds[-1], vals[-1])):
            if mask.any():
                outer_left = node == self.nodes[0]
                slope = self._left_slope if outer_left else self._right_slope
                if slope == 0:
                    return None
                ly = np.log(np.abs(y[mask]))
                x[mask] = np.sign(node) * np.exp(math.log(abs(node))
                                                 + (ly - math.log(abs(value))) / slope)
        return x

    def to_spec(self):
        return {"kind": "interpolant", "nodes": self.nodes.tolist(),
                "values": self.values.tolist(), "direction": self.direction,
                "extension": self.extension}


class Piecewise(RealFunction):
    """``neg`` on x < 0, ``pos`` on x > 0, ``at_zero`` at 0."""

    kind = "piecewise"

    def __init__(self, neg: RealFunction, pos: RealFunction, at_zero: float = 0.0):
        if not (neg.domain.contains(-1.0) and pos.domain.contains(1.0)):
            raise ValueError("piecewise needs neg on the negative and pos on the positive half-line")
        both = neg.domain.contains(0.0) and pos.domain.contains(0.0)
        if both:
            a, b = neg(0.0), pos(0.0)
            if abs(a - b) > 1e-12:
                raise ValueError(f"pieces disagree at 0: {a!r} vs {b!r}")
        self.neg = neg
        self.pos = pos
        self.at_zero = float(at_zero)
        self.domain = Interval(neg.domain.lo, pos.domain.hi, neg.domain.lo_open, pos.domain.hi_open)

    def label(self):
        return f"piecewise({self.neg.label()} | {self.pos.label()})"

    def _eval(self, x):
        out = np.full(x.shape, self.at_zero, dtype=x.dtype)
        n = x < 0
        p = x > 0
        if n.any():
            out[n] = self.neg(x[n])
        if p.any():
            out[p] = self.pos(x[p])
        return out

    @property
    def linear_slope(self):
        a, b = self.neg.linear_slope, self.pos.linear_slope
        return a if (a is not None and a == b and self.at_zero == 0) else None

    def to_spec(self):
        spec = {"kind": "piecewise", "neg": self.neg.to_spec(), "pos": self.pos.to_spec()}
        if self.at_zero != 0.0:
            spec["at_zero"] = self.at_zero
        return spec


class Composite(RealFunction):
    """Derived bodies: ``compose`` (outer after inner), ``conjugate_neg``, ``displacement``."""

    kind = "composite"

    def __init__(self, op: str, args: Sequence[RealFunction], domain: Interval):
        self.op = op
        self.args = tuple(args)
        self.domain = domain

    def to_spec(self):
        return {"kind": "composite", "op": self.op, "args": [a.to_spec() for a in self.args]}


class Compose(Composite):
    def __init__(self, outer: RealFunction, inner: RealFunction):
        super().__init__("compose", (outer, inner), inner.domain)
        self.outer = outer
        self.inner = inner

    def _eval(self, x):
        mid = self.inner(x)
        try:
            return self.outer(mid)
        except DomainError as exc:
            raise DomainError(f"compose: inner value escapes outer domain ({exc})", x=exc.x) from exc

    def raw(self, x):
        return self.outer.raw(self.inner.raw(x))

    def label(self):
        return f"({self.outer.label()})o({self.inner.label()})"

    @property
    def linear_slope(self):
        a, b = self.outer.linear_slope, self.inner.linear_slope
        return None if a is None or b is None else a * b


class ConjNeg(Composite):
    """``x -> -g(-x)``."""

    def __init__(self, g: RealFunction):
        super().__init__("conjugate_neg", (g,), g.domain.reflect())
        self.g = g

    def _eval(self, x):
        return -self.g(-x)

    def raw(self, x):
        return -self.g.raw(-x)

    def label(self):
        return f"conj({self.g.label()})"

    @property
    def linear_slope(self):
        return self.g.linear_slope

    def inverse(self, y):
        inv = self.g.inverse(-np.asarray(y, dtype=float))
        return None if inv is None else -inv

    def solve_displacement(self, t):
        # x + g(-x) = t  <=>  (-x) - g(-x) = -t
        s = self.g.solve_displacement(-np.asarray(t, dtype=float))
        return None if s is None else -s


class Displacement(Composite):
    """``x -> x - g(x)``."""

    def __init__(self, g: RealFunction):
        super().__init__("displacement", (g,), g.domain)
        self.g = g

    def _eval(self, x):
        return x - self.g(x)

    def raw(self, x):
        return x - self.g.raw(x)

    def label(self):
        return f"id-({self.g.label()})"

    @property
    def linear_slope(self):
        a = self.g.linear_slope
        return None if a is None else 1.0 - a

    def inverse(self, y):
        return self.g.solve_displacement(y)

    def solve_displacement(self, t):
        # x - (x - g(x)) = t  <=>  g(x) = t
        return self.g.inverse(t)


class Restricted(RealFunction):
    kind = "restricted"

    def __init__(self, g: RealFunction, domain: Interval):
        self.g = g
        self.domain = g.domain.intersect(domain)

    def _eval(self, x):
        return self.g(x)

    def raw(self, x):
        return self.g.raw(x)

    def label(self):
        return f"{self.g.label()}|{self.domain}"

    @property
    def linear_slope(self):
        return self.g.linear_slope

    def inverse(self, y):
        return self.g.inverse(y)

    def solve_displacement(self, t):
        return self.g.solve_displacement(t)

    def to_spec(self):
        return self.g.to_spec()


class Closed(RealFunction):
    """Wrap a vectorised callable; not serialisable."""

    kind = "callable"

    def __init__(self, fn: Callable[[np.ndarray], np.ndarray], domain: Interval = REALS,
                 name: str = "callable", inverse: Callable | None = None):
        self.fn = fn
        self.domain = domain
        self.name = name
        self._inv = inverse

    def _eval(self, x):
        return self.fn(x)

    def label(self):
        return self.name

    def inverse(self, y):
        return None if self._inv is None else self._inv(np.asarray(y, dtype=float))


def identity(domain: Interval = REALS) -> Linear:
    return Linear(1.0, domain)


def tabulate(f: RealFunction, nodes, extension: str = "error") -> MonotoneInterpolant:
    """Sample ``f`` at ``nodes`` into a monotone interpolant."""
    nodes = np.asarray(nodes, dtype=float)
    return MonotoneInterpolant(nodes, f(nodes), extension=extension)


def _interval_spec(iv: Interval):
    lo = None if iv.lo == -INF else iv.lo
    hi = None if iv.hi == INF else iv.hi
    return [lo, hi]


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------


def evaluate(f: RealFunction, x):
    return f(x)


def conjugate_neg(g: RealFunction) -> RealFunction:
    """Conjugation by ``-id``: ``x -> -g(-x)`` on the reflected domain."""
    if isinstance(g, ConjNeg):
        return g.g
    if isinstance(g, Linear):
        return Linear(g.slope, g.domain.reflect())
    if isinstance(g, TwoSlope):
        return TwoSlope(g.slope_pos, g.slope_neg)
    if isinstance(g, Piecewise):
        return Piecewise(conjugate_neg(g.pos), conjugate_neg(g.neg), -g.at_zero)
    if isinstance(g, Displacement):
        return Displacement(conjugate_neg(g.g))
    if isinstance(g, Restricted):
        return Restricted(conjugate_neg(g.g), g.domain.reflect())
    return ConjNeg(g)


def displacement(g: RealFunction) -> RealFunction:
    """The displacement map ``id - g``."""
    if isinstance(g, Displacement):
        return g.g
    if isinstance(g, Piecewise):
        return Piecewise(displacement(g.neg), displacement(g.pos), 0.0 - g.at_zero)
    return Displacement(g)


def compose(g: RealFunction, h: RealFunction) -> RealFunction:
    """``g o h``."""
    if isinstance(h, Linear) and h.slope == 1.0 and h.domain == REALS:
        return g
    if isinstance(g, Linear) and g.slope == 1.0 and g.domain == REALS:
        return h
    return Compose(g, h)


def restrict(g: RealFunction, side: str | Interval) -> RealFunction:
    """Restriction to the non-positive (``"neg"``) or non-negative (``"pos"``) half-line."""
    interval = SIDES[side] if isinstance(side, str) else side
    if interval == REALS:
        return g
    if isinstance(g, Piecewise):
        if interval == NONPOS:
            return g.neg
        if interval == NONNEG:
            return g.pos
    if isinstance(g, Linear):
        return Linear(g.slope, g.domain.intersect(interval))
    if isinstance(g, TwoSlope) and interval in (NONPOS, NONNEG):
        slope = g.slope_neg if interval == NONPOS else g.slope_pos
        return Linear(slope, interval)
    if isinstance(g, Displacement):
        return Displacement(restrict(g.g, interval))
    if isinstance(g, ConjNeg):
        return conjugate_neg(restrict(g.g, interval.reflect()))
    if isinstance(g, Restricted):
        return Restricted(g.g, g.domain.intersect(interval))
    if g.domain.lo >= interval.lo and g.domain.hi <= interval.hi:
        return g
    return Restricted(g, interval)


def inverse_evaluate(f: RealFunction, y, bracket: tuple[float, float],
                     tol: float | None = None, max_iter: int = 400):
    """Invert a strictly monotone ``f`` on ``bracket`` by bisection.

    Terminates when the bracket is narrower than ``tol`` (or no float lies
    strictly inside it) and returns the midpoint.  ``tol=0`` bisects to the
    last representable bracket.
    """
    if tol is None:
        tol = INTERPOLANT_INVERSE_TOL if isinstance(f, MonotoneInterpolant) else CLOSED_FORM_INVERSE_TOL
    y_arr, scalar = _as_array(y)
    y_arr = np.atleast_1d(y_arr).astype(float)
    a, b = float(bracket[0]), float(bracket[1])
    if not a < b:
        raise BracketError(f"bad bracket {bracket!r}")
    fa, fb = f(a), f(b)
    if fa == fb:
        raise MonotonicityError("f takes equal values at the bracket ends")
    increasing = fb > fa
    ymin, ymax = min(fa, fb), max(fa, fb)
    if np.any(y_arr < ymin) or np.any(y_arr > ymax):
        raise BracketError(f"y outside [{ymin!r}, {ymax!r}] spanned by bracket {bracket!r}")
    lo = np.full(y_arr.shape, a)
    hi = np.full(y_arr.shape, b)
    flo = np.full(y_arr.shape, fa)
    fhi = np.full(y_arr.shape, fb)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        active = (hi - lo >= tol) & (mid > lo) & (mid < hi)
        if not active.any():
            break
        fm = f(mid[active])
        lo_a, hi_a = flo[active], fhi[active]
        if np.any((fm - lo_a) * (hi_a - fm) < 0):
            raise MonotonicityError("non-monotone samples met during bisection")
        go_right = (fm < y_arr[active]) if increasing else (fm > y_arr[active])
        idx = np.flatnonzero(active)
        r, l_ = idx[go_right], idx[~go_right]
        lo[r], flo[r] = mid[active][go_right], fm[go_right]
        hi[l_], fhi[l_] = mid[active][~go_right], fm[~go_right]
    x = 0.5 * (lo + hi)
    return float(x[0]) if scalar else x


def _locate_failure(fn: Callable[[np.ndarray], np.ndarray], xs: np.ndarray):
    for x in xs:
        try:
            v = fn(np.array([x], dtype=EXTENDED))
            if not np.all(np.isfinite(v)):
                return float(x), "non-finite value"
        except (DomainError, NonFiniteError) as exc:
            return float(x), str(exc)
    return None, None


def pointwise_residual(fn: Callable[[np.ndarray], np.ndarray], grid: Grid,
                       name: str) -> ResidualReport:
    """Evaluate a vectorised defect over ``grid``; failures name the grid point."""
    xs = grid.points
    try:
        values = fn(xs.astype(EXTENDED))
    except (DomainError, NonFiniteError) as exc:
        x_bad, why = _locate_failure(fn, xs)
        raise EvaluationError(f"{name}: evaluation failed at x={x_bad!r}: {why or exc}",
                              x=x_bad, expression=why) from exc
    return residual_report(xs, values, f"{name} on {grid.description}")


def commutator_residual(g: RealFunction, h: RealFunction, grid: Grid) -> ResidualReport:
    """Sup over the grid of ``|g(h(x)) - h(g(x))|``."""
    return pointwise_residual(lambda x: g(h(x)) - h(g(x)), grid, "commutator")


def cone_check(g: RealFunction, side: str | Interval, grid: Grid,
               strict: bool = False) -> ConeReport:
    """Bow-tie cone membership of ``g`` on the grid points.

    ``member`` requires ``x g(x) >= 0`` and ``x (x - g(x)) >= 0`` at every
    point; ``strict`` requires both to be positive at every nonzero point.
    The reported violation is the first one for the requested mode.
    """
    interval = SIDES[side] if isinstance(side, str) else side
    xs = grid.points
    if not grid.within(interval):
        raise ValueError(f"grid {grid.description} not inside {interval}")
    gx = np.asarray(g(xs), dtype=float)
    first = xs * gx
    second = xs * (xs - gx)
    nonzero = xs != 0
    weak_bad_1 = first < 0
    weak_bad_2 = second < 0
    strict_bad_1 = weak_bad_1 | (nonzero & (first <= 0))
    strict_bad_2 = weak_bad_2 | (nonzero & (second <= 0))
    member = not (weak_bad_1.any() or weak_bad_2.any())
    is_strict = member and not (strict_bad_1.any() or strict_bad_2.any())
    bad1, bad2 = (strict_bad_1, strict_bad_2) if strict else (weak_bad_1, weak_bad_2)
    violation = None
    either = bad1 | bad2
    if either.any():
        i = int(np.argmax(either))
        if bad1[i]:
            violation = (float(xs[i]), "x*g(x) >= 0", float(first[i]))
        else:
            violation = (float(xs[i]), "x*(x-g(x)) >= 0", float(second[i]))
    return ConeReport(member, is_strict, violation)


def function_values_equal(f: RealFunction, g: RealFunction, xs: Iterable[float]) -> bool:
    xs = np.asarray(list(xs), dtype=float)
    return bool(np.array_equal(f(xs), g(xs)))
