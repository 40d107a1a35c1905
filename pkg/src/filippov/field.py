"""Piecewise smooth vector fields on the quotient square and their Σ geometry.

Conventions used throughout:

* ``PLUS`` lives on ``1/2 <= y <= 1`` and ``MINUS`` on ``0 <= y <= 1/2``.
* Σ₂ is ``y = 1/2``; on the torus Σ₁ is ``y = 0 ~ 1``. Both have
  ``grad h = (0, 1)``.
* For each Σ the field on the ``h > 0`` side is called *above* and the other
  *below*. On Σ₂ above is ``PLUS``; on Σ₁ above is ``MINUS`` (the band
  ``y`` just over 0) and below is ``PLUS`` (``y`` just under 1).

With this, stable sliding means ``above_2 < 0 < below_2`` and unstable sliding
``below_2 < 0 < above_2`` on either Σ.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

from .manifold import ManifoldModel, QuotientPoint, Torus, wrap

N_GRID = 2048
TAU_ROOT = 1e-12
TAU_SIGN = 1e-9
TAU_ON_SIGMA = 1e-9
H_FD = 1e-6

Vec = Tuple[float, float]
Jac = Tuple[Tuple[float, float], Tuple[float, float]]


# ---------------------------------------------------------------------------
# smooth fields


class TrigSeries:
    """``c0 + sum_k a_k cos(2 pi k t) + b_k sin(2 pi k t)`` in one variable."""

    def __init__(self, c0: float = 0.0, cos: Sequence[float] = (), sin: Sequence[float] = ()):
        self.c0 = float(c0)
        self.cos = tuple(float(c) for c in cos)
        self.sin = tuple(float(s) for s in sin)

    def __call__(self, t: float) -> float:
        v = self.c0
        w = 2.0 * math.pi * t
        for k, a in enumerate(self.cos, 1):
            if a:
                v += a * math.cos(k * w)
        for k, b in enumerate(self.sin, 1):
            if b:
                v += b * math.sin(k * w)
        return v

    def derivative(self, t: float) -> float:
        v = 0.0
        w = 2.0 * math.pi * t
        for k, a in enumerate(self.cos, 1):
            if a:
                v -= 2.0 * math.pi * k * a * math.sin(k * w)
        for k, b in enumerate(self.sin, 1):
            if b:
                v += 2.0 * math.pi * k * b * math.cos(k * w)
        return v

    @property
    def is_constant(self) -> bool:
        return not any(self.cos) and not any(self.sin)

    def to_dict(self) -> dict:
        return {"c0": self.c0, "cos": list(self.cos), "sin": list(self.sin)}

    @classmethod
    def from_obj(cls, obj) -> "TrigSeries":
        if isinstance(obj, TrigSeries):
            return obj
        if isinstance(obj, (int, float)):
            return cls(obj)
        return cls(obj.get("c0", 0.0), obj.get("cos", ()), obj.get("sin", ()))

    def __repr__(self):
        return f"TrigSeries({self.c0}, cos={list(self.cos)}, sin={list(self.sin)})"


class SmoothField:
    """A planar vector field with an optional closed-form jacobian.

    ``func(x, y)`` returns ``(v1, v2)``; ``jacobian(x, y)`` returns
    ``((d v1/dx, d v1/dy), (d v2/dx, d v2/dy))``. Without a jacobian, central
    differences with step ``H_FD`` are used.
    """

    def __init__(self, func: Callable[[float, float], Vec],
                 jacobian: Optional[Callable[[float, float], Jac]] = None,
                 name: str = "", spec: Optional[dict] = None):
        self.func = func
        self._jacobian = jacobian
        self.name = name
        self.spec = spec

    def __call__(self, x: float, y: float) -> Vec:
        return self.func(x, y)

    @property
    def has_closed_form_jacobian(self) -> bool:
        return self._jacobian is not None

    def jacobian(self, x: float, y: float) -> Jac:
        if self._jacobian is not None:
            return self._jacobian(x, y)
        return fd_jacobian(self.func, x, y)

    def negated(self) -> "SmoothField":
        f, j = self.func, self._jacobian

        def nf(x, y):
            a, b = f(x, y)
            return -a, -b

        nj = None
        if j is not None:
            def nj(x, y):
                (a, b), (c, d) = j(x, y)
                return (-a, -b), (-c, -d)

        return SmoothField(nf, nj, name=f"-({self.name})")

    def __repr__(self):
        return f"SmoothField({self.name or self.func!r})"


def fd_jacobian(func, x: float, y: float, h: float = H_FD) -> Jac:
    ax, bx = func(x + h, y)
    cx, dx = func(x - h, y)
    ay, by = func(x, y + h)
    cy, dy = func(x, y - h)
    return ((ax - cx) / (2 * h), (ay - cy) / (2 * h)), ((bx - dx) / (2 * h), (by - dy) / (2 * h))


def constant_field(v1: float, v2: float) -> SmoothField:
    v1, v2 = float(v1), float(v2)
    return SmoothField(lambda x, y: (v1, v2), lambda x, y: ((0.0, 0.0), (0.0, 0.0)),
                       name=f"({v1:g}, {v2:g})",
                       spec={"v1": {"x": {"c0": v1}}, "v2": {"x": {"c0": v2}}})


def trig_field(v1x=0.0, v2x=0.0, v1y=None, v2y=None, name: str = "") -> SmoothField:
    """Field whose components are ``P(x) + Q(y)`` with trigonometric ``P``, ``Q``.

    Each argument is anything :meth:`TrigSeries.from_obj` accepts; the y-parts
    default to zero.
    """
    p1, p2 = TrigSeries.from_obj(v1x), TrigSeries.from_obj(v2x)
    q1 = TrigSeries.from_obj(v1y if v1y is not None else 0.0)
    q2 = TrigSeries.from_obj(v2y if v2y is not None else 0.0)
    has_y = not (q1.is_constant and q2.is_constant)

    if has_y:
        def func(x, y):
            return p1(x) + q1(y), p2(x) + q2(y)

        def jac(x, y):
            return (p1.derivative(x), q1.derivative(y)), (p2.derivative(x), q2.derivative(y))
    else:
        c1, c2 = q1.c0, q2.c0

        def func(x, y):
            return p1(x) + c1, p2(x) + c2

        def jac(x, y):
            return (p1.derivative(x), 0.0), (p2.derivative(x), 0.0)

    spec = {"v1": {"x": p1.to_dict(), "y": q1.to_dict()},
            "v2": {"x": p2.to_dict(), "y": q2.to_dict()}}
    return SmoothField(func, jac, name=name or "trig", spec=spec)


def field_from_spec(spec: dict, name: str = "") -> SmoothField:
    """Inverse of ``SmoothField.spec`` for trig-polynomial fields."""
    v1, v2 = spec["v1"], spec["v2"]
    return trig_field(v1.get("x", 0.0), v2.get("x", 0.0), v1.get("y"), v2.get("y"), name=name)


# ---------------------------------------------------------------------------
# piecewise fields


class SigmaId(enum.Enum):
    SIGMA1 = "sigma1"
    SIGMA2 = "sigma2"


class Side(enum.Enum):
    PLUS = "plus"
    MINUS = "minus"


class RegionLabel(enum.Enum):
    CROSSING = "crossing"
    STABLE_SLIDING = "stable_sliding"
    UNSTABLE_SLIDING = "unstable_sliding"
    TANGENTIAL = "tangential"


class Visibility(enum.Enum):
    VISIBLE = "visible"
    INVISIBLE = "invisible"
    DEGENERATE = "degenerate"


class Stability(enum.Enum):
    ATTRACTOR = "attractor"
    REPELLER = "repeller"
    NON_HYPERBOLIC = "non_hyperbolic"


@dataclass(frozen=True)
class Finding:
    kind: str
    message: str
    where: Optional[float] = None


@dataclass
class PiecewiseField:
    plus: SmoothField
    minus: SmoothField
    model: ManifoldModel = Torus
    name: str = ""
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self.model = ManifoldModel.parse(self.model)

    @property
    def sigmas(self) -> Tuple[SigmaId, ...]:
        if self.model is Torus:
            return (SigmaId.SIGMA1, SigmaId.SIGMA2)
        return (SigmaId.SIGMA2,)

    def side_field(self, side: Side) -> SmoothField:
        return self.plus if side is Side.PLUS else self.minus

    def negated(self) -> "PiecewiseField":
        return PiecewiseField(self.plus.negated(), self.minus.negated(), self.model,
                              name=f"-({self.name})")

    def check_sigma(self, sigma_id: SigmaId):
        if sigma_id not in self.sigmas:
            raise ValueError(f"{sigma_id.value} is not a switching line of the {self.model.value}")


def above_side(sigma_id: SigmaId) -> Side:
    return Side.PLUS if sigma_id is SigmaId.SIGMA2 else Side.MINUS


def below_side(sigma_id: SigmaId) -> Side:
    return Side.MINUS if sigma_id is SigmaId.SIGMA2 else Side.PLUS


def side_y(sigma_id: SigmaId, side: Side) -> float:
    """Square ordinate at which ``side``'s field touches the given Σ."""
    if sigma_id is SigmaId.SIGMA2:
        return 0.5
    return 0.0 if side is Side.MINUS else 1.0


def sigma_y(sigma_id: SigmaId) -> float:
    return 0.5 if sigma_id is SigmaId.SIGMA2 else 0.0


def _check_on_sigma(p, sigma_id: SigmaId):
    x, y = p
    if sigma_id is SigmaId.SIGMA2:
        off = abs(y - 0.5)
    else:
        off = min(abs(y), abs(1.0 - y))
    if off > TAU_ON_SIGMA:
        raise ValueError(f"point ({x}, {y}) is not on {sigma_id.value}")
    return x


def _side_values(X: PiecewiseField, sigma_id: SigmaId, x: float):
    a = X.side_field(above_side(sigma_id))(x, side_y(sigma_id, above_side(sigma_id)))
    b = X.side_field(below_side(sigma_id))(x, side_y(sigma_id, below_side(sigma_id)))
    return a, b


def lie_derivative(f: SmoothField, sigma_id: SigmaId, p, order: int = 1, side: Optional[Side] = None) -> float:
    """``X h`` (order 1) or ``X^2 h`` (order 2) for ``h`` the Σ's defining function.

    ``side`` selects the representative ordinate on Σ₁ (1 for PLUS, 0 for
    MINUS); it is irrelevant on Σ₂.
    """
    x = _check_on_sigma(p, sigma_id)
    y = side_y(sigma_id, side or Side.MINUS) if sigma_id is SigmaId.SIGMA1 else 0.5
    v1, v2 = f(x, y)
    if order == 1:
        return v2
    if order != 2:
        raise ValueError("order must be 1 or 2")
    (_, _), (d2x, d2y) = f.jacobian(x, y)
    return v1 * d2x + v2 * d2y


def classify_point(X: PiecewiseField, sigma_id: SigmaId, p) -> RegionLabel:
    X.check_sigma(sigma_id)
    x = _check_on_sigma(p, sigma_id)
    (_, a2), (_, b2) = _side_values(X, sigma_id, x)
    return _label(a2, b2)


def _label(a2: float, b2: float) -> RegionLabel:
    if abs(a2) <= TAU_SIGN or abs(b2) <= TAU_SIGN:
        return RegionLabel.TANGENTIAL
    if a2 * b2 > 0:
        return RegionLabel.CROSSING
    if a2 < 0 < b2:
        return RegionLabel.STABLE_SLIDING
    return RegionLabel.UNSTABLE_SLIDING


def normalized_sliding(X: PiecewiseField, sigma_id: SigmaId, x: float) -> float:
    """Normalised Filippov sliding field ``b2*a1 - a2*b1`` at abscissa ``x``.

    Its sign equals the sign of the time-true sliding velocity on stable
    sliding and is opposite on unstable sliding.
    """
    (a1, a2), (b1, b2) = _side_values(X, sigma_id, x)
    return b2 * a1 - a2 * b1


def filippov_velocity(X: PiecewiseField, sigma_id: SigmaId, x: float) -> float:
    """Time-true x-velocity of the Filippov convex combination tangent to Σ."""
    (a1, a2), (b1, b2) = _side_values(X, sigma_id, x)
    den = b2 - a2
    if den == 0.0:
        return 0.0
    return (b2 * a1 - a2 * b1) / den


def sliding_difference(X: PiecewiseField, sigma_id: SigmaId, x: float) -> float:
    """Difference of tangential components ``X1+ - X1-``."""
    p = X.plus(x, side_y(sigma_id, Side.PLUS))
    m = X.minus(x, side_y(sigma_id, Side.MINUS))
    return p[0] - m[0]


def sliding_field(X: PiecewiseField, sigma_id: SigmaId, p, form: str = "normalized") -> float:
    """Scalar sliding field at a sliding point ``p``.

    ``form`` is ``"normalized"`` (zeros are pseudo-equilibria), ``"filippov"``
    (time-true velocity used by the integrator) or ``"difference"``
    (``X1+ - X1-``).
    """
    label = classify_point(X, sigma_id, p)
    if label not in (RegionLabel.STABLE_SLIDING, RegionLabel.UNSTABLE_SLIDING):
        raise ValueError(f"point {tuple(p)} is not in a sliding region ({label.value})")
    x = p[0]
    if form == "normalized":
        return normalized_sliding(X, sigma_id, x)
    if form == "filippov":
        return filippov_velocity(X, sigma_id, x)
    if form == "difference":
        return sliding_difference(X, sigma_id, x)
    raise ValueError(f"unknown sliding form {form!r}")


# ---------------------------------------------------------------------------
# root finding on the circle


def _bisect(g, lo: float, hi: float, glo: float, tol: float = TAU_ROOT) -> float:
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if gm == 0.0:
            return mid
        if (gm < 0) == (glo < 0):
            lo, glo = mid, gm
        else:
            hi = mid
        if mid == lo and mid == hi:
            break
    return 0.5 * (lo + hi)


def _is_periodic(g, tol: float = 1e-6) -> bool:
    # compare the left limit at 1 with the value at 0; a field that reduces x
    # mod 1 itself would pass a plain g(0) == g(1) test
    d = 1e-9
    return abs(g(0.0) - g(1.0 - d)) <= tol * max(1.0, abs(g(0.0)))


def circle_roots(g: Callable[[float], float], n_grid: int = N_GRID, tol: float = TAU_ROOT,
                 flat_tol: float = TAU_SIGN, flat_run: int = 8):
    """Sign-change roots of ``g`` on ``[0, 1)`` treated as a circle.

    Returns ``(roots, findings)``. Roots are sorted. A run of ``flat_run`` or
    more grid values with ``|g| < flat_tol`` is reported as a ``FlatZeroSet``
    finding instead of roots. If ``g(0) != g(1)`` the seam is not bracketed
    and a ``NonPeriodic`` finding is added.
    """
    xs = [i / n_grid for i in range(n_grid)]
    vals = [g(x) for x in xs]
    findings: List[Finding] = []
    periodic = _is_periodic(g)
    if not periodic:
        findings.append(Finding("NonPeriodic", "field is not 1-periodic in x; seam at x=0 not bracketed", 0.0))

    small = [abs(v) < flat_tol for v in vals]
    if all(small):
        findings.append(Finding("FlatZeroSet", "function vanishes on the whole circle"))
        return [], findings
    # find flat runs (cyclic)
    flat_starts = []
    run = 0
    for i in range(2 * n_grid):
        if small[i % n_grid]:
            run += 1
            if run == flat_run:
                flat_starts.append((i - flat_run + 1) % n_grid)
        else:
            run = 0
    for s in sorted(set(flat_starts)):
        findings.append(Finding("FlatZeroSet", "function vanishes on an interval", xs[s]))

    roots = []
    last = n_grid if periodic else n_grid - 1
    for i in range(last):
        j = (i + 1) % n_grid
        v0, v1 = vals[i], vals[j]
        x0 = xs[i]
        x1 = xs[i] + 1.0 / n_grid
        if small[i] and small[j]:
            continue
        if v0 == 0.0:
            roots.append(x0)
        elif v0 * v1 < 0:
            r = _bisect(g, x0, x1, v0, tol)
            roots.append(r % 1.0)
    roots = sorted(set(r if r < 1.0 else 0.0 for r in roots))
    return roots, findings


# ---------------------------------------------------------------------------
# tangencies and pseudo-equilibria


@dataclass(frozen=True)
class TangencyPoint:
    location: QuotientPoint
    side: Side
    visibility: Visibility
    second_lie: float
    sigma_id: SigmaId

    @property
    def x(self) -> float:
        return self.location.x

    def to_dict(self) -> dict:
        return {"x": self.x, "y": self.location.y, "sigma": self.sigma_id.value,
                "side": self.side.value, "visibility": self.visibility.value,
                "second_lie": self.second_lie}


@dataclass(frozen=True)
class PseudoEquilibrium:
    location: QuotientPoint
    index: int
    stability: Stability
    sigma_id: SigmaId
    boundary: bool = False

    @property
    def x(self) -> float:
        return self.location.x

    def to_dict(self) -> dict:
        return {"x": self.x, "sigma": self.sigma_id.value, "index": self.index,
                "stability": self.stability.value, "boundary": self.boundary}


def _visibility(sigma_id: SigmaId, side: Side, second: float) -> Visibility:
    if abs(second) < TAU_SIGN:
        return Visibility.DEGENERATE
    # the field on the h>0 side sees its parabola when X^2 h > 0
    on_above = side is above_side(sigma_id)
    visible = second > 0 if on_above else second < 0
    return Visibility.VISIBLE if visible else Visibility.INVISIBLE


def find_tangencies(X: PiecewiseField, sigma_id: SigmaId, n_grid: int = N_GRID,
                    sides: Sequence[Side] = (Side.PLUS, Side.MINUS)):
    """Simple zeros of ``X2^±`` along Σ with their visibility.

    Returns ``(tangencies, findings)``; tangencies are sorted by abscissa.
    """
    X.check_sigma(sigma_id)
    out: List[TangencyPoint] = []
    findings: List[Finding] = []
    ys = sigma_y(sigma_id)
    for side in sides:
        f = X.side_field(side)
        yy = side_y(sigma_id, side)
        roots, fnd = circle_roots(lambda x: f(x, yy)[1], n_grid)
        findings.extend(Finding(fd.kind, f"{side.value} field: {fd.message}", fd.where) for fd in fnd)
        for r in roots:
            p = (r, yy)
            second = lie_derivative(f, sigma_id, (r, ys), 2, side=side)
            vis = _visibility(sigma_id, side, second)
            out.append(TangencyPoint(wrap(r, ys, X.model), side, vis, second, sigma_id))
    out.sort(key=lambda t: t.x)
    return out, findings


@dataclass
class Interval:
    start: float
    end: float   # may exceed 1 when the interval wraps through x = 0
    label: RegionLabel

    def contains(self, x: float) -> bool:
        x = x % 1.0
        if self.start <= x < self.end:
            return True
        return self.start <= x + 1.0 < self.end

    @property
    def length(self) -> float:
        return self.end - self.start

    def to_dict(self) -> dict:
        return {"start": self.start, "end": self.end, "label": self.label.value}


@dataclass
class SigmaDecomposition:
    sigma_id: SigmaId
    intervals: List[Interval]
    tangencies: List[TangencyPoint]
    pseudo_eq: List[PseudoEquilibrium]
    findings: List[Finding]

    def interval_at(self, x: float) -> Interval:
        for iv in self.intervals:
            if iv.contains(x):
                return iv
        # x sits exactly on an endpoint shared by floating error
        return min(self.intervals, key=lambda iv: min(abs((x - iv.start + 0.5) % 1.0 - 0.5),
                                                        abs((x - iv.end + 0.5) % 1.0 - 0.5)))

    @property
    def labels(self) -> List[RegionLabel]:
        return [iv.label for iv in self.intervals]

    def to_dict(self) -> dict:
        return {"sigma": self.sigma_id.value,
                "intervals": [iv.to_dict() for iv in self.intervals],
                "tangencies": [t.to_dict() for t in self.tangencies],
                "pseudo_equilibria": [p.to_dict() for p in self.pseudo_eq],
                "findings": [vars(f) for f in self.findings]}


def _label_at(X: PiecewiseField, sigma_id: SigmaId, x: float) -> RegionLabel:
    (_, a2), (_, b2) = _side_values(X, sigma_id, x % 1.0)
    return _label(a2, b2)


def decompose_sigma(X: PiecewiseField, sigma_id: SigmaId, n_grid: int = N_GRID) -> SigmaDecomposition:
    """Cyclic partition of Σ into crossing / sliding intervals."""
    key = ("decomp", sigma_id, n_grid)
    if key in X._cache:
        return X._cache[key]
    tangs, findings = find_tangencies(X, sigma_id, n_grid)
    cuts = sorted(set(t.x for t in tangs))
    odd_sides = [s for s in (Side.PLUS, Side.MINUS)
                 if sum(1 for t in tangs if t.side is s) % 2 == 1]
    for s in odd_sides:
        findings.append(Finding("ParityViolation",
                                f"odd number of folds of the {s.value} field on {sigma_id.value}: "
                                "the line x = 0 must be singular or tangential"))
    nonperiodic = any(f.kind == "NonPeriodic" for f in findings)
    if nonperiodic and 0.0 not in cuts:
        cuts = [0.0] + cuts
    intervals: List[Interval] = []
    if not cuts:
        intervals.append(Interval(0.0, 1.0, _label_at(X, sigma_id, 0.0)))
    else:
        n = len(cuts)
        for i in range(n):
            s = cuts[i]
            e = cuts[i + 1] if i + 1 < n else cuts[0] + 1.0
            mid = 0.5 * (s + e)
            intervals.append(Interval(s, e, _label_at(X, sigma_id, mid)))
        # merge neighbours whose label did not change (non-transversal roots, seam)
        merged: List[Interval] = []
        for iv in intervals:
            if merged and merged[-1].label is iv.label:
                merged[-1].end = iv.end
            else:
                merged.append(iv)
        if len(merged) > 1 and merged[-1].label is merged[0].label and not nonperiodic:
            first = merged.pop(0)
            merged[-1].end = first.end + 1.0
        if len(merged) == 1 and cuts:
            merged = [Interval(merged[0].start, merged[0].start + 1.0, merged[0].label)]
        # normalise so that starts are in [0, 1)
        intervals = []
        for iv in merged:
            s = iv.start % 1.0
            intervals.append(Interval(s, s + iv.length, iv.label))
        intervals.sort(key=lambda iv: iv.start)
    for i, iv in enumerate(intervals):
        nxt = intervals[(i + 1) % len(intervals)]
        if len(intervals) > 1 and iv.label is nxt.label and not nonperiodic:
            findings.append(Finding("AlternationViolation", "consecutive intervals share a label", iv.end % 1.0))
    sliding_kinds = {iv.label for iv in intervals
                     if iv.label in (RegionLabel.STABLE_SLIDING, RegionLabel.UNSTABLE_SLIDING)}
    if len(sliding_kinds) > 1 and len(intervals) > 1:
        findings.append(Finding("MixedSliding", "both stable and unstable sliding occur on the same Σ"))
    decomp = SigmaDecomposition(sigma_id, intervals, tangs, [], findings)
    decomp.pseudo_eq = _pseudo_equilibria(X, sigma_id, decomp, n_grid)
    X._cache[key] = decomp
    return decomp


def _pseudo_equilibria(X, sigma_id, decomp: SigmaDecomposition, n_grid: int):
    g = lambda x: normalized_sliding(X, sigma_id, x % 1.0)
    out = []
    ys = sigma_y(sigma_id)
    for iv in decomp.intervals:
        if iv.label not in (RegionLabel.STABLE_SLIDING, RegionLabel.UNSTABLE_SLIDING):
            continue
        m = max(8, int(round(iv.length * n_grid)))
        xs = [iv.start + iv.length * i / m for i in range(m + 1)]
        vals = [g(x) for x in xs]
        full_circle = iv.length >= 1.0 - 1e-15 and len(decomp.intervals) == 1
        found = []
        for i in range(m):
            v0, v1 = vals[i], vals[i + 1]
            if v0 == 0.0:
                found.append(xs[i])
            elif v0 * v1 < 0:
                found.append(_bisect(g, xs[i], xs[i + 1], v0))
        if vals[m] == 0.0 and not full_circle:
            found.append(xs[m])
        for r in found:
            d = (g(r + H_FD) - g(r - H_FD)) / (2 * H_FD)
            idx = 0 if abs(d) < TAU_SIGN else (1 if d > 0 else -1)
            stab = {-1: Stability.ATTRACTOR, 1: Stability.REPELLER, 0: Stability.NON_HYPERBOLIC}[idx]
            boundary = (r - iv.start < 1e-9 or iv.end - r < 1e-9) and not full_circle
            out.append(PseudoEquilibrium(wrap(r, ys, X.model), idx, stab, sigma_id, boundary))
    uniq = []
    for p in sorted(out, key=lambda p: p.x):
        if not uniq or abs(p.x - uniq[-1].x) > 1e-9:
            uniq.append(p)
    if len(uniq) > 1 and abs((uniq[-1].x - 1.0) - uniq[0].x) < 1e-9:
        uniq.pop()
    return uniq


def find_pseudo_equilibria(X: PiecewiseField, sigma_id: SigmaId, n_grid: int = N_GRID):
    return list(decompose_sigma(X, sigma_id, n_grid).pseudo_eq)


def parity_report(X: PiecewiseField, n_grid: int = N_GRID) -> dict:
    """Fold parity, visible/invisible pairing and pseudo-equilibrium alternation."""
    report = {"fold_count_per_sigma": {}, "fold_count_total": 0, "parity": {},
              "visible_invisible_pairing": None, "pseudo_eq_count": {},
              "alternation_ok": True, "findings": []}
    decomps = {s: decompose_sigma(X, s, n_grid) for s in X.sigmas}
    for s, d in decomps.items():
        folds = [t for t in d.tangencies if t.visibility is not Visibility.DEGENERATE]
        n = len(folds)
        report["fold_count_per_sigma"][s.value] = n
        report["fold_count_total"] += n
        by_side = {side.value: sum(1 for t in folds if t.side is side) for side in (Side.PLUS, Side.MINUS)}
        even = all(v % 2 == 0 for v in by_side.values())
        report["parity"][s.value] = {"per_field": by_side, "even": even}
        for f in d.findings:
            report["findings"].append({"sigma": s.value, "kind": f.kind, "message": f.message})
        degenerate = [t for t in d.tangencies if t.visibility is Visibility.DEGENERATE]
        for t in degenerate:
            report["findings"].append({"sigma": s.value, "kind": "DegenerateTangency",
                                       "message": f"non-fold tangency at x={t.x:.12g}"})
        pe = d.pseudo_eq
        report["pseudo_eq_count"][s.value] = len(pe)
        idx = [p.index for p in pe]
        alt = all(idx[i] != idx[(i + 1) % len(idx)] for i in range(len(idx))) if len(idx) > 1 else True
        if any(i == 0 for i in idx):
            alt = False
        if len(pe) % 2 == 1:
            alt = False
            report["findings"].append({"sigma": s.value, "kind": "SaddleNodeCandidate",
                                       "message": "odd number of pseudo-equilibria"})
        report["alternation_ok"] = report["alternation_ok"] and alt \
            and not any(f.kind == "AlternationViolation" for f in d.findings)
    if any(not v["even"] for v in report["parity"].values()):
        report["findings"].append({"sigma": None, "kind": "ParityViolation",
                                   "message": "odd fold count: line of singularities or tangencies at x = 0"})
    if X.model is Torus:
        pairing = {}
        ok = True
        for side in (Side.PLUS, Side.MINUS):
            counts = {}
            for s, d in decomps.items():
                vis = sum(1 for t in d.tangencies if t.side is side and t.visibility is Visibility.VISIBLE)
                inv = sum(1 for t in d.tangencies if t.side is side and t.visibility is Visibility.INVISIBLE)
                counts[s.value] = {"visible": vis, "invisible": inv}
            c1, c2 = counts["sigma1"], counts["sigma2"]
            match = c1["visible"] == c2["invisible"] and c1["invisible"] == c2["visible"]
            ok = ok and match
            pairing[side.value] = dict(counts, match=match)
        pairing["ok"] = ok
        report["visible_invisible_pairing"] = pairing
    report["parity_violation"] = any(f["kind"] == "ParityViolation" for f in report["findings"])
    return report
