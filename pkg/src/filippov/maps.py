"""Return maps, displacement roots and the hub fold p*.

Sections are Σ₁ (y = 0 on the torus), Σ₂ (y = 1/2) and the vertical segment
Λ = {x = 0, 0 < y < 1/2}. The half-first return map follows the lower field
only, from Λ back to Λ; the section return map follows the full Filippov flow
from a Σ back to the same Σ.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, List, Optional, Sequence, Tuple

import sympy

from . import rk
from .field import (
    H_FD, TAU_ROOT, TAU_SIGN, PiecewiseField, RegionLabel, Side, SigmaId, Visibility,
    decompose_sigma, filippov_velocity, sigma_y,
)
from .flow import EventKind, IntegrationOptions, integrate
from .manifold import QuotientPoint, Sphere, Torus, wrap

LAMBDA_GRID = 512
CENTER_BAND_RUN = 8


class Section(enum.Enum):
    SIGMA1 = "sigma1"
    SIGMA2 = "sigma2"
    LAMBDA = "lambda"


@dataclass(frozen=True)
class SectionPoint:
    section: Section
    coord: float

    def __post_init__(self):
        if self.section is Section.LAMBDA:
            if not (0.0 <= self.coord <= 0.5):
                raise ValueError(f"Λ coordinate {self.coord} outside [0, 1/2]")
        elif not (0.0 <= self.coord < 1.0):
            raise ValueError(f"Σ coordinate {self.coord} outside [0, 1)")

    def to_point(self, model) -> QuotientPoint:
        if self.section is Section.LAMBDA:
            return wrap(0.0, self.coord, model)
        y = 0.0 if self.section is Section.SIGMA1 else 0.5
        return wrap(self.coord, y, model)


@dataclass(frozen=True)
class DisplacementSample:
    q: SectionPoint
    pi_q: SectionPoint
    d: float
    return_time: float


class CycleStability(enum.Enum):
    ATTRACTING = "AttractingCycle"
    REPELLING = "RepellingCycle"
    NON_HYPERBOLIC = "NonHyperbolic"


@dataclass(frozen=True)
class MapRoot:
    q: SectionPoint
    d_prime: float
    stability: CycleStability

    def to_dict(self) -> dict:
        return {"section": self.q.section.value, "coord": self.q.coord,
                "d_prime": self.d_prime, "stability": self.stability.value}


class NoReturn(RuntimeError):
    """The orbit left the region before coming back to the section."""

    def __init__(self, message: str, exit_event=None):
        super().__init__(message)
        self.exit_event = exit_event


class NotFound(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# crossing normal form


def _half_turn_shifts(a, b, s1, s2):
    # the first half-turn from Σ₁ uses the lower field when moving up
    up = s2 > 0
    lower = b / (2 * abs(s2))
    upper = a / (2 * abs(s1))
    return (lower, upper) if up else (upper, lower)


def first_return_crossing(a: float, b: float, s1: float, s2: float, p: SectionPoint, n: int) -> QuotientPoint:
    """Position after ``n`` half-turns of the crossing normal form from ``p`` on Σ₁.

    Each full turn shifts x by ``a/(2|σ₁|) + b/(2|σ₂|)``; an odd ``n`` adds the
    half-turn of the field met first. Even ``n`` lands on Σ₁, odd on Σ₂.
    """
    if not s1 * s2 > 0:
        raise ValueError("not a crossing system: σ₁σ₂ must be positive")
    if p.section is not Section.SIGMA1:
        raise ValueError("start point must lie on Σ₁")
    if n < 0:
        raise ValueError("n must be non-negative")
    first, second = _half_turn_shifts(a, b, s1, s2)
    x = p.coord + (n // 2) * (first + second) + (n % 2) * first
    return wrap(x, (n % 2) * 0.5, Torus)


def _exact(v, name):
    if isinstance(v, float) or (isinstance(v, sympy.Basic) and v.atoms(sympy.Float)):
        raise TypeError(f"{name}={v!r} is a float; pass an exact rational or a symbolic irrational "
                        "such as 'sqrt(2)' (rationality cannot be decided from floats)")
    if isinstance(v, Fraction):
        return sympy.Rational(v.numerator, v.denominator)
    if isinstance(v, str):
        # decimal text is read as the exact decimal it spells
        return sympy.sympify(v, rational=True)
    return sympy.sympify(v)


@dataclass(frozen=True)
class PeriodicityVerdict:
    kind: str                  # "Periodic" or "Dense"
    n0: Optional[int]
    shift_per_turn: str        # exact expression, as text

    def to_dict(self) -> dict:
        return {"kind": self.kind, "n0": self.n0, "shift_per_turn": self.shift_per_turn}


def periodicity_test(a, b, s1, s2) -> PeriodicityVerdict:
    """Exact periodic/dense test for the crossing normal form on the torus.

    Orbits close after ``n`` half-turns (``n`` even) iff ``(n/2)·s`` is an
    integer, where ``s = a/(2|σ₁|) + b/(2|σ₂|)`` is the shift per turn.
    """
    a, b, s1, s2 = (_exact(v, k) for v, k in ((a, "a"), (b, "b"), (s1, "s1"), (s2, "s2")))
    if not (s1 * s2).is_positive:
        raise ValueError("not a crossing system: σ₁σ₂ must be positive")
    s = sympy.nsimplify(sympy.simplify(a / (2 * abs(s1)) + b / (2 * abs(s2))))
    if s.is_rational:
        q = sympy.Rational(s)
        # smallest m with m·q integral, n₀ = 2m
        m = q.q
        return PeriodicityVerdict("Periodic", int(2 * m), str(s))
    if s.is_rational is False:
        return PeriodicityVerdict("Dense", None, str(s))
    raise ValueError(f"cannot decide rationality of {s}")


def crossing_sequence(X: PiecewiseField, x0: float, n: int, opts: Optional[IntegrationOptions] = None):
    """Abscissae of the first ``n`` Σ-crossings of the orbit from ``(x0, 0)``, unwrapped."""
    o = opts or IntegrationOptions(t_max=1e9, record=False)
    o = replace(o, record=True, t_max=o.t_max)
    out = []
    t_max = 1.0
    while True:
        tr = integrate(X, (x0, 0.0), replace(o, t_max=t_max))
        cs = [e for e in tr.events if e.kind is EventKind.CROSS_SIGMA]
        if len(cs) >= n or tr.final_event.kind is not EventKind.TIME_LIMIT:
            break
        t_max *= 2
    # unwrap x from the recorded samples
    lift = x0
    prev = x0
    times = [e.t for e in cs[:n]]
    xs = []
    j = 0
    for _, (t, x, _y) in tr.iter_samples():
        lift += ((x - prev) + 0.5) % 1.0 - 0.5
        prev = x
        while j < len(times) and t >= times[j] - 1e-15:
            xs.append(lift)
            j += 1
    return xs


# ---------------------------------------------------------------------------
# half-first return on Λ and section returns


def _lower_field(X: PiecewiseField):
    f = X.minus.func
    return lambda s: f(s[0], s[1])


def half_return(X: PiecewiseField, q: SectionPoint, opts: Optional[IntegrationOptions] = None,
                t_max: float = 50.0) -> DisplacementSample:
    """First return of the lower-field orbit from ``(0, ξ)`` to Λ."""
    if q.section is not Section.LAMBDA:
        raise ValueError("half_return needs a point of Λ")
    o = opts or IntegrationOptions()
    evs = [rk.Event(lambda s: s[0] - 1.0, +1, "right"),
           rk.Event(lambda s: -1.0 - s[0], +1, "left"),
           rk.Event(lambda s: 0.5 - s[1], -1, "sigma2"),
           rk.Event(lambda s: s[1], -1, "sigma1")]
    res = rk.solve(_lower_field(X), (0.0, q.coord), t_max, evs, o.rel_tol, o.abs_tol,
                   o.max_step, o.event_tol, record=False)
    if res.failed:
        raise NoReturn("step size underflow", None)
    if res.event is None:
        raise NoReturn(f"no return to Λ within t={t_max}", None)
    if res.event.name in ("sigma2", "sigma1"):
        raise NoReturn(f"orbit from ξ={q.coord} reaches {res.event.name} at x={res.y[0] % 1.0:.6g} "
                       "before returning to Λ", (res.event.name, res.y, res.t))
    xi = res.y[1]
    return DisplacementSample(q, SectionPoint(Section.LAMBDA, min(max(xi, 0.0), 0.5)), xi - q.coord, res.t)


def section_return(X: PiecewiseField, q: SectionPoint, opts: Optional[IntegrationOptions] = None,
                   t_max: float = 50.0) -> DisplacementSample:
    """Next crossing of the full Filippov orbit through the same Σ.

    The displacement is the lifted change of abscissa along the orbit. Sliding,
    poles or a time-out before the return raise :class:`NoReturn`.
    """
    if q.section is Section.LAMBDA:
        return half_return(X, q, opts, t_max)
    sid = SigmaId.SIGMA1 if q.section is Section.SIGMA1 else SigmaId.SIGMA2
    X.check_sigma(sid)
    o = replace(opts or IntegrationOptions(), t_max=t_max, record=True)
    tag = sid.value + ":"

    def stop(e):
        return ((e.kind is EventKind.CROSS_SIGMA and e.detail.startswith(tag))
                or e.kind in (EventKind.ENTER_SLIDING, EventKind.HIT_POLE,
                              EventKind.REACH_PSEUDO_EQUILIBRIUM))

    tr = integrate(X, q.to_point(X.model), o, stop_when=stop)
    e = tr.final_event
    if e.kind is not EventKind.CROSS_SIGMA:
        raise NoReturn(f"{e.kind.value} at x={e.location.x:.6g} before returning", e)
    # lifted displacement keeps d continuous for degree-one return maps
    lifted = tr.unwrapped_x()
    d = lifted[-1][1] - lifted[0][1]
    return DisplacementSample(q, SectionPoint(q.section, e.location.x), d, e.t)


# ---------------------------------------------------------------------------
# displacement roots


@dataclass
class DisplacementScan:
    section: Section
    grid: List[float]
    d: List[Optional[float]]
    roots: List[MapRoot]
    center_bands: List[Tuple[float, float]]
    coverage: List[Tuple[float, float]]
    uncovered: List[float]

    @property
    def covered_fraction(self) -> float:
        n = len(self.d)
        return sum(1 for v in self.d if v is not None) / n if n else 0.0

    def sign_changes(self) -> bool:
        vals = [v for v in self.d if v is not None and abs(v) >= TAU_ROOT]
        return any(v > 0 for v in vals) and any(v < 0 for v in vals)

    def to_dict(self) -> dict:
        return {"section": self.section.value, "grid_size": len(self.grid),
                "roots": [r.to_dict() for r in self.roots],
                "center_bands": [list(b) for b in self.center_bands],
                "coverage": [list(c) for c in self.coverage],
                "covered_fraction": self.covered_fraction}


def _grid(section: Section, n: int, model) -> List[float]:
    if section is Section.LAMBDA:
        # interior points only; ξ = 0 and 1/2 lie on Σ (ξ = 0 is a pole on the sphere)
        return [0.5 * i / n for i in range(1, n)]
    return [i / n for i in range(n)]


def displacement_roots(X: PiecewiseField, opts: Optional[IntegrationOptions] = None,
                       section: Section = Section.LAMBDA, n_grid: int = LAMBDA_GRID,
                       t_max: float = 50.0) -> DisplacementScan:
    """Scan the displacement on a section and locate its simple zeros.

    ``d'`` at a root is a central difference with step ``H_FD``. Runs of at
    least ``CENTER_BAND_RUN`` grid values with ``|d| < TAU_ROOT`` are reported
    as center bands; roots inside them are not listed.
    """
    o = opts or IntegrationOptions()

    def dfun(c):
        if section is Section.LAMBDA:
            c = min(max(c, 0.0), 0.5)
        else:
            c = c % 1.0
        return section_return(X, SectionPoint(section, c), o, t_max).d

    def safe(c):
        try:
            return dfun(c)
        except NoReturn:
            return None

    grid = _grid(section, n_grid, X.model)
    vals = [safe(c) for c in grid]
    periodic = section is not Section.LAMBDA
    n = len(grid)

    # center bands
    small = [v is not None and abs(v) < TAU_ROOT for v in vals]
    bands: List[Tuple[float, float]] = []
    in_band = [False] * n
    i = 0
    while i < n:
        if small[i]:
            j = i
            while j + 1 < n and small[j + 1]:
                j += 1
            if j - i + 1 >= CENTER_BAND_RUN:
                bands.append((grid[i], grid[j]))
                for k in range(i, j + 1):
                    in_band[k] = True
            i = j + 1
        else:
            i += 1

    # coverage intervals
    coverage = []
    i = 0
    while i < n:
        if vals[i] is not None:
            j = i
            while j + 1 < n and vals[j + 1] is not None:
                j += 1
            coverage.append((grid[i], grid[j]))
            i = j + 1
        else:
            i += 1
    uncovered = [grid[k] for k in range(n) if vals[k] is None]

    roots: List[MapRoot] = []
    pairs = [(k, k + 1) for k in range(n - 1)]
    if periodic:
        pairs.append((n - 1, 0))
    found = []
    for i0, i1 in pairs:
        v0, v1 = vals[i0], vals[i1]
        if v0 is None or v1 is None or in_band[i0] or in_band[i1]:
            continue
        c0, c1 = grid[i0], grid[i1] + (1.0 if i1 < i0 else 0.0)
        if v0 == 0.0:
            found.append(c0)
        elif v0 * v1 < 0:
            found.append(_bisect_root(safe, c0, c1, v0))
    for r in found:
        rr = r % 1.0 if periodic else r
        dp, dm = safe(rr + H_FD), safe(rr - H_FD)
        if dp is None or dm is None:
            dprime = float("nan")
            stab = CycleStability.NON_HYPERBOLIC
        else:
            dprime = (dp - dm) / (2 * H_FD)
            if abs(dprime) < TAU_SIGN:
                stab = CycleStability.NON_HYPERBOLIC
            else:
                stab = CycleStability.ATTRACTING if dprime < 0 else CycleStability.REPELLING
        if not any(abs(rr - m.q.coord) < 1e-9 for m in roots):
            roots.append(MapRoot(SectionPoint(section, rr), dprime, stab))
    roots.sort(key=lambda m: m.q.coord)
    return DisplacementScan(section, grid, vals, roots, bands, coverage, uncovered)


def _bisect_root(g, lo, hi, glo, tol=TAU_ROOT):
    for _ in range(200):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        gm = g(mid)
        if gm is None:
            break
        if gm == 0.0:
            return mid
        if (gm < 0) == (glo < 0):
            lo, glo = mid, gm
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# the hub fold p*


@dataclass(frozen=True)
class PStar:
    point: QuotientPoint
    q_star: Optional[float]          # Λ intercept of the backward lower-field orbit
    arc_intercepts: Tuple[Tuple[float, Optional[float], str], ...]

    def to_dict(self) -> dict:
        return {"x": self.point.x, "y": self.point.y, "q_star": self.q_star,
                "arcs": [{"fold_x": fx, "lambda_y": ly, "exit": ex} for fx, ly, ex in self.arc_intercepts]}


def _fold_arc_intercept(X: PiecewiseField, x_fold: float, opts: IntegrationOptions):
    """Backward lower-field orbit from a fold on Σ₂ until x reaches the Λ copy at 0."""
    f = X.minus.func
    rhs = lambda s: tuple(-v for v in f(s[0], s[1]))
    # leave the fold before arming the Σ₂ event
    first = rk.solve(rhs, (x_fold, 0.5), 1e-4, (), opts.rel_tol, opts.abs_tol, opts.max_step,
                     opts.event_tol, record=False)
    if first.y[1] > 0.5:
        return None, "touches from above"
    evs = [rk.Event(lambda s: s[0], -1, "lambda"),
           rk.Event(lambda s: 0.5 - s[1], -1, "sigma2"),
           rk.Event(lambda s: s[1], -1, "sigma1")]
    res = rk.solve(rhs, first.y, 50.0, evs, opts.rel_tol, opts.abs_tol, opts.max_step,
                   opts.event_tol, record=False)
    if res.event is None:
        return None, "no intercept"
    if res.event.name == "lambda":
        return res.y[1], "lambda"
    return None, res.event.name


def find_p_star(X: PiecewiseField, opts: Optional[IntegrationOptions] = None) -> PStar:
    """The visible lower-field fold on Σ₂ that absorbs adjacent sliding and bounds all fold arcs.

    Candidates are visible folds of ``X-`` next to stable sliding whose
    Filippov speed points into the fold. Fold arcs are the backward
    lower-field orbits from each fold to Λ; p* is the candidate whose arc
    reaches Λ lowest, and every other arc must lie between Σ₂ and it.
    """
    o = opts or IntegrationOptions()
    if SigmaId.SIGMA2 not in X.sigmas:
        raise NotFound("no Σ₂")
    dec = decompose_sigma(X, SigmaId.SIGMA2)
    folds = [t for t in dec.tangencies if t.side is Side.MINUS and t.visibility is not Visibility.DEGENERATE]
    arcs = []
    for t in folds:
        y, ex = _fold_arc_intercept(X, t.x, o)
        arcs.append((t.x, y, ex))
    cands = []
    for t in folds:
        if t.visibility is not Visibility.VISIBLE:
            continue
        ok = False
        for side_sign in (-1.0, 1.0):
            xs = (t.x + side_sign * 1e-6) % 1.0
            iv = dec.interval_at(xs)
            if iv.label is RegionLabel.STABLE_SLIDING:
                v = filippov_velocity(X, SigmaId.SIGMA2, xs)
                if v * (-side_sign) > 0:
                    ok = True
        if ok:
            cands.append(t)
    if not cands:
        raise NotFound("no visible fold of the lower field absorbs an adjacent stable sliding flow")
    best = None
    for t in cands:
        y = next(a[1] for a in arcs if a[0] == t.x)
        if y is None:
            continue
        contained = True
        for fx, fy, ex in arcs:
            if fx == t.x:
                continue
            # arcs that stay near Σ₂ are above p*'s arc; one through Σ₁ or below it is not
            if fy is None:
                if ex not in ("sigma2", "touches from above"):
                    contained = False
            elif fy < y - 1e-12:
                contained = False
        if contained and (best is None or y < best[1]):
            best = (t, y)
    if best is None:
        raise NotFound("no candidate fold arc contains all other fold arcs")
    return PStar(best[0].location, best[1], tuple(arcs))
