"""Global qualitative classification and chaos diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np
import sympy
from scipy.stats import qmc

from . import rk
from .field import (
    N_GRID, TAU_ON_SIGMA, TAU_ROOT, PiecewiseField, SigmaId, Side, constant_field,
    decompose_sigma, filippov_velocity, parity_report,
)
from .flow import (
    EventKind, IntegrationOptions, Regime, Trajectory, TrajectorySegment, EventRecord,
    integrate,
)
from .manifold import (
    ManifoldModel, QuotientPoint, Sphere, Torus, manifold_diameter, quotient_distance, wrap,
)
from .maps import (
    CycleStability, DisplacementScan, MapRoot, NoReturn, NotFound, Section, SectionPoint,
    crossing_sequence, displacement_roots, find_p_star, periodicity_test,
)

TAU_HIT = 1e-4


class ChaosRefused(RuntimeError):
    """A hypothesis of the chaos diagnostics does not hold."""


@dataclass
class Evidence:
    name: str
    value: object
    tolerance: Optional[float] = None
    passed: Optional[bool] = None

    def to_dict(self) -> dict:
        v = self.value
        if isinstance(v, (np.floating, np.integer)):
            v = v.item()
        return {"name": self.name, "value": v, "tolerance": self.tolerance, "passed": self.passed}


@dataclass
class ClassificationReport:
    verdict: str
    details: dict = field(default_factory=dict)
    evidence: List[Evidence] = field(default_factory=list)

    def add(self, name, value, tolerance=None, passed=None):
        self.evidence.append(Evidence(name, value, tolerance, passed))

    @property
    def passed(self) -> bool:
        return all(e.passed is not False for e in self.evidence)

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "details": self.details,
                "evidence": [e.to_dict() for e in self.evidence], "passed": self.passed}


# ---------------------------------------------------------------------------
# equidistribution


@dataclass(frozen=True)
class EquidistributionStat:
    N: int
    discrepancy: float
    min_return_gap: float

    def to_dict(self) -> dict:
        return {"N": self.N, "discrepancy": self.discrepancy, "min_return_gap": self.min_return_gap}


def star_discrepancy(points: Sequence[float]) -> float:
    """``D*_N = max_i max(i/N - u_(i), u_(i) - (i-1)/N)`` over sorted points."""
    u = np.sort(np.asarray(points, dtype=float) % 1.0)
    n = len(u)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - u), np.max(u - (i - 1) / n)))


def equidistribution_stat(returns: Sequence[float], N: Optional[int] = None) -> EquidistributionStat:
    """Star discrepancy of the first ``N`` returns and their closest approach to the start."""
    r = np.asarray(returns, dtype=float) % 1.0
    N = len(r) if N is None else int(N)
    if N < 2 or N > len(r):
        raise ValueError("need 2 <= N <= len(returns)")
    r = r[:N]
    gaps = np.abs(r[1:] - r[0])
    gaps = np.minimum(gaps, 1.0 - gaps)
    return EquidistributionStat(N, star_discrepancy(r), float(np.min(gaps)))


# ---------------------------------------------------------------------------
# constant normal form


def _unit_sigma(v, name) -> int:
    try:
        iv = int(sympy.sympify(v))
    except (TypeError, ValueError, sympy.SympifyError):
        iv = None
    if iv not in (-1, 1) or float(sympy.sympify(v)) != iv:
        raise ValueError(f"{name} must be +1 or -1 in the normal form, got {v!r}")
    return iv


def _num(v) -> float:
    return float(sympy.sympify(v)) if isinstance(v, str) else float(v)


def _sliding_speed_measured(tr: Trajectory) -> Optional[float]:
    for seg in tr.segments:
        if seg.regime is Regime.SLIDING and seg.t_end - seg.t_start > 0.5 and len(seg.samples) > 2:
            sub = Trajectory([seg], [], tr.branch_policy_used)
            xs = sub.unwrapped_x()
            return (xs[-1][1] - xs[0][1]) / (xs[-1][0] - xs[0][0])
    return None


def classify_regular(a, b, s1, s2, model=Torus, n_returns: int = 1000,
                     opts: Optional[IntegrationOptions] = None) -> ClassificationReport:
    """Verdict for ``X+ = (a, σ₁)``, ``X- = (b, σ₂)``.

    ``a`` and ``b`` may be exact (int, Fraction, string such as ``"sqrt(2)"``);
    floats are accepted only outside the torus crossing case, where
    rationality is not needed.
    """
    model = ManifoldModel.parse(model)
    s1, s2 = _unit_sigma(s1, "s1"), _unit_sigma(s2, "s2")
    af, bf = _num(a), _num(b)
    X = PiecewiseField(constant_field(af, s1), constant_field(bf, s2), model)
    o = opts or IntegrationOptions()
    if s1 * s2 > 0 and model is Torus:
        per = periodicity_test(a, b, s1, s2)
        x0 = 0.2
        if per.kind == "Periodic":
            rep = ClassificationReport("PeriodicFoliation", {"n0": per.n0, "shift_per_turn": per.shift_per_turn})
            xs = crossing_sequence(X, x0, per.n0, replace(o, t_max=1e9))
            observed = None
            for n in range(2, per.n0 + 1, 2):
                gap = abs(((xs[n - 1] - x0) + 0.5) % 1.0 - 0.5)
                if gap < 1e-7:
                    observed = n
                    break
            close = abs(((xs[per.n0 - 1] - x0) + 0.5) % 1.0 - 0.5)
            rep.add("closure_distance_after_n0", close, 1e-7, close < 1e-7)
            rep.add("observed_closure_multiplicity", observed, None, observed == per.n0)
            return rep
        rep = ClassificationReport("Equidistributing", {"shift_per_turn": per.shift_per_turn})
        xs = crossing_sequence(X, x0, 2 * n_returns, replace(o, t_max=1e9, max_step=1.0))
        returns = [x0] + [xs[2 * k + 1] % 1.0 for k in range(n_returns - 1)]
        big = equidistribution_stat(returns, n_returns)
        small = equidistribution_stat(returns, min(100, n_returns))
        rep.details.update({"stat": big.to_dict(), "stat_100": small.to_dict()})
        rep.add(f"D*_{n_returns}", big.discrepancy, 0.05, big.discrepancy < 0.05)
        rep.add("discrepancy_decreases", [small.discrepancy, big.discrepancy], None,
                big.discrepancy < small.discrepancy)
        rep.add("min_return_gap", big.min_return_gap, 1e-9, big.min_return_gap > 1e-9)
        return rep
    if s1 * s2 > 0:
        # sphere, crossing: every orbit runs from one pole to the other
        rep = ClassificationReport("NorthSouth")
        start, goal = ((0.3, 1e-3), 1.0) if s2 > 0 else ((0.3, 1 - 1e-3), 0.0)
        tr = integrate(X, start, replace(o, t_max=10.0))
        ev = tr.final_event
        ok = ev.kind is EventKind.HIT_POLE and ev.location.y == goal
        rep.add("pole_to_pole", ev.kind.value + f"@y={ev.location.y}", None, ok)
        return rep
    attract = s1 < 0 < s2
    speed = (s2 * af - s1 * bf) / (s2 - s1)
    tr = integrate(X, (0.1, 0.25) if attract else (0.1, 0.5), replace(o, t_max=5.0))
    if model is Torus:
        rep = ClassificationReport("SlidingAttractor" if attract else "SlidingRepeller",
                                   {"sliding_sigma": "sigma2" if attract else "sigma1",
                                    "repelling_sigma": "sigma1" if attract else "sigma2",
                                    "sliding_speed": speed})
    else:
        rep = ClassificationReport("SlidingAttractor" if attract else "SlidingRepeller",
                                   {"sliding_sigma": "sigma2", "sliding_speed": speed,
                                    "poles": "repelling" if attract else "attracting"})
    if attract:
        measured = _sliding_speed_measured(tr)
        rep.add("measured_sliding_speed", measured, 1e-6,
                measured is not None and abs(measured - speed) < 1e-6)
    else:
        # the repelling line is a sliding orbit of the reversed flow
        back = integrate(X, (0.1, 0.25), replace(o, t_max=5.0), direction="backward")
        measured = _sliding_speed_measured(back)
        rep.add("measured_sliding_speed_backward", measured, 1e-6,
                measured is not None and abs(measured + speed) < 1e-6)
    return rep


# ---------------------------------------------------------------------------
# region decomposition

DEGENERATE_FINDINGS = ("FlatZeroSet", "DegenerateTangency")


def classify_decomposition(X: PiecewiseField, n_grid: int = N_GRID) -> ClassificationReport:
    """Region labels on every Σ, fold parity and pseudo-equilibria.

    The verdict is ``Degenerate`` when a field is tangent to Σ along an arc
    or has a non-fold tangency, ``ParityViolation`` for an odd fold count,
    and otherwise a signature listing the region labels on each Σ in order.
    """
    decomps = {s: decompose_sigma(X, s, n_grid) for s in X.sigmas}
    parity = parity_report(X, n_grid)
    kinds = {f["kind"] for f in parity["findings"]}
    if kinds & set(DEGENERATE_FINDINGS):
        verdict = "Degenerate"
    elif "ParityViolation" in kinds:
        verdict = "ParityViolation"
    else:
        verdict = ";".join(f"{s.value}:" + ",".join(lab.value for lab in d.labels)
                           for s, d in decomps.items())
    rep = ClassificationReport(verdict, {"sigmas": [d.to_dict() for d in decomps.values()],
                                         "parity": parity})
    rep.add("fold_count_total", parity["fold_count_total"])
    rep.add("pseudo_eq_alternation", parity["alternation_ok"], passed=parity["alternation_ok"])
    for s, d in decomps.items():
        for t in d.tangencies:
            rep.add(f"fold@{s.value}:{t.x:.12f}", t.second_lie, tolerance=TAU_ROOT)
        for pe in d.pseudo_eq:
            rep.add(f"pseudo_eq@{s.value}:{pe.x:.12f}", pe.index, tolerance=TAU_ROOT)
    return rep


# ---------------------------------------------------------------------------
# limit cycles


def catalog_limit_cycles(X: PiecewiseField, section: Optional[Section] = None,
                         opts: Optional[IntegrationOptions] = None, n_grid: int = 512) -> ClassificationReport:
    """Displacement roots, minimal bands between opposite neighbours, center bands.

    The half-return section Λ is used unless the lower-field orbits never
    return to it, in which case the torus falls back to the Σ₁ return map.
    """
    o = opts or IntegrationOptions()
    sec = section or Section.LAMBDA
    scan = displacement_roots(X, o, sec, n_grid)
    if section is None and scan.covered_fraction == 0.0 and X.model is Torus:
        sec = Section.SIGMA1
        scan = displacement_roots(X, o, sec, n_grid)
    roots = scan.roots
    bands = []
    pairs = list(zip(roots, roots[1:]))
    if sec is not Section.LAMBDA and len(roots) > 1:
        pairs.append((roots[-1], roots[0]))
    for r0, r1 in pairs:
        hyper = CycleStability.NON_HYPERBOLIC
        if r0.stability is not hyper and r1.stability is not hyper and r0.stability is not r1.stability:
            bands.append((r0.q.coord, r1.q.coord))
    if bands:
        verdict = "MinimalBands"
    elif scan.center_bands:
        verdict = "CenterBand"
    else:
        verdict = "LimitCycles"
    rep = ClassificationReport(verdict, {
        "section": sec.value, "limit_cycles": [r.to_dict() for r in roots],
        "minimal_bands": [list(b) for b in bands], "center_bands": [list(b) for b in scan.center_bands],
        "coverage": [list(c) for c in scan.coverage], "covered_fraction": scan.covered_fraction})
    rep.add("root_count", len(roots))
    for r in roots:
        rep.add(f"d_prime@{r.q.coord:.10f}", r.d_prime)
    rep.details["scan"] = scan
    return rep


def _lambda_cycle_y(X: PiecewiseField, xi: float, x_target: float, opts: IntegrationOptions) -> float:
    """Height at abscissa ``x_target`` of the lower-field orbit through ``(0, ξ)``."""
    f = X.minus.func
    if x_target == 0.0:
        return xi
    res = rk.solve(lambda s: f(s[0], s[1]), (0.0, xi), 50.0,
                   [rk.Event(lambda s: s[0] - x_target, +1, "x")], opts.rel_tol, opts.abs_tol,
                   opts.max_step, 1e-13, record=False)
    return res.y[1]


def band_containment(X: PiecewiseField, band: Tuple[float, float], samples: int = 100,
                     t_end: float = 50.0, seed: int = 0, tol: float = TAU_ON_SIGMA,
                     opts: Optional[IntegrationOptions] = None) -> dict:
    """Check that lower-field orbits started between two cycles stay between them.

    The two bounding cycles are carried along with each sample, reparametrized
    so that they are compared at the sample's own abscissa at all times.
    """
    o = opts or IntegrationOptions()
    lo, hi = sorted(band)
    f = X.minus.func
    pts = qmc.Halton(d=2, scramble=True, seed=seed).random(samples)
    worst = math.inf
    failures = []
    for x0, u in pts:
        ylo = _lambda_cycle_y(X, lo, x0, o)
        yhi = _lambda_cycle_y(X, hi, x0, o)
        y0 = ylo + u * (yhi - ylo)

        def rhs(s):
            v1, v2 = f(s[0], s[1])
            l1, l2 = f(s[0], s[2])
            h1, h2 = f(s[0], s[3])
            return v1, v2, l2 / l1 * v1, h2 / h1 * v1

        res = rk.solve(rhs, (x0, y0, ylo, yhi), t_end, (), o.rel_tol, o.abs_tol, o.max_step,
                       o.event_tol, record=True)
        m = min(min(y - yl, yh - y) for _, y, yl, yh in res.ys)
        top = max(y for _, y, _, _ in res.ys)
        worst = min(worst, m)
        if m < -tol or top >= 0.5:
            failures.append((float(x0), float(y0)))
    return {"samples": samples, "t_end": t_end, "min_margin": worst, "failures": failures,
            "passed": not failures}


# ---------------------------------------------------------------------------
# chaos diagnostics


@dataclass
class ChaosDiagnostics:
    p_star: QuotientPoint
    through_p_star_fraction: float
    transitivity_witnesses: List[Tuple[Tuple[float, float], Tuple[float, float], float]]
    sensitivity: Tuple[float, int, int]
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"p_star": self.p_star.to_dict(),
                "through_p_star_fraction": self.through_p_star_fraction,
                "transitivity_witnesses": [{"U_center": list(u), "V_center": list(v), "t0": t}
                                           for u, v, t in self.transitivity_witnesses],
                "sensitivity": {"r": self.sensitivity[0], "tested_points": self.sensitivity[1],
                                "passed": self.sensitivity[2]},
                "details": self.details}


def _segment_approach(p, a, b):
    """Closest approach of ``p`` to the segment ``a``-``b`` (lifted near ``p``)."""
    def lift(q):
        dx = ((q[0] - p[0]) + 0.5) % 1.0 - 0.5
        return dx, q[1] - p[1]

    ax, ay = lift(a)
    bx, by = lift(b)
    ex, ey = bx - ax, by - ay
    ll = ex * ex + ey * ey
    w = 0.0 if ll == 0.0 else min(1.0, max(0.0, -(ax * ex + ay * ey) / ll))
    return math.hypot(ax + w * ex, ay + w * ey), w


def _time_to_point(X, p0, target: QuotientPoint, t_max: float, tau: float, opts, direction="forward"):
    """First time the trajectory from ``p0`` comes within ``tau`` of ``target``.

    Events are checked first, then the recorded polyline, so that a
    tangential passage between two samples is not missed.
    """
    def near(e):
        return quotient_distance(e.location, target) < tau

    tr = integrate(X, p0, replace(opts, t_max=t_max), direction=direction, stop_when=near)
    first = tr.final_event.t if near(tr.final_event) else None
    tgt = (target.x, target.y)
    for seg in tr.segments:
        sm = seg.samples
        for (t0, x0, y0), (t1, x1, y1) in zip(sm, sm[1:]):
            if first is not None and t0 >= first:
                break
            d, w = _segment_approach(tgt, (x0, y0), (x1, y1))
            if d < tau:
                return t0 + w * (t1 - t0), tr
    return first, tr


def _halton(n: int, seed: int, dim: int = 2):
    return qmc.Halton(d=dim, scramble=True, seed=seed).random(n)


def _max_pointwise(tr_a: Trajectory, tr_b: Trajectory, t_end: float, dt: float) -> float:
    best = 0.0
    n = int(t_end / dt)
    for k in range(n + 1):
        t = k * dt
        best = max(best, quotient_distance(tr_a.position_at(t), tr_b.position_at(t)))
    return best


def _hausdorff(tr_a: Trajectory, tr_b: Trajectory, model) -> float:
    a = np.array([(x, y) for _, (_, x, y) in tr_a.iter_samples()])
    b = np.array([(x, y) for _, (_, x, y) in tr_b.iter_samples()])

    def directed(p, q):
        dx = np.abs(p[:, None, 0] - q[None, :, 0])
        dx = np.minimum(dx, 1.0 - dx)
        dy = np.abs(p[:, None, 1] - q[None, :, 1])
        if model is Torus:
            dy = np.minimum(dy, 1.0 - dy)
        return float(np.max(np.min(np.hypot(dx, dy), axis=1)))

    return max(directed(a, b), directed(b, a))


def chaos_check(X: PiecewiseField, samples: int = 200, seed: int = 0, tau_hit: float = TAU_HIT,
                radius: float = 0.05, eps: float = 1e-3, t_transit: float = 60.0,
                t_sensitivity: float = 20.0, sensitivity_points: Optional[int] = None,
                opts: Optional[IntegrationOptions] = None) -> ChaosDiagnostics:
    """Transit through p*, transitivity witnesses and sensitivity.

    Refuses when p* does not exist or the Λ displacement changes sign.
    Witnesses join the first passage of U's center through p* with the time
    the p*-orbit needs to reach V; each is replayed before it is counted.
    Sensitivity is measured by the largest pointwise distance over time
    between orbits started ``eps`` apart.
    """
    o = opts or IntegrationOptions()
    try:
        ps = find_p_star(X, o)
    except NotFound as exc:
        raise ChaosRefused(f"no hub fold: {exc}") from exc
    scan = displacement_roots(X, o, Section.LAMBDA, 128)
    if scan.sign_changes():
        raise ChaosRefused("the displacement changes sign on Λ: limit cycles present; "
                           "use catalog_limit_cycles")
    if scan.covered_fraction == 0.0:
        raise ChaosRefused("no lower-field orbit returns to Λ")
    p_star = ps.point
    rng_pts = _halton(samples, seed)
    model = X.model
    starts = []
    for x, y in rng_pts:
        if model is Sphere:
            y = min(max(y, 1e-6), 1 - 1e-6)
        starts.append((float(x), float(y)))

    # (1) transit through p*
    arrive = []
    reached = 0
    considered = 0
    pole_hits = 0
    for p0 in starts:
        t1, tr = _time_to_point(X, p0, p_star, t_transit, tau_hit, o)
        if model is Sphere and tr.final_event.kind is EventKind.HIT_POLE and t1 is None:
            pole_hits += 1
            arrive.append(None)
            continue
        considered += 1
        if t1 is not None:
            reached += 1
        arrive.append(t1)
    frac = reached / considered if considered else 0.0

    # (2) transitivity witnesses
    loop = integrate(X, p_star, replace(o, t_max=t_sensitivity, max_step=0.005))
    # points of V are taken on the free-flight arcs of the p*-orbit; a sliding
    # point has no unique past, so a backward run from it need not meet p*
    loop_pts = [(t, wrap(x, y, model)) for seg, (t, x, y) in loop.iter_samples()
                if seg.regime is not Regime.SLIDING and t > 0.0]
    v_centers = _halton(samples, seed + 1)
    witnesses = []
    attempted = 0
    for (u, t1), (vx, vy) in zip(zip(starts, arrive), v_centers):
        if t1 is None:
            continue
        attempted += 1
        v = wrap(float(vx), float(vy), model) if model is Torus else wrap(float(vx), min(max(float(vy), 1e-6), 1 - 1e-6), model)
        near = [(quotient_distance(q, v), t, q) for t, q in loop_pts]
        dmin, _, q = min(near, key=lambda z: z[0])
        if dmin >= 0.9 * radius:
            continue
        # time from p* to the chosen point of V, read off a backward trajectory from it
        s, _ = _time_to_point(X, q, p_star, t_sensitivity, tau_hit, replace(o, max_step=0.005),
                              direction="backward")
        if s is None:
            continue
        t0 = t1 + s
        land = integrate(X, u, replace(o, t_max=t0)).final_point
        if quotient_distance(land, v) < radius:
            witnesses.append((u, (v.x, v.y), t0))

    # (3) sensitivity
    r = manifold_diameter(model) / 2.0
    n_sens = samples if sensitivity_points is None else sensitivity_points
    passed = 0
    tested = 0
    hausdorff_hits = 0
    dirs = [(math.cos(k * math.pi / 4), math.sin(k * math.pi / 4)) for k in range(8)]
    so = replace(o, t_max=t_sensitivity)
    for p0 in starts[:n_sens]:
        tested += 1
        base = integrate(X, p0, so)
        best = 0.0
        best_h = 0.0
        for cx, cy in dirs:
            y = p0[1] + eps * cy
            if model is Sphere and not (0.0 < y < 1.0):
                continue
            other = integrate(X, (p0[0] + eps * cx, y), so)
            best = max(best, _max_pointwise(base, other, t_sensitivity, 0.02))
            best_h = max(best_h, _hausdorff(base, other, model))
            if best > r:
                break
        if best > r:
            passed += 1
        if best_h > r:
            hausdorff_hits += 1

    details = {
        "q_star": ps.q_star, "considered_points": considered, "pole_hits": pole_hits,
        "witness_pairs_attempted": attempted,
        "witness_success_fraction": len(witnesses) / attempted if attempted else 0.0,
        "tau_hit": tau_hit, "radius": radius, "eps": eps,
        "sensitivity_pass_rate": passed / tested if tested else 0.0,
        "hausdorff_pass_rate": hausdorff_hits / tested if tested else 0.0,
        "displacement_covered_fraction": scan.covered_fraction,
    }
    return ChaosDiagnostics(p_star, frac, witnesses, (r, tested, passed), details)


# ---------------------------------------------------------------------------
# sphere


@dataclass
class SphereDecompositionReport:
    M_h_bands: List[dict]
    M_c_sample_fraction: float
    boundary_orbits: List[Trajectory]
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"M_h_bands": self.M_h_bands, "M_c_sample_fraction": self.M_c_sample_fraction,
                "boundary_orbits": [[list(s) for _, s in tr.iter_samples()][:: max(1, len(list(tr.iter_samples())) // 200)]
                                    for tr in self.boundary_orbits],
                "details": self.details}


def border_tangencies(X: PiecewiseField, n_grid: int = 2048):
    """Tangencies of the lower field with the bottom border I₁ (y = 0).

    Returns ``(x, visible)`` pairs; visible means the tangent orbit bends into
    ``y > 0``.
    """
    from .field import circle_roots
    f = X.minus
    roots, _ = circle_roots(lambda x: f(x, 0.0)[1], n_grid)
    out = []
    for r in roots:
        (v1, v2) = f(r, 0.0)
        (_, _), (d2x, d2y) = f.jacobian(r, 0.0)
        second = v1 * d2x + v2 * d2y
        if abs(second) > 1e-9:
            out.append((r, second > 0))
    return out


def _hits_pole(X, x, c, direction, opts) -> bool:
    """Does the lower-field orbit from ``(x, c)`` reach y = 0 before its next low point?"""
    f = X.minus.func
    sgn = 1.0 if direction > 0 else -1.0
    rhs = lambda s: tuple(sgn * v for v in f(s[0], s[1]))
    evs = [rk.Event(lambda s: s[1], -1, "pole"), rk.Event(lambda s: 0.5 - s[1], -1, "sigma2"),
           rk.Event(lambda s: sgn * f(s[0], s[1])[1], +1, "low")]
    res = rk.solve(rhs, (x, c), 50.0, evs, opts.rel_tol, opts.abs_tol, opts.max_step,
                   1e-13, record=False)
    if res.event is None:
        return False
    # a shallow dip below y = 0 can hide inside one step; the low point shows it
    return res.event.name == "pole" or (res.event.name == "low" and res.y[1] <= 0.0)


def sphere_decomposition(X: PiecewiseField, samples: int = 50, seed: int = 0,
                         tau_hit: float = TAU_HIT, mc_samples: int = 200,
                         opts: Optional[IntegrationOptions] = None) -> SphereDecompositionReport:
    """Homoclinic bands around invisible border tangencies, and the reach of p*.

    Each band is parametrized by the vertical segment ``x = η``, ``0 < y < c``
    above an invisible tangency η of I₁; its top ``c`` is found by bisection
    on "the orbit falls into the south pole in both time directions before
    reaching the neighbouring visible tangencies" and compared with the
    lower-field arc through the bounding visible tangency.
    """
    if X.model is not Sphere:
        raise ValueError("sphere_decomposition needs a sphere model")
    o = opts or IntegrationOptions()
    tangs = border_tangencies(X)
    bands = []
    boundary = []
    notes = []
    if not tangs:
        notes.append("no tangency on the bottom border: no homoclinic bands")
    visible = sorted(x for x, vis in tangs if vis)
    for eta, vis in tangs:
        if vis:
            continue
        right = min((v if v > eta else v + 1.0 for v in visible), default=eta + 1.0)
        left = max((v if v < eta else v - 1.0 for v in visible), default=eta - 1.0)

        def inside(c):
            return _hits_pole(X, eta, c, +1, o) and _hits_pole(X, eta, c, -1, o)

        lo, hi = 1e-8, 0.5 - 1e-8
        if not inside(lo):
            continue
        if inside(hi):
            c_max = hi
        else:
            while hi - lo > 1e-12:
                mid = 0.5 * (lo + hi)
                if inside(mid):
                    lo = mid
                else:
                    hi = mid
            c_max = lo
        # the orbit through the bounding visible tangency, read at x = η
        f = X.minus.func
        arc_heights = []
        for xv, sgn, lim in ((right, -1.0, eta), (left, 1.0, eta)):
            rhs = lambda s, sg=sgn: tuple(sg * v for v in f(s[0], s[1]))
            res = rk.solve(rhs, (xv, 0.0), 50.0,
                           [rk.Event(lambda s, sg=sgn, lm=lim: sg * (s[0] - lm), +1, "eta")],
                           o.rel_tol, o.abs_tol, o.max_step, 1e-13, record=True)
            if res.event is not None:
                arc_heights.append(res.y[1])
                seg = TrajectorySegment(Regime.FREE_MINUS, 0.0, res.t,
                                        [(t, s[0] % 1.0, s[1]) for t, s in zip(res.ts, res.ys)])
                end = EventRecord(EventKind.TIME_LIMIT, wrap(res.y[0], res.y[1], Sphere), res.t,
                                  "fold arc read at the band section")
                seg.terminal_event = end
                boundary.append(Trajectory([seg], [end], None, "backward" if sgn < 0 else "forward"))
        arc = min(arc_heights) if arc_heights else None
        # loop checks with the full Filippov flow
        cs = _halton(samples, seed, 1)[:, 0]
        ok = 0
        fails = []
        for u in cs:
            c = 1e-6 + float(u) * (c_max - 2e-6)
            fw = integrate(X, (eta, c), replace(o, t_max=20.0))
            bw = integrate(X, (eta, c), replace(o, t_max=20.0), direction="backward")
            good = all(tr.final_event.kind is EventKind.HIT_POLE and tr.final_event.location.y == 0.0
                       for tr in (fw, bw))
            ok += good
            if not good:
                fails.append(c)
        bands.append({"eta": eta, "section": [1e-8, c_max], "fold_arc_height": arc,
                      "arc_mismatch": None if arc is None else abs(arc - c_max),
                      "samples": samples, "homoclinic_samples": ok, "failures": fails})

    # M_c: sampled fraction of the sphere whose orbits reach p*
    mc_frac = 0.0
    try:
        ps = find_p_star(X, o).point
    except NotFound:
        ps = None
        notes.append("no hub fold: M_c is empty")
    in_mh = 0
    if ps is not None:
        pts = _halton(mc_samples, seed + 7)
        reach = 0
        for x, y in pts:
            y = min(max(float(y), 1e-6), 1 - 1e-6)
            t1, tr = _time_to_point(X, (float(x), y), ps, 60.0, tau_hit, o)
            if t1 is not None:
                reach += 1
            elif tr.final_event.kind is EventKind.HIT_POLE:
                in_mh += 1
        mc_frac = reach / mc_samples
    details = {"border_tangencies": [{"x": x, "visible": v} for x, v in tangs],
               "pole_bound_fraction": in_mh / mc_samples if ps is not None else None,
               "M_s_fraction": (1.0 - mc_frac - in_mh / mc_samples) if ps is not None else None,
               "notes": notes}
    return SphereDecompositionReport(bands, mc_frac, boundary, details)
