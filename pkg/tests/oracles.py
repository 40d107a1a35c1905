"""Independent reference computations used to derive frozen test values.

Nothing here imports the package: the reference integrator, the closed forms
and the brute-force statistics are separate routes to the same numbers.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# fixed-step RK4


def rk4_step(f, y, h):
    k1 = f(y)
    k2 = f([a + 0.5 * h * b for a, b in zip(y, k1)])
    k3 = f([a + 0.5 * h * b for a, b in zip(y, k2)])
    k4 = f([a + h * b for a, b in zip(y, k3)])
    return [a + h / 6.0 * (p + 2 * q + 2 * r + s) for a, p, q, r, s in zip(y, k1, k2, k3, k4)]


def rk4(f, y0, t, h):
    """State after time ``t`` with fixed step ``h`` (last step shortened)."""
    y = list(y0)
    n = int(math.floor(t / h))
    for _ in range(n):
        y = rk4_step(f, y, h)
    rest = t - n * h
    if rest > 0:
        y = rk4_step(f, y, rest)
    return y


def _bisect_time(f, y, h, g, tol=1e-14):
    """Sub-step ``τ`` in (0, h] at which ``g`` changes sign along an RK4 step from ``y``."""
    g0 = g(y)
    lo, hi = 0.0, h
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if (g(rk4_step(f, y, mid)) > 0) == (g0 > 0):
            lo = mid
        else:
            hi = mid
    return hi


# ---------------------------------------------------------------------------
# brute-force Filippov reference on the torus


def reference_events(plus, minus, p0, t_end, h=0.005):
    """Dynamical events of the Filippov flow from ``p0`` on the torus.

    ``plus`` acts on ``1/2 <= y < 1``, ``minus`` on ``0 <= y < 1/2``. Free
    flight is fixed-step RK4 in the lifted plane; a step that leaves the
    current strip is cut back by bisection to the switching line. Sliding
    follows the time-true Filippov speed until a fold. Returns a list of
    ``(kind, t, x mod 1, y mod 1)`` with kinds CrossSigma, EnterSliding,
    ExitSlidingAtFold and ReachPseudoEquilibrium.
    """
    events = []
    x, y = p0
    t = 0.0
    k = math.floor(2.0 * y)                 # current strip [k/2, (k+1)/2]

    def strip_field(k):
        return plus if k % 2 else minus

    def above_below(k_line, x):
        # line y = k_line/2: strip k_line above it, strip k_line - 1 below
        return strip_field(k_line)(x, 0.5 * k_line), strip_field(k_line - 1)(x, 0.5 * k_line)

    skip = False
    while t < t_end:
        f = strip_field(k)
        rhs = lambda s: list(f(s[0], s[1]))
        lo, hi = 0.5 * k, 0.5 * (k + 1)
        step = min(h, t_end - t)
        yn = rk4_step(rhs, [x, y], step)
        out_lo, out_hi = yn[1] < lo, yn[1] > hi
        if skip or not (out_lo or out_hi):
            skip = False
            x, y = yn
            t += step
            continue
        line = lo if out_lo else hi
        tau = _bisect_time(rhs, [x, y], step, lambda s: s[1] - line)
        x, _ = rk4_step(rhs, [x, y], tau)
        y = line
        t += tau
        k_line = round(2 * line)
        (a1, a2), (b1, b2) = above_below(k_line, x)
        loc = (x % 1.0, y % 1.0)
        if a2 > 0 and b2 > 0:
            events.append(("CrossSigma", t) + loc)
            k = k_line
        elif a2 < 0 and b2 < 0:
            events.append(("CrossSigma", t) + loc)
            k = k_line - 1
        elif b2 > 0 > a2:
            events.append(("EnterSliding", t) + loc)
            x, t, how = _reference_slide(above_below, k_line, x, t, t_end, h)
            loc = (x % 1.0, y % 1.0)
            if how == "pseudo":
                events.append(("ReachPseudoEquilibrium", t) + loc)
                return events
            if how is None:
                return events
            events.append(("ExitSlidingAtFold", t) + loc)
            k = k_line if how == "up" else k_line - 1
            skip = True
        else:
            return events
    return events


def _reference_slide(above_below, k_line, x, t, t_end, h):
    def parts(x):
        (a1, a2), (b1, b2) = above_below(k_line, x)
        return a1, a2, b1, b2

    def speed(s):
        a1, a2, b1, b2 = parts(s[0])
        return [(b2 * a1 - a2 * b1) / (b2 - a2)]

    def exit_g(s):
        _, a2, _, b2 = parts(s[0])
        return min(-a2, b2)

    v0 = speed([x])[0]
    while t < t_end:
        step = min(h, t_end - t)
        xn = rk4_step(speed, [x], step)
        if exit_g(xn) <= 0:
            tau = _bisect_time(speed, [x], step, exit_g)
            x = rk4_step(speed, [x], tau)[0]
            _, a2, _, b2 = parts(x)
            return x, t + tau, "up" if abs(a2) < abs(b2) else "down"
        if speed(xn)[0] * v0 <= 0:
            return xn[0], t + step, "pseudo"
        x = xn[0]
        t += step
    return x, t, None


def random_small_system(rng):
    """Trig-polynomial pair with crossing, sliding and folds; returns (plus, minus, params).

    Both horizontal speeds keep one sign, so the sliding speed never vanishes
    and every sliding segment ends at a fold.
    """
    sign = rng.choice([-1.0, 1.0])
    a0, b0 = sign * rng.uniform(0.6, 1.2), sign * rng.uniform(0.6, 1.2)
    a1, b1 = rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4)
    s1 = rng.choice([-1.0, 1.0]) * rng.uniform(0.5, 1.5)
    s2 = rng.choice([-1.0, 1.0]) * rng.uniform(0.5, 1.5)
    p1, q1 = rng.uniform(0.0, 2.0), rng.uniform(0.0, 2.0)
    params = {"plus": {"v1": {"c0": a0, "cos": [a1]}, "v2": {"c0": s1, "sin": [p1]}},
              "minus": {"v1": {"c0": b0, "cos": [b1]}, "v2": {"c0": s2, "cos": [q1]}}}

    def plus(x, y):
        return a0 + a1 * math.cos(TWO_PI * x), s1 + p1 * math.sin(TWO_PI * x)

    def minus(x, y):
        return b0 + b1 * math.cos(TWO_PI * x), s2 + q1 * math.cos(TWO_PI * x)

    return plus, minus, params


# ---------------------------------------------------------------------------
# closed forms


def limit_cycle_closed_form(eps):
    """``(x₁, α)`` for the limit-cycle example from the exact solution of ``x' = cos 2πx``.

    With ``v = 2πx - π`` the equation becomes ``v' = -2π cos v``, solved by
    ``v(t) = gd(gd⁻¹(v₀) - 2πt)`` with the Gudermannian ``gd(z) = atan(sinh z)``.
    """
    x0 = 0.75 - eps
    v0 = TWO_PI * x0 - math.pi
    z0 = math.asinh(math.tan(v0))
    v = math.atan(math.sinh(z0 - TWO_PI * 0.5))
    x1 = (v + math.pi) / TWO_PI
    return x1, 0.5 / (x0 - x1)


def closure_multiplicity(a: Fraction, b: Fraction, s1: int, s2: int, max_half_turns=10_000):
    """Smallest number of half-turns after which the crossing orbit from Σ₁ is back at its start.

    Brute force in exact arithmetic: the x shift per half-turn alternates
    between the lower and upper fields.
    """
    shift = Fraction(0)
    lower, upper = Fraction(b) / (2 * abs(s2)), Fraction(a) / (2 * abs(s1))
    first, second = (lower, upper) if s2 > 0 else (upper, lower)
    for n in range(1, max_half_turns + 1):
        shift += first if n % 2 else second
        if n % 2 == 0 and shift.denominator == 1:
            return n
    return None


def sliding_speed_closed_form(a, b, s1, s2):
    """Time-true Filippov speed on Σ₂ for ``X+ = (a, σ₁)`` above, ``X- = (b, σ₂)`` below."""
    return (s2 * a - s1 * b) / (s2 - s1)


# ---------------------------------------------------------------------------
# statistics


def star_discrepancy_bruteforce(points):
    """``sup_t |#{x < t}/N - t|`` over all jump points and their left limits, O(N²)."""
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    best = 0.0
    for t in np.concatenate([pts, [1.0]]):
        below = np.count_nonzero(pts < t) / n
        upto = np.count_nonzero(pts <= t) / n
        best = max(best, abs(below - t), abs(upto - t))
    return best


def sphere_diameter_grid(n=41):
    """Largest distance on the sphere model over an ``n × n`` grid, by brute force.

    Both horizontal edges are glued to single points, so a shortest path
    either stays in the x-periodic strip or runs through one of the poles.
    """
    xs = np.linspace(0.0, 1.0, n, endpoint=False)
    ys = np.linspace(0.0, 1.0, n)
    X, Y = np.meshgrid(xs, ys)
    X, Y = X.ravel(), Y.ravel()
    pole = (Y == 0.0) | (Y == 1.0)
    best = 0.0
    for x1, y1, p1 in zip(X, Y, pole):
        dx = np.abs(X - x1)
        dx = np.minimum(dx, 1.0 - dx)
        dx = np.where(pole | p1, 0.0, dx)
        d = np.minimum.reduce([np.hypot(dx, Y - y1), Y + y1, 2.0 - Y - y1])
        best = max(best, float(d.max()))
    return best


# ---------------------------------------------------------------------------
# preset calibration


def lower_turn_displacement(g, k, xi, h=1e-3):
    """Change of height over one turn of ``dy/dx = g(x) + k(y)`` from ``(0, ξ)``.

    The lower fields of the fold-regular presets have unit horizontal speed,
    so the Λ half-return is this one-dimensional problem in ``x``.
    """
    f = lambda s: [1.0, g(s[0]) + k(s[1])]
    return rk4(f, [0.0, xi], 1.0, h)[1] - xi


def calibrate_presets():
    """Frozen constants of the chaotic and two-cycle presets.

    ChaoticTorus: ``g = 0.1 + 0.4 cos 2πx`` has mean 0.1, so every Λ orbit
    rises by exactly 0.1 per turn. TwoCycleBand: ``g = 0.2 cos 2πx``,
    ``k = 0.05 cos 4πy``; the two zeros of the displacement are found by
    bisection on the RK4 turn map.
    """
    chaotic = lower_turn_displacement(lambda x: 0.1 + 0.4 * math.cos(TWO_PI * x), lambda y: 0.0, 0.2)
    g = lambda x: 0.2 * math.cos(TWO_PI * x)
    k = lambda y: 0.05 * math.cos(2 * TWO_PI * y)
    d = lambda xi: lower_turn_displacement(g, k, xi)
    roots = []
    grid = np.linspace(0.01, 0.49, 49)
    vals = [d(v) for v in grid]
    for (x0, v0), (x1, v1) in zip(zip(grid, vals), zip(grid[1:], vals[1:])):
        if v0 * v1 < 0:
            lo, hi = x0, x1
            while hi - lo > 1e-12:
                mid = 0.5 * (lo + hi)
                if (d(mid) > 0) == (v0 > 0):
                    lo = mid
                else:
                    hi = mid
            roots.append(0.5 * (lo + hi))
    return {"chaotic_displacement": chaotic, "two_cycle_roots": roots}
