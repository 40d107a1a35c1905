"""Adaptive Dormand-Prince 5(4) for small autonomous systems, with events.

States are plain tuples; for two or three components this is several times
faster than numpy arrays. Events are located by bisection on the event
function, each probe being a single DP step of the trial length from the
start of the accepted step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

# Dormand-Prince coefficients
_C2, _C3, _C4, _C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
_E1, _E3, _E4, _E5, _E6, _E7 = (71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200,
                                22 / 525, -1 / 40)


class StepFailure(RuntimeError):
    pass


def dp5_step(f, y, h, k1=None):
    """One Dormand-Prince step. Returns ``(y_new, err, k7)``."""
    n = len(y)
    if k1 is None:
        k1 = f(y)
    k2 = f(tuple(y[i] + h * _A21 * k1[i] for i in range(n)))
    k3 = f(tuple(y[i] + h * (_A31 * k1[i] + _A32 * k2[i]) for i in range(n)))
    k4 = f(tuple(y[i] + h * (_A41 * k1[i] + _A42 * k2[i] + _A43 * k3[i]) for i in range(n)))
    k5 = f(tuple(y[i] + h * (_A51 * k1[i] + _A52 * k2[i] + _A53 * k3[i] + _A54 * k4[i])
                 for i in range(n)))
    k6 = f(tuple(y[i] + h * (_A61 * k1[i] + _A62 * k2[i] + _A63 * k3[i] + _A64 * k4[i]
                             + _A65 * k5[i]) for i in range(n)))
    yn = tuple(y[i] + h * (_B1 * k1[i] + _B3 * k3[i] + _B4 * k4[i] + _B5 * k5[i] + _B6 * k6[i])
               for i in range(n))
    k7 = f(yn)
    err = tuple(h * (_E1 * k1[i] + _E3 * k3[i] + _E4 * k4[i] + _E5 * k5[i] + _E6 * k6[i]
                     + _E7 * k7[i]) for i in range(n))
    return yn, err, k7


@dataclass
class Event:
    """Terminal event ``g(y) = 0``.

    ``direction`` +1 fires on ``g`` going from negative to non-negative, -1
    on positive to non-positive, 0 on any sign change. An event whose ``g``
    is exactly zero at the start of a step does not fire on that step.
    """

    g: Callable[[Tuple[float, ...]], float]
    direction: int = 0
    name: str = ""


@dataclass
class SolveResult:
    t: float
    y: Tuple[float, ...]
    event: Optional[Event]
    ts: List[float] = field(default_factory=list)
    ys: List[Tuple[float, ...]] = field(default_factory=list)
    n_steps: int = 0
    failed: bool = False


def _fires(ev: Event, g0: float, g1: float) -> bool:
    if g0 == 0.0:
        return False
    if ev.direction >= 0 and g0 < 0 <= g1:
        return True
    if ev.direction <= 0 and g0 > 0 >= g1:
        return True
    return False


def solve(f, y0: Sequence[float], t_max: float, events: Sequence[Event] = (),
          rtol: float = 1e-10, atol: float = 1e-12, max_step: float = 0.05,
          event_tol: float = 1e-10, h0: Optional[float] = None, h_min: float = 1e-14,
          record: bool = True) -> SolveResult:
    """Integrate ``y' = f(y)`` from ``y0`` for at most ``t_max``.

    Stops at the first event to fire; the returned state is the point at the
    end of the bisection bracket on the far side of the event surface, at
    most ``event_tol`` in time beyond the crossing.
    """
    y = tuple(float(v) for v in y0)
    t = 0.0
    ts, ys = ([0.0], [y]) if record else ([], [])
    if t_max <= 0.0:
        return SolveResult(0.0, y, None, ts, ys)
    k1 = f(y)
    if h0 is None:
        scale = max(max(abs(v) for v in k1), 1e-12)
        h = min(max_step, 0.01 / scale if scale > 1e-12 else max_step)
    else:
        h = min(h0, max_step)
    h = max(h, 1e-8 * max_step)
    gs = [ev.g(y) for ev in events]
    steps = 0
    while t < t_max:
        last = False
        if t + h >= t_max:
            h = t_max - t
            last = True
        yn, err, k7 = dp5_step(f, y, h, k1)
        enorm = 0.0
        for i in range(len(y)):
            sc = atol + rtol * max(abs(y[i]), abs(yn[i]))
            e = abs(err[i]) / sc
            if e > enorm:
                enorm = e
        if enorm > 1.0 or not all(math.isfinite(v) for v in yn):
            if not math.isfinite(enorm):
                enorm = 1e10
            h *= max(0.1, 0.9 * enorm ** -0.2)
            if h < h_min:
                return SolveResult(t, y, None, ts, ys, steps, failed=True)
            continue
        steps += 1
        # events
        fired = None
        fired_t = None
        fired_y = None
        gn = [ev.g(yn) for ev in events]
        for i, ev in enumerate(events):
            if _fires(ev, gs[i], gn[i]):
                te, ye = _locate(f, y, k1, h, ev, gs[i], event_tol)
                if fired is None or te < fired_t:
                    fired, fired_t, fired_y = ev, te, ye
        if fired is not None:
            t_ev = t + fired_t
            if record:
                ts.append(t_ev)
                ys.append(fired_y)
            return SolveResult(t_ev, fired_y, fired, ts, ys, steps)
        t = t_max if last else t + h
        y, k1, gs = yn, k7, gn
        if record:
            ts.append(t)
            ys.append(y)
        fac = 5.0 if enorm == 0.0 else min(5.0, max(0.2, 0.9 * enorm ** -0.2))
        h = min(h * fac, max_step)
    return SolveResult(t, y, None, ts, ys, steps)


def _locate(f, y, k1, h, ev: Event, g0: float, tol: float):
    lo, hi = 0.0, h
    y_hi, _, _ = dp5_step(f, y, h, k1)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        ym, _, _ = dp5_step(f, y, mid, k1)
        if _fires(ev, g0, ev.g(ym)):
            hi, y_hi = mid, ym
        else:
            lo = mid
    return hi, y_hi
