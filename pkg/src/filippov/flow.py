"""Event-driven Filippov integration on the quotient square.

A trajectory is a concatenation of free flights of ``X+`` and ``X-`` and of
sliding along Σ with the Filippov convex combination. Free flights use
:mod:`filippov.rk`; Σ contacts are located by bisection and classified with
:func:`filippov.field.classify_point` logic, seen from the arriving side.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple, Union

from . import rk
from .field import (
    TAU_SIGN, PiecewiseField, RegionLabel, Side, SigmaId, TangencyPoint, Visibility,
    above_side, below_side, decompose_sigma, find_tangencies, side_y, sigma_y,
)
from .manifold import POLE_TOL, QuotientPoint, Sphere, Torus, pole_status, quotient_distance, wrap


class Regime(enum.Enum):
    FREE_PLUS = "free_plus"
    FREE_MINUS = "free_minus"
    SLIDING = "sliding"


class EventKind(enum.Enum):
    HIT_SIGMA = "HitSigma"
    CROSS_SIGMA = "CrossSigma"
    ENTER_SLIDING = "EnterSliding"
    EXIT_SLIDING_AT_FOLD = "ExitSlidingAtFold"
    REACH_PSEUDO_EQUILIBRIUM = "ReachPseudoEquilibrium"
    HIT_POLE = "HitPole"
    WRAP_X = "WrapX"
    WRAP_Y = "WrapY"
    BRANCH_CHOICE = "BranchChoice"
    TIME_LIMIT = "TimeLimit"
    STEP_FAILURE = "StepFailure"


DYNAMICAL_EVENTS = frozenset({
    EventKind.CROSS_SIGMA, EventKind.ENTER_SLIDING, EventKind.EXIT_SLIDING_AT_FOLD,
    EventKind.REACH_PSEUDO_EQUILIBRIUM, EventKind.HIT_POLE,
})


@dataclass(frozen=True)
class EventRecord:
    kind: EventKind
    location: QuotientPoint
    t: float
    detail: str = ""

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "t": self.t, "x": self.location.x,
                "y": self.location.y, "detail": self.detail}


@dataclass
class TrajectorySegment:
    regime: Regime
    t_start: float
    t_end: float
    samples: List[Tuple[float, float, float]]
    terminal_event: Optional[EventRecord] = None
    sigma_id: Optional[SigmaId] = None


class BranchMode(enum.Enum):
    DETERMINISTIC_RIGHT = "deterministic_right"
    DETERMINISTIC_LEFT = "deterministic_left"
    ENUMERATE = "enumerate"


@dataclass(frozen=True)
class BranchPolicy:
    mode: BranchMode = BranchMode.DETERMINISTIC_RIGHT
    depth: int = 0

    @classmethod
    def enumerate_to_depth(cls, k: int) -> "BranchPolicy":
        if k < 0:
            raise ValueError("depth must be non-negative")
        return cls(BranchMode.ENUMERATE, k)

    def to_dict(self) -> dict:
        return {"mode": self.mode.value, "depth": self.depth}


DeterministicRight = BranchPolicy(BranchMode.DETERMINISTIC_RIGHT)
DeterministicLeft = BranchPolicy(BranchMode.DETERMINISTIC_LEFT)


@dataclass(frozen=True)
class IntegrationOptions:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = 0.05
    t_max: float = 100.0
    event_tol: float = 1e-10
    pole_tol: float = POLE_TOL
    max_events: int = 1_000_000
    record: bool = True

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol", "max_step", "t_max", "event_tol", "pole_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass
class Trajectory:
    segments: List[TrajectorySegment]
    events: List[EventRecord]
    branch_policy_used: BranchPolicy
    direction: str = "forward"
    branch_id: str = ""

    @property
    def final_event(self) -> Optional[EventRecord]:
        return self.segments[-1].terminal_event if self.segments else None

    @property
    def t_end(self) -> float:
        return self.segments[-1].t_end if self.segments else 0.0

    @property
    def final_point(self) -> QuotientPoint:
        return self.final_event.location

    def events_of(self, *kinds: EventKind) -> List[EventRecord]:
        return [e for e in self.events if e.kind in kinds]

    def dynamical_events(self) -> List[EventRecord]:
        return [e for e in self.events if e.kind in DYNAMICAL_EVENTS]

    def iter_samples(self):
        for seg in self.segments:
            for s in seg.samples:
                yield seg, s

    def unwrapped_x(self) -> List[Tuple[float, float]]:
        """``(t, x)`` at every sample with x lifted to the real line."""
        out = []
        lift = prev = None
        for _, (t, x, _y) in self.iter_samples():
            if lift is None:
                lift = prev = x
            else:
                lift += ((x - prev) + 0.5) % 1.0 - 0.5
                prev = x
            out.append((t, lift))
        return out

    def position_at(self, t: float) -> QuotientPoint:
        """Position at trajectory time ``t`` (linear between recorded samples)."""
        model = self.final_event.location.model
        for seg in self.segments:
            if seg.t_start <= t <= seg.t_end and seg.samples:
                s = seg.samples
                lo, hi = 0, len(s) - 1
                if t <= s[0][0]:
                    return wrap(s[0][1], s[0][2], model)
                if t >= s[-1][0]:
                    return wrap(s[-1][1], s[-1][2], model)
                while hi - lo > 1:
                    mid = (lo + hi) // 2
                    if s[mid][0] <= t:
                        lo = mid
                    else:
                        hi = mid
                t0, x0, y0 = s[lo]
                t1, x1, y1 = s[hi]
                w = 0.0 if t1 == t0 else (t - t0) / (t1 - t0)
                dx = (x1 - x0 + 0.5) % 1.0 - 0.5
                return wrap(x0 + w * dx, y0 + w * (y1 - y0), model)
        return self.final_point

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "x", "y", "regime", "event"])
        for seg in self.segments:
            for i, (t, x, y) in enumerate(seg.samples):
                ev = ""
                if i == len(seg.samples) - 1 and seg.terminal_event is not None:
                    ev = seg.terminal_event.kind.value
                w.writerow([repr(t), repr(x), repr(y), seg.regime.value, ev])
        return buf.getvalue()

    def events_jsonl(self) -> str:
        return "".join(json.dumps(e.to_dict()) + "\n" for e in self.events)


class _Stop(Exception):
    pass


# ---------------------------------------------------------------------------


def _outward(side: Side, sigma_id: SigmaId) -> float:
    """Sign of v2 for motion from Σ into ``side``."""
    return 1.0 if side is above_side(sigma_id) else -1.0


def _other(side: Side) -> Side:
    return Side.MINUS if side is Side.PLUS else Side.PLUS


class _Integrator:
    def __init__(self, X: PiecewiseField, opts: IntegrationOptions, policy: BranchPolicy,
                 direction: str, stop_when=None):
        self.stop_when = stop_when
        self.X = X
        self.opts = opts
        self.policy = policy
        self.direction = direction
        self.model = X.model
        self._tangs = {}

    # -- helpers ------------------------------------------------------------
    def tangencies(self, sigma_id: SigmaId) -> List[TangencyPoint]:
        if sigma_id not in self._tangs:
            self._tangs[sigma_id] = decompose_sigma(self.X, sigma_id).tangencies
        return self._tangs[sigma_id]

    def field_at_sigma(self, side: Side, sigma_id: SigmaId, x: float):
        return self.X.side_field(side)(x, side_y(sigma_id, side))

    def point(self, x, y) -> QuotientPoint:
        return wrap(x, y, self.model)

    # -- driver -------------------------------------------------------------
    def run(self, p0: QuotientPoint, branch_prefix: str = "", forced: Optional[List[Side]] = None):
        """Integrate, returning a list of trajectories (one unless enumerating)."""
        self.segments: List[TrajectorySegment] = []
        self.events: List[EventRecord] = []
        self.t = 0.0
        self.n_events = 0
        self.choices: List[Side] = list(forced or [])
        self.branch_points: List[Tuple[int, str]] = []
        self.pending: List[List[Side]] = []
        # each handler returns the next (handler, args) pair, so long runs
        # do not grow the call stack
        step = (self._start, (p0,))
        try:
            while step is not None:
                fn, args = step
                step = fn(*args)
        except _Stop:
            pass
        traj = Trajectory(self.segments, self.events, self.policy, self.direction,
                          branch_prefix)
        return traj

    def log(self, kind: EventKind, x: float, y: float, detail: str = "", t: Optional[float] = None):
        ev = EventRecord(kind, self.point(x, y), self.t if t is None else t, detail)
        self.events.append(ev)
        self.n_events += 1
        if self.stop_when is not None and self.stop_when(ev):
            if self.segments:
                self.segments[-1].terminal_event = ev
            else:
                self.segments.append(TrajectorySegment(Regime.SLIDING if self._sigma_at(y) else
                                                       (Regime.FREE_PLUS if y > 0.5 else Regime.FREE_MINUS),
                                                       ev.t, ev.t, [(ev.t, ev.location.x, ev.location.y)], ev))
            raise _Stop
        if self.n_events > self.opts.max_events:
            self.finish(Regime.SLIDING if not self.segments else self.segments[-1].regime,
                        EventKind.STEP_FAILURE, x, y, "event count limit exceeded")
        return ev

    def finish(self, regime, kind, x, y, detail=""):
        ev = EventRecord(kind, self.point(x, y), self.t, detail)
        self.events.append(ev)
        if self.segments:
            self.segments[-1].terminal_event = ev
        else:
            self.segments.append(TrajectorySegment(regime, self.t, self.t, [(self.t, ev.location.x, ev.location.y)], ev))
        raise _Stop

    def choose(self, options: Sequence[Side], x: float, y: float, what: str) -> Side:
        if self.policy.mode is BranchMode.DETERMINISTIC_LEFT:
            pick = Side.MINUS if Side.MINUS in options else options[0]
        elif self.policy.mode is BranchMode.ENUMERATE:
            k = len(self.branch_points)
            if k < len(self.choices):
                pick = self.choices[k]
            else:
                pick = options[0]
                if k < self.policy.depth:
                    for alt in options[1:]:
                        self.pending.append(self.choices[:k] + [alt])
                self.choices.append(pick)
        else:
            pick = Side.PLUS if Side.PLUS in options else options[0]
        self.branch_points.append((len(self.events), pick.value))
        self.log(EventKind.BRANCH_CHOICE, x, y, f"{what}: leave into {pick.value}")
        return pick

    # -- start --------------------------------------------------------------
    def _start(self, p0: QuotientPoint):
        x, y = p0.x, p0.y
        if self.model is Sphere and pole_status(p0).at_pole:
            self.finish(Regime.FREE_MINUS if y < 0.5 else Regime.FREE_PLUS, EventKind.HIT_POLE, x, y,
                        "start at a pole (singular point)")
        on = self._sigma_at(y)
        if on is None:
            side = Side.PLUS if y > 0.5 else Side.MINUS
            return self._loop_free, (side, x, y)
        sigma_id = on
        label = self._label(sigma_id, x)
        if label is RegionLabel.CROSSING:
            a = self.field_at_sigma(above_side(sigma_id), sigma_id, x)
            side = above_side(sigma_id) if a[1] > 0 else below_side(sigma_id)
            return self._depart, (side, sigma_id, x)
        elif label is RegionLabel.STABLE_SLIDING:
            return self._slide, (sigma_id, x)
        elif label is RegionLabel.UNSTABLE_SLIDING:
            side = self.choose([Side.PLUS, Side.MINUS], x, sigma_y(sigma_id), "start on unstable sliding")
            return self._depart, (side, sigma_id, x)
        else:
            return self._start_tangential, (sigma_id, x)

    def _sigma_at(self, y: float) -> Optional[SigmaId]:
        tol = 1e-9
        if abs(y - 0.5) <= tol:
            return SigmaId.SIGMA2
        if self.model is Torus and (y <= tol or y >= 1.0 - tol):
            return SigmaId.SIGMA1
        return None

    def _label(self, sigma_id, x) -> RegionLabel:
        a = self.field_at_sigma(above_side(sigma_id), sigma_id, x)[1]
        b = self.field_at_sigma(below_side(sigma_id), sigma_id, x)[1]
        if abs(a) <= TAU_SIGN or abs(b) <= TAU_SIGN:
            return RegionLabel.TANGENTIAL
        if a * b > 0:
            return RegionLabel.CROSSING
        return RegionLabel.STABLE_SLIDING if a < 0 < b else RegionLabel.UNSTABLE_SLIDING

    def _start_tangential(self, sigma_id, x):
        # a side whose field points strictly away can be followed; otherwise
        # a visible fold's own side
        opts = []
        for side in (Side.PLUS, Side.MINUS):
            v2 = self.field_at_sigma(side, sigma_id, x)[1] * _outward(side, sigma_id)
            if v2 > TAU_SIGN:
                opts.append(side)
        if not opts:
            for t in self.tangencies(sigma_id):
                if abs(t.x - x) < 1e-7 and t.visibility is Visibility.VISIBLE:
                    opts.append(t.side)
        if not opts:
            # both fields push into Σ (or are tangent without leaving): slide
            return self._slide, (sigma_id, x)
        side = self.choose(opts, x, sigma_y(sigma_id), "start at a tangency") if len(opts) > 1 else opts[0]
        if len(opts) == 1:
            self.log(EventKind.BRANCH_CHOICE, x, sigma_y(sigma_id),
                     f"start at a tangency: ejection into {side.value}")
        return self._depart, (side, sigma_id, x)

    # -- free flight --------------------------------------------------------
    def _bounds(self, side: Side):
        """Event surfaces for free flight in ``side``: list of (name, g, sigma or pole)."""
        o = self.opts
        if side is Side.PLUS:
            evs = [rk.Event(lambda s: s[1] - 0.5, -1, "sigma2")]
            if self.model is Torus:
                evs.append(rk.Event(lambda s: 1.0 - s[1], -1, "sigma1"))
            else:
                evs.append(rk.Event(lambda s: (1.0 - o.pole_tol) - s[1], -1, "north"))
        else:
            evs = [rk.Event(lambda s: 0.5 - s[1], -1, "sigma2")]
            if self.model is Torus:
                evs.append(rk.Event(lambda s: s[1], -1, "sigma1"))
            else:
                evs.append(rk.Event(lambda s: s[1] - o.pole_tol, -1, "south"))
        return evs

    def _rhs(self, side: Side):
        f = self.X.side_field(side).func
        return lambda s: f(s[0], s[1])

    def _depart(self, side: Side, sigma_id: SigmaId, x: float):
        """Leave Σ into ``side`` and continue with free flight."""
        y = side_y(sigma_id, side)
        # short departure leg without the departure surface, so that a
        # tangential start cannot re-trigger it
        o = self.opts
        remaining = o.t_max - self.t
        leg = min(1e-3, remaining)
        evs = [e for e in self._bounds(side) if e.name != self._surface_name(sigma_id)]
        res = rk.solve(self._rhs(side), (x, y), leg, evs, o.rel_tol, o.abs_tol, o.max_step,
                       o.event_tol, record=o.record)
        seg = self._open_segment(Regime.FREE_PLUS if side is Side.PLUS else Regime.FREE_MINUS, res)
        if res.failed:
            self.finish(seg.regime, EventKind.STEP_FAILURE, *res.y, "step size underflow")
        if res.event is not None:
            return self._on_boundary, (side, res, seg)
        if self.t >= o.t_max:
            self.finish(seg.regime, EventKind.TIME_LIMIT, *res.y)
        nx, ny = res.y
        g = (ny - y) * _outward(side, sigma_id)
        if g <= 0:
            # did not leave: treat as an immediate return to Σ
            return self._on_sigma, (sigma_id, side, nx)
        return self._loop_free, (side, nx, ny, seg)

    def _surface_name(self, sigma_id: SigmaId) -> str:
        return "sigma2" if sigma_id is SigmaId.SIGMA2 else "sigma1"

    def _open_segment(self, regime: Regime, res: rk.SolveResult, seg: Optional[TrajectorySegment] = None,
                      sigma_id=None, slide_y: Optional[float] = None):
        t0 = self.t
        samples = []
        for tt, yy in zip(res.ts, res.ys):
            px, py = (yy[0], yy[1]) if slide_y is None else (yy[0], slide_y)
            q = self.point(px, py) if not (self.model is Sphere and (py <= 0 or py >= 1)) else None
            if q is None:
                q = QuotientPoint(px % 1.0, min(max(py, 0.0), 1.0), self.model)
            samples.append((t0 + tt, q.x, q.y))
        self._log_wraps(res, t0)
        self.t = t0 + res.t
        if seg is not None and seg.regime is regime and seg.terminal_event is None:
            if samples:
                seg.samples.extend(samples[1:])
            seg.t_end = self.t
            return seg
        new = TrajectorySegment(regime, t0, self.t, samples, None, sigma_id)
        self.segments.append(new)
        return new

    def _log_wraps(self, res: rk.SolveResult, t0: float):
        if not res.ys:
            return
        prev = math.floor(res.ys[0][0])
        for tt, yy in zip(res.ts[1:], res.ys[1:]):
            cur = math.floor(yy[0])
            if cur != prev:
                self.log(EventKind.WRAP_X, 0.0, yy[1] if len(yy) > 1 else 0.0,
                         "x crosses the identified vertical edge", t=t0 + tt)
                prev = cur

    def _loop_free(self, side: Side, x: float, y: float, seg: Optional[TrajectorySegment] = None):
        o = self.opts
        res = rk.solve(self._rhs(side), (x, y), o.t_max - self.t, self._bounds(side),
                       o.rel_tol, o.abs_tol, o.max_step, o.event_tol, record=o.record)
        seg = self._open_segment(Regime.FREE_PLUS if side is Side.PLUS else Regime.FREE_MINUS, res, seg)
        if res.failed:
            self.finish(seg.regime, EventKind.STEP_FAILURE, *res.y, "step size underflow")
        if res.event is None:
            self.finish(seg.regime, EventKind.TIME_LIMIT, *res.y)
        return self._on_boundary, (side, res, seg)

    def _on_boundary(self, side: Side, res: rk.SolveResult, seg: TrajectorySegment):
        name = res.event.name
        x = res.y[0]
        if name in ("north", "south"):
            yy = 1.0 if name == "north" else 0.0
            self._snap_last(seg, x, yy)
            self.finish(seg.regime, EventKind.HIT_POLE, x, yy, name)
        sigma_id = SigmaId.SIGMA2 if name == "sigma2" else SigmaId.SIGMA1
        self._snap_last(seg, x, side_y(sigma_id, side))
        return self._on_sigma, (sigma_id, side, x)

    def _snap_last(self, seg: TrajectorySegment, x: float, y: float):
        if seg.samples:
            t = seg.samples[-1][0]
            seg.samples[-1] = (t, x % 1.0, y if self.model is Torus and y < 1.0 else (y if self.model is Sphere else 0.0))
            if self.model is Torus and y >= 1.0:
                seg.samples[-1] = (t, x % 1.0, 1.0)

    def _on_sigma(self, sigma_id: SigmaId, arriving: Side, x: float):
        """Arrival at Σ from ``arriving``; decide crossing or sliding."""
        x = x % 1.0
        ys = sigma_y(sigma_id)
        other = _other(arriving)
        o2 = self.field_at_sigma(other, sigma_id, x)[1] * _outward(other, sigma_id)
        if o2 > TAU_SIGN:
            cross = True
        elif o2 < -TAU_SIGN:
            cross = False
        else:
            cross = any(abs(t.x - x) < 1e-7 and t.side is other and t.visibility is Visibility.VISIBLE
                        for t in self.tangencies(sigma_id))
            self.log(EventKind.HIT_SIGMA, x, ys, f"tangential contact on {sigma_id.value}")
        if cross:
            self.log(EventKind.CROSS_SIGMA, x, ys, f"{sigma_id.value}: {arriving.value} -> {other.value}")
            if sigma_id is SigmaId.SIGMA1:
                self.log(EventKind.WRAP_Y, x, ys, "y crosses the identified horizontal edge")
            return self._depart, (other, sigma_id, x)
        else:
            self.log(EventKind.ENTER_SLIDING, x, ys, f"{sigma_id.value}")
            return self._slide, (sigma_id, x)

    # -- sliding ------------------------------------------------------------
    def _slide(self, sigma_id: SigmaId, x: float):
        X, o = self.X, self.opts
        ys = sigma_y(sigma_id)
        ya = side_y(sigma_id, above_side(sigma_id))
        yb = side_y(sigma_id, below_side(sigma_id))
        fa = X.side_field(above_side(sigma_id)).func
        fb = X.side_field(below_side(sigma_id)).func

        def vel(s):
            a1, a2 = fa(s[0], ya)
            b1, b2 = fb(s[0], yb)
            den = b2 - a2
            return ((b2 * a1 - a2 * b1) / den if den != 0.0 else 0.0,)

        v0 = vel((x,))[0]
        decomp = decompose_sigma(X, sigma_id)
        iv = decomp.interval_at(x)
        # pseudo-equilibrium ahead in the direction of motion
        target = None
        if abs(v0) <= o.event_tol:
            self._open_segment(Regime.SLIDING, rk.SolveResult(0.0, (x,), None, [0.0], [(x,)]),
                               sigma_id=sigma_id, slide_y=ys)
            self.finish(Regime.SLIDING, EventKind.REACH_PSEUDO_EQUILIBRIUM, x, ys, "start at a zero of the sliding field")
        sgn = 1.0 if v0 > 0 else -1.0
        best = None
        for pe in decomp.pseudo_eq:
            for shift in (-1.0, 0.0, 1.0):
                px = pe.x + shift
                d = (px - x) * sgn
                if d > 0 and (best is None or d < best):
                    # must lie in the same sliding interval
                    if self._same_interval(iv, x, px):
                        best, target = d, px
        evs = [rk.Event(lambda s: fa(s[0], ya)[1], +1, "exit_above"),
               rk.Event(lambda s: fb(s[0], yb)[1], -1, "exit_below")]
        if target is not None:
            tgt = target
            evs.append(rk.Event(lambda s: sgn * (s[0] - tgt) + o.event_tol, +1, "pseudo_eq"))
        res = rk.solve(vel, (x,), o.t_max - self.t, evs, o.rel_tol, o.abs_tol, o.max_step,
                       o.event_tol, record=o.record)
        seg = self._open_segment(Regime.SLIDING, res, sigma_id=sigma_id, slide_y=ys)
        xe = res.y[0]
        if res.failed:
            self.finish(Regime.SLIDING, EventKind.STEP_FAILURE, xe, ys, "step size underflow")
        if res.event is None:
            self.finish(Regime.SLIDING, EventKind.TIME_LIMIT, xe, ys)
        if res.event.name == "pseudo_eq":
            self.finish(Regime.SLIDING, EventKind.REACH_PSEUDO_EQUILIBRIUM, target, ys,
                        "asymptotic stop at an attracting pseudo-equilibrium")
        side = above_side(sigma_id) if res.event.name == "exit_above" else below_side(sigma_id)
        xs = xe % 1.0
        for t in self.tangencies(sigma_id):
            if t.side is side and abs(((t.x - xs) + 0.5) % 1.0 - 0.5) < 1e-7:
                xs = t.x
                break
        if seg.samples:
            seg.samples[-1] = (seg.samples[-1][0], xs, ys)
        ev = EventRecord(EventKind.EXIT_SLIDING_AT_FOLD, self.point(xs, ys), self.t,
                         f"{sigma_id.value}: ejected into {side.value}")
        seg.terminal_event = ev
        self.events.append(ev)
        self.n_events += 1
        if self.stop_when is not None and self.stop_when(ev):
            raise _Stop
        return self._depart, (side, sigma_id, xs)

    @staticmethod
    def _same_interval(iv, x, px) -> bool:
        lo, hi = min(x, px), max(x, px)
        # interval may be given modulo 1; test the lifted copy containing x
        for shift in (-1.0, 0.0, 1.0):
            s, e = iv.start + shift, iv.end + shift
            if s - 1e-12 <= lo and hi <= e + 1e-12:
                return True
        return False


def integrate(X: PiecewiseField, p0, opts: Optional[IntegrationOptions] = None,
              direction: str = "forward", policy: BranchPolicy = DeterministicRight,
              stop_when=None) -> Union[Trajectory, List[Trajectory]]:
    """Filippov trajectory of ``X`` from ``p0``.

    ``direction='backward'`` integrates the negated field; the returned times
    are elapsed backward time. Under an enumerating branch policy a list of
    trajectories is returned, ordered by branch identifier. ``stop_when`` is
    an optional predicate on event records that ends the run at the first
    event it accepts.
    """
    opts = opts or IntegrationOptions()
    if not isinstance(p0, QuotientPoint):
        p0 = wrap(p0[0], p0[1], X.model)
    if direction not in ("forward", "backward"):
        raise ValueError("direction must be 'forward' or 'backward'")
    field_ = X if direction == "forward" else _negated_cached(X)
    if policy.mode is not BranchMode.ENUMERATE:
        return _Integrator(field_, opts, policy, direction, stop_when).run(p0)
    out = []
    queue: List[List[Side]] = [[]]
    while queue:
        forced = queue.pop(0)
        it = _Integrator(field_, opts, policy, direction, stop_when)
        bid = "".join("U" if s is Side.PLUS else "D" for s in forced)
        traj = it.run(p0, forced=forced)
        traj.branch_id = "".join("U" if c == "plus" else "D" for _, c in it.branch_points)
        out.append(traj)
        queue.extend(it.pending)
    out.sort(key=lambda tr: tr.branch_id)
    return out


def _negated_cached(X: PiecewiseField) -> PiecewiseField:
    key = ("negated",)
    if key not in X._cache:
        X._cache[key] = X.negated()
    return X._cache[key]


def integrate_smooth(f, p0: Tuple[float, float], t_max: float, events: Sequence[rk.Event] = (),
                     opts: Optional[IntegrationOptions] = None) -> rk.SolveResult:
    """Plain flow of one smooth field in lifted square coordinates."""
    o = opts or IntegrationOptions()
    func = f.func if hasattr(f, "func") else f
    return rk.solve(lambda s: func(s[0], s[1]), p0, t_max, events, o.rel_tol, o.abs_tol,
                    o.max_step, o.event_tol, record=o.record)


def detect_fold_connection(X: PiecewiseField, tol: float = 1e-6,
                           opts: Optional[IntegrationOptions] = None, t_max: float = 20.0):
    """Pairs of folds joined by an orbit of the folding field.

    From every fold, the orbit of that fold's field is followed (forward and
    backward) inside its half of the square until it meets Σ again; the
    closest approach to any other fold of the same field on that Σ within
    ``tol`` is reported.
    """
    o = replace(opts or IntegrationOptions(), record=True)
    tangs = []
    for s in X.sigmas:
        tangs.extend(t for t in find_tangencies(X, s)[0] if t.visibility is not Visibility.DEGENERATE)
    pairs = []
    for t in tangs:
        for sign in (1.0, -1.0):
            miss = fold_orbit_miss(X, t, tangs, sign, o, t_max)
            if miss is not None and miss[0] <= tol:
                pair = (t, miss[1]) if sign > 0 else (miss[1], t)
                if not any(p[0] is pair[0] and p[1] is pair[1] for p in pairs):
                    pairs.append(pair)
    return pairs


def fold_arc_landing(X: PiecewiseField, t: TangencyPoint, sign: float, opts: IntegrationOptions,
                     t_max: float = 20.0, touch_tol: float = 1e-3):
    """Where the folding field's orbit from ``t`` next meets the border of its half-square.

    Returns ``(border, x, gap)`` with border ``"lo"`` or ``"hi"``, ``x`` reduced
    mod 1 and ``gap`` the distance still left to the border. A transversal
    landing has gap 0; an orbit that turns back within ``touch_tol`` of the
    border (a tangential or near-tangential return) lands at its turning point.
    None when the orbit leaves the half-square at once (invisible fold) or
    does not come back within ``t_max``.
    """
    side = t.side
    f = X.side_field(side).func
    y0 = side_y(t.sigma_id, side)
    lo, hi = (0.5, 1.0) if side is Side.PLUS else (0.0, 0.5)
    rhs = lambda s: tuple(sign * v for v in f(s[0], s[1]))
    # step off the fold first, so the departure contact is not reported
    first = rk.solve(rhs, (t.x, y0), 1e-3, (), opts.rel_tol, opts.abs_tol, opts.max_step,
                     opts.event_tol, record=False)
    if not (lo <= first.y[1] <= hi):
        return None
    evs = [rk.Event(lambda s: s[1] - lo, -1, "lo"), rk.Event(lambda s: hi - s[1], -1, "hi"),
           rk.Event(lambda s: rhs(s)[1], 1, "min"), rk.Event(lambda s: rhs(s)[1], -1, "max")]
    y, left = first.y, t_max
    while left > 0:
        res = rk.solve(rhs, y, left, evs, opts.rel_tol, opts.abs_tol, opts.max_step,
                       opts.event_tol, record=False)
        if res.event is None:
            return None
        name = res.event.name
        if name in ("lo", "hi"):
            return name, res.y[0] % 1.0, 0.0
        border, gap = ("lo", res.y[1] - lo) if name == "min" else ("hi", hi - res.y[1])
        if gap <= touch_tol:
            return border, res.y[0] % 1.0, max(gap, 0.0)
        y, left = res.y, left - res.t
    return None


def fold_return_gap(X: PiecewiseField, t: TangencyPoint, sign: float = 1.0,
                    opts: Optional[IntegrationOptions] = None, t_max: float = 20.0) -> float:
    """Signed height of the fold orbit's next turning point of the same kind.

    The folding field is followed past the borders of its half-square until
    the normal velocity turns back toward ``t``'s Σ as it did at ``t``. The
    result is the offset from that Σ, positive inside the half-square. Its
    sign changes where the fold arc connects to a fold, so it suits
    bisection over a parameter. NaN when no turning point occurs in time.
    """
    o = opts or IntegrationOptions()
    side = t.side
    f = X.side_field(side).func
    y0 = side_y(t.sigma_id, side)
    inward = 1.0 if y0 < 0.5 or (y0 == 0.5 and side is Side.PLUS) else -1.0
    rhs = lambda s: tuple(sign * v for v in f(s[0], s[1]))
    first = rk.solve(rhs, (t.x, y0), 1e-3, (), o.rel_tol, o.abs_tol, o.max_step, o.event_tol,
                     record=False)
    # turning back toward the border: inward velocity goes from + to -
    ev = rk.Event(lambda s: inward * rhs(s)[1], -1, "turn")
    res = rk.solve(rhs, first.y, t_max, [ev], o.rel_tol, o.abs_tol, o.max_step, o.event_tol,
                   record=False)
    if res.event is None:
        return float("nan")
    ev = rk.Event(lambda s: inward * rhs(s)[1], 1, "extremum")
    res = rk.solve(rhs, res.y, t_max, [ev], o.rel_tol, o.abs_tol, o.max_step, o.event_tol,
                   record=False)
    if res.event is None:
        return float("nan")
    return inward * (res.y[1] - y0)


def fold_orbit_miss(X: PiecewiseField, t: TangencyPoint, tangs: Sequence[TangencyPoint], sign: float,
                    opts: IntegrationOptions, t_max: float = 20.0):
    """Distance from the landing point of ``t``'s fold arc to the nearest fold.

    Returns ``(distance, nearest_fold)`` or None if the arc never lands. The
    fold itself counts: its arc may close up on it after a full turn.
    """
    landing = fold_arc_landing(X, t, sign, opts, t_max)
    if landing is None:
        return None
    border, xe, gap = landing
    side = t.side
    yb = 0.5 if (side is Side.PLUS) == (border == "lo") else (1.0 if side is Side.PLUS else 0.0)
    best = None
    for u in tangs:
        if u.side is not side or abs(side_y(u.sigma_id, side) - yb) > 1e-12:
            continue
        d = max(abs(((u.x - xe) + 0.5) % 1.0 - 0.5), gap)
        if best is None or d < best[0]:
            best = (d, u)
    return best
