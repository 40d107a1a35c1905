import csv
import io
import json

import pytest
from hypothesis import given, settings, strategies as st

from filippov.field import PiecewiseField, SigmaId, constant_field, find_tangencies, Visibility
from filippov.flow import (
    BranchPolicy, DeterministicLeft, DeterministicRight, EventKind, IntegrationOptions, Regime,
    detect_fold_connection, fold_return_gap, integrate,
)
from filippov.manifold import Sphere, Torus, quotient_distance, wrap
from filippov.scenarios import (
    chaotic_torus, fold_connection_family, four_fold_family, regular_normal_form, sliding_cos,
)

from oracles import sliding_speed_closed_form


def regular(a, b, s1, s2, model=Torus):
    return regular_normal_form(a, b, s1, s2, model).field()


def test_crossing_orbit_closes_after_one_turn():
    X = regular(1, 1, 1, 1)
    tr = integrate(X, (0.1, 0.3), IntegrationOptions(t_max=1.0))
    kinds = [e.kind for e in tr.dynamical_events()]
    assert kinds == [EventKind.CROSS_SIGMA, EventKind.CROSS_SIGMA]
    assert quotient_distance(tr.final_point, wrap(0.1, 0.3, Torus)) < 1e-9


def test_sliding_attractor_speed():
    X = regular(2, 0, -1, 1)
    tr = integrate(X, (0.1, 0.3), IntegrationOptions(t_max=3.0))
    enter = tr.events_of(EventKind.ENTER_SLIDING)[0]
    # the lower field (0, 1) climbs 0.2 to Σ₂
    assert enter.t == pytest.approx(0.2, abs=1e-9)
    assert enter.location.x == pytest.approx(0.1, abs=1e-9)
    seg = [s for s in tr.segments if s.regime is Regime.SLIDING][0]
    xs = [(t, x) for t, x, _ in seg.samples]
    lifted = tr.unwrapped_x()
    speed = (lifted[-1][1] - xs[0][1]) / (lifted[-1][0] - xs[0][0])
    assert speed == pytest.approx(sliding_speed_closed_form(2, 0, -1, 1), abs=1e-9)


def test_sphere_north_south_hits_pole():
    X = regular(0.3, 0.2, 1, 1, Sphere)
    tr = integrate(X, (0.1, 0.3), IntegrationOptions(t_max=5.0))
    e = tr.final_event
    assert e.kind is EventKind.HIT_POLE and e.detail == "north"
    assert e.t == pytest.approx(0.7, abs=1e-8)
    back = integrate(X, (0.1, 0.3), IntegrationOptions(t_max=5.0), direction="backward")
    assert back.final_event.detail == "south"
    assert back.final_event.t == pytest.approx(0.3, abs=1e-8)


def test_slides_into_pseudo_equilibrium():
    X = sliding_cos().field()
    tr = integrate(X, (0.4, 0.5), IntegrationOptions(t_max=50.0))
    e = tr.final_event
    assert e.kind is EventKind.REACH_PSEUDO_EQUILIBRIUM
    assert e.location.x == pytest.approx(0.25, abs=1e-6)


def test_sliding_leaves_at_visible_fold():
    X = chaotic_torus().field()
    tr = integrate(X, (0.8, 0.5), IntegrationOptions(t_max=2.0))
    exits = tr.events_of(EventKind.EXIT_SLIDING_AT_FOLD)
    assert exits and exits[0].location.x == pytest.approx(0.2902153, abs=1e-6)


def test_backward_inverts_forward_for_crossing_flow():
    X = regular(0.7, -0.4, 1, 1)
    fw = integrate(X, (0.2, 0.1), IntegrationOptions(t_max=0.9))
    bw = integrate(X, fw.final_point, IntegrationOptions(t_max=0.9), direction="backward")
    assert quotient_distance(bw.final_point, wrap(0.2, 0.1, Torus)) < 1e-8


def test_unstable_sliding_start_uses_branch_policy():
    X = four_fold_family(1.0).field()
    up = integrate(X, (0.5, 0.5), IntegrationOptions(t_max=0.05), policy=DeterministicRight)
    down = integrate(X, (0.5, 0.5), IntegrationOptions(t_max=0.05), policy=DeterministicLeft)
    assert up.final_point.y > 0.5 > down.final_point.y
    branches = integrate(X, (0.5, 0.5), IntegrationOptions(t_max=0.05),
                         policy=BranchPolicy.enumerate_to_depth(1))
    assert len(branches) >= 2
    assert len({b.branch_id for b in branches}) == len(branches)


def test_stop_when_ends_at_first_accepted_event():
    X = regular(1, 1, 1, 1)
    tr = integrate(X, (0.1, 0.3), IntegrationOptions(t_max=10.0),
                   stop_when=lambda e: e.kind is EventKind.CROSS_SIGMA)
    assert tr.final_event.kind is EventKind.CROSS_SIGMA
    assert tr.t_end == pytest.approx(0.2, abs=1e-9)


def test_time_limit_and_outputs():
    X = regular(0.5, 0.25, 1, 1)
    tr = integrate(X, (0.1, 0.3), IntegrationOptions(t_max=2.0))
    assert tr.final_event.kind is EventKind.TIME_LIMIT and tr.t_end == pytest.approx(2.0)
    rows = list(csv.reader(io.StringIO(tr.to_csv())))
    assert rows[0] == ["t", "x", "y", "regime", "event"]
    assert rows[-1][-1] == "TimeLimit"
    for line in tr.events_jsonl().splitlines():
        assert set(json.loads(line)) == {"kind", "t", "x", "y", "detail"}
    p = tr.position_at(1.0)
    assert quotient_distance(p, wrap(0.1 + 0.2 * 0.25 + 0.5 * 0.5 + 0.3 * 0.25, 0.3, Torus)) < 1e-6


def test_invalid_options():
    with pytest.raises(ValueError):
        IntegrationOptions(rel_tol=0.0)
    with pytest.raises(ValueError):
        integrate(regular(1, 1, 1, 1), (0.1, 0.3), direction="sideways")


def test_fold_connection_at_critical_parameter():
    pairs = detect_fold_connection(fold_connection_family(0.0).field())
    # the visible fold on each Σ is joined to its own copy one turn later
    assert len(pairs) == 2
    assert all(a is b for a, b in pairs)
    assert {round(a.x, 9) for a, _ in pairs} == {0.25, 0.75}
    for c in (0.05, -0.05):
        assert detect_fold_connection(fold_connection_family(c).field()) == []


@pytest.mark.parametrize("c", [-0.2, -0.03, 0.0, 0.07, 0.2])
def test_fold_return_gap_equals_drift(c):
    # dy/dx = c - cos 2πx rises by exactly c per turn
    X = fold_connection_family(c).field()
    fold = [t for t in find_tangencies(X, SigmaId.SIGMA1)[0] if t.visibility is Visibility.VISIBLE][0]
    assert fold_return_gap(X, fold) == pytest.approx(c, abs=1e-9)


@settings(max_examples=20, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2), st.sampled_from([-1.0, 1.0]), st.floats(0.0, 0.999),
       st.floats(0.01, 0.49))
def test_crossing_x_shift_matches_straight_lines(a, b, s, x0, y0):
    # in the crossing normal form every orbit is a broken straight line
    X = regular(a, b, s, s)
    opts = IntegrationOptions(t_max=0.37)
    tr = integrate(X, (x0, y0), opts)
    assert tr.final_event.kind is EventKind.TIME_LIMIT
    xs = tr.unwrapped_x()
    # time in each half is the vertical distance, so the shift is piecewise linear in t
    t_low = sum(s2.t_end - s2.t_start for s2 in tr.segments if s2.regime is Regime.FREE_MINUS)
    t_up = sum(s2.t_end - s2.t_start for s2 in tr.segments if s2.regime is Regime.FREE_PLUS)
    assert xs[-1][1] - xs[0][1] == pytest.approx(b * t_low + a * t_up, abs=1e-8)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.0, 0.999), st.floats(0.01, 0.99), st.floats(0.1, 1.5))
def test_forward_backward_round_trip(x0, y0, t):
    X = regular(0.3, -0.6, 1, 1)
    fw = integrate(X, (x0, y0), IntegrationOptions(t_max=t))
    bw = integrate(X, fw.final_point, IntegrationOptions(t_max=t), direction="backward")
    assert quotient_distance(bw.final_point, wrap(x0, y0, Torus)) < 1e-7
