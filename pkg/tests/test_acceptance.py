"""Acceptance criteria, each at its stated tolerance; one PASS/FAIL line apiece."""

import math
import time
from fractions import Fraction

import numpy as np
import pytest
from scipy.stats import qmc

from conftest import record_criterion
from filippov.classify import (
    band_containment, catalog_limit_cycles, chaos_check, classify_regular, sphere_decomposition,
)
from filippov.field import (
    PiecewiseField, RegionLabel, SigmaId, constant_field, decompose_sigma, find_pseudo_equilibria,
    parity_report, trig_field,
)
from filippov.flow import EventKind, IntegrationOptions, integrate
from filippov.manifold import Torus, quotient_distance, wrap
from filippov.maps import (
    NoReturn, Section, SectionPoint, crossing_sequence, displacement_roots, first_return_crossing,
    periodicity_test, section_return,
)
from filippov.scenarios import (
    chaotic_sphere, chaotic_torus, example_limit_cycle, four_fold_family, odd_fold, sliding_cos,
    two_cycle_band,
)

import oracles

# [DERIVED] values, frozen from the oracles before the checks run
N0_EXPECTED = {(1, 1): 2, (1, 0): 4, (Fraction(1, 3), Fraction(1, 3)): 6}     # closure_multiplicity
SLIDING_SPEED = 1.0                                                           # (σ₂a - σ₁b)/(σ₂ - σ₁)
X1_EPS_01 = 0.2920878223102177                                                # Gudermannian closed form
FOUR_FOLD_LABELS = {
    1.0: [(0.25, 0.75, RegionLabel.UNSTABLE_SLIDING), (0.75, 1.25, RegionLabel.CROSSING)],
    -1.0: [(0.25, 0.75, RegionLabel.CROSSING), (0.75, 1.25, RegionLabel.STABLE_SLIDING)],
}
PSEUDO_EQ = [(0.25, -1), (0.75, 1)]
TWO_CYCLE_ROOTS = (0.12809729647968193, 0.3719027035203179)                   # calibrate_presets


def test_frozen_oracle_values():
    for (a, b), n0 in N0_EXPECTED.items():
        assert oracles.closure_multiplicity(Fraction(a), Fraction(b), 1, 1) == n0
    assert oracles.sliding_speed_closed_form(2, 0, -1, 1) == SLIDING_SPEED
    assert oracles.limit_cycle_closed_form(0.1)[0] == pytest.approx(X1_EPS_01, abs=1e-15)
    assert oracles.calibrate_presets()["two_cycle_roots"] == pytest.approx(TWO_CYCLE_ROOTS, abs=1e-12)


def test_criterion_01_crossing_return_closed_form():
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(20):
        a, b = rng.uniform(-2, 2, 2)
        sign = rng.choice([-1.0, 1.0])
        s1, s2 = sign * rng.uniform(0.5, 2.0, 2)
        x0 = rng.uniform(0, 1)
        n = int(rng.integers(1, 7))
        X = PiecewiseField(constant_field(a, s1), constant_field(b, s2), Torus)
        xs = crossing_sequence(X, x0, n)
        q = first_return_crossing(a, b, s1, s2, SectionPoint(Section.SIGMA1, x0), n)
        worst = max(worst, quotient_distance(wrap(xs[n - 1], q.y, Torus), q))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-8 and elapsed < 10.0
    record_criterion(1, ok, f"max quotient distance {worst:.2e} (< 1e-8), runtime {elapsed:.2f}s (< 10s)")
    assert ok


def test_criterion_02_periodic_side():
    parts = []
    ok = True
    for (a, b), n0 in N0_EXPECTED.items():
        v = periodicity_test(a, b, 1, 1)
        rep = classify_regular(a, b, 1, 1)
        X = PiecewiseField(constant_field(float(a), 1), constant_field(float(b), 1), Torus)
        xs = [0.123] + crossing_sequence(X, 0.123, 2 * n0)
        observed = next((n for n in range(2, len(xs), 2)
                         if abs(((xs[n] - xs[0]) + 0.5) % 1.0 - 0.5) < 1e-7), None)
        this = (v.kind == "Periodic" and v.n0 == n0 and observed == n0
                and rep.verdict == "PeriodicFoliation" and rep.passed)
        ok = ok and this
        parts.append(f"({a},{b}) n0={v.n0} observed={observed}")
    record_criterion(2, ok, "; ".join(parts) + f" (expected {list(N0_EXPECTED.values())})")
    assert ok


def test_criterion_03_dense_side():
    t0 = time.perf_counter()
    rep = classify_regular("sqrt(2)", 0, 1, 1, n_returns=1000)
    elapsed = time.perf_counter() - t0
    d1000 = rep.details["stat"]["discrepancy"]
    d100 = rep.details["stat_100"]["discrepancy"]
    gap = rep.details["stat"]["min_return_gap"]
    ok = (rep.verdict == "Equidistributing" and d1000 < 0.05 and d1000 < d100 and gap > 1e-9
          and elapsed < 30.0)
    record_criterion(3, ok, f"{rep.verdict}: D*1000={d1000:.4g} D*100={d100:.4g} gap={gap:.3g}, "
                            f"runtime {elapsed:.2f}s (< 30s)")
    assert ok


def test_criterion_04_sliding_attractor():
    X = PiecewiseField(constant_field(2, -1), constant_field(0, 1), Torus)
    tr = integrate(X, (0.1, 0.3), IntegrationOptions(t_max=3.0))
    seg = next(s for s in tr.segments if s.regime.value == "sliding" and s.sigma_id is SigmaId.SIGMA2)
    xs = [x for _, x, _ in seg.samples]
    lifted = np.unwrap(np.array(xs) * 2 * np.pi) / (2 * np.pi)
    speed = (lifted[-1] - lifted[0]) / (seg.samples[-1][0] - seg.samples[0][0])
    pts = qmc.Halton(d=2, scramble=True, seed=4).random(100)
    late = 0
    for x0, y0 in pts:
        tr = integrate(X, (x0, y0), IntegrationOptions(t_max=2.0),
                       stop_when=lambda e: e.kind is EventKind.ENTER_SLIDING)
        e = tr.final_event
        if not (e.kind is EventKind.ENTER_SLIDING and e.detail == "sigma2" and e.t <= 2.0):
            late += 1
    ok = abs(speed - SLIDING_SPEED) <= 1e-6 and late == 0
    record_criterion(4, ok, f"sliding speed {speed:.9f} (1 ± 1e-6); {100 - late}/100 reach Σ₂ sliding by t=2")
    assert ok


def test_criterion_05_limit_cycle():
    sc = example_limit_cycle(0.1)
    X = sc.field()
    rep = catalog_limit_cycles(X)
    roots = rep.details["scan"].roots
    section = Section(rep.details["section"])
    x1 = sc.params["x1"]
    near = min(roots, key=lambda r: abs(r.q.coord - x1)) if roots else None
    converge = []
    for start in (x1 - 0.05, x1 + 0.05):
        c, dists = start, []
        try:
            for _ in range(5):
                c = (c + section_return(X, SectionPoint(section, c % 1.0)).d) % 1.0
                dists.append(abs(((c - x1) + 0.5) % 1.0 - 0.5))
        except NoReturn:
            dists.append(float("inf"))
        converge.append(all(b < a for a, b in zip(dists, dists[1:])) and dists[-1] < 1e-3)
    one_root = len(roots) == 1
    ok = one_root and near is not None and near.d_prime < 0 and all(converge)
    listing = ", ".join(f"{r.q.coord:.6f} (d'={r.d_prime:+.3f})" for r in roots)
    record_criterion(5, ok, f"{len(roots)} root(s) on {section.value}: {listing}; cycle x1={x1:.8f}; "
                            f"±0.05 starts converge: {converge}")
    assert ok


def test_criterion_06_four_fold_and_parity():
    ok = True
    worst = 0.0
    for alpha, expected in FOUR_FOLD_LABELS.items():
        d = decompose_sigma(four_fold_family(alpha).field(), SigmaId.SIGMA2)
        got = [(iv.start, iv.end, iv.label) for iv in d.intervals]
        ok = ok and [g[2] for g in got] == [e[2] for e in expected]
        for g, e in zip(got, expected):
            worst = max(worst, abs(g[0] - e[0]), abs(g[1] - e[1]))
    parity = parity_report(odd_fold().field())
    flagged = any(f["kind"] == "ParityViolation" for f in parity["findings"])
    ok = ok and worst <= 1e-10 and flagged
    record_criterion(6, ok, f"labels exact, endpoint error {worst:.1e} (<= 1e-10); odd fold flagged: {flagged}")
    assert ok


def test_criterion_07_pseudo_equilibria():
    pes = find_pseudo_equilibria(sliding_cos().field(), SigmaId.SIGMA2)
    got = [(p.x, p.index) for p in pes]
    ok = (len(got) == 2 and all(abs(g[0] - e[0]) <= 1e-10 and g[1] == e[1] for g, e in zip(got, PSEUDO_EQ)))
    record_criterion(7, ok, "pseudo-equilibria " + ", ".join(f"x={x:.12f} index {i:+d}" for x, i in got))
    assert ok


def test_criterion_08_chaotic_torus():
    t0 = time.perf_counter()
    diag = chaos_check(chaotic_torus().field(), samples=200, seed=0, tau_hit=1e-4)
    elapsed = time.perf_counter() - t0
    r, tested, passed = diag.sensitivity
    rate = passed / tested if tested else 0.0
    ok = (diag.through_p_star_fraction == 1.0 and len(diag.transitivity_witnesses) >= 10
          and abs(r - math.sqrt(2) / 4) < 1e-15 and rate >= 0.95 and elapsed < 300)
    record_criterion(8, ok, f"through p* {diag.through_p_star_fraction:.3f} (= 1), "
                            f"{len(diag.transitivity_witnesses)} witnesses (>= 10), "
                            f"sensitivity {passed}/{tested} = {rate:.2f} at r={r:.4f} (>= 0.95), "
                            f"runtime {elapsed:.0f}s (< 300s)")
    assert ok


def test_criterion_09_two_cycle_band():
    X = two_cycle_band().field()
    rep = catalog_limit_cycles(X)
    bands = rep.details["minimal_bands"]
    scan = rep.details["scan"]
    ok = len(bands) == 1
    inside = []
    contain = None
    if bands:
        lo, hi = bands[0]
        inside = [r.q.coord for r in scan.roots if lo < r.q.coord < hi]
        contain = band_containment(X, bands[0], samples=100, t_end=50.0)
        ok = ok and not inside and contain["passed"]
    record_criterion(9, ok, f"{len(bands)} minimal band(s) {bands}; roots inside: {inside}; "
                            f"100 samples contained to t=50: {contain and contain['passed']}")
    assert ok


def test_criterion_10_chaotic_sphere():
    rep = sphere_decomposition(chaotic_sphere().field(), samples=50, seed=0)
    bands = rep.M_h_bands
    ok = bool(bands)
    parts = []
    for b in bands:
        ok = ok and b["homoclinic_samples"] == 50 and b["arc_mismatch"] is not None \
            and b["arc_mismatch"] < 1e-4
        parts.append(f"eta={b['eta']:.6f} c={b['section'][1]:.10f} homoclinic {b['homoclinic_samples']}/50 "
                     f"arc mismatch {b['arc_mismatch']:.1e}")
    record_criterion(10, ok, ("; ".join(parts) or "M_h empty"))
    assert ok


def test_criterion_11_oracle_equivalence():
    rng = np.random.default_rng(11)
    worst, mismatched, total = 0.0, 0, 0
    for _ in range(10):
        plus, minus, prm = oracles.random_small_system(rng)
        p0 = (rng.uniform(0, 1), rng.uniform(0, 1))
        opts = IntegrationOptions(t_max=4.0)
        ref = oracles.reference_events(plus, minus, p0, 4.0, h=opts.max_step / 10)
        X = PiecewiseField(trig_field(prm["plus"]["v1"], prm["plus"]["v2"]),
                           trig_field(prm["minus"]["v1"], prm["minus"]["v2"]), Torus)
        fast = integrate(X, p0, opts).dynamical_events()
        total += len(ref)
        if len(ref) != len(fast):
            mismatched += 1
            continue
        for (kind, _, x, y), e in zip(ref, fast):
            d = quotient_distance(wrap(x, y, Torus), e.location)
            worst = max(worst, d)
            if kind != e.kind.value or d > 1e-6:
                mismatched += 1
                break
    ok = mismatched == 0
    record_criterion(11, ok, f"{10 - mismatched}/10 systems match ({total} events), "
                             f"max location error {worst:.1e} (<= 1e-6)")
    assert ok
