"""Named, parameterized systems with closed-form derivatives."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import sympy

from . import rk
from .field import (
    PiecewiseField, SmoothField, constant_field, field_from_spec, trig_field,
)
from .manifold import ManifoldModel, Sphere, Torus


@dataclass
class Scenario:
    name: str
    params: Dict[str, object]
    build: Callable[[], PiecewiseField]
    expected: Dict[str, object] = field(default_factory=dict)
    notes: List[str] = field(default_factory=list)

    def field(self) -> PiecewiseField:
        X = self.build()
        X.name = self.name
        return X

    def to_dict(self) -> dict:
        X = self.field()
        return {"name": self.name, "params": {k: _jsonable(v) for k, v in self.params.items()},
                "model": X.model.value, "plus": X.plus.spec, "minus": X.minus.spec,
                "expected": self.expected, "notes": self.notes}


def _jsonable(v):
    return v if isinstance(v, (int, float, str, bool, type(None))) else str(v)


def _sigma(v, name):
    if v not in (-1, 1):
        raise ValueError(f"{name} must be +1 or -1, got {v}")
    return float(v)


def _real(v) -> float:
    # exact inputs such as "sqrt(2)" or "1/3" are kept symbolic by the classifier
    return float(sympy.sympify(v)) if isinstance(v, str) else float(v)


def regular_normal_form(a, b, s1, s2, model=Torus) -> Scenario:
    """``X+ = (a, σ₁)`` above, ``X- = (b, σ₂)`` below."""
    s1, s2 = _sigma(s1, "s1"), _sigma(s2, "s2")
    model = ManifoldModel.parse(model)
    fa, fb = _real(a), _real(b)
    expected = {}
    if s1 * s2 > 0:
        expected["verdict"] = "NorthSouth" if model is Sphere else "crossing"
    else:
        expected["verdict"] = "SlidingAttractor" if s1 < 0 < s2 else "SlidingRepeller"
        expected["sliding_speed"] = (s2 * fa - s1 * fb) / (s2 - s1)
    return Scenario("regular", {"a": a, "b": b, "s1": s1, "s2": s2, "model": model.value},
                    lambda: PiecewiseField(constant_field(fa, s1), constant_field(fb, s2), model),
                    expected)


def limit_cycle_alpha(eps: float) -> tuple:
    """Slope ``α`` closing the orbit through ``(3/4 - ε, 1/2)``, and ``x₁``.

    The upper field ``(cos 2πx, 1)`` carries ``(3/4 - ε, 1/2)`` to ``(x₁, 1)``
    in time 1/2; the lower straight line from ``(x₁, 0)`` must reach the start.
    """
    if not 0.0 < eps < 0.25:
        raise ValueError("eps must lie in (0, 1/4)")
    res = rk.solve(lambda s: (math.cos(2 * math.pi * s[0]),), (0.75 - eps,), 0.5, (),
                   rtol=1e-13, atol=1e-15, max_step=0.005, record=False)
    x1 = res.y[0]
    v1, v2 = (0.75 - eps) - x1, 0.5
    return v2 / v1, x1


def example_limit_cycle(eps: float = 0.1, model=Torus) -> Scenario:
    """Crossing system with a hyperbolic limit cycle through ``(x₁, 0)``."""
    alpha, x1 = limit_cycle_alpha(eps)
    model = ManifoldModel.parse(model)
    return Scenario("limit-cycle", {"eps": eps, "alpha": alpha, "x1": x1, "model": model.value},
                    lambda: PiecewiseField(trig_field({"cos": [1.0]}, 1.0), constant_field(1.0, alpha), model),
                    {"cycle_x": x1})


def four_fold_family(alpha: float, model=Torus) -> Scenario:
    """Upper field ``(-1, -9/2 + 24x - 24x²)``, lower field ``(-1, -α)``.

    The quadratic is not periodic; on the torus it is evaluated on ``[0, 1)``
    after reduction. α > 0 gives unstable sliding on ``(1/4, 3/4)`` of Σ₂ and
    α < 0 stable sliding outside it.
    """
    alpha = float(alpha)
    model = ManifoldModel.parse(model)
    notes = []
    if alpha == 0.0:
        notes.append("degenerate: the lower field is tangent to Σ along the whole line")

    def plus(x, y):
        x = x % 1.0
        return -1.0, -4.5 + 24.0 * x - 24.0 * x * x

    def plus_jac(x, y):
        x = x % 1.0
        return (0.0, 0.0), (24.0 - 48.0 * x, 0.0)

    up = SmoothField(plus, plus_jac, name="(-1, -9/2+24x-24x^2)",
                     spec={"v1": {"x": {"c0": -1.0}}, "v2": {"poly_x": [-4.5, 24.0, -24.0]}})
    expected = {"folds_sigma2": [0.25, 0.75]}
    if alpha > 0:
        expected["sigma2"] = [["crossing", 0.75, 1.25], ["unstable_sliding", 0.25, 0.75]]
    elif alpha < 0:
        expected["sigma2"] = [["stable_sliding", 0.75, 1.25], ["crossing", 0.25, 0.75]]
    return Scenario("four-fold", {"alpha": alpha, "model": model.value},
                    lambda: PiecewiseField(up, constant_field(-1.0, -alpha), model), expected, notes)


def fold_regular_model(alpha: float, beta: float, minus_v2: dict, model=Torus,
                       minus_v2_y: Optional[dict] = None, name: str = "fold-regular") -> Scenario:
    """``X+ = (α, β)``, ``X- = (1, g(x) + k(y))`` with trig-polynomial ``g`` and ``k``."""
    model = ManifoldModel.parse(model)
    notes = []
    if beta >= 0:
        notes.append("beta >= 0: outside the chaotic setting, which needs beta < 0")
    if alpha == 1:
        notes.append("alpha = 1: the sliding field vanishes identically")
    a, b = float(alpha), float(beta)
    params = {"alpha": a, "beta": b, "minus_v2": minus_v2, "model": model.value}
    if minus_v2_y:
        params["minus_v2_y"] = minus_v2_y
    return Scenario(name, params,
                    lambda: PiecewiseField(constant_field(a, b),
                                           trig_field(1.0, minus_v2, None, minus_v2_y), model),
                    {"sliding_speed": a - 1.0}, notes)


# preset constants, fixed by the calibration run in tests/oracles.py
CHAOTIC_ALPHA = 2.0
CHAOTIC_BETA = -1.0
CHAOTIC_MINUS_V2 = {"c0": 0.1, "cos": [0.4]}
TWO_CYCLE_MINUS_V2 = {"c0": 0.0, "cos": [0.2]}
TWO_CYCLE_MINUS_V2_Y = {"c0": 0.0, "cos": [0.0, 0.05]}


def chaotic_torus(alpha: float = CHAOTIC_ALPHA, beta: float = CHAOTIC_BETA) -> Scenario:
    """Displacement ``+0.1`` on Λ and a single absorbing visible fold."""
    return fold_regular_model(alpha, beta, CHAOTIC_MINUS_V2, Torus, name="chaotic-torus")


def chaotic_sphere(alpha: float = CHAOTIC_ALPHA, beta: float = CHAOTIC_BETA) -> Scenario:
    return fold_regular_model(alpha, beta, CHAOTIC_MINUS_V2, Sphere, name="chaotic-sphere")


def two_cycle_band(alpha: float = CHAOTIC_ALPHA, beta: float = CHAOTIC_BETA) -> Scenario:
    """``X₂- = 0.2 cos 2πx + 0.05 cos 4πy``: cycles near ξ = 1/8 and ξ = 3/8."""
    return fold_regular_model(alpha, beta, TWO_CYCLE_MINUS_V2, Torus, TWO_CYCLE_MINUS_V2_Y,
                              name="two-cycle-band")


def sliding_cos(model=Torus) -> Scenario:
    """``X+ = (cos 2πx, -1)``, ``X- = (0, 1)``: all of Σ₂ slides, with sliding field cos 2πx."""
    model = ManifoldModel.parse(model)
    return Scenario("sliding-cos", {"model": model.value},
                    lambda: PiecewiseField(trig_field({"cos": [1.0]}, -1.0), constant_field(0.0, 1.0), model),
                    {"pseudo_equilibria": [[0.25, -1], [0.75, 1]]})


def odd_fold(model=Torus) -> Scenario:
    """``X₂- = cos πx`` on ``[0, 1)``: one fold, discontinuous across x = 0."""
    model = ManifoldModel.parse(model)

    def minus(x, y):
        return 1.0, math.cos(math.pi * (x % 1.0))

    def minus_jac(x, y):
        return (0.0, 0.0), (-math.pi * math.sin(math.pi * (x % 1.0)), 0.0)

    lo = SmoothField(minus, minus_jac, name="(1, cos(pi x))", spec={"v1": {"x": {"c0": 1.0}},
                                                                  "v2": {"cos_half": 1.0}})
    return Scenario("odd-fold", {"model": model.value},
                    lambda: PiecewiseField(constant_field(0.5, 1.0), lo, model), {"parity_violation": True})


def fold_connection_family(c: float, model=Torus) -> Scenario:
    """``X- = (1, c - cos 2πx)``; the fold arcs connect at a critical ``c``."""
    model = ManifoldModel.parse(model)
    return Scenario("fold-connection", {"c": c, "model": model.value},
                    lambda: PiecewiseField(constant_field(0.0, -1.0),
                                           trig_field(1.0, {"c0": c, "cos": [-1.0]}), model))


PRESETS = {
    "regular": regular_normal_form,
    "limit-cycle": example_limit_cycle,
    "four-fold": four_fold_family,
    "fold-regular": fold_regular_model,
    "chaotic-torus": chaotic_torus,
    "chaotic-sphere": chaotic_sphere,
    "two-cycle-band": two_cycle_band,
    "sliding-cos": sliding_cos,
    "odd-fold": odd_fold,
    "fold-connection": fold_connection_family,
}


def get_scenario(name: str, **params) -> Scenario:
    try:
        builder = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown scenario {name!r}; known: {', '.join(sorted(PRESETS))}") from None
    return builder(**params)
