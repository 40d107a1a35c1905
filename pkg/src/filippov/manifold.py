"""Quotient-square models of the torus and the sphere.

The unit square is glued into a torus by identifying both pairs of opposite
edges, or into a sphere by identifying the vertical edges and collapsing the
bottom and top edges to the south and north poles.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

POLE_TOL = 1e-9


class ManifoldModel(enum.Enum):
    TORUS = "torus"
    SPHERE = "sphere"

    @classmethod
    def parse(cls, value) -> "ManifoldModel":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown manifold model {value!r}") from None


Torus = ManifoldModel.TORUS
Sphere = ManifoldModel.SPHERE


class Pole(enum.Enum):
    NORTH = "north"
    SOUTH = "south"


class PoleStatus(NamedTuple):
    at_pole: bool
    which: Optional[Pole] = None


@dataclass(frozen=True)
class QuotientPoint:
    """Canonical representative of a point of the quotient.

    Build these through :func:`wrap`; the constructor does not normalise.
    """

    x: float
    y: float
    model: ManifoldModel

    @property
    def pole(self) -> PoleStatus:
        return pole_status(self)

    def to_dict(self) -> dict:
        return {"x": self.x, "y": self.y, "model": self.model.value}

    @classmethod
    def from_dict(cls, data: dict) -> "QuotientPoint":
        return wrap(float(data["x"]), float(data["y"]), ManifoldModel.parse(data["model"]))

    def __iter__(self):
        yield self.x
        yield self.y


def _frac(v: float) -> float:
    r = v - math.floor(v)
    # v slightly below an integer can round up to exactly 1.0
    return 0.0 if r >= 1.0 else r


def wrap(raw_x: float, raw_y: float, model: ManifoldModel) -> QuotientPoint:
    """Return the canonical representative of ``(raw_x, raw_y)``.

    On the torus both coordinates are reduced into ``[0, 1)``. On the sphere
    only ``x`` is periodic; ``y`` must lie in ``[0, 1]`` (up to ``POLE_TOL``)
    and points within ``POLE_TOL`` of either border are snapped to the pole,
    with ``x`` set to 0.
    """
    if not (math.isfinite(raw_x) and math.isfinite(raw_y)):
        raise ValueError(f"non-finite coordinates ({raw_x}, {raw_y})")
    model = ManifoldModel.parse(model)
    if model is Torus:
        return QuotientPoint(_frac(raw_x), _frac(raw_y), model)
    if raw_y < -POLE_TOL or raw_y > 1.0 + POLE_TOL:
        raise ValueError(f"y={raw_y} outside the sphere's square model [0, 1]")
    if raw_y <= POLE_TOL:
        return QuotientPoint(0.0, 0.0, model)
    if raw_y >= 1.0 - POLE_TOL:
        return QuotientPoint(0.0, 1.0, model)
    return QuotientPoint(_frac(raw_x), raw_y, model)


def pole_status(p: QuotientPoint) -> PoleStatus:
    if p.model is not Sphere:
        return PoleStatus(False)
    if p.y <= POLE_TOL:
        return PoleStatus(True, Pole.SOUTH)
    if p.y >= 1.0 - POLE_TOL:
        return PoleStatus(True, Pole.NORTH)
    return PoleStatus(False)


SOUTH_POLE = QuotientPoint(0.0, 0.0, Sphere)
NORTH_POLE = QuotientPoint(0.0, 1.0, Sphere)


def _circle_gap(a: float, b: float) -> float:
    d = abs(a - b) % 1.0
    return min(d, 1.0 - d)


def quotient_distance(p: QuotientPoint, q: QuotientPoint) -> float:
    """Flat quotient metric: shortest Euclidean distance between representatives.

    On the sphere a chain may also pass through a collapsed border, which
    costs the distance of each point to that border.
    """
    if p.model is not q.model:
        raise ValueError("points live on different manifold models")
    dx = _circle_gap(p.x, q.x)
    if p.model is Torus:
        dy = _circle_gap(p.y, q.y)
        return math.hypot(dx, dy)
    sp, sq = pole_status(p), pole_status(q)
    if sp.at_pole or sq.at_pole:
        dx = 0.0
    direct = math.hypot(dx, p.y - q.y)
    via_south = p.y + q.y
    via_north = (1.0 - p.y) + (1.0 - q.y)
    return min(direct, via_south, via_north)


def manifold_diameter(model: ManifoldModel) -> float:
    """Supremum of :func:`quotient_distance` over the manifold.

    Torus: attained by the offset (1/2, 1/2). Sphere: the two poles are at
    distance 1 and no pair exceeds that, since the pole routes sum to 2.
    """
    model = ManifoldModel.parse(model)
    if model is Torus:
        return math.sqrt(2.0) / 2.0
    return 1.0
