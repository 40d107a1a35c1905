import json

import pytest

from filippov.field import RegionLabel, SigmaId, decompose_sigma
from filippov.manifold import Sphere, Torus
from filippov.scenarios import (
    PRESETS, example_limit_cycle, fold_regular_model, four_fold_family, get_scenario,
    limit_cycle_alpha, regular_normal_form,
)

from oracles import limit_cycle_closed_form


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_presets_build_and_serialize(name):
    defaults = {"regular": dict(a=1, b=1, s1=1, s2=1), "four-fold": dict(alpha=1.0),
                "fold-regular": dict(alpha=2.0, beta=-1.0, minus_v2={"c0": 0.1, "cos": [0.4]}),
                "fold-connection": dict(c=0.0)}
    sc = get_scenario(name, **defaults.get(name, {}))
    X = sc.field()
    assert X.model in (Torus, Sphere)
    json.dumps(sc.to_dict())
    X.plus(0.3, 0.7), X.minus(0.3, 0.2)


def test_unknown_scenario():
    with pytest.raises(ValueError):
        get_scenario("no-such-thing")


@pytest.mark.parametrize("eps", [0.05, 0.1, 0.2])
def test_limit_cycle_alpha_matches_closed_form(eps):
    alpha, x1 = limit_cycle_alpha(eps)
    x1_ref, alpha_ref = limit_cycle_closed_form(eps)
    assert x1 == pytest.approx(x1_ref, abs=1e-11)
    assert alpha == pytest.approx(alpha_ref, rel=1e-10)


def test_limit_cycle_eps_range():
    with pytest.raises(ValueError):
        limit_cycle_alpha(0.3)
    assert example_limit_cycle(0.1).params["x1"] == pytest.approx(0.29208782231, abs=1e-10)


def test_regular_sigma_must_be_unit():
    with pytest.raises(ValueError):
        regular_normal_form(1, 1, 2, 1)
    assert regular_normal_form("sqrt(2)", 0, 1, 1).field().plus(0, 0)[0] == pytest.approx(2 ** 0.5)


def test_four_fold_labels():
    for alpha, expected in ((1.0, [RegionLabel.UNSTABLE_SLIDING, RegionLabel.CROSSING]),
                            (-1.0, [RegionLabel.CROSSING, RegionLabel.STABLE_SLIDING])):
        d = decompose_sigma(four_fold_family(alpha).field(), SigmaId.SIGMA2)
        assert d.labels == expected
        assert [(iv.start, iv.end) for iv in d.intervals] == pytest.approx([(0.25, 0.75), (0.75, 1.25)],
                                                                            abs=1e-10)


def test_four_fold_degenerate_note():
    assert four_fold_family(0.0).notes


def test_fold_regular_notes():
    assert fold_regular_model(1.0, 1.0, {"c0": 0.1}).notes == [
        "beta >= 0: outside the chaotic setting, which needs beta < 0",
        "alpha = 1: the sliding field vanishes identically"]
