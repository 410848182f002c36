"""Tests for the potential families and their symmetry properties."""

import numpy as np
import pytest

from ptspectra.errors import ConfigError
from ptspectra.potentials import (
    DeltaInBox,
    DoubleDelta,
    HermitianCounterpart,
    LinearBox,
    LinearPT,
    QuadraticPT,
    ScarfII,
    SquareDoubleWell,
    delta_terms,
    evaluate_potential,
    spec_from_json,
    spec_to_json,
    with_param,
)

ALL_SPECS = [
    DoubleDelta(u=2.0, g=0.1, a=4.0),
    DeltaInBox(u=2.0, g=1.0, a=3.0, b=1.0),
    SquareDoubleWell(u=50.0, g=5.0, b=1.0, w=1.0),
    LinearBox(g=1.0),
    QuadraticPT(g=0.3),
    LinearPT(g=0.7),
    ScarfII(v1=4.0, v2=2.0),
]


@pytest.mark.parametrize("spec", ALL_SPECS, ids=lambda s: type(s).__name__)
def test_pt_symmetry_pointwise(spec):
    """V(-x) = conj(V(x)) for 1000 random points in the domain."""
    rng = np.random.default_rng(42)
    half = {LinearBox: 1.0, DeltaInBox: 3.0}.get(type(spec), 8.0)
    x = rng.uniform(-half, half, size=1000)
    v_plus = evaluate_potential(spec, x)
    v_minus = evaluate_potential(spec, -x)
    np.testing.assert_allclose(v_minus, np.conj(v_plus), rtol=0, atol=1e-15)


def test_scarf_value_at_origin():
    assert evaluate_potential(ScarfII(v1=2.0, v2=0.0), 0.0) == pytest.approx(-2.0)


def test_linear_box_value():
    assert evaluate_potential(LinearBox(g=1.0), 0.5) == pytest.approx(0.5j)


def test_square_double_well_values():
    # right well holds the conjugate depth u - ig, so V = -(u - ig) there
    spec = SquareDoubleWell(u=50.0, g=5.0, b=1.0, w=1.0)
    assert evaluate_potential(spec, 1.5) == pytest.approx(-50.0 + 5.0j)
    assert evaluate_potential(spec, -1.5) == pytest.approx(-50.0 - 5.0j)
    assert evaluate_potential(spec, 0.5) == 0.0
    assert evaluate_potential(spec, 2.5) == 0.0


def test_delta_terms_double_delta():
    terms = delta_terms(DoubleDelta(u=2.0, g=0.0, a=4.0))
    assert [(t.position, t.strength) for t in terms] == [(-2.0, 2.0 + 0j), (2.0, 2.0 - 0j)]


def test_delta_terms_delta_in_box():
    terms = delta_terms(DeltaInBox(u=2.0, g=1.0, a=3.0, b=1.0))
    assert terms[0].position == -1.0 and terms[0].strength == 2.0 + 1.0j
    assert terms[1].position == 1.0 and terms[1].strength == 2.0 - 1.0j


def test_delta_terms_smooth_families_empty():
    assert delta_terms(LinearPT(g=1.0)) == []
    assert delta_terms(ScarfII(v1=2.0, v2=0.0)) == []


def test_delta_terms_conjugate_structure():
    for spec in (DoubleDelta(u=3.0, g=0.7, a=2.0), DeltaInBox(u=1.0, g=0.2, a=5.0, b=2.0)):
        t1, t2 = delta_terms(spec)
        assert t1.position == -t2.position
        assert t1.strength == np.conj(t2.strength)


@pytest.mark.parametrize(
    "base",
    [LinearBox(g=0.5), QuadraticPT(g=0.2), LinearPT(g=0.4), DoubleDelta(u=2.0, g=0.5, a=3.0)],
    ids=lambda s: type(s).__name__,
)
def test_hermitian_counterpart_real_and_mirrored(base):
    plus = HermitianCounterpart(of=base, sign=+1)
    minus = HermitianCounterpart(of=base, sign=-1)
    x = np.linspace(-2.0, 2.0, 101)
    vp = evaluate_potential(plus, x)
    vm = evaluate_potential(minus, x)
    assert np.all(vp.imag == 0) and np.all(vm.imag == 0)
    # the two signs are parity images of each other (same spectrum)
    np.testing.assert_allclose(vp, evaluate_potential(minus, -x), atol=1e-15)


def test_hermitian_counterpart_delta_strengths():
    cp = HermitianCounterpart(of=DoubleDelta(u=2.0, g=0.5, a=4.0), sign=+1)
    t1, t2 = delta_terms(cp)
    assert t1.strength == pytest.approx(1.5)
    assert t2.strength == pytest.approx(2.5)


def test_json_round_trip():
    for spec in ALL_SPECS + [HermitianCounterpart(of=QuadraticPT(g=0.2), sign=-1)]:
        assert spec_from_json(spec_to_json(spec)) == spec


def test_json_rejects_unknown_fields():
    with pytest.raises(ConfigError):
        spec_from_json({"family": "double_delta", "u": 2.0, "g": 0.0, "a": 4.0, "zz": 1})
    with pytest.raises(ConfigError):
        spec_from_json({"family": "no_such_family"})
    with pytest.raises(ConfigError):
        spec_from_json({"family": "double_delta", "u": 2.0})


def test_geometry_validation():
    with pytest.raises(ConfigError):
        DeltaInBox(u=2.0, g=0.0, a=1.0, b=1.5)
    with pytest.raises(ConfigError):
        DoubleDelta(u=2.0, g=0.0, a=-1.0)
    with pytest.raises(ConfigError):
        HermitianCounterpart(of=LinearBox(g=1.0), sign=2)


def test_with_param():
    spec = with_param(DoubleDelta(u=2.0, g=0.0, a=4.0), "a", 5.0)
    assert spec.a == 5.0
    cp = with_param(HermitianCounterpart(of=LinearBox(g=1.0)), "g", 2.0)
    assert cp.of.g == 2.0
    with pytest.raises(ConfigError):
        with_param(LinearBox(g=1.0), "w", 2.0)
