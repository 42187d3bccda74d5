import math

import pytest
from hypothesis import given, strategies as st

from floquet_defect import (
    CrystalSpec,
    FixedAlpha,
    FixedTheta,
    LayerProfile,
    Polarization,
    epsilon_at,
    validate_crystal,
)
from floquet_defect.errors import (
    ConfigError,
    NonPositiveThickness,
    NonUnitPeriod,
    OutOfDomain,
    ZeroPermittivity,
)
from floquet_defect.medium import slice_profile

CELL = [(0.5, 4.0), (0.5, 1.0)]


def test_golden_spec_is_valid():
    spec = validate_crystal(CELL, (0.8, [(0.8, 2.25)]))
    assert isinstance(spec, CrystalSpec)
    assert spec.cell.width == 1.0
    assert spec.defect.width == 0.8


def test_period_must_be_one():
    with pytest.raises(NonUnitPeriod):
        validate_crystal([(0.5, 4.0), (0.4, 1.0)], (0.8, [(0.8, 2.25)]))


def test_zero_permittivity():
    with pytest.raises(ZeroPermittivity):
        validate_crystal([(1.0, 0.0)], (0.8, [(0.8, 2.25)]))


@pytest.mark.parametrize(
    "cell, defect",
    [
        ([(1.5, 4.0), (-0.5, 1.0)], (0.8, [(0.8, 2.25)])),
        (CELL, (0.0, [(0.8, 2.25)])),
        (CELL, (0.8, [(0.8, float("nan"))])),
        (CELL, (0.8, [(0.5, 2.25)])),
        ([], (0.8, [(0.8, 2.25)])),
    ],
)
def test_rejects_bad_inputs(cell, defect):
    with pytest.raises(ConfigError):
        validate_crystal(cell, defect)


def test_negative_thickness_names_field():
    with pytest.raises(NonPositiveThickness, match=r"cell\[1\]"):
        validate_crystal([(1.5, 4.0), (-0.5, 1.0)], (0.8, [(0.8, 2.25)]))


def test_validation_is_idempotent():
    spec = validate_crystal(CELL, (0.8, [(0.8, 2.25)]))
    again = validate_crystal(spec.cell, spec.defect)
    assert again == spec


def test_negative_permittivity_allowed():
    # metallic layers are fine as long as eps != 0
    validate_crystal([(0.3, -2.0), (0.7, 1.0)], (0.4, [(0.4, 3.0)]))


@pytest.mark.parametrize("x, expected", [(0.0, 4.0), (0.25, 4.0), (0.5, 1.0), (1.0, 1.0)])
def test_epsilon_at(x, expected):
    assert epsilon_at(LayerProfile(CELL), x) == expected


@pytest.mark.parametrize("x", [1.2, -0.1])
def test_epsilon_at_out_of_domain(x):
    with pytest.raises(OutOfDomain):
        epsilon_at(LayerProfile(CELL), x)


@given(
    st.lists(
        st.tuples(st.floats(0.05, 1.0), st.floats(0.5, 10.0)), min_size=1, max_size=6
    ),
    st.floats(0.0, 1.0),
)
def test_epsilon_right_continuous(layers, frac):
    prof = LayerProfile(layers)
    x = frac * prof.width
    eps = epsilon_at(prof, x)
    assert eps in [e for _, e in layers]
    nudge = x + 1e-9 * prof.width
    if nudge <= prof.width:
        # right-continuity: a tiny step to the right stays in the same layer
        # unless an interface lies strictly inside (x, nudge]
        edges = [sum(d for d, _ in prof.layers[: i + 1]) for i in range(len(prof))]
        if not any(x < e <= nudge for e in edges):
            assert epsilon_at(prof, nudge) == eps


def test_slice_profile_constant():
    prof = slice_profile(lambda x: 2.0, slices=8)
    assert len(prof) == 8
    assert math.isclose(prof.width, 1.0, rel_tol=0, abs_tol=1e-15)
    assert {e for _, e in prof.layers} == {2.0}


def test_polarization_parse():
    assert Polarization.parse("E") is Polarization.EPar
    assert Polarization.parse("h") is Polarization.HPar
    assert Polarization.HPar.q(4.0) == 4.0
    assert Polarization.EPar.q(4.0) == 1.0
    with pytest.raises(ConfigError):
        Polarization.parse("X")


def test_incidence_domains():
    with pytest.raises(ConfigError):
        FixedTheta(math.pi / 2)
    with pytest.raises(ConfigError):
        FixedAlpha(-math.pi)
    assert FixedAlpha(math.pi).alpha == math.pi
    th = FixedTheta(0.3)
    assert math.isclose(th.alpha_at(2.0), 2.0 * math.sin(0.3))
    assert math.isclose(th.beta0_at(2.0), 2.0 * math.cos(0.3))


def test_reversed_crystal():
    spec = validate_crystal(CELL, (0.8, [(0.3, 2.0), (0.5, 3.0)]))
    rev = spec.reversed()
    assert rev.cell.layers == ((0.5, 1.0), (0.5, 4.0))
    assert rev.defect.profile.layers == ((0.5, 3.0), (0.3, 2.0))
    assert rev.reversed() == spec
