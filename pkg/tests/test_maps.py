import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ruelle_lab.maps import (
    INFINITY,
    MapSpecError,
    QuadraticMap,
    RationalMap,
    check_no_simple_critical_relations,
    check_simple_critical_points,
    conjugate_to_fix_infinity,
    escape_radius_bound,
    find_attracting_cycles,
    load_map_spec,
    orbit,
    preimages,
)

params = st.builds(complex, st.floats(-2, 0.5), st.floats(-1.2, 1.2))


def test_quadratic_critical_data():
    R = QuadraticMap(-1 + 0.5j)
    assert R.critical_points == (0j,)
    assert R.critical_values == (-1 + 0.5j,)
    assert R.deriv(0.3, 2) == 2
    assert R.infinity_superattracting


def test_rational_critical_points_zero_derivative():
    R = RationalMap([0.2, 0.1, 0.3, 1.0], [1.1, 0.2])
    assert len(R.critical_points) == 3
    for c in R.critical_points:
        assert abs(R.deriv(c)) < 1e-10
    assert R.infinity_superattracting
    assert check_simple_critical_points(R).ok
    S = RationalMap([0.2, 0.1, 1.0], [1.1, 0.2])
    assert S.infinity_multiplier == pytest.approx(0.2)
    assert not S.infinity_superattracting


def test_deriv_matches_finite_difference():
    R = RationalMap([0.2, 0.1, 0.3, 1.0], [1.1, 0.2])
    z, h = 0.4 + 0.3j, 1e-6
    fd = (R.eval(z + h) - R.eval(z - h)) / (2 * h)
    assert abs(fd - R.deriv(z)) < 1e-7
    fd2 = (R.deriv(z + h) - R.deriv(z - h)) / (2 * h)
    assert abs(fd2 - R.deriv(z, 2)) < 1e-6


def test_pole_evaluates_to_infinity():
    R = RationalMap([1.0, 0, 1.0], [0, 1.0])
    assert R.eval(0) is INFINITY
    assert R.eval(INFINITY) is INFINITY


def test_invalid_maps_rejected():
    with pytest.raises(MapSpecError):
        RationalMap([1.0, 1.0], [0.0, 1.0])  # infinity not fixed
    with pytest.raises(MapSpecError):
        RationalMap([0.0, 1.0, 1.0], [0.0, 1.0])  # common root at 0
    with pytest.raises(MapSpecError):
        RationalMap([1.0], [0.0])


def test_orbit_escape_index():
    R = QuadraticMap(1)
    orb = orbit(R, 0, 20, escape_radius=10)
    # 0, 1, 2, 5, 26
    assert orb.escaped_at == 4
    assert orb.points[:4] == (0, 1, 2, 5)


def test_orbit_derivatives_chain_rule():
    R = QuadraticMap(-0.4 + 0.2j)
    orb = orbit(R, 0.3, 10)
    z, d = 0.3, 1.0
    for k in range(11):
        assert abs(orb.points[k] - z) < 1e-12
        assert abs(orb.cumulative_derivatives[k].to_complex() - d) <= 1e-12 * abs(d)
        d *= 2 * z
        z = z * z + R.c


def test_orbit_overflow_flag():
    orb = orbit(QuadraticMap(0), 10.0, 50, escape_radius=math.inf)
    assert orb.overflowed and orb.escaped_at is None


@settings(max_examples=50, deadline=None)
@given(params, st.builds(complex, st.floats(-3, 3), st.floats(-3, 3)))
def test_preimages_map_back(c, w):
    R = QuadraticMap(c)
    ys = preimages(R, w)
    assert len(ys) == 2
    for y in ys:
        assert abs(R.eval(y) - w) <= 1e-10 * max(1.0, abs(w))


def test_preimages_rational():
    R = RationalMap([0.2, 0.1, 0.3, 1.0], [1.1, 0.2])
    ys = preimages(R, 0.7 - 0.2j)
    assert len(ys) == 3
    for y in ys:
        assert abs(R.eval(y) - (0.7 - 0.2j)) < 1e-9


def test_critical_relation_detected():
    # z^3 - 1.5 z^2 + 1 has critical points 0 and 1, and R(0) = 1
    R = RationalMap.polynomial([1, 0, -1.5, 1])
    v = check_no_simple_critical_relations(R, 4)
    assert not v.ok
    assert (v.witness["n"], v.witness["m"]) == (1, 0)
    assert check_no_simple_critical_relations(RationalMap.polynomial([0.3, 0.2j, 0, 1]), 6).ok


def test_multiple_critical_point_flagged():
    R = RationalMap.polynomial([0.1, 0, 0, 1])
    assert not check_simple_critical_points(R).ok


def test_conjugation_moves_fixed_point_to_infinity():
    # 2z/(z+1) fixes 1; conjugating by 1/(z-1) gives 2w+1
    S = conjugate_to_fix_infinity(([0, 2], [1, 1]), 1)
    assert S.P.coeffs == pytest.approx((1, 2))
    assert S.Q.coeffs == pytest.approx((1,))
    with pytest.raises(ValueError):
        conjugate_to_fix_infinity(([0, 2], [1, 1]), 3)


def test_conjugation_semiconjugates():
    num, den = [0.3, 0, 1.0], [1.0, 0.5]
    R_of = lambda z: np.polyval(num[::-1], z) / np.polyval(den[::-1], z)  # noqa: E731
    # find a finite fixed point numerically
    p = complex(np.roots(np.polysub(num[::-1], np.polymul([1, 0], den[::-1])))[0])
    S = conjugate_to_fix_infinity((num, den), p)
    M = lambda z: 1 / (z - p)  # noqa: E731
    z = 0.37 + 0.21j
    assert abs(S.eval(M(z)) - M(R_of(z))) < 1e-9 * abs(M(R_of(z)))


def test_attracting_cycles():
    cyc = find_attracting_cycles(QuadraticMap(-1))
    assert len(cyc) == 1
    pts, mult = cyc[0]
    assert sorted(round(z.real, 9) for z in pts) == [-1, 0]
    assert abs(mult) < 1e-12
    assert find_attracting_cycles(QuadraticMap(-2)) == []
    (pts, mult), = find_attracting_cycles(QuadraticMap(0.1))
    assert abs(pts[0] - (1 - math.sqrt(0.6)) / 2) < 1e-12


def test_escape_radius_bound():
    assert escape_radius_bound(QuadraticMap(-2)) == pytest.approx(2.0)
    assert escape_radius_bound(QuadraticMap(-1)) == pytest.approx((1 + math.sqrt(5)) / 2)
    R = RationalMap([0.2, 0.1, 0.3, 1.0], [1.1, 0.2])
    r = escape_radius_bound(R)
    for t in np.linspace(0, 2 * np.pi, 17):
        z = 1.01 * r * np.exp(1j * t)
        assert abs(R.eval(z)) > abs(z)


def test_spec_round_trip(tmp_path):
    R = RationalMap([0.2, 0.1j, 0.3, 1.0], [1.1, 0.2])
    path = tmp_path / "m.json"
    path.write_text(json.dumps(R.to_spec()))
    assert load_map_spec(path) == R
    path.write_text(json.dumps({"quadratic_c": [-2, 0]}))
    assert load_map_spec(path).c == -2
    with pytest.raises(MapSpecError):
        load_map_spec(tmp_path / "missing.json")


def test_chebyshev_orbit_fixture():
    orb = orbit(QuadraticMap(-2), -2, 3)
    assert orb.points == (-2, 2, 2, 2)
    assert [d.to_complex() for d in orb.cumulative_derivatives] == [1, -4, -16, -64]


def test_superattracting_orbit_fixture():
    orb = orbit(QuadraticMap(0), 0, 5)
    assert all(p == 0 for p in orb.points)
    assert all(d.is_zero() for d in orb.cumulative_derivatives[1:])


def test_small_fixtures():
    assert sorted(z.real for z in preimages(QuadraticMap(0), 4)) == [-2, 2]
    assert preimages(QuadraticMap(-2), -2) == [0j, 0j]
    assert sorted(z.real for z in preimages(QuadraticMap(1), 2)) == pytest.approx([-1, 1])
    R = RationalMap.polynomial([0, -3, 0, 1])
    assert R.deriv(1) == 0 and R.deriv(1, 2) == 6
    assert check_no_simple_critical_relations(R, 3).ok
    assert RationalMap([1.0, 0, 1.0], [0, 2.0]).eval(1j) == 0
