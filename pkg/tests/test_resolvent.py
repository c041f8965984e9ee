import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ruelle_lab.maps import QuadraticMap, RationalMap, orbit
from ruelle_lab.resolvent import (
    CriticalRelationError,
    DepthCapError,
    PoleCollisionError,
    B_n,
    B_n_grouped,
    decompose,
    default_depth_cap,
    residue_limit,
    s_n,
)


def inv_deriv(R, z, n):
    return orbit(R, z, n, escape_radius=math.inf).cumulative_derivatives[n].reciprocal().to_complex()


def test_pole_count_quadratic():
    R = QuadraticMap(-2)
    for n in range(1, 6):
        assert len(decompose(R, n)) == 2**n - 1


def test_B_n_for_chebyshev():
    # sum |b| over poles of 1/(R^n)' for z^2 - 2 is 2^-n
    R = QuadraticMap(-2)
    for n, want in ((1, 0.5), (2, 0.25), (3, 0.125)):
        assert float(B_n(decompose(R, n))) == pytest.approx(want, rel=1e-12)


def test_grouped_sums_add_up():
    dec = decompose(QuadraticMap(-1.3 + 0.2j), 4)
    groups = B_n_grouped(dec)
    assert set(groups) == {(0, k) for k in range(4)}
    assert float(sum((v for v in groups.values()), start=type(B_n(dec))())) == pytest.approx(float(B_n(dec)))


def test_superattracting_critical_point_is_a_relation():
    assert len(decompose(QuadraticMap(0), 1)) == 1
    with pytest.raises(CriticalRelationError):
        decompose(QuadraticMap(0), 2)


def test_depth_cap():
    assert default_depth_cap(QuadraticMap(-2)) == 10
    with pytest.raises(DepthCapError):
        decompose(QuadraticMap(-2), 3, depth_cap=2)
    with pytest.raises(ValueError):
        decompose(QuadraticMap(-2), 0)


def test_s_n_collision():
    dec = decompose(QuadraticMap(-2), 2)
    with pytest.raises(PoleCollisionError):
        s_n(dec, 0j)
    assert float(s_n(dec, 3.0)) > 0


def test_polynomial_part_is_lambda_power():
    # deg P - deg Q = 1 gives a finite multiplier at infinity
    R = RationalMap([0.2, 0.1, 1.0], [1.1, 0.2])
    for n in range(1, 4):
        dec = decompose(R, n)
        assert dec.polynomial_part_mismatch() < 1e-6
        assert dec.lambda_power == pytest.approx(0.2**n)


@settings(max_examples=25, deadline=None)
@given(st.floats(-1.8, 0.3), st.floats(-1.0, 1.0), st.integers(1, 4))
def test_reconstruction_matches_inverse_derivative(cre, cim, n):
    R = QuadraticMap(complex(cre, cim))
    if abs(R.c) < 1e-3:
        return
    try:
        dec = decompose(R, n)
    except CriticalRelationError:
        return
    rng = np.random.default_rng(0)
    for z in rng.normal(size=4) * 1.5 + 1j * rng.normal(size=4) * 1.5:
        z = complex(z)
        if min(abs(z - p.location) for p in dec.poles) < 0.05:
            continue
        want = inv_deriv(R, z, n)
        assert abs(dec.evaluate(z) - want) <= 1e-8 * max(1.0, abs(want))


def test_residues_match_numeric_limit_cubic():
    R = RationalMap.polynomial([0.1 + 0.2j, 0.3, 0.0, 1.0])
    dec = decompose(R, 3)
    for pole, b in zip(dec.poles, dec.residues):
        num = residue_limit(R, 3, pole.location)
        assert abs(num - b.to_complex()) <= 1e-6 * abs(b.to_complex())
