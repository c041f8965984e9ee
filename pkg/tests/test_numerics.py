import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ruelle_lab.numerics import Polynomial, ScaledComplex, poly_roots, root_multiplicities, scaled_product, scaled_sum

finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False)
complexes = st.builds(complex, finite, finite)
nonzero = complexes.filter(lambda z: abs(z) > 1e-6)


def close(a, b, rel=1e-12):
    return abs(a - b) <= rel * max(abs(a), abs(b), 1e-300)


@given(nonzero, nonzero)
def test_scaled_mul_div_match_complex(a, b):
    sa, sb = ScaledComplex.of(a), ScaledComplex.of(b)
    assert close((sa * sb).to_complex(), a * b)
    assert close((sa / sb).to_complex(), a / b)


@given(complexes, complexes)
def test_scaled_add_matches_complex(a, b):
    got = (ScaledComplex.of(a) + ScaledComplex.of(b)).to_complex()
    assert abs(got - (a + b)) <= 1e-12 * (abs(a) + abs(b) + 1e-300)


@given(nonzero)
def test_mantissa_is_normalized(z):
    s = ScaledComplex.of(z)
    assert 1.0 <= abs(s.mantissa) < 2.0
    assert s.log2abs() == pytest.approx(math.log2(abs(z)), abs=1e-12)


def test_product_far_beyond_double_range():
    p = scaled_product([4.0] * 2000)
    assert p.log2abs() == pytest.approx(4000.0)
    assert not p.in_native_range()
    with pytest.raises(OverflowError):
        p.to_complex()
    q = p * scaled_product([0.25] * 2000)
    assert q.to_complex() == pytest.approx(1.0)


def test_reciprocal_and_sum_of_tiny_values():
    tiny = scaled_product([1e-200] * 5)
    total = scaled_sum([tiny, tiny, tiny])
    assert total.log2abs() == pytest.approx(math.log2(3) + 5 * math.log2(1e-200))
    assert (tiny.reciprocal() * tiny).to_complex() == pytest.approx(1.0)


def test_zero_behaviour():
    z = ScaledComplex.of(0)
    assert z.is_zero()
    assert (z + ScaledComplex.of(2.0)).to_complex() == 2.0
    with pytest.raises(ZeroDivisionError):
        z.reciprocal()


def test_polynomial_arithmetic():
    p = Polynomial([1, 2, 3])
    q = Polynomial([0, 1])
    assert (p * q).coeffs == (0, 1, 2, 3)
    assert (p - p).is_zero()
    assert p.deriv().coeffs == (2, 6)
    assert p(2.0) == 17
    assert Polynomial.from_roots([1, -1]).coeffs == pytest.approx((-1, 0, 1))


@settings(max_examples=60, deadline=None)
@given(st.lists(st.builds(complex, st.floats(-3, 3), st.floats(-3, 3)), min_size=1, max_size=8))
def test_poly_roots_recovers_roots(roots):
    # keep roots apart so the comparison is well conditioned
    if any(abs(a - b) < 1e-2 for i, a in enumerate(roots) for b in roots[i + 1:]):
        return
    found = poly_roots(Polynomial.from_roots(roots))
    assert len(found) == len(roots)
    for r in roots:
        assert min(abs(r - f) for f in found) < 1e-7


def test_poly_roots_against_numpy():
    rng = np.random.default_rng(3)
    for _ in range(20):
        c = rng.normal(size=7) + 1j * rng.normal(size=7)
        ours = sorted(poly_roots(list(c)), key=lambda z: (z.real, z.imag))
        ref = sorted(np.roots(c[::-1]), key=lambda z: (z.real, z.imag))
        assert np.allclose(ours, ref, atol=1e-8)


def test_multiple_roots_are_clustered():
    p = Polynomial.from_roots([1, 1, -2])
    groups = root_multiplicities(poly_roots(p))
    mult = {round(r.real): m for r, m in groups}
    assert mult == {1: 2, -2: 1}


def test_zero_roots_exact():
    assert poly_roots([0, 0, 1]) == [0j, 0j]


def test_degree_zero_rejected():
    with pytest.raises(ValueError):
        poly_roots([3.0])


def test_unit_roots():
    found = poly_roots([-1, 0, 0, 0, 0, 1])
    for k in range(5):
        w = cmath.exp(2j * math.pi * k / 5)
        assert min(abs(w - f) for f in found) < 1e-12
