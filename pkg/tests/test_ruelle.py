import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ruelle_lab.maps import QuadraticMap, RationalMap
from ruelle_lab.numerics import ScaledComplex
from ruelle_lab.ruelle import (
    AtomCollisionError,
    CauchyCombo,
    KernelAtCriticalPointError,
    T_iterates,
    apply_star,
    apply_star_n,
    apply_star_oracle,
    apply_T,
    beltrami_eval,
    cesaro_bound_trail,
    cesaro_T,
    merge_atoms,
    pushforward,
    star_closed_form,
)
from ruelle_lab.verify import random_instance

cplx = st.builds(complex, st.floats(-2, 2), st.floats(-2, 2))


def weights(combo):
    return {(round(a.real, 9), round(a.imag, 9)): w.to_complex() for a, w in combo.atoms}


def test_single_step_fixture():
    # R = z^2, a = 2: -(1/4) tau_0 + (1/4) tau_4
    got = weights(apply_star(QuadraticMap(0), CauchyCombo.tau(2)))
    assert got == pytest.approx({(0.0, 0.0): -0.25, (4.0, 0.0): 0.25})


def test_kernel_at_critical_point_of_quadratic_vanishes():
    assert len(apply_star(QuadraticMap(0), CauchyCombo.tau(0))) == 0
    R = RationalMap.polynomial([0, -3, 0, 1])
    with pytest.raises(KernelAtCriticalPointError):
        apply_star(R, CauchyCombo.tau(1))


def test_constant_is_admissible():
    # R*(1)(z) = sum over preimages of 1/R'(y)^2; for z^2 at z = 1 that is 1/2
    R = QuadraticMap(0)
    image = apply_star(R, CauchyCombo((), 1.0))
    assert image(1.0) == pytest.approx(0.5)
    assert apply_star_oracle(R, lambda y: 1.0, 1.0) == pytest.approx(0.5)


def test_total_weight_vanishes_after_one_step():
    R = RationalMap.polynomial([0.1j, 0.4, 0, 1])
    combo = apply_star_n(R, CauchyCombo.tau(0.7 + 0.2j), 3)
    assert abs(combo.total_weight().to_complex()) < 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_closed_form_matches_oracle(seed):
    rng = np.random.default_rng(seed)
    R, a, z = random_instance(rng, 3)
    combo = CauchyCombo.tau(a)
    for n in (1, 2, 3):
        combo = apply_star(R, combo)
        oracle = apply_star_oracle(R, lambda y: 1.0 / (y - a), z, n)
        assert abs(combo(z) - oracle) <= 1e-8 * max(1.0, abs(oracle))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_n_step_closed_form_matches_iteration(seed):
    rng = np.random.default_rng(seed)
    R, a, z = random_instance(rng, 3)
    for n in (1, 2, 3):
        direct = star_closed_form(R, a, n)
        iterated = apply_star_n(R, CauchyCombo.tau(a), n)
        assert abs(direct(z) - iterated(z)) <= 1e-9 * max(1.0, abs(iterated(z)))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), cplx, cplx)
def test_linearity(seed, alpha, beta):
    rng = np.random.default_rng(seed)
    R, a, z = random_instance(rng, 1)
    b = a + 0.37 - 0.21j
    lhs = apply_star(R, CauchyCombo.tau(a).scale(alpha) + CauchyCombo.tau(b).scale(beta))
    rhs = apply_star(R, CauchyCombo.tau(a)).scale(alpha) + apply_star(R, CauchyCombo.tau(b)).scale(beta)
    scale = abs(alpha) + abs(beta) + 1.0
    assert abs(lhs(z) - rhs(z)) <= 1e-12 * scale * max(1.0, abs(rhs(z)))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_duality(seed):
    rng = np.random.default_rng(seed)
    R, _, z = random_instance(rng, 1)
    phi = lambda y: 1.0 / (y - 4.0) + 0.5 * y  # noqa: E731
    got = apply_star_oracle(R, pushforward(R, phi), z)
    assert abs(got - R.degree * phi(z)) <= 1e-9 * abs(R.degree * phi(z))


def test_merge_atoms_combines_and_drops_zeros():
    merged = merge_atoms([(1.0, 2.0), (1.0 + 1e-14, 3.0), (2.0, 1.0), (2.0, -1.0), (0.5, 1.0)])
    assert [(a, w.to_complex()) for a, w in merged] == [(0.5, 1.0), (1.0, 5.0)]


def test_collision_is_reported():
    with pytest.raises(AtomCollisionError):
        CauchyCombo.tau(1.0)(1.0)


def test_beltrami_unit_modulus():
    R = QuadraticMap(-0.3 + 0.4j)
    for z in (0.3 + 0.1j, -1.2 + 0.5j, 2.0):
        assert abs(beltrami_eval(R, lambda w: 1.0, z)) == pytest.approx(1.0)


def test_T_quadratic_specialization():
    c = -0.6 + 0.3j
    R = QuadraticMap(c)
    F = lambda w: cmath.exp(w) + w**2  # noqa: E731
    for a in (0.5, 1.1 - 0.4j):
        assert apply_T(R, F, a) == pytest.approx((F(R.eval(a)) - F(c)) / (2 * a))
    assert apply_T(R, lambda w: 3.0, 0.7) == pytest.approx(0.0)


def test_T_iterates_match_repeated_application():
    R = QuadraticMap(-1.2 + 0.1j)
    F = lambda w: 1.0 / (w - 3.0)  # noqa: E731
    a = 0.4 + 0.3j
    G = T_iterates(R, F, a, 3)
    G1 = lambda x: apply_T(R, F, x)  # noqa: E731
    G2 = lambda x: apply_T(R, G1, x)  # noqa: E731
    assert G[0].to_complex() == pytest.approx(F(a))
    assert G[1].to_complex() == pytest.approx(G1(a))
    assert G[2].to_complex() == pytest.approx(G2(a))


def test_cesaro_of_constant():
    # T(1) = 0, so the m-th average is 1/m
    A = cesaro_T(QuadraticMap(-2), lambda w: 1.0, 0.3, 6)
    assert A == pytest.approx([1.0 / m for m in range(1, 7)])
    assert cesaro_T(QuadraticMap(-2), lambda w: 0.0, 0.3, 4) == [0, 0, 0, 0]


def test_cesaro_bound_holds():
    R = QuadraticMap(-2)
    F = lambda w: 1.0 / (w - 5.0)  # noqa: E731
    trail = cesaro_bound_trail(R, F, 0.3 + 0.1j, 8, 1.0 / 2.5)
    assert all(b.ok for b in trail)


def test_scaled_weights_survive_deep_iteration():
    # the orbit of 0.3 stays in [-2, 2] and the weights shrink geometrically
    combo = apply_star_n(QuadraticMap(-2), CauchyCombo.tau(0.3), 40)
    assert all(isinstance(w, ScaledComplex) for _, w in combo.atoms)
    assert math.isfinite(abs(combo(10.0)))
    assert abs(combo.total_weight().to_complex()) < 1e-12
