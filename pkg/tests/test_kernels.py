"""Compiled and pure-Python kernels must agree."""
import math
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ruelle_lab import _kernels
from ruelle_lab._kernels import _pykernels as pure
from ruelle_lab.maps import QuadraticMap, RationalMap

compiled = _kernels.compiled
needs_compiled = pytest.mark.skipif(compiled is None, reason="compiled kernels not built")


def _arrays(R):
    return R._arrays


@needs_compiled
@settings(max_examples=50, deadline=None)
@given(st.floats(-2.2, 0.5), st.floats(-1.2, 1.2), st.floats(-1.5, 1.5), st.floats(-1.5, 1.5))
def test_orbit_parity(cre, cim, zre, zim):
    R = QuadraticMap(complex(cre, cim))
    args = (*_arrays(R), complex(zre, zim), 200, 1e6)
    p_pts, p_m, p_e, p_n, p_s = pure.orbit(*args)
    c_pts, c_m, c_e, c_n, c_s = compiled.orbit(*args)
    assert (p_n, p_s) == (c_n, c_s)
    assert np.allclose(p_pts[:p_n], c_pts[:c_n], rtol=1e-9, atol=1e-12) or p_n > 30
    assert np.array_equal(p_e[:p_n], c_e[:c_n]) or p_n > 30
    assert np.allclose(p_m[:8], c_m[:8], rtol=1e-12)


@needs_compiled
def test_orbit_parity_rational_and_overflow():
    R = RationalMap([0.2, 0.1, 0.3, 1.0], [1.1, 0.2])
    args = (*_arrays(R), 0.3 + 0.2j, 50, math.inf)
    p, c = pure.orbit(*args), compiled.orbit(*args)
    assert p[3:] == c[3:]
    assert np.allclose(p[0][: p[3]], c[0][: c[3]])
    big = (*_arrays(QuadraticMap(0)), 10.0 + 0j, 50, math.inf)
    assert pure.orbit(*big)[4] == compiled.orbit(*big)[4] == _kernels.STATUS_OVERFLOW


@needs_compiled
def test_orbit_pole_status():
    R = RationalMap([1.0, 0, 1.0], [0, 1.0])  # (z^2 + 1) / z
    args = (*_arrays(R), 0j, 5, math.inf)
    assert pure.orbit(*args)[4] == compiled.orbit(*args)[4] == _kernels.STATUS_POLE


@needs_compiled
@settings(max_examples=40, deadline=None)
@given(st.lists(st.builds(complex, st.floats(-2, 2), st.floats(-2, 2)), min_size=3, max_size=10))
def test_aberth_parity(coeffs):
    coeffs = np.array(coeffs + [1.0], dtype=np.complex128)
    deg = len(coeffs) - 1
    init = 0.4 + 0.9 * np.exp(2j * np.pi * (np.arange(deg) + 0.25) / deg)
    eps = np.finfo(float).eps
    r1, it1, ok1 = pure.aberth(coeffs, init, 300, eps)
    r2, it2, ok2 = compiled.aberth(coeffs, init, 300, eps)
    assert ok1 == ok2
    assert np.allclose(np.sort_complex(r1), np.sort_complex(r2), atol=1e-8)


@needs_compiled
@given(st.builds(complex, st.floats(-1e300, 1e300), st.floats(-1e300, 1e300)), st.integers(-1000, 1000))
def test_normalize_parity(m, e):
    if m == 0:
        return
    pm, pe = pure.normalize(m, e)
    cm, ce = compiled.normalize(m, e)
    assert pe == ce
    assert pm == cm
    assert 1.0 <= abs(pm) < 2.0


def test_pure_backend_selected_by_env():
    code = "import ruelle_lab._kernels as k; print(k.BACKEND_NAME)"
    env = dict(os.environ, RUELLE_LAB_PURE="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
