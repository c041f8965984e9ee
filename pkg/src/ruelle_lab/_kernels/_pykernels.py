"""Pure-Python reference kernels.

Same signatures and results as the compiled ``_ckernels`` module; used when the
extension is not built or when ``RUELLE_LAB_PURE=1`` is set.
"""
import math

import numpy as np

EXP_MIN = -(2**63)
EXP_MAX = 2**63 - 1

STATUS_OK = 0
STATUS_ESCAPED = 1
STATUS_POLE = 2
STATUS_OVERFLOW = 3


def normalize(m, e):
    """Return ``(m', e')`` with ``1 <= |m'| < 2`` representing ``m * 2**e``."""
    if m == 0:
        return 0j, 0
    a = abs(m)
    if not math.isfinite(a):
        raise OverflowError("non-finite mantissa")
    _, k = math.frexp(a)
    shift = k - 1
    m = complex(math.ldexp(m.real, -shift), math.ldexp(m.imag, -shift))
    e += shift
    a = abs(m)
    if a >= 2.0:
        m = m * 0.5
        e += 1
    elif a < 1.0:
        m = m * 2.0
        e -= 1
    if e > EXP_MAX or e < EXP_MIN:
        raise OverflowError("binary exponent outside int64 range")
    return m, e


def _horner(coeffs, z):
    acc = 0j
    for k in range(len(coeffs) - 1, -1, -1):
        acc = acc * z + coeffs[k]
    return acc


def orbit(P, dP, Q, dQ, z0, n, escape_radius):
    """Iterate ``R = P/Q`` from ``z0`` for ``n`` steps with scaled derivatives.

    Returns ``(points, mantissas, exponents, count, status)``; only the first
    ``count`` entries are meaningful.
    """
    P, dP, Q, dQ = ([complex(c) for c in arr] for arr in (P, dP, Q, dQ))
    points = np.zeros(n + 1, dtype=np.complex128)
    mant = np.zeros(n + 1, dtype=np.complex128)
    expo = np.zeros(n + 1, dtype=np.int64)
    z = complex(z0)
    m, e = 1 + 0j, 0
    points[0] = z
    mant[0] = m
    if abs(z) > escape_radius:
        return points, mant, expo, 1, STATUS_ESCAPED
    for k in range(n):
        q = _horner(Q, z)
        if q == 0:
            return points, mant, expo, k + 1, STATUS_POLE
        p = _horner(P, z)
        dp = _horner(dP, z)
        dq = _horner(dQ, z)
        deriv = (dp * q - p * dq) / (q * q)
        m = m * deriv
        z = p / q
        if not all(map(math.isfinite, (z.real, z.imag, m.real, m.imag))):
            return points, mant, expo, k + 1, STATUS_OVERFLOW
        m, e = normalize(m, e)
        points[k + 1] = z
        mant[k + 1] = m
        expo[k + 1] = e
        if abs(z) > escape_radius:
            return points, mant, expo, k + 2, STATUS_ESCAPED
    return points, mant, expo, n + 1, STATUS_OK


def aberth(coeffs, roots0, max_iter, eps):
    """Aberth-Ehrlich simultaneous iteration on ascending ``coeffs``.

    Returns ``(roots, iterations, converged)``.
    """
    roots = [complex(r) for r in roots0]
    deg = len(roots)
    coeffs = [complex(c) for c in coeffs]
    done = [False] * deg
    for it in range(1, max_iter + 1):
        moved = False
        for i in range(deg):
            if done[i]:
                continue
            z = roots[i]
            p = 0j
            dp = 0j
            scale = 0.0
            az = abs(z)
            for k in range(deg, -1, -1):
                dp = dp * z + p
                p = p * z + coeffs[k]
                scale = scale * az + abs(coeffs[k])
            if abs(p) <= 4.0 * eps * scale:
                done[i] = True
                continue
            ratio = p / dp if dp != 0 else complex(1.0, 1.0)
            s = 0j
            for j in range(deg):
                if j != i:
                    diff = z - roots[j]
                    if diff != 0:
                        s += 1.0 / diff
            denom = 1.0 - ratio * s
            w = ratio / denom if denom != 0 else ratio
            roots[i] = z - w
            moved = True
            if abs(w) <= eps * abs(roots[i]):
                done[i] = True
        if not moved or all(done):
            return np.array(roots, dtype=np.complex128), it, True
    return np.array(roots, dtype=np.complex128), max_iter, False
