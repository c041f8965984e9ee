# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: orbit iteration with scaled derivatives and Aberth steps.

Mirrors ``_pykernels`` exactly; see that module for the contracts.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport frexp, ldexp, hypot, isfinite
from libc.stdint cimport int64_t

cnp.import_array()

cdef int STATUS_OK = 0
cdef int STATUS_ESCAPED = 1
cdef int STATUS_POLE = 2
cdef int STATUS_OVERFLOW = 3

cdef int64_t EXP_LIMIT = 9223372036854775000


cdef inline double complex _horner(double complex[:] c, double complex z) nogil:
    cdef Py_ssize_t k
    cdef double complex acc = 0
    for k in range(c.shape[0] - 1, -1, -1):
        acc = acc * z + c[k]
    return acc


cdef inline int _normalize(double complex *m, int64_t *e) nogil:
    cdef double re = m[0].real
    cdef double im = m[0].imag
    cdef double a = hypot(re, im)
    cdef int k
    cdef int shift
    if a == 0.0:
        m[0] = 0
        e[0] = 0
        return 0
    if not isfinite(a):
        return -1
    frexp(a, &k)
    shift = k - 1
    re = ldexp(re, -shift)
    im = ldexp(im, -shift)
    e[0] += shift
    a = hypot(re, im)
    if a >= 2.0:
        re *= 0.5
        im *= 0.5
        e[0] += 1
    elif a < 1.0:
        re *= 2.0
        im *= 2.0
        e[0] -= 1
    m[0] = re + 1j * im
    if e[0] > EXP_LIMIT or e[0] < -EXP_LIMIT:
        return -2
    return 0


def normalize(m, e):
    cdef double complex mm = m
    cdef int64_t ee = e
    if _normalize(&mm, &ee) != 0:
        raise OverflowError("scaled value out of range")
    return complex(mm), int(ee)


def orbit(P, dP, Q, dQ, z0, Py_ssize_t n, double escape_radius):
    cdef double complex[:] cP = np.ascontiguousarray(P, dtype=np.complex128)
    cdef double complex[:] cdP = np.ascontiguousarray(dP, dtype=np.complex128)
    cdef double complex[:] cQ = np.ascontiguousarray(Q, dtype=np.complex128)
    cdef double complex[:] cdQ = np.ascontiguousarray(dQ, dtype=np.complex128)
    points_a = np.zeros(n + 1, dtype=np.complex128)
    mant_a = np.zeros(n + 1, dtype=np.complex128)
    expo_a = np.zeros(n + 1, dtype=np.int64)
    cdef double complex[:] points = points_a
    cdef double complex[:] mant = mant_a
    cdef int64_t[:] expo = expo_a
    cdef double complex z = z0
    cdef double complex m = 1
    cdef int64_t e = 0
    cdef double complex p, q, dp, dq, deriv
    cdef Py_ssize_t k
    cdef int rc
    cdef Py_ssize_t count = n + 1
    cdef int status = STATUS_OK
    points[0] = z
    mant[0] = m
    if hypot(z.real, z.imag) > escape_radius:
        return points_a, mant_a, expo_a, 1, STATUS_ESCAPED
    with nogil:
        for k in range(n):
            q = _horner(cQ, z)
            if q == 0:
                count = k + 1
                status = STATUS_POLE
                break
            p = _horner(cP, z)
            dp = _horner(cdP, z)
            dq = _horner(cdQ, z)
            deriv = (dp * q - p * dq) / (q * q)
            m = m * deriv
            z = p / q
            if not (isfinite(z.real) and isfinite(z.imag) and isfinite(m.real) and isfinite(m.imag)):
                count = k + 1
                status = STATUS_OVERFLOW
                break
            rc = _normalize(&m, &e)
            if rc != 0:
                count = -1 - k
                break
            points[k + 1] = z
            mant[k + 1] = m
            expo[k + 1] = e
            if hypot(z.real, z.imag) > escape_radius:
                count = k + 2
                status = STATUS_ESCAPED
                break
    if count < 0:
        raise OverflowError("derivative product left the representable range")
    return points_a, mant_a, expo_a, count, status


def aberth(coeffs, roots0, int max_iter, double eps):
    cdef double complex[:] c = np.ascontiguousarray(coeffs, dtype=np.complex128)
    roots_a = np.array(roots0, dtype=np.complex128, copy=True)
    cdef double complex[:] roots = roots_a
    cdef Py_ssize_t deg = roots.shape[0]
    done_a = np.zeros(deg, dtype=np.uint8)
    cdef unsigned char[:] done = done_a
    cdef Py_ssize_t i, j, k
    cdef int it
    cdef bint moved, all_done
    cdef double complex z, p, dp, ratio, s, diff, denom, w
    cdef double scale, az
    with nogil:
        for it in range(1, max_iter + 1):
            moved = False
            for i in range(deg):
                if done[i]:
                    continue
                z = roots[i]
                p = 0
                dp = 0
                scale = 0.0
                az = hypot(z.real, z.imag)
                for k in range(deg, -1, -1):
                    dp = dp * z + p
                    p = p * z + c[k]
                    scale = scale * az + hypot(c[k].real, c[k].imag)
                if hypot(p.real, p.imag) <= 4.0 * eps * scale:
                    done[i] = 1
                    continue
                if dp != 0:
                    ratio = p / dp
                else:
                    ratio = 1.0 + 1.0j
                s = 0
                for j in range(deg):
                    if j != i:
                        diff = z - roots[j]
                        if diff != 0:
                            s = s + 1.0 / diff
                denom = 1.0 - ratio * s
                if denom != 0:
                    w = ratio / denom
                else:
                    w = ratio
                roots[i] = z - w
                moved = True
                if hypot(w.real, w.imag) <= eps * hypot(roots[i].real, roots[i].imag):
                    done[i] = 1
            all_done = True
            for i in range(deg):
                if not done[i]:
                    all_done = False
                    break
            if not moved or all_done:
                with gil:
                    return roots_a, it, True
    return roots_a, max_iter, False
