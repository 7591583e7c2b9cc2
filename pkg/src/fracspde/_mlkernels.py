"""Scalar Mittag-Leffler evaluators for real arguments.

Three regimes for E_{a,b}(-x), x > 0:

* power series (small x, and every z >= 0),
* collapsed Hankel-contour integral on the negative real axis plus the
  residues of the poles s^a = -x on the principal sheet (bridge region),
* algebraic asymptotic series plus the same residues (large x), accepted
  only when its smallest-term error estimate is negligible.

Everything here is numba-compatible; see :mod:`fracspde._accel`.
"""

from __future__ import annotations

import math

import numpy as np

from ._accel import njit

_GL_X, _GL_W = np.polynomial.legendre.leggauss(10)
GL_X = np.ascontiguousarray(_GL_X)
GL_W = np.ascontiguousarray(_GL_W)

POLE_TOL = 1e-8
# cut integral: geometric panels on (2**-GRADE_LEVELS, 1], width-2 panels up
# to R_MAX, plus panels graded toward the near-pole point x**(1/a)
GRADE_LEVELS = 40
R_MAX = 60.0
SERIES_MAX_ITER = 1_000_000
KUMMER_X_MAX = 700.0


@njit
def log_rgamma(x):
    """Return (log|1/Gamma(x)|, sign of 1/Gamma(x)); sign 0 at the poles."""
    if x <= 0.0:
        n = math.floor(x + 0.5)
        if abs(x - n) < POLE_TOL:
            return 0.0, 0.0
    sign = 1.0
    if x < 0.0:
        if int(math.floor(x)) % 2 != 0:
            sign = -1.0
    return -math.lgamma(x), sign


@njit
def rgamma(x):
    """1/Gamma(x); exactly zero within POLE_TOL of a non-positive integer."""
    if x > 0.0 and x < 170.0:
        return 1.0 / math.gamma(x)
    lr, sign = log_rgamma(x)
    if sign == 0.0:
        return 0.0
    if -170.0 < x < 0.0:
        return 1.0 / math.gamma(x)
    return sign * math.exp(lr)


@njit
def ml_series(a, b, z):
    """Partial sums of sum_k z^k / Gamma(a k + b) until the terms die out."""
    total = rgamma(b)
    if z == 0.0:
        return total
    zk = 1.0
    lz = math.log(abs(z))
    prev = abs(total)
    for k in range(1, SERIES_MAX_ITER):
        zk *= z
        arg = a * k + b
        if arg < 170.0 and abs(zk) < 1e300:
            term = zk * rgamma(arg)
        else:
            lt = k * lz - math.lgamma(arg)
            if lt > 709.0:
                return math.inf if (z > 0.0 or k % 2 == 0) else -math.inf
            term = math.exp(lt)
            if z < 0.0 and k % 2 == 1:
                term = -term
        total += term
        mag = abs(term)
        if mag <= 1e-16 * abs(total) and mag <= prev:
            return total
        if mag == 0.0 and prev == 0.0:
            return total
        prev = mag
    return total


@njit
def ml_residues(a, b, x):
    """Sum of (1/a) e^s s^(1-b) over the poles s^a = -x with |arg s| < pi."""
    rho = x ** (1.0 / a)
    total = 0.0
    j = 0
    while True:
        theta = math.pi * (2 * j + 1) / a
        if theta >= math.pi - 1e-14:
            break
        mag = math.exp(rho * math.cos(theta)) * rho ** (1.0 - b)
        phase = rho * math.sin(theta) + (1.0 - b) * theta
        # the conjugate pole doubles the real part
        total += 2.0 * mag * math.cos(phase) / a
        j += 1
    return total


@njit
def ml_asymptotic(a, b, x):
    """Algebraic expansion with smallest-term truncation.

    Returns (value, error_estimate); value includes the pole residues.
    """
    lx = math.log(x)
    total = 0.0
    prev_mag = math.inf
    err = 0.0
    zeros = 0
    for k in range(1, 2000):
        lr, sign = log_rgamma(b - a * k)
        if sign == 0.0:
            zeros += 1
            if zeros >= 64:
                err = 0.0
                break
            continue
        zeros = 0
        mag = math.exp(lr - k * lx)
        if mag > prev_mag:
            break
        term = sign * mag
        if k % 2 == 0:
            term = -term
        total += term
        err = mag
        prev_mag = mag
        if mag <= 1e-17 * abs(total):
            break
    return total + ml_residues(a, b, x), err


@njit
def ml_cut_integral(a, b, x, gl_x, gl_w):
    """(1/pi) * integral over the negative real axis of the Laplace inverse.

    Requires 0 < b < a + 1, a != 1, x > 0.
    """
    g = a - b
    sa = math.sin(math.pi * b)
    cb = math.cos(0.5 * math.pi * a)
    s2 = 2.0 * math.sin(math.pi * b - 0.5 * math.pi * a) * cb
    c2 = 4.0 * cb * cb

    bps = np.empty(GRADE_LEVELS + 64 + 2 * 64 + 4)
    nb = 0
    for j in range(GRADE_LEVELS, -1, -1):
        bps[nb] = 2.0 ** (-j)
        nb += 1
    r = 2.0
    while r <= R_MAX + 1e-12:
        bps[nb] = r
        nb += 1
        r += 2.0
    r0 = x ** (1.0 / a)
    if r0 < R_MAX:
        w = 2.0 * r0 * abs(cb) / a
        bps[nb] = r0
        nb += 1
        for j in range(-3, 60):
            h = w * 2.0 ** j
            if h > R_MAX:
                break
            if r0 - h > bps[0]:
                bps[nb] = r0 - h
                nb += 1
            if r0 + h < R_MAX:
                bps[nb] = r0 + h
                nb += 1
    pts = np.sort(bps[:nb])

    h0 = pts[0]
    # leading-order contribution of (0, h0]
    total = h0 ** (g + 1.0) / (g + 1.0) * (s2 - sa) / x
    lo = pts[:-1]
    hw = 0.5 * (pts[1:] - lo)
    mid = lo + hw
    r = mid.reshape(-1, 1) + hw.reshape(-1, 1) * gl_x.reshape(1, -1)
    ra = r ** a
    num = (ra - x) * sa + x * s2
    den = (ra - x) * (ra - x) + c2 * x * ra
    vals = np.exp(-r) * r ** g * num / den
    total += np.sum(hw * (vals @ gl_w))
    return total / math.pi


@njit
def ml_integral_regime(a, b, x, gl_x, gl_w):
    """E_{a,b}(-x) from the cut integral, shifting b down into (0, a]."""
    m = 0
    if b > a:
        m = int(math.ceil((b - a) / a - 1e-12))
    bb = b - m * a
    if bb <= 0.0:
        bb += a
        m -= 1
    val = ml_cut_integral(a, bb, x, gl_x, gl_w) + ml_residues(a, bb, x)
    z = -x
    for i in range(1, m + 1):
        cur = bb + i * a
        val = (val - rgamma(cur - a)) / z
    return val


@njit
def ml_kummer_a1(b, x):
    """E_{1,b}(-x) = e^{-x}/Gamma(b) * 1F1(b-1; b; x), all terms positive."""
    if abs(b - 1.0) < 1e-15:
        return math.exp(-x)
    pois = math.exp(-x)
    s = 0.0
    k = 0
    while True:
        k += 1
        pois *= x / k
        t = pois / (k + b - 1.0)
        s += t
        if k > x and t <= 1e-17 * abs(s):
            break
        if k > 100000:
            break
    return (math.exp(-x) + (b - 1.0) * s) * rgamma(b)


@njit
def ml_scalar(a, b, z, x_series, x_asym, gl_x, gl_w):
    if z == 0.0:
        return rgamma(b)
    if z < 0.0 and abs(a - 1.0) <= 1e-12:
        # the algebraic expansion drops the e^{-x} part, which carries the
        # whole value for integer b; the Kummer form has no cancellation
        x = -z
        if x <= KUMMER_X_MAX:
            return ml_kummer_a1(b, x)
        val, err = ml_asymptotic(a, b, x)
        return val
    if z > 0.0 or -z <= x_series:
        return ml_series(a, b, z)
    x = -z
    if x >= x_asym:
        val, err = ml_asymptotic(a, b, x)
        if err <= 1e-15 * abs(val):
            return val
    return ml_integral_regime(a, b, x, gl_x, gl_w)


@njit
def ml_array(a, b, z, x_series, x_asym, gl_x, gl_w):
    out = np.empty(z.shape[0])
    for i in range(z.shape[0]):
        out[i] = ml_scalar(a, b, z[i], x_series, x_asym, gl_x, gl_w)
    return out
