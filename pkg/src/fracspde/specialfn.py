"""Two-parameter Mittag-Leffler function E_{a,b}(z) for real z.

E_{a,b}(z) = sum_k z^k / Gamma(a k + b). Negative arguments are the ones
the kernels need; there the evaluator switches between the power series,
a real-axis integral representation and the large-argument expansion.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np

from . import _mlkernels as _k
from .errors import MLDomainError

# largest term magnitude the power series may reach before cancellation
# costs more digits than the integral representation
SERIES_TERM_CAP = 1e3
SERIES_X_MAX = 10.0
ASYMPTOTIC_X_MIN = 50.0


@dataclass(frozen=True)
class MLParams:
    a: float
    b: float

    def __post_init__(self):
        check_params(self.a, self.b)


def check_params(a: float, b: float) -> None:
    if not (math.isfinite(a) and math.isfinite(b)) or a <= 0 or b <= 0:
        raise MLDomainError(f"Mittag-Leffler parameters need a > 0 and b > 0, got a={a}, b={b}")


def _log_max_term(a: float, b: float, x: float) -> float:
    """log of the largest |term| x^k / Gamma(a k + b) over integers k >= 0."""
    if x <= 0:
        return -math.lgamma(b) if b > 0 else 0.0
    lx = math.log(x)
    if lx / a > 700.0:
        return math.inf
    # k log x - lgamma(a k + b) is concave in k; its real maximizer has
    # digamma(a k + b) = log(x) / a, i.e. a k + b close to x^(1/a) + 1/2
    kstar = max(0.0, (math.exp(lx / a) + 0.5 - b) / a)
    k0 = int(kstar)
    ks = {0} | {k for k in range(k0 - 3, k0 + 4) if k >= 0}
    return max(k * lx - math.lgamma(a * k + b) for k in ks)


@lru_cache(maxsize=4096)
def series_threshold(a: float, b: float) -> float:
    """Largest x <= 10 for which every term of the series at -x is <= 1e3."""
    cap = math.log(SERIES_TERM_CAP)
    if _log_max_term(a, b, SERIES_X_MAX) <= cap:
        return SERIES_X_MAX
    lo, hi = 0.0, SERIES_X_MAX
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if mid == 0.0 or _log_max_term(a, b, mid) <= cap:
            lo = mid
        else:
            hi = mid
    return lo


def switch_points(a: float, b: float) -> tuple[float, float]:
    """Negative arguments where the evaluator changes regime."""
    check_params(a, b)
    return -series_threshold(float(a), float(b)), -ASYMPTOTIC_X_MIN


def rgamma(x: float) -> float:
    """1/Gamma(x), exactly zero at (and within 1e-8 of) the poles."""
    return float(_k.rgamma(float(x)))


def ml_eval(a: float, b: float, z):
    """E_{a,b}(z) for real scalar or array z.

    Accuracy: about 1e-13 absolute for |z| <= 50 and 1e-13 relative below.
    Raises OverflowError when a positive argument overflows a double.
    """
    check_params(a, b)
    a = float(a)
    b = float(b)
    zarr = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(zarr)):
        raise ValueError("Mittag-Leffler argument must be finite")
    flat = np.ascontiguousarray(zarr.ravel())
    out = _k.ml_array(a, b, flat, series_threshold(a, b), ASYMPTOTIC_X_MIN,
                      _k.GL_X, _k.GL_W)
    if not np.all(np.isfinite(out)):
        raise OverflowError(f"E_{{{a},{b}}}(z) exceeds the double range")
    out = out.reshape(zarr.shape)
    if zarr.ndim == 0:
        return float(out)
    return out


def ml_series_oracle(a: float, b: float, z: float, n_terms: int) -> float:
    """Partial sum of the first n_terms series terms, summed exactly.

    Terms are formed and accumulated in extended precision so the result is
    the correctly rounded partial sum even under heavy cancellation.
    """
    check_params(a, b)
    if n_terms < 1:
        raise ValueError("n_terms must be >= 1")
    x = abs(float(z))
    extra = 0
    if x > 0:
        peak = _log_max_term(a, b, x)
        if peak > math.log(sys.float_info.max):
            raise OverflowError("the largest series term exceeds the double range")
        extra = int(max(0.0, peak) / math.log(10)) + 1
    big = mpmath.mpf(sys.float_info.max)
    with mpmath.workdps(40 + extra):
        am, bm, zm = mpmath.mpf(a), mpmath.mpf(b), mpmath.mpf(z)
        terms = []
        for k in range(n_terms):
            t = zm ** k * mpmath.rgamma(am * k + bm)
            if abs(t) > big:
                raise OverflowError(f"series term {k} exceeds the double range")
            terms.append(t)
        return float(mpmath.fsum(terms))
