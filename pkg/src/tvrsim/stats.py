"""Gaussian tail helpers and a plain bisection solver."""

import math

from scipy import optimize

__all__ = ["q_function", "norm_cdf", "bisect", "NoRootError"]

_SQRT2 = math.sqrt(2.0)


class NoRootError(ValueError):
    """Raised when a bracket does not contain a sign change."""

    def __init__(self, lo, hi, f_lo, f_hi):
        super().__init__(
            f"no sign change on [{lo!r}, {hi!r}]: f(lo)={f_lo!r}, f(hi)={f_hi!r}"
        )
        self.lo, self.hi = lo, hi
        self.f_lo, self.f_hi = f_lo, f_hi


def q_function(x: float) -> float:
    """Standard normal upper tail, Q(x) = P[Z > x]."""
    return 0.5 * math.erfc(x / _SQRT2)


def norm_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / _SQRT2)


def bisect(f, lo: float, hi: float, xtol: float = 1e-12, max_iter: int = 400) -> float:
    """Root of ``f`` on ``[lo, hi]``; NoRootError if the ends share a sign."""
    f_lo, f_hi = f(lo), f(hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if (f_lo > 0) == (f_hi > 0):
        raise NoRootError(lo, hi, f_lo, f_hi)
    return float(optimize.bisect(f, lo, hi, xtol=xtol, maxiter=max_iter))
