"""Small deterministic numerics: adaptive Simpson quadrature and bisection."""

from __future__ import annotations

import math

from .errors import IntegrationError, InvalidInputError


def adaptive_simpson(f, a: float, b: float, tol: float, max_depth: int = 48) -> float:
    """Integrate f over [a, b] to absolute tolerance ``tol``.

    Classic recursive scheme with the |S_fine - S_coarse|/15 error estimate;
    raises :class:`IntegrationError` if the depth budget is exhausted before
    the requested tolerance is met.
    """
    if b <= a:
        return 0.0
    overflow = [0.0]

    def rec(x0, x2, f0, f1_, f2_, whole, budget, depth):
        x1 = 0.5 * (x0 + x2)
        lm = 0.5 * (x0 + x1)
        rm = 0.5 * (x1 + x2)
        flm = f(lm)
        frm = f(rm)
        left = (x1 - x0) / 6.0 * (f0 + 4.0 * flm + f1_)
        right = (x2 - x1) / 6.0 * (f1_ + 4.0 * frm + f2_)
        err = left + right - whole
        if abs(err) <= 15.0 * budget or depth >= max_depth:
            if abs(err) > 15.0 * budget:
                overflow[0] += abs(err) / 15.0
            return left + right + err / 15.0
        return rec(x0, x1, f0, flm, f1_, left, 0.5 * budget, depth + 1) + rec(
            x1, x2, f1_, frm, f2_, right, 0.5 * budget, depth + 1
        )

    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    value = rec(a, b, fa, fm, fb, whole, tol, 0)
    if overflow[0] > tol:
        raise IntegrationError("adaptive Simpson did not converge", overflow[0])
    return value


def bisect_root(f, lo: float, hi: float, xtol: float = 1e-12, iters: int = 200) -> float:
    """Root of f on [lo, hi] by bisection; the endpoints must bracket a sign change."""
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise InvalidInputError(f"no sign change on [{lo}, {hi}]")
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fmid = f(mid)
        if fmid == 0.0:
            return mid
        if (fmid > 0) == (flo > 0):
            lo, flo = mid, fmid
        else:
            hi = mid
        if hi - lo < xtol:
            break
    return 0.5 * (lo + hi)
