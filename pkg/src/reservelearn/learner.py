"""Reserve learning from sample matrices: shading, sample sizes, and the algorithm.

The learner builds the empirical top-two CDFs from m sampled value vectors,
inflates them with the data-side shading profile at beta = ln(8m/delta)/m,
and returns the smallest revenue-optimal reserve of the shaded pair.  The
wider analysis-side profile exists only for verification and is never applied
to data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .distributions import Cdf, EmpiricalCdf, _as_float_array
from .errors import InvalidInputError
from .orderstats import InstancePair, top_two_of_rows
from .revenue import ReserveResult, optimal_reserve


class ShadeProfile(Enum):
    """Coefficients (sqrt term, additive term) of the two shading profiles."""

    EMPIRICAL = (2.0, 4.0)  # applied to empirical CDFs inside the learner
    ANALYSIS = (8.0, 7.0)  # wider margin used by the verifiers only

    @property
    def sqrt_coef(self) -> float:
        return self.value[0]

    @property
    def add_coef(self) -> float:
        return self.value[1]


@dataclass(frozen=True)
class ShadeParams:
    beta: float
    profile: ShadeProfile = ShadeProfile.EMPIRICAL

    def __post_init__(self):
        if not (self.beta >= 0 and math.isfinite(self.beta)):
            raise InvalidInputError(f"beta must be finite and >= 0, got {self.beta}")


def beta(m: int, delta: float) -> float:
    """Concentration parameter ln(8m/delta)/m."""
    if not (isinstance(m, (int, np.integer)) and m >= 1):
        raise InvalidInputError(f"m must be a positive integer, got {m!r}")
    if not (0.0 < delta < 1.0):
        raise InvalidInputError(f"delta must lie in (0,1), got {delta!r}")
    return math.log(8.0 * m / delta) / m


def shade(x, params: ShadeParams):
    """min{1, x + sqrt(c*beta*x*(1-x)) + k*beta}; identity when beta = 0.

    Non-decreasing in x for every beta, and always >= x with shade(1) = 1.
    """
    x_arr, scalar = _as_float_array(x)
    if np.any(x_arr < -1e-12) or np.any(x_arr > 1.0 + 1e-12):
        raise InvalidInputError(f"shade input must lie in [0,1], got {x!r}")
    xc = np.clip(x_arr, 0.0, 1.0)
    b = params.beta
    out = np.minimum(
        1.0,
        xc + np.sqrt(params.profile.sqrt_coef * b * xc * (1.0 - xc)) + params.profile.add_coef * b,
    )
    return float(out) if scalar else out


class ShadedCdf(Cdf):
    """Pointwise composition shade(F(v)); step bases keep their jump locations."""

    def __init__(self, base: Cdf, params: ShadeParams):
        self.base = base
        self.params = params

    def eval(self, v):
        return shade(self.base.eval(v), self.params)

    def quantile(self, q):
        q_arr, scalar = _as_float_array(q)
        qs = np.atleast_1d(q_arr)
        out = np.empty(qs.shape)
        for i, x in enumerate(qs):
            if shade(0.0, self.params) > x:
                out[i] = 0.0
                continue
            # largest base-probability at which the shaded CDF is still <= x
            lo, hi = 0.0, 1.0
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                if shade(mid, self.params) <= x:
                    lo = mid
                else:
                    hi = mid
            out[i] = self.base.quantile(lo)
        return float(out[0]) if scalar else out.reshape(q_arr.shape)

    def support_cap(self):
        # shade clamps to 1 once x >= 1 - add_coef*beta, so nothing survives
        # beyond the base quantile of that probability
        hit = max(0.0, 1.0 - self.params.profile.add_coef * self.params.beta)
        return self.base.quantile(hit)

    def steps(self):
        base_steps = self.base.steps()
        if base_steps is None:
            return None
        bp, vals = base_steps
        return bp, shade(vals, self.params)

    def tail_integral_bound(self, a):
        # shading only raises the CDF, so the base tail remains a valid bound
        return min(self.base.tail_integral_bound(a), max(0.0, self.support_cap() - a))


def shaded_cdf(base: Cdf, params: ShadeParams) -> Cdf:
    return ShadedCdf(base, params)


def shaded_pair(pair: InstancePair, params: ShadeParams) -> InstancePair:
    return InstancePair(f1=ShadedCdf(pair.f1, params), f2=ShadedCdf(pair.f2, params))


# ---------------------------------------------------------------------------
# sample-size calculator
# ---------------------------------------------------------------------------

SETTINGS = ("unit-support", "bounded-1H", "regular", "mhr")


def _beta_threshold(setting: str, eps: float, H: float | None) -> float:
    if setting == "unit-support":
        return eps**2 / 12.0
    if setting == "bounded-1H":
        return eps**2 / (48.0 * H)
    if setting == "regular":
        return eps**3 / 2880.0
    if setting == "mhr":
        return eps**2 / 1870.0
    raise InvalidInputError(f"unknown setting {setting!r}; expected one of {SETTINGS}")


def required_samples(setting: str, eps: float, delta: float, H: float | None = None) -> int:
    """Sufficient sample count for the distribution family named by ``setting``.

    Also verifies that the resulting beta clears the family's working
    threshold (a sanity guard; it holds for all valid inputs).
    """
    if not (0.0 < eps < 1.0 and 0.0 < delta < 1.0):
        raise InvalidInputError(f"eps and delta must lie in (0,1), got {eps}, {delta}")
    le, ld = math.log(1.0 / eps), math.log(1.0 / delta)
    if setting == "unit-support":
        m = 36.0 * eps**-2 * (le + ld + 3.0)
    elif setting == "bounded-1H":
        if H is None or H < 1.0:
            raise InvalidInputError("bounded-1H needs H >= 1")
        m = 144.0 * eps**-2 * H * (le + math.log(H) + ld + 4.0)
    elif setting == "regular":
        m = 11520.0 * eps**-3 * (le + ld + 4.0)
    elif setting == "mhr":
        m = 5610.0 * eps**-2 * (le + ld + 5.0)
    else:
        raise InvalidInputError(f"unknown setting {setting!r}; expected one of {SETTINGS}")
    m_int = int(math.ceil(m))
    if beta(m_int, delta) > _beta_threshold(setting, eps, H):
        raise InvalidInputError(
            f"beta({m_int}, {delta}) exceeds the {setting} threshold; inputs out of range"
        )
    return m_int


# ---------------------------------------------------------------------------
# the learning algorithm
# ---------------------------------------------------------------------------


@dataclass
class LearnOutput:
    reserve: float
    beta: float
    shaded_pair: InstancePair
    revenue_on_shaded: float
    degenerate: bool
    candidates_examined: int
    m: int
    n: int


def as_sample_matrix(samples) -> np.ndarray:
    matrix = np.asarray(samples, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] < 1 or matrix.shape[1] < 1:
        raise InvalidInputError("sample matrix must be m x n with m, n >= 1")
    if not np.all(np.isfinite(matrix)) or np.any(matrix < 0):
        raise InvalidInputError("sample values must be finite and non-negative")
    return matrix


def learn_reserve_from_top_two(
    x1: np.ndarray,
    x2: np.ndarray,
    delta: float,
    beta_override: float | None = None,
    n: int = 0,
) -> LearnOutput:
    """Algorithm core once the per-row top-two columns are extracted."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    m = x1.size
    b = beta(int(m), delta) if beta_override is None else float(beta_override)
    if beta_override is not None and not (b >= 0 and math.isfinite(b)):
        raise InvalidInputError(f"beta override must be finite and >= 0, got {beta_override}")
    params = ShadeParams(beta=b, profile=ShadeProfile.EMPIRICAL)
    pair = InstancePair(
        f1=ShadedCdf(EmpiricalCdf(x1), params), f2=ShadedCdf(EmpiricalCdf(x2), params)
    )
    # With 4*beta >= 1 the shaded pair is all-ones: every reserve earns zero,
    # the scan ties at reserve 0 and the result is flagged degenerate.
    result: ReserveResult = optimal_reserve(pair)
    return LearnOutput(
        reserve=result.reserve,
        beta=b,
        shaded_pair=pair,
        revenue_on_shaded=result.revenue,
        degenerate=result.degenerate,
        candidates_examined=result.candidates_examined,
        m=int(m),
        n=int(n),
    )


def learn_reserve(samples, delta: float, beta_override: float | None = None) -> LearnOutput:
    """Shaded empirical revenue maximization on an m x n sample matrix.

    Output is invariant under row order and under permutations within a row;
    with ``beta_override=0`` it reduces to plain empirical maximization.
    """
    matrix = as_sample_matrix(samples)
    x1, x2 = top_two_of_rows(matrix)
    return learn_reserve_from_top_two(
        x1, x2, delta, beta_override=beta_override, n=matrix.shape[1]
    )
