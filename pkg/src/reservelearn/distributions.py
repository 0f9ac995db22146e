"""Marginal value distributions and left-continuous CDF machinery.

Every CDF in this package evaluates ``Pr{X < v}`` (strict inequality), which
fixes the tie semantics at posted prices: a buyer whose value equals the price
is *willing* to purchase.  Quantiles use the matching generalized inverse:
``quantile(q)`` is the smallest value at which the right-limit of the CDF
exceeds ``q``; past the essential supremum the support cap is returned.

Two layers live here:

* :class:`MarginalDist` subclasses -- the parametric value distributions of
  individual bidders, with closed-form CDF, density, quantile, sampling and
  survival integrals.
* :class:`Cdf` subclasses -- evaluable CDF objects (analytic, empirical step
  functions, shaded/truncated/scaled wrappers) shared by the revenue and
  learning code.

Plus the structural validators ``check_regular`` / ``check_mhr``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import InvalidInputError, SingularDensityError

# Default probability mass allowed beyond the reported support cap of an
# unbounded family; grids and quadrature treat quantile(1 - TAIL_MASS) as the
# effective top of the support.
TAIL_MASS = 1e-9

_MASS_TOL = 1e-12


def _as_float_array(v):
    arr = np.asarray(v, dtype=float)
    return arr, arr.ndim == 0


# ---------------------------------------------------------------------------
# marginal families
# ---------------------------------------------------------------------------


class MarginalDist:
    """Base class for one bidder's value distribution (non-negative support)."""

    family: str = "abstract"

    # --- evaluation -------------------------------------------------------
    def cdf(self, v):
        """Left-continuous CDF Pr{X < v}; accepts scalars or arrays."""
        raise NotImplementedError

    def pdf(self, v):
        """Density of the continuous part; raises for purely atomic families."""
        raise NotImplementedError

    def survival(self, v):
        """Pr{X >= v} = 1 - cdf(v); overridden where a cancellation-free form exists."""
        return 1.0 - self.cdf(v)

    def quantile(self, q):
        """Smallest v whose right-limit CDF exceeds q."""
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Inverse-CDF sampling; deterministic given the generator state."""
        u = rng.random(count)
        return self.quantile(u)

    # --- structure --------------------------------------------------------
    def support(self) -> tuple[float, float]:
        """(infimum, supremum) of the support; supremum may be inf."""
        raise NotImplementedError

    def cap(self, tail: float = TAIL_MASS) -> float:
        """Effective top of the support for grids and integration."""
        lo, hi = self.support()
        if math.isfinite(hi):
            return hi
        return float(self.quantile(1.0 - tail))

    def survival_integral(self, a: float) -> float:
        """Exact ∫_a^∞ (1 - CDF(t)) dt."""
        raise NotImplementedError

    def scaled(self, s: float) -> "MarginalDist":
        """Distribution of s·X (closed under every family here)."""
        raise NotImplementedError

    def is_continuous(self) -> bool:
        return True

    # --- JSON spec --------------------------------------------------------
    def to_spec(self) -> dict:
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}({self.to_spec()['params']})"


class Uniform(MarginalDist):
    family = "uniform"

    def __init__(self, a: float, b: float):
        if not (0.0 <= a < b) or not math.isfinite(b):
            raise InvalidInputError(f"uniform requires 0 <= a < b < inf, got ({a}, {b})")
        self.a = float(a)
        self.b = float(b)

    def cdf(self, v):
        v, scalar = _as_float_array(v)
        out = np.clip((v - self.a) / (self.b - self.a), 0.0, 1.0)
        return float(out) if scalar else out

    def pdf(self, v):
        v, scalar = _as_float_array(v)
        out = np.where((v >= self.a) & (v <= self.b), 1.0 / (self.b - self.a), 0.0)
        return float(out) if scalar else out

    def quantile(self, q):
        q, scalar = _as_float_array(q)
        out = self.a + q * (self.b - self.a)
        return float(out) if scalar else out

    def support(self):
        return (self.a, self.b)

    def survival_integral(self, a):
        x = min(max(a, self.a), self.b)
        base = (self.b - x) ** 2 / (2.0 * (self.b - self.a))
        if a < self.a:
            base += self.a - a
        return base

    def scaled(self, s):
        return Uniform(self.a * s, self.b * s)

    def to_spec(self):
        return {"family": self.family, "params": {"a": self.a, "b": self.b}}


class Exponential(MarginalDist):
    family = "exponential"

    def __init__(self, rate: float):
        if not (rate > 0 and math.isfinite(rate)):
            raise InvalidInputError(f"exponential rate must be positive, got {rate}")
        self.rate = float(rate)

    def cdf(self, v):
        v, scalar = _as_float_array(v)
        out = np.where(v > 0, -np.expm1(-self.rate * np.maximum(v, 0.0)), 0.0)
        return float(out) if scalar else out

    def pdf(self, v):
        v, scalar = _as_float_array(v)
        out = np.where(v >= 0, self.rate * np.exp(-self.rate * np.maximum(v, 0.0)), 0.0)
        return float(out) if scalar else out

    def quantile(self, q):
        q, scalar = _as_float_array(q)
        with np.errstate(divide="ignore"):
            out = -np.log1p(-q) / self.rate
        return float(out) if scalar else out

    def support(self):
        return (0.0, math.inf)

    def survival_integral(self, a):
        return math.exp(-self.rate * max(a, 0.0)) / self.rate

    def scaled(self, s):
        return Exponential(self.rate / s)

    def to_spec(self):
        return {"family": self.family, "params": {"rate": self.rate}}


class TruncatedPareto(MarginalDist):
    """Lomax-type tail with all mass above ``cap`` collapsed to an atom at ``cap``.

    Regular for shape >= 1 but never MHR: the log-survival is convex.  The
    atom at the support supremum follows the usual convention for regular
    distributions; the validators flag it instead of rejecting it.
    """

    family = "truncated-pareto"

    def __init__(self, shape: float, scale: float, cap: float):
        if not (shape > 0 and scale > 0 and cap > 0):
            raise InvalidInputError("truncated-pareto needs positive shape, scale, cap")
        self.shape = float(shape)
        self.scale = float(scale)
        self.cap_value = float(cap)

    def _lomax_cdf(self, v):
        return 1.0 - (self.scale / (self.scale + np.maximum(v, 0.0))) ** self.shape

    def cdf(self, v):
        v, scalar = _as_float_array(v)
        out = np.where(v > self.cap_value, 1.0, np.where(v > 0, self._lomax_cdf(v), 0.0))
        return float(out) if scalar else out

    def pdf(self, v):
        v, scalar = _as_float_array(v)
        dens = (self.shape / self.scale) * (self.scale / (self.scale + np.maximum(v, 0.0))) ** (
            self.shape + 1.0
        )
        out = np.where((v >= 0) & (v <= self.cap_value), dens, 0.0)
        return float(out) if scalar else out

    def mass_at_cap(self) -> float:
        return (self.scale / (self.scale + self.cap_value)) ** self.shape

    def quantile(self, q):
        q, scalar = _as_float_array(q)
        q_edge = self._lomax_cdf(self.cap_value)
        with np.errstate(divide="ignore", over="ignore"):
            inner = self.scale * ((1.0 - q) ** (-1.0 / self.shape) - 1.0)
        out = np.where(q < q_edge, inner, self.cap_value)
        return float(out) if scalar else out

    def support(self):
        return (0.0, self.cap_value)

    def survival_integral(self, a):
        x = min(max(a, 0.0), self.cap_value)
        s, al, c = self.scale, self.shape, self.cap_value
        if abs(al - 1.0) < 1e-12:
            val = s * math.log((s + c) / (s + x))
        else:
            val = s**al / (al - 1.0) * ((s + x) ** (1.0 - al) - (s + c) ** (1.0 - al))
        return val if a >= 0 else val - a

    def scaled(self, s):
        return TruncatedPareto(self.shape, self.scale * s, self.cap_value * s)

    def to_spec(self):
        return {
            "family": self.family,
            "params": {"shape": self.shape, "scale": self.scale, "cap": self.cap_value},
        }


class PointMass(MarginalDist):
    family = "point-mass"

    def __init__(self, value: float):
        if not (value >= 0 and math.isfinite(value)):
            raise InvalidInputError(f"point-mass value must be finite and >= 0, got {value}")
        self.value = float(value)

    def cdf(self, v):
        v, scalar = _as_float_array(v)
        out = (v > self.value).astype(float)
        return float(out) if scalar else out

    def pdf(self, v):
        raise InvalidInputError("point-mass has no density")

    def quantile(self, q):
        q, scalar = _as_float_array(q)
        out = np.full_like(q, self.value)
        return float(out) if scalar else out

    def sample(self, rng, count):
        rng.random(count)  # keep the stream aligned with other families
        return np.full(count, self.value)

    def support(self):
        return (self.value, self.value)

    def survival_integral(self, a):
        return max(0.0, self.value - max(a, 0.0))

    def scaled(self, s):
        return PointMass(self.value * s)

    def is_continuous(self):
        return False

    def to_spec(self):
        return {"family": self.family, "params": {"value": self.value}}


class DiscreteGrid(MarginalDist):
    """Masses on the lattice {k·step : k = 1..K} (the discrete MHR convention)."""

    family = "discrete-grid"

    def __init__(self, step: float, masses):
        masses = np.asarray(masses, dtype=float)
        if not (step > 0 and math.isfinite(step)):
            raise InvalidInputError(f"discrete-grid step must be positive, got {step}")
        if masses.ndim != 1 or masses.size == 0 or np.any(masses < 0):
            raise InvalidInputError("discrete-grid masses must be a non-negative 1-D sequence")
        if abs(masses.sum() - 1.0) > _MASS_TOL:
            raise InvalidInputError(f"masses must sum to 1 within {_MASS_TOL}, got {masses.sum()!r}")
        self.step = float(step)
        self.masses = masses.copy()
        self.atoms = self.step * np.arange(1, masses.size + 1, dtype=float)
        self._cum = np.cumsum(self.masses)

    def cdf(self, v):
        v, scalar = _as_float_array(v)
        idx = np.searchsorted(self.atoms, v, side="left")
        below = np.concatenate(([0.0], self._cum))
        out = below[idx]
        return float(out) if scalar else out

    def pdf(self, v):
        raise InvalidInputError("discrete-grid has no density")

    def quantile(self, q):
        q, scalar = _as_float_array(q)
        idx = np.minimum(np.searchsorted(self._cum, q, side="right"), self.atoms.size - 1)
        out = self.atoms[idx]
        return float(out) if scalar else out

    def support(self):
        return (self.atoms[0], self.atoms[-1])

    def survival_integral(self, a):
        bp, vals = self.steps()
        return float(step_suffix_integral(bp, vals, np.asarray([max(a, 0.0)]))[0])

    def steps(self):
        below = np.concatenate(([0.0], self._cum))
        return self.atoms.copy(), below

    def scaled(self, s):
        return DiscreteGrid(self.step * s, self.masses)

    def is_continuous(self):
        return False

    def to_spec(self):
        return {"family": self.family, "params": {"step": self.step, "masses": self.masses.tolist()}}


class GeneralizedPareto(MarginalDist):
    """Survival (1 + lam·v/scale)^(-1/lam); the transform (1-F)^(-lam) is linear.

    The canonical member of the lam-regular family for lam in (0, 1).
    """

    family = "generalized-pareto"

    def __init__(self, lam: float, scale: float):
        if not (0.0 < lam < 1.0):
            raise InvalidInputError(f"generalized-pareto lam must lie in (0,1), got {lam}")
        if not (scale > 0 and math.isfinite(scale)):
            raise InvalidInputError(f"generalized-pareto scale must be positive, got {scale}")
        self.lam = float(lam)
        self.scale = float(scale)

    def _survival(self, v):
        return (1.0 + self.lam * np.maximum(v, 0.0) / self.scale) ** (-1.0 / self.lam)

    def cdf(self, v):
        v, scalar = _as_float_array(v)
        out = np.where(v > 0, 1.0 - self._survival(v), 0.0)
        return float(out) if scalar else out

    def pdf(self, v):
        v, scalar = _as_float_array(v)
        dens = (1.0 / self.scale) * (1.0 + self.lam * np.maximum(v, 0.0) / self.scale) ** (
            -1.0 / self.lam - 1.0
        )
        out = np.where(v >= 0, dens, 0.0)
        return float(out) if scalar else out

    def quantile(self, q):
        q, scalar = _as_float_array(q)
        with np.errstate(divide="ignore", over="ignore"):
            out = self.scale * ((1.0 - q) ** (-self.lam) - 1.0) / self.lam
        return float(out) if scalar else out

    def support(self):
        return (0.0, math.inf)

    def survival_integral(self, a):
        x = max(a, 0.0)
        val = self.scale / (1.0 - self.lam) * (1.0 + self.lam * x / self.scale) ** (
            1.0 - 1.0 / self.lam
        )
        return val if a >= 0 else val - a

    def scaled(self, s):
        return GeneralizedPareto(self.lam, self.scale * s)

    def to_spec(self):
        return {"family": self.family, "params": {"lam": self.lam, "scale": self.scale}}


class Mixture(MarginalDist):
    """Finite mixture of marginal distributions (used e.g. for bimodal tests)."""

    family = "mixture"

    def __init__(self, components, weights):
        weights = np.asarray(weights, dtype=float)
        if len(components) != weights.size or weights.size == 0:
            raise InvalidInputError("mixture needs matching components and weights")
        if np.any(weights < 0) or abs(weights.sum() - 1.0) > _MASS_TOL:
            raise InvalidInputError("mixture weights must be non-negative and sum to 1")
        self.components = list(components)
        self.weights = weights.copy()

    def cdf(self, v):
        v, scalar = _as_float_array(v)
        out = sum(w * c.cdf(v) for w, c in zip(self.weights, self.components))
        return float(out) if scalar else np.asarray(out)

    def pdf(self, v):
        v, scalar = _as_float_array(v)
        out = sum(w * c.pdf(v) for w, c in zip(self.weights, self.components))
        return float(out) if scalar else np.asarray(out)

    def quantile(self, q):
        q, scalar = _as_float_array(q)
        qs = np.atleast_1d(q)
        out = np.array([_bisect_quantile(self.cdf, float(x), self.cap()) for x in qs])
        return float(out[0]) if scalar else out.reshape(q.shape)

    def sample(self, rng, count):
        picks = rng.choice(len(self.components), size=count, p=self.weights)
        u = rng.random(count)
        out = np.empty(count)
        for i, c in enumerate(self.components):
            mask = picks == i
            if mask.any():
                out[mask] = c.quantile(u[mask])
        return out

    def support(self):
        los, his = zip(*(c.support() for c in self.components))
        return (min(los), max(his))

    def cap(self, tail: float = TAIL_MASS) -> float:
        return max(c.cap(tail) for c in self.components)

    def survival_integral(self, a):
        return float(sum(w * c.survival_integral(a) for w, c in zip(self.weights, self.components)))

    def scaled(self, s):
        return Mixture([c.scaled(s) for c in self.components], self.weights)

    def is_continuous(self):
        return all(c.is_continuous() for c in self.components)

    def to_spec(self):
        return {
            "family": self.family,
            "params": {
                "components": [c.to_spec() for c in self.components],
                "weights": self.weights.tolist(),
            },
        }


_FAMILIES = {
    "uniform": lambda p: Uniform(p["a"], p["b"]),
    "exponential": lambda p: Exponential(p["rate"]),
    "truncated-pareto": lambda p: TruncatedPareto(p["shape"], p["scale"], p["cap"]),
    "point-mass": lambda p: PointMass(p["value"]),
    "discrete-grid": lambda p: DiscreteGrid(p["step"], p["masses"]),
    "generalized-pareto": lambda p: GeneralizedPareto(p["lam"], p["scale"]),
    "mixture": lambda p: Mixture(
        [dist_from_spec(c) for c in p["components"]], p["weights"]
    ),
}


def dist_from_spec(spec: dict) -> MarginalDist:
    """Build a marginal from a JSON-style {"family": ..., "params": {...}} dict."""
    try:
        family = spec["family"]
        params = spec.get("params", {})
    except (TypeError, KeyError) as exc:
        raise InvalidInputError(f"malformed distribution spec: {spec!r}") from exc
    if family not in _FAMILIES:
        raise InvalidInputError(f"unknown distribution family {family!r}")
    try:
        return _FAMILIES[family](params)
    except KeyError as exc:
        raise InvalidInputError(f"missing parameter {exc} for family {family!r}") from exc


def sample(dist: MarginalDist, seed, count: int) -> np.ndarray:
    """Draw ``count`` i.i.d. values; ``seed`` is an int or a numpy Generator."""
    if count < 1:
        raise InvalidInputError(f"count must be >= 1, got {count}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return dist.sample(rng, int(count))


# ---------------------------------------------------------------------------
# step-function helpers
# ---------------------------------------------------------------------------


def step_suffix_integral(breakpoints: np.ndarray, values: np.ndarray, r) -> np.ndarray:
    """Exact ∫_r^∞ (1 - F) for a step CDF.

    ``values`` has one more entry than ``breakpoints``: values[0] holds on
    [0, b_1] and values[k] on (b_k, b_{k+1}].  The final value must be 1 (a
    proper CDF), otherwise the integral diverges.
    """
    bp = np.asarray(breakpoints, dtype=float)
    vals = np.asarray(values, dtype=float)
    if vals[-1] < 1.0 - 1e-12:
        raise InvalidInputError("step CDF never reaches 1; suffix integral diverges")
    r = np.atleast_1d(np.asarray(r, dtype=float))
    widths = np.diff(bp)
    seg = (1.0 - vals[1:-1]) * widths  # mass of (b_k, b_{k+1}) segments, k=1..K-1
    suffix = np.concatenate((np.cumsum(seg[::-1])[::-1], [0.0]))  # at b_1..b_K
    j = np.searchsorted(bp, r, side="left")  # first breakpoint >= r
    out = np.empty_like(r)
    inside = j < bp.size
    ji = j[inside]
    out[inside] = suffix[ji] + (1.0 - vals[ji]) * (bp[ji] - r[inside])
    out[~inside] = 0.0
    return out


# ---------------------------------------------------------------------------
# evaluable CDFs
# ---------------------------------------------------------------------------


def _bisect_quantile(eval_fn, q: float, cap: float, iters: int = 100) -> float:
    """sup{w in [0, cap] : F(w) <= q}, the left-continuous generalized inverse."""
    if eval_fn(cap) <= q:
        return cap
    lo, hi = 0.0, cap
    if eval_fn(lo) > q:
        return 0.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if eval_fn(mid) <= q:
            lo = mid
        else:
            hi = mid
    return lo


class Cdf:
    """Evaluable left-continuous CDF; immutable after construction."""

    def eval(self, v):
        raise NotImplementedError

    def quantile(self, q):
        q_arr, scalar = _as_float_array(q)
        qs = np.atleast_1d(q_arr)
        cap = self.support_cap()
        out = np.array([_bisect_quantile(self.eval, float(x), cap) for x in qs])
        return float(out[0]) if scalar else out.reshape(q_arr.shape)

    def support_cap(self) -> float:
        raise NotImplementedError

    def steps(self):
        """(breakpoints, values) if this CDF is a step function, else None."""
        return None

    def tail_integral_bound(self, a: float) -> float:
        """Upper bound on ∫_a^∞ (1 - F); exact where a closed form exists."""
        raise NotImplementedError


class AnalyticCdf(Cdf):
    """CDF of a single marginal distribution."""

    def __init__(self, dist: MarginalDist):
        self.dist = dist

    def eval(self, v):
        return self.dist.cdf(v)

    def quantile(self, q):
        return self.dist.quantile(q)

    def support_cap(self):
        return self.dist.cap()

    def steps(self):
        if isinstance(self.dist, DiscreteGrid):
            return self.dist.steps()
        if isinstance(self.dist, PointMass):
            return np.array([self.dist.value]), np.array([0.0, 1.0])
        return None

    def tail_integral_bound(self, a):
        return self.dist.survival_integral(a)


class EmpiricalCdf(Cdf):
    """Uniform distribution over observed atoms; eval counts atoms strictly below."""

    def __init__(self, atoms):
        atoms = np.sort(np.asarray(atoms, dtype=float))
        if atoms.size == 0:
            raise InvalidInputError("empirical CDF needs at least one atom")
        if np.any(atoms < 0) or not np.all(np.isfinite(atoms)):
            raise InvalidInputError("empirical atoms must be finite and non-negative")
        self.atoms = atoms
        self.m = atoms.size

    def eval(self, v):
        v, scalar = _as_float_array(v)
        out = np.searchsorted(self.atoms, v, side="left") / self.m
        return float(out) if scalar else out

    def quantile(self, q):
        q, scalar = _as_float_array(q)
        idx = np.minimum(np.floor(q * self.m).astype(int), self.m - 1)
        out = self.atoms[idx]
        return float(out) if scalar else out

    def support_cap(self):
        return float(self.atoms[-1])

    def steps(self):
        uniq, counts = np.unique(self.atoms, return_counts=True)
        below = np.concatenate(([0.0], np.cumsum(counts))) / self.m
        return uniq, below

    def tail_integral_bound(self, a):
        return float(np.mean(np.maximum(self.atoms - a, 0.0)))


class AllOnesCdf(Cdf):
    """Point mass at 0 (the second-highest bid when there is a single bidder)."""

    def eval(self, v):
        v, scalar = _as_float_array(v)
        out = (v > 0).astype(float)
        return float(out) if scalar else out

    def quantile(self, q):
        q, scalar = _as_float_array(q)
        out = np.zeros_like(q)
        return float(out) if scalar else out

    def support_cap(self):
        return 0.0

    def steps(self):
        return np.array([0.0]), np.array([0.0, 1.0])

    def tail_integral_bound(self, a):
        return 0.0


class TruncatedCdf(Cdf):
    """Clamp to 1 wherever the base CDF exceeds ``keep_below``."""

    def __init__(self, base: Cdf, keep_below: float):
        if not (0.0 < keep_below <= 1.0):
            raise InvalidInputError(f"keep_below must lie in (0,1], got {keep_below}")
        self.base = base
        self.keep_below = float(keep_below)

    def eval(self, v):
        x = self.base.eval(v)
        x_arr, scalar = _as_float_array(x)
        out = np.where(x_arr <= self.keep_below, x_arr, 1.0)
        return float(out) if scalar else out

    def quantile(self, q):
        q_arr, scalar = _as_float_array(q)
        out = self.base.quantile(np.minimum(q_arr, self.keep_below))
        return float(out) if scalar else np.asarray(out)

    def support_cap(self):
        return self.base.quantile(self.keep_below)

    def steps(self):
        base_steps = self.base.steps()
        if base_steps is None:
            return None
        bp, vals = base_steps
        return bp, np.where(vals <= self.keep_below, vals, 1.0)

    def tail_integral_bound(self, a):
        return min(self.base.tail_integral_bound(a), max(0.0, self.support_cap() - a))


class ScaledCdf(Cdf):
    """CDF of s·X for a base CDF of X."""

    def __init__(self, base: Cdf, scale: float):
        if not (scale > 0 and math.isfinite(scale)):
            raise InvalidInputError(f"scale must be positive and finite, got {scale}")
        self.base = base
        self.scale = float(scale)

    def eval(self, v):
        v_arr, scalar = _as_float_array(v)
        out = self.base.eval(v_arr / self.scale)
        return float(out) if scalar else np.asarray(out)

    def quantile(self, q):
        q_arr, scalar = _as_float_array(q)
        out = np.asarray(self.base.quantile(q_arr)) * self.scale
        return float(out) if scalar else out

    def support_cap(self):
        return self.base.support_cap() * self.scale

    def steps(self):
        base_steps = self.base.steps()
        if base_steps is None:
            return None
        bp, vals = base_steps
        return bp * self.scale, vals

    def tail_integral_bound(self, a):
        return self.scale * self.base.tail_integral_bound(a / self.scale)


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------


def cdf_eval(c: Cdf, v):
    """Pr{X < v} with input validation (v finite, non-negative)."""
    v_arr, scalar = _as_float_array(v)
    if not np.all(np.isfinite(v_arr)) or np.any(v_arr < 0):
        raise InvalidInputError(f"value must be finite and >= 0, got {v!r}")
    return c.eval(v if scalar else v_arr)


def cdf_quantile(c: Cdf, q):
    """Smallest value at which the right-limit CDF exceeds q."""
    q_arr, _ = _as_float_array(q)
    if not np.all(np.isfinite(q_arr)) or np.any(q_arr < 0) or np.any(q_arr > 1):
        raise InvalidInputError(f"quantile level must lie in [0,1], got {q!r}")
    return c.quantile(q)


@dataclass
class StructureReport:
    """Outcome of a regularity / MHR scan over a grid."""

    passed: bool
    worst_violation: float
    witness: float | None = None
    truncated_at: float | None = None
    mass_at_supremum: bool = False
    grid_size: int = 0


_CHECK_TOL = 1e-9
_F_TINY = 1e-300


def _density(dist, v: float, h: float) -> float:
    try:
        return float(dist.pdf(v))
    except (NotImplementedError, AttributeError):
        # central differences for duck-typed distributions without a pdf
        return (float(dist.cdf(v + h)) - float(dist.cdf(max(v - h, 0.0)))) / (
            v + h - max(v - h, 0.0)
        )


def check_regular(dist, grid) -> StructureReport:
    """Scan the virtual value v - (1-F(v))/f(v) for monotonicity on the grid.

    A zero-density point with the CDF strictly inside (0,1) counts as a
    support gap (regularity violation) when the CDF is locally flat there;
    a locally increasing CDF with vanishing density raises
    :class:`SingularDensityError` instead.
    """
    if isinstance(dist, MarginalDist) and not dist.is_continuous():
        raise InvalidInputError("check_regular requires a continuous distribution")
    grid = np.sort(np.asarray(grid, dtype=float))
    lo, hi = dist.support() if hasattr(dist, "support") else (0.0, math.inf)
    width = (hi - lo) if math.isfinite(hi) else max(1.0, float(grid[-1]))
    h = 1e-6 * max(width, 1e-6)

    mass_at_sup = False
    truncated_at = None
    phi_prev = None
    worst = 0.0
    witness = None
    used = 0
    for v in grid:
        F = float(dist.cdf(v))
        f = _density(dist, float(v), h)
        if F >= 1.0 - _CHECK_TOL:
            truncated_at = float(v)
            break
        if f <= _F_TINY:
            if F <= _CHECK_TOL:
                continue  # below the support
            flat = abs(float(dist.cdf(v + h)) - float(dist.cdf(max(v - h, 0.0)))) <= 1e-15
            if flat:
                # interior support gap: the virtual value drops to -inf here
                worst = math.inf
                witness = float(v)
                break
            raise SingularDensityError(v)
        used += 1
        phi = v - (1.0 - F) / f
        if phi_prev is not None and phi < phi_prev - _CHECK_TOL:
            drop = phi_prev - phi
            if drop > worst:
                worst = drop
                witness = float(v)
        phi_prev = phi

    if isinstance(dist, TruncatedPareto) and dist.mass_at_cap() > 0:
        mass_at_sup = True  # atom at the supremum is allowed, flagged only
    return StructureReport(
        passed=worst <= _CHECK_TOL,
        worst_violation=worst,
        witness=witness,
        truncated_at=truncated_at,
        mass_at_supremum=mass_at_sup,
        grid_size=used,
    )


def check_mhr(dist, grid=None) -> StructureReport:
    """Verify the monotone-hazard-rate condition.

    Continuous case: slopes of ln(1 - F) over the grid must be non-increasing
    (concavity) within 1e-9.  Discrete-grid case: the piecewise linear hull
    through (0,0) and the lattice points of ln(1 - F) must have non-increasing
    slopes; the family's own lattice is used regardless of ``grid``.
    """
    if isinstance(dist, DiscreteGrid):
        surv = 1.0 - np.concatenate(([0.0], dist._cum))[:-1]  # Pr{X >= k*step}
        keep = surv > 1e-15
        logs = np.log(surv[keep])
        xs = np.concatenate(([0.0], dist.atoms[keep]))
        ys = np.concatenate(([0.0], logs))
        slopes = np.diff(ys) / np.diff(xs)
        diffs = np.diff(slopes)
        worst = float(np.max(diffs)) if diffs.size else 0.0
        witness = float(xs[1 + int(np.argmax(diffs))]) if diffs.size and worst > _CHECK_TOL else None
        return StructureReport(
            passed=worst <= _CHECK_TOL,
            worst_violation=max(worst, 0.0),
            witness=witness,
            grid_size=int(xs.size),
        )

    grid = np.sort(np.asarray(grid, dtype=float))
    F = np.asarray(dist.cdf(grid), dtype=float)
    cut = np.nonzero(F >= 1.0 - _CHECK_TOL)[0]
    truncated_at = None
    if cut.size:
        truncated_at = float(grid[cut[0]])
        grid, F = grid[: cut[0]], F[: cut[0]]
    G = np.log1p(-F)
    slopes = np.diff(G) / np.diff(grid)
    diffs = np.diff(slopes)
    worst = float(np.max(diffs)) if diffs.size else 0.0
    witness = float(grid[1 + int(np.argmax(diffs))]) if diffs.size and worst > _CHECK_TOL else None
    return StructureReport(
        passed=worst <= _CHECK_TOL,
        worst_violation=max(worst, 0.0),
        witness=witness,
        truncated_at=truncated_at,
        grid_size=int(grid.size),
    )
