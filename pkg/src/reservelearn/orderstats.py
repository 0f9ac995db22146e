"""Exact top-two order-statistic CDFs, joint samplers, and revenue-scale normalization.

The revenue of an anonymous-reserve auction depends on the joint instance
only through the marginal CDFs of the highest and second-highest bid, so a
:class:`InstancePair` is the central object: the pair (F1, F2) with F1
stochastically dominating F2 (pointwise F1 <= F2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import (
    AllOnesCdf,
    AnalyticCdf,
    Cdf,
    MarginalDist,
    ScaledCdf,
    _as_float_array,
    dist_from_spec,
)
from .errors import ContractViolationError, InvalidInputError, NormalizationError
from .reporting import CheckReport, from_margins

_SAMPLE_CHUNK_CELLS = 4_000_000  # rows-per-chunk * n stays below this


class ProductInstance:
    """Independent bidders, one marginal distribution each."""

    def __init__(self, marginals):
        marginals = tuple(marginals)
        if len(marginals) == 0:
            raise InvalidInputError("a product instance needs at least one bidder")
        self.marginals: tuple[MarginalDist, ...] = marginals

    @property
    def n(self) -> int:
        return len(self.marginals)

    def scaled(self, s: float) -> "ProductInstance":
        return ProductInstance([d.scaled(s) for d in self.marginals])

    @staticmethod
    def from_spec(spec: dict) -> "ProductInstance":
        return ProductInstance([dist_from_spec(d) for d in spec["bidders"]])

    def to_spec(self) -> dict:
        return {"bidders": [d.to_spec() for d in self.marginals]}


class HighestCdf(Cdf):
    """CDF of the maximum of independent bidders: the product of marginal CDFs."""

    def __init__(self, marginals):
        self.marginals = tuple(marginals)

    def eval(self, v):
        v_arr, scalar = _as_float_array(v)
        out = np.ones_like(v_arr)
        for d in self.marginals:
            out = out * d.cdf(v_arr)
        return float(out) if scalar else out

    def support_cap(self):
        return max(d.cap() for d in self.marginals)

    def tail_integral_bound(self, a):
        # 1 - prod F_j <= sum (1 - F_j), integrated in closed form per marginal
        return float(sum(d.survival_integral(a) for d in self.marginals))


class SecondHighestCdf(Cdf):
    """CDF of the second-highest of independent bidders.

    Computed by event enumeration, Pr{all below} + sum_i Pr{only i at/above},
    using leave-one-out products; the algebraically equivalent form with a
    1/F_j factor divides by zero below bidder j's support and is avoided.
    """

    def __init__(self, marginals):
        self.marginals = tuple(marginals)
        if len(self.marginals) < 2:
            raise InvalidInputError("second-highest CDF needs at least two bidders")

    def eval(self, v):
        v_arr, scalar = _as_float_array(v)
        flat = np.atleast_1d(v_arr)
        F = np.vstack([d.cdf(flat) for d in self.marginals])  # (n, V)
        n = F.shape[0]
        prefix = np.ones_like(F)
        for i in range(1, n):
            prefix[i] = prefix[i - 1] * F[i - 1]
        suffix = np.ones_like(F)
        for i in range(n - 2, -1, -1):
            suffix[i] = suffix[i + 1] * F[i + 1]
        loo = prefix * suffix  # prod_{j != i} F_j
        all_below = prefix[-1] * F[-1]
        out = all_below + ((1.0 - F) * loo).sum(axis=0)
        out = np.minimum(out, 1.0)
        return float(out[0]) if scalar else out.reshape(v_arr.shape)

    def support_cap(self):
        caps = sorted(d.cap() for d in self.marginals)
        return caps[-2]

    def tail_integral_bound(self, a):
        # Pr{>= 2 bidders at/above x} <= (sum_i S_i(a)) * max_j S_j(x) summed:
        # bound each pair S_i(x) S_j(x) <= S_i(a) S_j(x) for x >= a.
        surv_at_a = [1.0 - float(d.cdf(a)) for d in self.marginals]
        tails = [d.survival_integral(a) for d in self.marginals]
        total = 0.0
        for i in range(len(self.marginals)):
            for j in range(len(self.marginals)):
                if i != j:
                    total += surv_at_a[i] * tails[j]
        return 0.5 * total


@dataclass(frozen=True)
class InstancePair:
    """The pair of top-two marginal CDFs; fully determines the auction revenue."""

    f1: Cdf
    f2: Cdf
    marginals: tuple[MarginalDist, ...] | None = None

    def __post_init__(self):
        if self.marginals is not None:
            object.__setattr__(self, "marginals", tuple(self.marginals))

    def support_cap(self) -> float:
        return max(self.f1.support_cap(), self.f2.support_cap())


def top_two_cdfs(inst: ProductInstance) -> InstancePair:
    """Exact top-two CDFs of a product instance (single bidder: F2 is mass at 0)."""
    marginals = inst.marginals
    f1 = HighestCdf(marginals) if len(marginals) > 1 else AnalyticCdf(marginals[0])
    f2 = SecondHighestCdf(marginals) if len(marginals) > 1 else AllOnesCdf()
    return InstancePair(f1=f1, f2=f2, marginals=marginals)


# ---------------------------------------------------------------------------
# joint sampling
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class JointSampler:
    """Source of value vectors: a product instance or a capped correlated generator."""

    mode: str
    n: int
    cap: float
    instance: ProductInstance | None = None
    generator: object = None  # callable(rng, rows) -> (rows, n) array

    @staticmethod
    def product(inst: ProductInstance) -> "JointSampler":
        cap = max(d.cap() for d in inst.marginals)
        return JointSampler(mode="product", n=inst.n, cap=cap, instance=inst)

    @staticmethod
    def correlated(generator, n: int, cap: float) -> "JointSampler":
        if not (cap > 0 and math.isfinite(cap)):
            raise InvalidInputError(f"correlated sampler needs a finite positive cap, got {cap}")
        return JointSampler(mode="correlated", n=int(n), cap=float(cap), generator=generator)

    def draw(self, rng: np.random.Generator, rows: int) -> np.ndarray:
        if self.mode == "product":
            cols = [d.sample(rng, rows) for d in self.instance.marginals]
            return np.column_stack(cols)
        vals = np.asarray(self.generator(rng, rows), dtype=float)
        if vals.shape != (rows, self.n):
            raise ContractViolationError(
                f"correlated generator returned shape {vals.shape}, expected {(rows, self.n)}"
            )
        if not np.all(np.isfinite(vals)) or np.any(vals < 0):
            raise ContractViolationError("correlated generator emitted a negative or non-finite value")
        if np.any(vals > self.cap * (1 + 1e-12)):
            raise ContractViolationError(
                f"correlated generator emitted a value above its declared cap {self.cap}"
            )
        return vals


def shared_uniform_sampler(n: int, cap: float) -> JointSampler:
    """Built-in correlated example: half common shock, half idiosyncratic, capped."""

    def gen(rng, rows):
        common = rng.random((rows, 1))
        idio = rng.random((rows, n))
        return cap * (0.5 * common + 0.5 * idio)

    return JointSampler.correlated(gen, n=n, cap=cap)


def top_two_of_rows(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise (highest, second-highest); ties kept, n=1 uses 0 for the runner-up."""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] < 1:
        raise InvalidInputError("sample matrix must be 2-D with at least one row")
    if matrix.shape[1] == 1:
        x1 = matrix[:, 0].copy()
        return x1, np.zeros_like(x1)
    part = np.partition(matrix, matrix.shape[1] - 2, axis=1)
    return part[:, -1].copy(), part[:, -2].copy()


def sample_top_two(js: JointSampler, seed, m: int) -> tuple[np.ndarray, np.ndarray]:
    """m top-two pairs, streamed in row chunks so only 2 columns are retained."""
    if m < 1:
        raise InvalidInputError(f"m must be >= 1, got {m}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    chunk = max(1, _SAMPLE_CHUNK_CELLS // max(js.n, 1))
    x1 = np.empty(m)
    x2 = np.empty(m)
    done = 0
    while done < m:
        rows = min(chunk, m - done)
        block = js.draw(rng, rows)
        a, b = top_two_of_rows(block)
        x1[done : done + rows] = a
        x2[done : done + rows] = b
        done += rows
    return x1, x2


# ---------------------------------------------------------------------------
# normalization
# ---------------------------------------------------------------------------

_NORM_GRID = 4096
_NORM_XTOL = 1e-8


def monopoly_revenue_max(f1: Cdf, cap: float | None = None) -> tuple[float, float]:
    """(argmax, max) of v * (1 - F1(v)), by log-spaced grid plus golden refinement."""
    if cap is None:
        cap = f1.support_cap()
    if cap <= 0:
        raise NormalizationError("highest CDF has no mass above 0")
    grid = np.geomspace(cap * 1e-9, cap, _NORM_GRID)
    obj = grid * (1.0 - np.asarray(f1.eval(grid)))
    i = int(np.argmax(obj))
    if i == obj.size - 1 and obj[-1] > obj[-2] * (1 + 1e-6):
        raise NormalizationError("monopoly revenue still increasing at the support cap")
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, obj.size - 1)]
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc = c * (1.0 - float(f1.eval(c)))
    fd = d * (1.0 - float(f1.eval(d)))
    while b - a > _NORM_XTOL * max(1.0, b):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = c * (1.0 - float(f1.eval(c)))
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = d * (1.0 - float(f1.eval(d)))
    v_star = 0.5 * (a + b)
    m_star = max(v_star * (1.0 - float(f1.eval(v_star))), float(obj[i]))
    return v_star, m_star


def normalize_instance(pair: InstancePair) -> tuple[InstancePair, float]:
    """Rescale values so max_v v*(1-F1(v)) = 1; returns (pair, multiplier 1/M)."""
    _, m_star = monopoly_revenue_max(pair.f1)
    if not (m_star > 0 and math.isfinite(m_star)):
        raise NormalizationError(f"monopoly revenue {m_star!r} cannot be normalized")
    scale = 1.0 / m_star
    marginals = (
        tuple(d.scaled(scale) for d in pair.marginals) if pair.marginals is not None else None
    )
    scaled = InstancePair(
        f1=ScaledCdf(pair.f1, scale), f2=ScaledCdf(pair.f2, scale), marginals=marginals
    )
    _, check = monopoly_revenue_max(scaled.f1)
    if abs(check - 1.0) > 1e-6:
        raise NormalizationError(f"post-normalization maximum is {check!r}, expected 1")
    return scaled, scale


def normalize_product(inst: ProductInstance) -> tuple[ProductInstance, float]:
    """Normalize a product instance by scaling every marginal (closed form)."""
    pair = top_two_cdfs(inst)
    _, m_star = monopoly_revenue_max(pair.f1)
    if not (m_star > 0 and math.isfinite(m_star)):
        raise NormalizationError(f"monopoly revenue {m_star!r} cannot be normalized")
    scale = 1.0 / m_star
    return inst.scaled(scale), scale


# ---------------------------------------------------------------------------
# structural check
# ---------------------------------------------------------------------------


def order_stat_inequality_check(pair: InstancePair, grid) -> CheckReport:
    """Verify 1 - F2(v) <= (1 - F1(v))^2 on the grid (independent instances only)."""
    grid = np.asarray(grid, dtype=float)
    s1 = 1.0 - np.asarray(pair.f1.eval(grid))
    s2 = 1.0 - np.asarray(pair.f2.eval(grid))
    return from_margins(
        "second-highest-tail-square-bound",
        margins=s1**2 - s2,
        grid=grid,
        lhs=s2,
        rhs=s1**2,
        tolerance=1e-12,
    )
