"""The anonymous-reserve revenue functional and optimal-reserve search.

Revenue under reserve r is ``r * (1 - F1(r)) + integral_r^inf (1 - F2(x)) dx``:
the reserve is collected whenever the top bid clears it, and the runner-up
bid adds its excess over the reserve.  For step-function pairs (empirical or
shaded-empirical) both terms are computed exactly; analytic pairs use
adaptive Simpson quadrature with a rigorously bounded tail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import step_suffix_integral
from .errors import IntegrationError, InvalidInputError
from .orderstats import InstancePair
from .reporting import CheckReport
from .solvers import adaptive_simpson, bisect_root

TIE_TOL = 1e-9
QUAD_TOL = 1e-9


@dataclass(frozen=True)
class SearchConfig:
    grid_points: int = 4096
    refine_starts: int = 8
    tol: float = QUAD_TOL
    cap: float | None = None
    interval: tuple[float, float] | None = None

    @staticmethod
    def from_dict(d: dict) -> "SearchConfig":
        return SearchConfig(
            grid_points=int(d.get("grid_points", 4096)),
            refine_starts=int(d.get("refine_starts", 8)),
            tol=float(d.get("tol", QUAD_TOL)),
            cap=d.get("cap"),
            interval=tuple(d["interval"]) if "interval" in d else None,
        )


@dataclass
class ReserveResult:
    reserve: float
    revenue: float
    candidates_examined: int
    method: str  # "atom-scan" | "grid+refine"
    degenerate: bool = False


def _is_step_pair(pair: InstancePair) -> bool:
    return pair.f1.steps() is not None and pair.f2.steps() is not None


def _integration_cap(f2, tol: float) -> float:
    """Upper quadrature limit with tail mass below tol/2, growing the cap if needed."""
    cap = f2.support_cap()
    if cap <= 0:
        return 0.0
    for _ in range(64):
        if f2.tail_integral_bound(cap) <= 0.5 * tol:
            return cap
        cap *= 2.0
    raise IntegrationError("tail mass beyond any feasible cap", f2.tail_integral_bound(cap))


def ar_revenue(r: float, pair: InstancePair, tol: float = QUAD_TOL) -> float:
    """Expected anonymous-reserve revenue at reserve r.

    Step pairs are integrated exactly (the runner-up term is the mean of
    (x2 - r)_+ under the empirical step weights); analytic pairs use adaptive
    Simpson with absolute tolerance ``tol`` up to a tail-bounded cap.
    """
    if not (math.isfinite(r) and r >= 0):
        raise InvalidInputError(f"reserve must be finite and >= 0, got {r}")
    term1 = r * (1.0 - float(pair.f1.eval(r)))
    f2_steps = pair.f2.steps()
    if f2_steps is not None:
        bp, vals = f2_steps
        term2 = float(step_suffix_integral(bp, vals, r)[0])
        return term1 + term2
    cap = _integration_cap(pair.f2, tol)
    if cap <= r:
        return term1
    integrand = lambda x: 1.0 - float(pair.f2.eval(x))
    term2 = adaptive_simpson(integrand, r, cap, tol=0.5 * tol)
    return term1 + term2


def _ar_at_candidates(candidates: np.ndarray, pair: InstancePair) -> np.ndarray:
    bp, vals = pair.f2.steps()
    t1 = candidates * (1.0 - np.asarray(pair.f1.eval(candidates)))
    t2 = step_suffix_integral(bp, vals, candidates)
    return t1 + t2


def _scan_atoms(pair: InstancePair, interval) -> ReserveResult:
    bp1, _ = pair.f1.steps()
    bp2, _ = pair.f2.steps()
    cands = np.unique(np.concatenate(([0.0], bp1, bp2)))
    if interval is not None:
        lo, hi = interval
        kept = cands[(cands >= lo) & (cands <= hi)]
        cands = np.unique(np.concatenate(([lo, hi], kept)))
    revs = _ar_at_candidates(cands, pair)
    best = float(np.max(revs))
    # smallest candidate within the tie window at the top
    idx = int(np.nonzero(revs >= best - TIE_TOL)[0][0])
    return ReserveResult(
        reserve=float(cands[idx]),
        revenue=float(revs[idx]),
        candidates_examined=int(cands.size),
        method="atom-scan",
        degenerate=bool(best <= TIE_TOL),
    )


class _NodeIntegrals:
    """Near-exact suffix integrals of (1 - F2) at dense grid nodes.

    Each cell is integrated by 4-interval composite Simpson in one vectorized
    sweep; a point query adds an adaptive-Simpson correction over the partial
    cell, so queries are exact to quadrature tolerance.
    """

    def __init__(self, pair: InstancePair, nodes: np.ndarray):
        self.pair = pair
        self.nodes = nodes
        xs = np.linspace(nodes[:-1], nodes[1:], 5, axis=1)  # (cells, 5)
        ys = 1.0 - np.asarray(pair.f2.eval(xs.ravel())).reshape(xs.shape)
        h = (nodes[1:] - nodes[:-1]) / 4.0
        cell = h / 3.0 * (ys[:, 0] + 4 * ys[:, 1] + 2 * ys[:, 2] + 4 * ys[:, 3] + ys[:, 4])
        self.suffix = np.concatenate((np.cumsum(cell[::-1])[::-1], [0.0]))

    def ar(self, r: float, tol: float = 1e-12) -> float:
        """term1 + suffix integral at an arbitrary reserve inside the grid."""
        t1 = r * (1.0 - float(self.pair.f1.eval(r)))
        j = int(np.searchsorted(self.nodes, r, side="right"))
        if j >= self.nodes.size:
            return t1
        part = adaptive_simpson(
            lambda x: 1.0 - float(self.pair.f2.eval(x)), r, float(self.nodes[j]), tol=tol
        )
        return t1 + part + float(self.suffix[j])


def _golden_max(f, a: float, b: float, xtol: float) -> tuple[float, float]:
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > xtol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def optimal_reserve(pair: InstancePair, search: SearchConfig | None = None) -> ReserveResult:
    """Maximize the anonymous-reserve revenue over reserves.

    Step pairs: between consecutive atoms both 1 - F1(r) and the suffix
    integral are linear in r, so the maximum is attained at an atom (or 0);
    scanning {0} plus all atoms of F1 and F2 is exact.

    Analytic pairs may be multimodal, so a dense grid seeds several local
    golden-section refinements and the best local optimum wins.  Ties within
    1e-9 in revenue resolve to the smallest reserve.
    """
    search = search or SearchConfig()
    if _is_step_pair(pair):
        return _scan_atoms(pair, search.interval)

    cap = search.cap if search.cap is not None else _integration_cap(pair.f2, search.tol)
    cap = max(cap, pair.f1.support_cap())
    lo_lim, hi_lim = search.interval if search.interval is not None else (0.0, cap)
    hi_lim = min(hi_lim, cap) if math.isfinite(hi_lim) else cap
    if hi_lim <= lo_lim:
        hi_lim = lo_lim + max(1e-12, abs(lo_lim) * 1e-12)
    nodes = np.linspace(0.0, max(cap, hi_lim), int(search.grid_points) + 1)
    helper = _NodeIntegrals(pair, nodes)

    in_window = (nodes >= lo_lim) & (nodes <= hi_lim)
    t1 = nodes * (1.0 - np.asarray(pair.f1.eval(nodes)))
    coarse = t1 + helper.suffix
    coarse = np.where(in_window, coarse, -np.inf)

    interior = coarse[1:-1]
    local = (interior >= coarse[:-2]) & (interior >= coarse[2:])
    cand_idx = np.nonzero(local)[0] + 1
    edge_idx = np.nonzero(in_window)[0]
    edges = [edge_idx[0], edge_idx[-1]] if edge_idx.size else []
    cand_idx = np.unique(np.concatenate((cand_idx, edges))).astype(int)
    order = np.argsort(coarse[cand_idx])[::-1]
    starts = cand_idx[order][: max(1, int(search.refine_starts))]

    best_r, best_v = math.inf, -math.inf
    for i in starts:
        a = float(nodes[max(i - 1, 0)])
        b = float(nodes[min(i + 1, nodes.size - 1)])
        a, b = max(a, lo_lim), min(b, hi_lim)
        if b <= a:
            r_loc, v_loc = a, helper.ar(a)
        else:
            r_loc, v_loc = _golden_max(helper.ar, a, b, xtol=1e-9 * max(1.0, cap))
        if v_loc > best_v + TIE_TOL or (abs(v_loc - best_v) <= TIE_TOL and r_loc < best_r):
            best_r, best_v = r_loc, v_loc

    # prefer the smallest reserve when the window edge ties the max
    edge_r = max(lo_lim, 0.0)
    edge_v = helper.ar(edge_r)
    if edge_v >= best_v - TIE_TOL and edge_r < best_r:
        best_r, best_v = edge_r, edge_v
    revenue = ar_revenue(best_r, pair, tol=search.tol)
    return ReserveResult(
        reserve=float(best_r),
        revenue=float(revenue),
        candidates_examined=int(nodes.size + len(starts)),
        method="grid+refine",
        degenerate=bool(revenue <= TIE_TOL),
    )


# ---------------------------------------------------------------------------
# structural reserve bounds
# ---------------------------------------------------------------------------


def solve_c_star(which: str = "larger") -> float:
    """Root of (3/2) z exp(-z/6) = 1 bounding the optimal normalized MHR reserve.

    The function increases to its maximum at z = 6 and decreases afterwards,
    so the two roots bracket in [0, 6] and [6, 60].
    """
    g = lambda z: 1.5 * z * math.exp(-z / 6.0) - 1.0
    if which == "larger":
        return bisect_root(g, 6.0, 60.0, xtol=1e-12)
    if which == "smaller":
        return bisect_root(g, 1e-12, 6.0, xtol=1e-12)
    raise InvalidInputError(f"which must be 'larger' or 'smaller', got {which!r}")


def reserve_search_range(pair: InstancePair, setting: str, H: float | None = None) -> tuple[float, float]:
    """Interval that provably contains a revenue-optimal reserve.

    Values in [1, H]: no reserve above the (H-1)/H quantile of F1 beats the
    reserve of 1.  Normalized MHR: the optimal reserve is at most the larger
    root of (3/2) z exp(-z/6) = 1.  Otherwise the full [0, cap] range.
    """
    if setting == "bounded-1H":
        if H is None or H < 1:
            raise InvalidInputError("bounded-1H needs H >= 1")
        if float(pair.f1.eval(1.0)) > 1e-12:
            raise InvalidInputError("bounded-1H requires support infimum >= 1 (F1(1) = 0)")
        return (1.0, float(pair.f1.quantile((H - 1.0) / H)))
    if setting == "mhr-normalized":
        return (0.0, solve_c_star())
    if setting == "none":
        return (0.0, pair.support_cap())
    raise InvalidInputError(f"unknown setting {setting!r}")


def revenue_monotonicity_check(
    pair_a: InstancePair,
    pair_b: InstancePair,
    grid,
    quad_tol: float = QUAD_TOL,
    check_tol: float = 1e-8,
) -> CheckReport:
    """Dominance implies revenue dominance, pointwise in r and at the optima.

    Precondition (checked first): pair_a dominates pair_b, i.e. F1a <= F1b and
    F2a <= F2b on the grid.  A failed precondition yields a report, not an
    exception.  The optima comparison evaluates pair_b's optimal reserve under
    pair_a as well, so it cannot fail through search slack alone.
    """
    grid = np.asarray(grid, dtype=float)
    for name, ca, cb in (("F1", pair_a.f1, pair_b.f1), ("F2", pair_a.f2, pair_b.f2)):
        da = np.asarray(ca.eval(grid))
        db = np.asarray(cb.eval(grid))
        bad = np.nonzero(da > db + 1e-12)[0]
        if bad.size:
            i = int(bad[0])
            return CheckReport(
                name="revenue-monotonicity",
                passed=False,
                worst_margin=float(db[i] - da[i]),
                witness=(float(grid[i]), float(da[i]), float(db[i])),
                grid_size=int(grid.size),
                tolerance=check_tol,
                details={"precondition_failed": name + " dominance"},
            )

    worst = math.inf
    witness = None
    for r in grid:
        ra = ar_revenue(float(r), pair_a, tol=quad_tol)
        rb = ar_revenue(float(r), pair_b, tol=quad_tol)
        margin = ra - rb
        if margin < worst:
            worst, witness = margin, (float(r), ra, rb)

    opt_a = optimal_reserve(pair_a)
    opt_b = optimal_reserve(pair_b)
    ar_a = max(opt_a.revenue, ar_revenue(opt_b.reserve, pair_a, tol=quad_tol))
    margin_opt = ar_a - opt_b.revenue
    if margin_opt < worst:
        worst, witness = margin_opt, (opt_b.reserve, ar_a, opt_b.revenue)

    return CheckReport(
        name="revenue-monotonicity",
        passed=bool(worst >= -check_tol),
        worst_margin=float(worst),
        witness=witness,
        grid_size=int(grid.size),
        tolerance=check_tol,
        details={"optima": [opt_a.revenue, opt_b.revenue]},
    )
