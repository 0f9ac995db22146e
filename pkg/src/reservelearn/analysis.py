"""Verifiers for the revenue-smoothness machinery.

Each check returns a structured :class:`~reservelearn.reporting.CheckReport`
(never asserts or aborts) with the worst observed margin and a witness point,
so a harness can aggregate outcomes and CI policy can decide severity.
"""

from __future__ import annotations

import math

import numpy as np

from .distributions import (
    MarginalDist,
    TruncatedCdf,
    check_mhr,
    check_regular,
)
from .errors import InvalidInputError, PreconditionError
from .learner import ShadeParams, ShadeProfile, beta, required_samples, shaded_pair
from .orderstats import (
    InstancePair,
    JointSampler,
    ProductInstance,
    monopoly_revenue_max,
    normalize_product,
    order_stat_inequality_check,
    sample_top_two,
    shared_uniform_sampler,
    top_two_cdfs,
)
from .reporting import CheckReport, from_margins
from .revenue import ar_revenue, optimal_reserve, revenue_monotonicity_check

_NORM_TOL = 1e-6
_E = math.e


def _require_normalized(pair: InstancePair, who: str) -> None:
    _, m_star = monopoly_revenue_max(pair.f1)
    if abs(m_star - 1.0) > _NORM_TOL:
        raise PreconditionError(
            f"{who} requires a normalized pair (max v(1-F1(v)) = 1), found {m_star!r}"
        )


def _auto_grid(dist: MarginalDist, points: int = 512) -> np.ndarray:
    lo, hi = dist.support()
    cap = dist.cap()
    span = cap - lo
    return np.linspace(lo + 1e-6 * max(span, 1e-6), cap - 1e-9 * max(span, 1e-6), points)


def _require_family(inst: ProductInstance, setting: str) -> None:
    for i, d in enumerate(inst.marginals):
        if setting == "regular":
            rep = check_regular(d, _auto_grid(d))
            if not rep.passed:
                raise PreconditionError(f"marginal {i} ({d.family}) is not regular: {rep}")
        elif setting == "mhr":
            rep = check_mhr(d, None if not d.is_continuous() else _auto_grid(d))
            if not rep.passed:
                raise PreconditionError(f"marginal {i} ({d.family}) is not MHR: {rep}")


# ---------------------------------------------------------------------------
# truncation
# ---------------------------------------------------------------------------


def truncate_pair(pair: InstancePair, eps: float) -> InstancePair:
    """Clamp the top (eps/4)^i quantile mass of each top-two CDF to one point.

    The truncated CDFs dominate nothing new: F*_i(v) >= F_i(v) everywhere, so
    the original pair stochastically dominates the truncated one.
    """
    if not (0.0 < eps < 1.0):
        raise InvalidInputError(f"eps must lie in (0,1), got {eps}")
    return InstancePair(
        f1=TruncatedCdf(pair.f1, 1.0 - eps / 4.0),
        f2=TruncatedCdf(pair.f2, 1.0 - (eps / 4.0) ** 2),
    )


def check_equal_revenue_bounds(pair: InstancePair, grid) -> CheckReport:
    """Normalized product pairs sit above the equal-revenue tails.

    F1(v) >= (1 - 1/v)_+ and F2(v) >= (1 - 1/v^2)_+ pointwise.
    """
    _require_normalized(pair, "check_equal_revenue_bounds")
    grid = np.asarray(grid, dtype=float)
    with np.errstate(divide="ignore"):
        phi1 = np.maximum(1.0 - 1.0 / grid, 0.0)
        phi2 = np.maximum(1.0 - 1.0 / grid**2, 0.0)
    f1 = np.asarray(pair.f1.eval(grid))
    f2 = np.asarray(pair.f2.eval(grid))
    m1 = f1 - phi1
    m2 = f2 - phi2
    margins = np.minimum(m1, m2)
    which = np.where(m1 <= m2, 1, 2)
    i = int(np.argmin(margins))
    lhs = (f1 if which[i] == 1 else f2)[i]
    rhs = (phi1 if which[i] == 1 else phi2)[i]
    return CheckReport(
        name="equal-revenue-tail-bounds",
        passed=bool(margins[i] >= -1e-12),
        worst_margin=float(margins[i]),
        witness=(float(grid[i]), float(lhs), float(rhs)),
        grid_size=int(grid.size),
        tolerance=1e-12,
        details={"worst_order_stat": int(which[i])},
    )


def check_truncation_support(pair: InstancePair, eps: float) -> CheckReport:
    """The truncated pair's support supremum is at most 4/eps (normalized input)."""
    _require_normalized(pair, "check_truncation_support")
    trunc = truncate_pair(pair, eps)
    s1 = trunc.f1.support_cap()
    s2 = trunc.f2.support_cap()
    s_u = max(s1, s2)
    bound = 4.0 / eps
    return CheckReport(
        name="truncation-support-cap",
        passed=bool(s_u <= bound + 1e-9),
        worst_margin=float(bound - s_u),
        witness=(float(s_u), float(s_u), float(bound)),
        tolerance=1e-9,
        details={"sup_highest": float(s1), "sup_second": float(s2)},
    )


def check_truncation_revenue_loss(pair: InstancePair, eps: float, quad_tol: float = 1e-9) -> CheckReport:
    """Truncation keeps at least a (1 - 3*eps/4) fraction of the optimal revenue."""
    _require_normalized(pair, "check_truncation_revenue_loss")
    trunc = truncate_pair(pair, eps)
    opt = optimal_reserve(pair)
    opt_trunc = optimal_reserve(trunc)
    # the original optimum capped into the truncated support is a valid
    # candidate, so the comparison is immune to search slack
    r_alt = min(opt.reserve, trunc.support_cap())
    ar_trunc = max(opt_trunc.revenue, ar_revenue(r_alt, trunc, tol=quad_tol))
    target = (1.0 - 0.75 * eps) * opt.revenue
    return CheckReport(
        name="truncation-revenue-loss",
        passed=bool(ar_trunc >= target - 1e-7),
        worst_margin=float(ar_trunc - target),
        witness=(float(opt_trunc.reserve), float(ar_trunc), float(target)),
        tolerance=1e-7,
        details={"ar_original": float(opt.revenue), "ar_truncated": float(ar_trunc), "eps": eps},
    )


# ---------------------------------------------------------------------------
# per-family tail bounds
# ---------------------------------------------------------------------------


def check_triangular_bound(dist: MarginalDist, rbar: float, grid) -> CheckReport:
    """Regular marginals lie below v/(v + a) on [0, rbar], touching it at rbar.

    a = rbar * (1/F(rbar) - 1); F(rbar) must lie strictly inside (0, 1).
    """
    f_r = float(dist.cdf(rbar))
    if not (0.0 < f_r < 1.0):
        raise InvalidInputError(f"F(rbar) must lie in (0,1), got {f_r} at rbar={rbar}")
    a = rbar * (1.0 / f_r - 1.0)
    grid = np.asarray(grid, dtype=float)
    grid = grid[(grid >= 0.0) & (grid <= rbar)]
    bound = grid / (grid + a)
    F = np.asarray(dist.cdf(grid))
    report = from_margins(
        "triangular-cdf-bound",
        margins=bound - F,
        grid=grid,
        lhs=F,
        rhs=bound,
        tolerance=1e-9,
        details={"a": float(a), "equality_gap_at_rbar": abs(f_r - rbar / (rbar + a))},
    )
    if report.details["equality_gap_at_rbar"] > 1e-9:
        report.passed = False
    return report


def check_mhr_tails(
    inst: ProductInstance, grid, eps: float, strict: bool = False
) -> CheckReport:
    """Exponential tail bounds for normalized MHR instances.

    Part 1: F1(v) >= 1 - 1.5 exp(-v/6) for v >= e (strict mode uses the sharper
    continuous-case 1 - 1.25 exp(-v/e)).  Part 2: F2(v) >= 1 - 2.25 exp(-v/3).
    Part 3: the analysis-shaded pair at beta = eps^2/1870 has support supremum
    at most 12 ln(21/eps).
    """
    _require_family(inst, "mhr")
    pair = top_two_cdfs(inst)
    _require_normalized(pair, "check_mhr_tails")
    grid = np.asarray(grid, dtype=float)
    grid = grid[grid >= _E]
    if grid.size == 0:
        raise InvalidInputError("grid must contain points >= e")

    f1 = np.asarray(pair.f1.eval(grid))
    f2 = np.asarray(pair.f2.eval(grid))
    if strict:
        part1_bound = 1.0 - 1.25 * np.exp(-grid / _E)
    else:
        part1_bound = 1.0 - 1.5 * np.exp(-grid / 6.0)
    part2_bound = 1.0 - 2.25 * np.exp(-grid / 3.0)
    m1 = f1 - part1_bound
    m2 = f2 - part2_bound

    b = eps**2 / 1870.0
    hit = 1.0 - 7.0 * b
    s_u = max(pair.f1.quantile(hit), pair.f2.quantile(hit))
    cap_bound = 12.0 * math.log(21.0 / eps)
    m3 = cap_bound - s_u

    worst_idx1 = int(np.argmin(m1))
    worst_idx2 = int(np.argmin(m2))
    options = [
        (float(m1[worst_idx1]), (float(grid[worst_idx1]), float(f1[worst_idx1]), float(part1_bound[worst_idx1])), 1),
        (float(m2[worst_idx2]), (float(grid[worst_idx2]), float(f2[worst_idx2]), float(part2_bound[worst_idx2])), 2),
        (float(m3), (float(s_u), float(s_u), float(cap_bound)), 3),
    ]
    worst, witness, part = min(options, key=lambda t: t[0])
    return CheckReport(
        name="mhr-exponential-tails",
        passed=bool(worst >= -1e-9),
        worst_margin=worst,
        witness=witness,
        grid_size=int(grid.size),
        tolerance=1e-9,
        details={
            "worst_part": part,
            "beta": b,
            "shaded_support_sup": float(s_u),
            "shaded_support_bound": float(cap_bound),
            "strict": strict,
        },
    )


def _lambda_transform_convex(dist: MarginalDist, lam: float) -> bool:
    grid = _auto_grid(dist, 512)
    F = np.asarray(dist.cdf(grid))
    keep = F < 1.0 - 1e-12
    grid, F = grid[keep], F[keep]
    H = (1.0 - F) ** (-lam)
    slopes = np.diff(H) / np.diff(grid)
    return bool(np.all(np.diff(slopes) >= -1e-9 * np.maximum(1.0, np.abs(slopes[:-1]))))


def check_lambda_regular_tail(
    inst: ProductInstance,
    lam: float,
    u: float,
    grid,
    constant: str = "convexity",
) -> CheckReport:
    """Power-law tail bound for normalized lambda-regular product instances.

    Verifies F1(v) >= 1 - (u/v)^(1/lam) * C for grid points v >= u, where the
    anchor constant C depends on ``constant``:

    * ``"convexity"`` (default): C = (u^lam - 1)^(-1/lam).  Derived by the
      chord argument applied to K(v) = (1-F)^(-lam) - 1, which vanishes at 0
      (so the chord through the origin is genuinely below K), followed by the
      union bound over bidders and the normalized anchor F1(u) >= 1 - 1/u.
      Tight for the generalized-Pareto family, whose K is exactly linear.
    * ``"published"``: C = ln(u/(u-1)).  As printed in the source material;
      violated by every generalized-Pareto instance because the chord of
      (1-F)^(-lam) itself does not pass through the origin ((1-F(0))^(-lam)
      = 1).  Kept for comparison runs.
    """
    if not (0.0 < lam < 1.0):
        raise InvalidInputError(f"lam must lie in (0,1), got {lam}")
    if not (u > 1.0):
        raise InvalidInputError(f"anchor u must exceed 1, got {u}")
    for i, d in enumerate(inst.marginals):
        if not _lambda_transform_convex(d, lam):
            raise PreconditionError(f"marginal {i} ({d.family}) is not {lam}-regular")
    pair = top_two_cdfs(inst)
    _require_normalized(pair, "check_lambda_regular_tail")

    if constant == "convexity":
        c_val = (u**lam - 1.0) ** (-1.0 / lam)
    elif constant == "published":
        c_val = math.log(u / (u - 1.0))
    else:
        raise InvalidInputError(f"constant must be 'convexity' or 'published', got {constant!r}")

    grid = np.asarray(grid, dtype=float)
    grid = grid[grid >= u]
    if grid.size == 0:
        raise InvalidInputError("grid must contain points >= u")
    f1 = np.asarray(pair.f1.eval(grid))
    bound = 1.0 - (u / grid) ** (1.0 / lam) * c_val
    return from_margins(
        "power-law-tail-bound",
        margins=f1 - bound,
        grid=grid,
        lhs=f1,
        rhs=bound,
        tolerance=1e-9,
        details={"lam": lam, "u": u, "constant": constant, "constant_value": float(c_val)},
    )


# ---------------------------------------------------------------------------
# concentration (Monte-Carlo)
# ---------------------------------------------------------------------------


def _reference_pair(source, heldout: int, seed) -> tuple[InstancePair, JointSampler, bool]:
    from .distributions import EmpiricalCdf

    if isinstance(source, ProductInstance):
        return top_two_cdfs(source), JointSampler.product(source), True
    if isinstance(source, JointSampler):
        if source.mode == "product":
            return top_two_cdfs(source.instance), source, True
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0xFEED,)))
        x1, x2 = sample_top_two(source, rng, heldout)
        return (
            InstancePair(f1=EmpiricalCdf(x1), f2=EmpiricalCdf(x2)),
            source,
            False,
        )
    raise InvalidInputError(f"unsupported sample source {type(source).__name__}")


def check_concentration(
    source,
    m: int,
    delta: float,
    trials: int,
    grid,
    seed: int,
    with_dominance: bool = True,
    heldout: int = 1_000_000,
) -> tuple[CheckReport, CheckReport | None]:
    """Empirical top-two CDFs concentrate around the truth, trial by trial.

    Per trial, the event checked is: for some grid point and some order
    statistic, |E_i(v) - F_i(v)| exceeds sqrt(2 beta F_i (1-F_i)) + beta.
    The check passes when the observed failure frequency stays below
    delta + 3 sqrt(delta(1-delta)/trials).

    With ``with_dominance`` a second report verifies, in every non-violating
    trial, the dominance chain F_i <= shade_E(E_i) <= shade_F(F_i) pointwise.
    """
    grid = np.asarray(grid, dtype=float)
    pair, js, analytic = _reference_pair(source, heldout, seed)
    b = beta(int(m), delta)
    F = [np.asarray(pair.f1.eval(grid)), np.asarray(pair.f2.eval(grid))]
    bounds = [np.sqrt(2.0 * b * f * (1.0 - f)) + b for f in F]
    params_e = ShadeParams(b, ShadeProfile.EMPIRICAL)
    params_f = ShadeParams(b, ShadeProfile.ANALYSIS)
    from .learner import shade

    shaded_truth = [shade(f, params_f) for f in F]

    violations = 0
    worst_conc = math.inf
    conc_witness = None
    worst_dom = math.inf
    dom_witness = None
    checked_dom = 0
    for t in range(trials):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(t,)))
        x1, x2 = sample_top_two(js, rng, m)
        emp = [
            np.searchsorted(np.sort(x1), grid, side="left") / m,
            np.searchsorted(np.sort(x2), grid, side="left") / m,
        ]
        margins = [bounds[i] - np.abs(emp[i] - F[i]) for i in (0, 1)]
        trial_worst = min(float(margins[0].min()), float(margins[1].min()))
        if trial_worst < worst_conc:
            i = 0 if margins[0].min() <= margins[1].min() else 1
            j = int(np.argmin(margins[i]))
            worst_conc = trial_worst
            conc_witness = (float(grid[j]), float(abs(emp[i][j] - F[i][j])), float(bounds[i][j]))
        violated = trial_worst < -1e-12
        if violated:
            violations += 1
        elif with_dominance:
            checked_dom += 1
            for i in (0, 1):
                shaded_emp = shade(emp[i], params_e)
                lower = shaded_emp - F[i]  # >= 0: shaded empirical dominates nothing real
                upper = shaded_truth[i] - shaded_emp  # >= 0: analysis shading is wider
                for margin_arr, lhs_arr, rhs_arr in ((lower, shaded_emp, F[i]), (upper, shaded_truth[i], shaded_emp)):
                    j = int(np.argmin(margin_arr))
                    if float(margin_arr[j]) < worst_dom:
                        worst_dom = float(margin_arr[j])
                        dom_witness = (float(grid[j]), float(lhs_arr[j]), float(rhs_arr[j]))

    freq = violations / trials
    threshold = delta + 3.0 * math.sqrt(delta * (1.0 - delta) / trials)
    conc = CheckReport(
        name="empirical-cdf-concentration",
        passed=bool(freq <= threshold),
        worst_margin=float(threshold - freq),
        witness=conc_witness,
        grid_size=int(grid.size),
        tolerance=0.0,
        details={
            "trials": trials,
            "violations": violations,
            "frequency": freq,
            "threshold": threshold,
            "beta": b,
            "analytic_reference": analytic,
        },
    )
    dom = None
    if with_dominance:
        dom = CheckReport(
            name="shaded-dominance-chain",
            passed=bool(worst_dom >= -1e-12),
            worst_margin=float(worst_dom) if checked_dom else math.nan,
            witness=dom_witness,
            grid_size=int(grid.size),
            tolerance=1e-12,
            details={"trials_checked": checked_dom},
        )
    return conc, dom


def check_bernstein(source, m: int, delta: float, trials: int, grid, seed: int) -> CheckReport:
    conc, _ = check_concentration(source, m, delta, trials, grid, seed, with_dominance=False)
    return conc


# ---------------------------------------------------------------------------
# end-to-end revenue gap
# ---------------------------------------------------------------------------


def check_revenue_gap(
    setting: str,
    inst: ProductInstance,
    eps: float,
    delta: float,
    H: float | None = None,
    m: int | None = None,
    quad_tol: float = 1e-9,
) -> CheckReport:
    """Analysis-shaded revenue stays within the family's guaranteed gap.

    Builds the shaded pair analytically at beta = ln(8m/delta)/m with m the
    family's sufficient sample count, then compares optimal revenues:
    additive gap <= eps on unit support, ratio >= 1 - eps otherwise.
    """
    pair = top_two_cdfs(inst)
    cap = pair.support_cap()
    if setting == "unit-support":
        if cap > 1.0 + 1e-9:
            raise PreconditionError(f"unit-support requires values in [0,1], cap is {cap}")
    elif setting == "bounded-1H":
        if H is None or H < 1.0:
            raise InvalidInputError("bounded-1H needs H >= 1")
        if float(pair.f1.eval(1.0)) > 1e-12 or cap > H + 1e-9:
            raise PreconditionError(f"bounded-1H requires support inside [1,{H}]")
    elif setting in ("regular", "mhr"):
        _require_family(inst, setting)
        _require_normalized(pair, f"check_revenue_gap[{setting}]")
    else:
        raise InvalidInputError(f"unknown setting {setting!r}")

    m_used = m if m is not None else required_samples(setting, eps, delta, H)
    b = beta(int(m_used), delta)
    shaded = shaded_pair(pair, ShadeParams(b, ShadeProfile.ANALYSIS))
    opt = optimal_reserve(pair)
    opt_shaded = optimal_reserve(shaded)
    ar_shaded = max(opt_shaded.revenue, ar_revenue(opt.reserve, shaded, tol=quad_tol))
    if setting == "unit-support":
        target = opt.revenue - eps
    else:
        target = (1.0 - eps) * opt.revenue
    details = {
        "setting": setting,
        "m": int(m_used),
        "beta": b,
        "ar_original": float(opt.revenue),
        "ar_shaded": float(ar_shaded),
    }
    if setting in ("regular", "mhr"):
        details["ar_at_least_one"] = bool(opt.revenue >= 1.0 - 1e-6)
    return CheckReport(
        name="shaded-revenue-gap",
        passed=bool(ar_shaded >= target - 1e-7),
        worst_margin=float(ar_shaded - target),
        witness=(float(opt_shaded.reserve), float(ar_shaded), float(target)),
        tolerance=1e-7,
        details=details,
    )


# ---------------------------------------------------------------------------
# suite runner
# ---------------------------------------------------------------------------


def _grid_from_params(params: dict, lo: float, hi: float) -> np.ndarray:
    g = params.get("grid", {})
    lo = float(g.get("lo", lo))
    hi = float(g.get("hi", hi))
    points = int(g.get("points", 512))
    if g.get("spacing", "log") == "log" and lo > 0:
        return np.geomspace(lo, hi, points)
    return np.linspace(lo, hi, points)


def _build_instance(spec: dict) -> ProductInstance | JointSampler:
    if "bidders" in spec:
        return ProductInstance.from_spec(spec)
    if "correlated" in spec:
        c = spec["correlated"]
        if c.get("kind", "shared-uniform") != "shared-uniform":
            raise InvalidInputError(f"unknown correlated kind {c.get('kind')!r}")
        return shared_uniform_sampler(n=int(c["n"]), cap=float(c["cap"]))
    raise InvalidInputError(f"instance spec needs 'bidders' or 'correlated': {spec!r}")


def run_suite(manifest: list[dict], seed: int = 0) -> list[CheckReport]:
    """Run a JSON-driven list of checks; reports merge deterministically by order."""
    reports: list[CheckReport] = []
    for entry in manifest:
        name = entry.get("check")
        params = entry.get("params", {})
        source = _build_instance(entry["instance"]) if "instance" in entry else None

        if name == "order-stat-inequality":
            pair = top_two_cdfs(source)
            grid = _grid_from_params(params, pair.support_cap() * 1e-6, pair.support_cap())
            rep = order_stat_inequality_check(pair, grid)
        elif name == "equal-revenue-bounds":
            norm, _ = normalize_product(source)
            pair = top_two_cdfs(norm)
            grid = _grid_from_params(params, 1e-3, pair.support_cap())
            rep = check_equal_revenue_bounds(pair, grid)
        elif name == "truncation-support":
            norm, _ = normalize_product(source)
            rep = check_truncation_support(top_two_cdfs(norm), float(params["eps"]))
        elif name == "truncation-revenue-loss":
            norm, _ = normalize_product(source)
            rep = check_truncation_revenue_loss(top_two_cdfs(norm), float(params["eps"]))
        elif name == "triangular-bound":
            dist = source.marginals[0]
            rbar = float(params["rbar"])
            grid = _grid_from_params(params, 0.0, rbar)
            rep = check_triangular_bound(dist, rbar, grid)
        elif name == "mhr-tails":
            norm, _ = normalize_product(source)
            cap = top_two_cdfs(norm).support_cap()
            grid = _grid_from_params(params, _E, max(cap, _E + 1.0))
            rep = check_mhr_tails(norm, grid, float(params["eps"]), bool(params.get("strict", False)))
        elif name == "lambda-regular-tail":
            norm, _ = normalize_product(source)
            u = float(params.get("u", 2.0))
            cap = top_two_cdfs(norm).support_cap()
            grid = _grid_from_params(params, u, max(cap, u + 1.0))
            rep = check_lambda_regular_tail(
                norm, float(params["lam"]), u, grid, params.get("constant", "convexity")
            )
        elif name == "bernstein":
            pair_cap = (
                top_two_cdfs(source).support_cap()
                if isinstance(source, ProductInstance)
                else source.cap
            )
            grid = _grid_from_params(params, pair_cap * 1e-3, pair_cap)
            rep = check_bernstein(
                source,
                int(params["m"]),
                float(params["delta"]),
                int(params.get("trials", 100)),
                grid,
                seed=int(params.get("seed", seed)),
            )
        elif name == "revenue-gap":
            inst = source
            if params.get("normalize", False):
                inst, _ = normalize_product(inst)
            rep = check_revenue_gap(
                params["setting"],
                inst,
                float(params["eps"]),
                float(params["delta"]),
                H=params.get("H"),
                m=params.get("m"),
            )
        elif name == "revenue-monotonicity":
            pair = top_two_cdfs(source)
            b = float(params.get("beta", 0.01))
            dominated = shaded_pair(pair, ShadeParams(b, ShadeProfile.EMPIRICAL))
            grid = _grid_from_params(params, 0.0, pair.support_cap())
            rep = revenue_monotonicity_check(pair, dominated, grid)
        else:
            raise InvalidInputError(f"unknown check {name!r}")
        reports.append(rep)
    return reports
