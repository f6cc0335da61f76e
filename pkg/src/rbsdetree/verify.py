"""Acceptance harness: the ten primary verification criteria.

Each criterion is a function returning a CriterionResult with a one-line
verdict; run_all executes the whole suite.  The same functions back the CLI
``verify`` verb and the acceptance test module, so a failure shows up
identically in both.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .instances import (
    linear_barrier,
    make_tree,
    random_given_instance,
    random_oracle_instance,
    random_picard_instance,
    terminal_payoff,
)
from .picard import Triple, picard_solve, select_contraction_parameters
from .rbsde import (
    GeneratorSpec,
    check_equation_residual,
    check_skorohod,
    a_priori_majorant,
    solve_given_generators,
    solve_mpp_only,
    solve_via_snell,
)
from .stopping import (
    brute_force_value,
    epsilon_optimal_time,
    k_flatness_before_stop,
    reward_of_rule,
    rule_from_mask,
    smallest_optimal_time,
    stop_levels,
)
from .wnorm import WeightedNorm, norm_sq

BASE_SEED = 20260823


@dataclass(frozen=True)
class CriterionResult:
    """Outcome of one acceptance criterion."""

    name: str
    passed: bool
    detail: str
    seconds: float

    @property
    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return f"[{verdict}] {self.name}: {self.detail} ({self.seconds:.2f}s)"


def _timed(name):
    def wrap(fn):
        def run(*args, **kwargs):
            t0 = time.perf_counter()
            passed, detail = fn(*args, **kwargs)
            return CriterionResult(name, passed, detail, time.perf_counter() - t0)

        run.__name__ = fn.__name__
        run.criterion_name = name
        return run

    return wrap


def _count(scale: str, small: int) -> int:
    return small * (2 if scale == "full" else 1)


# ---------------------------------------------------------------------------
# 1. Root value equals the exhaustive stopping oracle.
# ---------------------------------------------------------------------------
@_timed("oracle equivalence")
def criterion_oracle_equivalence(scale: str = "small"):
    rng = np.random.default_rng(BASE_SEED + 1)
    worst = 0.0
    for _ in range(_count(scale, 20)):
        tree, gen = random_oracle_instance(rng)
        sol = solve_given_generators(tree, gen)
        cert = brute_force_value(tree, gen)
        worst = max(worst, abs(float(sol.y[0][0]) - cert.value))
    return worst <= 1e-10, f"max |Y_0 - oracle| = {worst:.3e} over 20 instances (tol 1e-10)"


# ---------------------------------------------------------------------------
# 2. Minimal-push conditions hold node-wise.
# ---------------------------------------------------------------------------
@_timed("minimal-push conditions")
def criterion_skorohod(scale: str = "small"):
    rng = np.random.default_rng(BASE_SEED + 2)
    worst_prod = worst_neg = worst_bar = worst_leaf = 0.0
    for _ in range(_count(scale, 50)):
        tree, gen = random_given_instance(rng, max_steps=4, cross_terminal=True)
        sol = solve_given_generators(tree, gen)
        rep = check_skorohod(tree, sol, gen.h)
        worst_prod = max(worst_prod, rep.max_product)
        worst_neg = max(worst_neg, rep.max_negative_dk)
        worst_bar = max(worst_bar, rep.max_barrier_violation)
        worst_leaf = max(worst_leaf, float(np.max(np.abs(sol.y[-1] - gen.xi))))
    ok = max(worst_prod, worst_neg, worst_bar, worst_leaf) <= 1e-12
    return ok, (
        f"max (Y-h)dK = {worst_prod:.3e}, max -dK = {worst_neg:.3e}, "
        f"max h-Y = {worst_bar:.3e}, max |Y_T - xi| = {worst_leaf:.3e} (tol 1e-12)"
    )


# ---------------------------------------------------------------------------
# 3. Direct recursion and envelope-decomposition route agree.
# ---------------------------------------------------------------------------
@_timed("route equivalence")
def criterion_route_equivalence(scale: str = "small"):
    rng = np.random.default_rng(BASE_SEED + 2)  # same instances as criterion 2
    worst = 0.0
    for _ in range(_count(scale, 50)):
        tree, gen = random_given_instance(rng, max_steps=4, cross_terminal=True)
        direct = solve_given_generators(tree, gen)
        via, _ = solve_via_snell(tree, gen)
        for k in range(tree.n_steps + 1):
            worst = max(worst, float(np.max(np.abs(direct.y[k] - via.y[k]))))
            worst = max(worst, float(np.max(np.abs(direct.k_cum[k] - via.k_cum[k]))))
    return worst <= 1e-10, f"max node-wise |direct - envelope route| = {worst:.3e} (tol 1e-10)"


# ---------------------------------------------------------------------------
# 4. Fixed-point iteration contracts at the certified rate.
# ---------------------------------------------------------------------------
@_timed("fixed-point contraction")
def criterion_picard(scale: str = "small"):
    rng = np.random.default_rng(BASE_SEED + 4)
    worst_ratio = 0.0
    worst_gap = 0.0
    max_iters = 0
    for i in range(_count(scale, 20)):
        n_brownian = 1 if i % 4 == 3 else 2
        tree, gen = random_picard_instance(rng, n_brownian=n_brownian)
        lip = gen.lipschitz
        beta = lip.l_u**2 + 2 * lip.l_f + 0.5
        cfg = select_contraction_parameters(lip, beta, max_iter=40, tol=1e-9)
        trace = picard_solve(tree, gen, cfg)
        max_iters = max(max_iters, len(trace.distances))
        for d1, d2 in zip(trace.distances[1:], trace.distances[2:]):
            if d1 > 1e-12:
                worst_ratio = max(worst_ratio, d2 / d1)
        ones = Triple(
            y=[np.ones(tree.level_size(k)) for k in range(tree.n_steps + 1)],
            u=[np.ones((tree.level_size(k), tree.n_marks)) for k in range(tree.n_steps)],
            z=[np.ones(tree.level_size(k)) for k in range(tree.n_steps)]
            if n_brownian == 2
            else None,
        )
        other = picard_solve(tree, gen, cfg, init=ones)
        gap = max(
            float(np.max(np.abs(trace.solution.y[k] - other.solution.y[k])))
            for k in range(tree.n_steps + 1)
        )
        worst_gap = max(worst_gap, gap)
        if not (trace.converged and other.converged):
            return False, "iteration failed to converge within the cap"
        bound = cfg.alpha + 0.05
    ok = worst_ratio <= bound and worst_gap <= 1e-8 and max_iters <= 40
    return ok, (
        f"max ratio = {worst_ratio:.4f} (bound {bound:.4f}), max iters = {max_iters}, "
        f"init gap = {worst_gap:.3e} (tol 1e-8)"
    )


# ---------------------------------------------------------------------------
# 5. Near-contact stopping is epsilon-optimal and push-free before it.
# ---------------------------------------------------------------------------
@_timed("epsilon-optimal stopping")
def criterion_epsilon_optimality(scale: str = "small"):
    rng = np.random.default_rng(BASE_SEED + 5)
    worst_gap = -np.inf
    worst_flat = 0.0
    for _ in range(_count(scale, 20)):
        tree, gen = random_given_instance(rng, max_steps=4, cross_terminal=True)
        sol = solve_given_generators(tree, gen)
        for eps in (0.1, 0.01, 0.001):
            rule = epsilon_optimal_time(tree, sol, gen.h, eps)
            reward = reward_of_rule(tree, gen, rule)
            worst_gap = max(worst_gap, float(sol.y[0][0]) - reward - eps)
            worst_flat = max(worst_flat, k_flatness_before_stop(tree, sol, rule))
    ok = worst_gap <= 1e-12 and worst_flat <= 1e-12
    return ok, (
        f"max Y_0 - reward - eps = {worst_gap:.3e}, "
        f"max push before stop = {worst_flat:.3e} (tol 1e-12)"
    )


# ---------------------------------------------------------------------------
# 6. First contact is optimal and earliest among all optimal rules.
# ---------------------------------------------------------------------------
@_timed("smallest optimal rule")
def criterion_smallest_optimal(scale: str = "small"):
    rng = np.random.default_rng(BASE_SEED + 6)
    worst_value = 0.0
    latest = True
    for _ in range(_count(scale, 20)):
        tree, gen = random_oracle_instance(rng)
        sol = solve_given_generators(tree, gen)
        star = smallest_optimal_time(tree, sol, gen.h)
        reward = reward_of_rule(tree, gen, star)
        worst_value = max(worst_value, abs(float(sol.y[0][0]) - reward))
        star_levels = stop_levels(tree, star)
        cert = brute_force_value(tree, gen)
        for mask in cert.optimal_masks(1e-12):
            other = rule_from_mask(tree, int(mask))
            if np.any(star_levels > stop_levels(tree, other)):
                latest = False
    ok = worst_value <= 1e-10 and latest
    return ok, (
        f"max |Y_0 - reward(first contact)| = {worst_value:.3e} (tol 1e-10), "
        f"earliest among optimal rules: {latest}"
    )


# ---------------------------------------------------------------------------
# 7. Weighted a-priori bound dominates the solution node-wise.
# ---------------------------------------------------------------------------
@_timed("a-priori majorant")
def criterion_majorant(scale: str = "small"):
    rng = np.random.default_rng(BASE_SEED + 7)
    n_viol = 0
    for _ in range(_count(scale, 20)):
        tree, gen = random_given_instance(rng, max_steps=4, cross_terminal=True)
        sol = solve_given_generators(tree, gen)
        for beta in (0.5, 1.0, 2.0):
            n_viol += len(a_priori_majorant(tree, gen, sol, beta=beta, tol=1e-10))
    return n_viol == 0, f"{n_viol} node-level violations over 20 instances x beta in {{0.5,1,2}}"


# ---------------------------------------------------------------------------
# 8. Representation residuals: exact for separable data, O(dt) for cross terms.
# ---------------------------------------------------------------------------
def _separable_instance(rng, kind: int):
    """Instance whose branchwise values stay inside the representable span."""
    if kind == 0:  # Brownian-only tree: two branches, span {1, dW} is complete
        return random_given_instance(rng, max_steps=4, with_jumps=False)
    if kind == 1:  # jump-only tree: span {1, compensated indicator} is complete
        return random_given_instance(rng, max_steps=4, n_brownian=1, with_jumps=True)
    # mixed tree with additively separable data and a non-binding barrier
    tree = make_tree(
        int(rng.integers(1, 4)), 1.0, ("e1",), rate=float(rng.uniform(0.3, 1.2))
    )
    xi = terminal_payoff(
        tree,
        const=float(rng.uniform(-0.5, 0.5)),
        w=float(rng.uniform(-1, 1)),
        n=float(rng.uniform(-1, 1)),
    )
    h = linear_barrier(tree, base=-100.0, leaf_slack=100.0, xi=xi)
    f_levels = [rng.uniform(-1, 1) * np.tanh(tree.w[k]) + rng.uniform(-1, 1) * tree.n_jumps[k]
                for k in range(tree.n_steps)]
    return tree, GeneratorSpec(xi=xi, h=h, f_levels=f_levels)


def _cross_instance(n_steps: int, wn: float = 1.0):
    tree = make_tree(n_steps, 1.0, ("e1",), rate=0.8)
    xi = terminal_payoff(tree, wn=wn)
    h = linear_barrier(tree, base=-100.0, leaf_slack=100.0, xi=xi)
    return tree, GeneratorSpec(xi=xi, h=h)


@_timed("representation residuals")
def criterion_representation(scale: str = "small"):
    rng = np.random.default_rng(BASE_SEED + 8)
    worst_sep = 0.0
    for i in range(_count(scale, 12)):
        tree, gen = _separable_instance(rng, i % 3)
        sol = solve_given_generators(tree, gen)
        rep = check_equation_residual(tree, sol, gen)
        worst_sep = max(
            worst_sep, max(float(np.max(np.abs(r))) for r in rep.branch_residuals)
        )

    worst_cmean = 0.0
    peaks = []
    for n_steps in (4, 8):
        tree, gen = _cross_instance(n_steps)
        sol = solve_given_generators(tree, gen)
        rep = check_equation_residual(tree, sol, gen)
        worst_cmean = max(worst_cmean, rep.max_conditional_mean)
        peaks.append(max(float(np.max(r)) for r in sol.residual))
    shrink = peaks[0] / peaks[1]
    ok = worst_sep <= 1e-12 and worst_cmean <= 1e-10 and shrink >= 1.8
    return ok, (
        f"separable residual = {worst_sep:.3e} (tol 1e-12), cross-term conditional "
        f"mean = {worst_cmean:.3e} (tol 1e-10), refinement shrink = {shrink:.2f}x (need 1.8x)"
    )


# ---------------------------------------------------------------------------
# 9. Hand-computed fixtures reproduce exactly.
# ---------------------------------------------------------------------------
def fixture_reflected_binomial():
    """One binomial step, payoff W_1, barrier 0.5 at the root."""
    tree = make_tree(1, 1.0, ("e1",), rate=0.0)
    xi = tree.w[-1].copy()
    gen = GeneratorSpec(xi=xi, h=[np.array([0.5]), xi - 0.0])
    return tree, gen


def fixture_jump_count():
    """One jump-only step with unit compensator mass ln 2, payoff N_1."""
    tree = make_tree(1, 1.0, ("e1",), rate=np.log(2.0), n_brownian=1)
    xi = tree.n_jumps[-1].astype(float)
    gen = GeneratorSpec(xi=xi, h=[np.array([-10.0]), xi - 10.0])
    return tree, gen


def fixture_linear_fixed_point():
    """One jump-only step, f = 0.1 y, xi = 1: fixed point Y_0 = 1/0.9."""
    from .rbsde import LipschitzConstants

    tree = make_tree(1, 1.0, ("e1",), rate=1.0, n_brownian=1)
    xi = np.ones(tree.n_leaves)
    gen = GeneratorSpec(
        xi=xi,
        h=[np.array([-10.0]), xi - 10.0],
        f_state=lambda t, k, y, u: 0.1 * y,
        lipschitz=LipschitzConstants(l_f=0.1),
    )
    return tree, gen


@_timed("hand-computed fixtures")
def criterion_fixtures(scale: str = "small"):
    errs = {}

    tree, gen = fixture_reflected_binomial()
    sol = solve_given_generators(tree, gen)
    errs["reflected Y_0"] = abs(float(sol.y[0][0]) - 0.5)
    errs["reflected Z_0"] = abs(float(sol.z[0][0]) - 1.0)
    errs["reflected dK_0"] = abs(float(sol.dk[0][0]) - 0.5)

    tree, gen = fixture_jump_count()
    sol = solve_mpp_only(tree, gen)
    errs["jump Y_0"] = abs(float(sol.y[0][0]) - 0.5)
    errs["jump U"] = abs(float(sol.u[0][0, 0]) - 1.0)
    errs["jump |U|^2"] = abs(norm_sq(tree, sol.u, WeightedNorm("p", 0.0)) - np.log(2.0))

    tree, gen = fixture_linear_fixed_point()
    cfg = select_contraction_parameters(gen.lipschitz, beta=0.7, tol=1e-13)
    trace = picard_solve(tree, gen, cfg)
    errs["fixed point Y_0"] = abs(float(trace.solution.y[0][0]) - 1.0 / 0.9)

    worst = max(errs.values())
    name = max(errs, key=errs.get)
    return worst <= 1e-12, f"max fixture error = {worst:.3e} at '{name}' (tol 1e-12)"


# ---------------------------------------------------------------------------
# 10. Jump-only solver equals the general one on degenerate trees.
# ---------------------------------------------------------------------------
@_timed("jump-only mode equivalence")
def criterion_mpp_only(scale: str = "small"):
    rng = np.random.default_rng(BASE_SEED + 10)
    worst = 0.0
    for _ in range(_count(scale, 20)):
        tree, gen = random_given_instance(
            rng, max_steps=4, n_brownian=1, with_jumps=True
        )
        a = solve_mpp_only(tree, gen)
        b = solve_given_generators(tree, gen)
        for k in range(tree.n_steps + 1):
            worst = max(worst, float(np.max(np.abs(a.y[k] - b.y[k]))))
        for k in range(tree.n_steps):
            worst = max(worst, float(np.max(np.abs(a.u[k] - b.u[k]))))
            worst = max(worst, float(np.max(np.abs(a.dk[k] - b.dk[k]))))
    return worst <= 1e-12, f"max node-wise gap = {worst:.3e} over 20 instances (tol 1e-12)"


ALL_CRITERIA = (
    criterion_oracle_equivalence,
    criterion_skorohod,
    criterion_route_equivalence,
    criterion_picard,
    criterion_epsilon_optimality,
    criterion_smallest_optimal,
    criterion_majorant,
    criterion_representation,
    criterion_fixtures,
    criterion_mpp_only,
)


def run_all(scale: str = "small") -> list:
    """Run every acceptance criterion; failures are reported, never raised."""
    if scale not in ("small", "full"):
        raise ValueError("scale must be 'small' or 'full'")
    return [fn(scale) for fn in ALL_CRITERIA]


def format_report(results) -> str:
    lines = [r.line for r in results]
    n_pass = sum(r.passed for r in results)
    lines.append(f"{n_pass}/{len(results)} criteria passed")
    return "\n".join(lines)
