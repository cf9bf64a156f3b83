"""Named, deterministic check suites shared by the CLI runner and the tests.

Two registries:
  PAPER_CHECKS      reproductions of the catalog's closed-form facts
                    (interval quotients, classification tables, conjugate
                    pairs, curvature formulas)
  INVARIANT_CHECKS  structural properties sampled with a seeded generator

Each check is a callable (seed) -> (passed, detail) so a suite run prints
one PASS/FAIL line per name and is byte-stable for a fixed seed.
"""

from __future__ import annotations

import math

import numpy as np

from . import catalog, dual, kappa, legendre, support

__all__ = ["PAPER_CHECKS", "INVARIANT_CHECKS", "run_suite", "power_classification"]


def power_classification(k: float, A: float = 1.0,
                         moduli=(0.5, 1.0, 2.0)) -> tuple[bool, bool]:
    """(quadratically convex?, sub-quadratically convex?) for A|x|^k at 0.

    The quadratic sense holds when some sampled modulus certifies it; the
    sub-quadratic sense likewise.  For k = 2 the touching modulus 2A is
    included implicitly via the sampled list scaled by 2A.
    """
    f = catalog.make_power(A, k)
    mods = list(moduli) + [2.0 * A]
    quad = any(dual.check_quadratic_convexity(f, 0.0, m)[0] for m in mods)
    sub = any(dual.check_subquadratic_convexity(f, 0.0, m)[0] for m in mods)
    return quad, sub


# -- paper-fact checks ---------------------------------------------------------


def _check_power_eval(seed):
    f = catalog.make_power(1.0, 4.0 / 3.0)
    ok = abs(f.value(1.0) - 1.0) < 1e-15
    return ok, f"f(1)={f.value(1.0)}"


def _check_pathological_quotients(seed):
    n_iv = 16
    f = catalog.make_pathological(n_iv)
    worst = 0.0
    for n, (a, b) in enumerate(catalog.pathological_intervals(n_iv)):
        fa, fb = f.gradient(float(a))[0], f.gradient(float(b))[0]
        quot = (fb - fa) / (float(b) - float(a))
        worst = max(worst, abs(quot - (n + 4)) / (n + 4))
    return worst <= 1e-10, f"max relative quotient error {worst:.3g}"


def _check_pathological_derivative_bound(seed):
    n_iv = 16
    f = catalog.make_pathological(n_iv)
    ok = True
    for n in range(n_iv):
        xn = 1.0 / (n + 4) ** 2
        ok &= f.gradient(xn)[0] <= 1.0 / (2.0 * (n + 3) ** 2) + 1e-15
    ok &= f.gradient(0.0)[0] == 0.0
    return ok, "f'(x_n) <= 1/(2(n+3)^2) and f'(0) = 0"


def _check_kink_quotient_infinite(seed):
    f = catalog.from_label("abs")
    q = kappa.peano_quotient(f, 0.0, 1.0, 0.1)
    return math.isinf(q), f"quotient at the kink = {q}"


def _check_power43_diverges(seed):
    f = catalog.make_power(1.0, 4.0 / 3.0)
    est = kappa.estimate_kappa(f, 0.0)
    return math.isinf(est.value) and est.diverging, "estimate diverges to +inf"


def _check_power_duality_pair(seed):
    g = legendre.grid_from_function(lambda p: abs(p[0]) ** 3 / 3.0, [-2], [2], 601)
    gs = legendre.conjugate_grid_1d(g)
    ys = gs.axis_points()
    keep = np.abs(ys) <= 4.0  # attained slopes of |x|^3/3 on [-2, 2]
    err = float(np.max(np.abs(gs.values[keep] - np.abs(ys[keep]) ** 1.5 / 1.5)))
    step = 4.0 / 600.0
    return err <= step, f"max error {err:.3g} vs grid step {step:.3g}"


def _check_semicircle_conjugate(seed):
    g = legendre.grid_from_function(
        lambda p: -math.sqrt(max(1.0 - p[0] ** 2, 0.0)), [-1], [1], 4001)
    ys = np.linspace(-1.0, 1.0, 9)
    gs = legendre.conjugate_grid_1d(g, slopes=ys)
    err = float(np.max(np.abs(gs.values - np.sqrt(1.0 + ys**2))))
    return err <= 1e-6, f"max error {err:.3g} against sqrt(1+y^2)"


def _check_hemisphere_dual_curvature(seed):
    pair = legendre.closed_form_conjugate("hemisphere:0:1:1")
    h = 1e-4
    fd = (pair.dual_closed_form(h) - 2 * pair.dual_closed_form(0.0)
          + pair.dual_closed_form(-h)) / h**2
    ok = abs(fd - 1.0) < 1e-6
    grid = legendre.grid_from_function(catalog.make_hemisphere([0.0], 1.0, 1.0),
                                       [-0.995], [0.995], 4001)
    H = 0.08
    gs = legendre.conjugate_grid_1d(grid, slopes=np.array([-H, 0.0, H]))
    fd2 = (gs.values[0] - 2 * gs.values[1] + gs.values[2]) / H**2
    ok &= abs(fd2 - 1.0) <= 0.02
    return ok, f"closed-form d2={fd:.8f}, grid d2={fd2:.5f} (r=1)"


def _check_pathological_support(seed):
    f = catalog.make_pathological(16)
    S = support.Sphere(np.array([0.0]), 1.0, 1.0)
    return support.is_sphere_of_support(f, S, 0.0), "unit sphere rests at the origin"


def _check_hemisphere_eigvec(seed):
    ok = True
    for r in np.linspace(0.5, 3.0, 20):
        for s in np.linspace(0.0, 0.95, 20) * r:
            lam, lam2, flag = support.hemisphere_hessian_eigen(r, s)
            ok &= flag and lam >= lam2 * (1.0 - 1e-12)
    return ok, "gradient is the top eigenvector on a 20x20 (r, s) grid"


def _check_classification_43(seed):
    quad, sub = power_classification(4.0 / 3.0)
    return quad and not sub, f"quad={quad}, sub={sub}"


def _check_classification_matrix(seed):
    expected = {1.0: (True, False), 1.5: (True, False), 2.0: (True, True), 3.0: (False, True)}
    got = {k: power_classification(k) for k in expected}
    return got == expected, f"{got}"


def _check_pathological_dual_bound(seed):
    f = catalog.make_pathological(16)
    S = support.Sphere(np.array([0.0]), 1.0, 1.0)
    rep = dual.dual_route_support_bound(f, 0.0, S)
    return rep.applicable and rep.passed and rep.k0 <= 1.01, f"estimate {rep.k0:.4g} <= 1"


def _check_hemisphere_lambda(seed):
    d = catalog.make_hemisphere([0.0], 1.0, 1.0)
    worst = 0.0
    for s in (0.0, 0.3, 0.6, 0.8):
        est = kappa.estimate_kappa(d, s)
        lam = 1.0 / (1.0 - s * s) ** 1.5
        worst = max(worst, abs(est.value - lam) / lam)
    return worst <= 0.01, f"max relative error {worst:.3g}"


def _check_interval_lipschitz(seed):
    n_iv = 8
    f = catalog.make_pathological(n_iv)
    ok = True
    for n, (a, b) in enumerate(catalog.pathological_intervals(n_iv)):
        bound = kappa.lipschitz_grad_bound(f, f.probe_box, samples=0,
                                           pairs=[(float(a), float(b))], neighbor_grid=0)
        ok &= abs(bound - (n + 4)) <= 1e-9 * (n + 4)
    return ok, "pairwise gradient quotient equals n+4 on each interval"


PAPER_CHECKS = [
    ("power-eval-unit", _check_power_eval),
    ("pathological-interval-quotients", _check_pathological_quotients),
    ("pathological-derivative-bound", _check_pathological_derivative_bound),
    ("kink-quotient-infinite", _check_kink_quotient_infinite),
    ("power43-kappa-diverges", _check_power43_diverges),
    ("power-duality-pair", _check_power_duality_pair),
    ("semicircle-conjugate", _check_semicircle_conjugate),
    ("hemisphere-dual-curvature", _check_hemisphere_dual_curvature),
    ("pathological-support-sphere", _check_pathological_support),
    ("hemisphere-gradient-eigenvector", _check_hemisphere_eigvec),
    ("classification-power43", _check_classification_43),
    ("classification-matrix", _check_classification_matrix),
    ("pathological-dual-bound", _check_pathological_dual_bound),
    ("hemisphere-lambda-closed-form", _check_hemisphere_lambda),
    ("interval-gradient-lipschitz", _check_interval_lipschitz),
]


# -- invariant checks ----------------------------------------------------------


def _catalog_functions():
    return [
        catalog.make_power(1.0, 4.0 / 3.0),
        catalog.make_power(1.0, 2.0),
        catalog.make_power(1.0, 3.0),
        catalog.make_quadratic(np.diag([1.0, 4.0])),
        catalog.make_hemisphere([0.0], 1.0, 1.0),
        catalog.make_hemisphere([0.0, 0.0], 1.0, 1.0),
        catalog.make_pathological(16),
        catalog.from_label("abs"),
    ]


def _inv_midpoint(seed):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for f in _catalog_functions():
        v = catalog.midpoint_convexity_violation(f, rng, pairs=10_000)
        scale = 1.0 + abs(f.value(np.zeros(f.dim))) if np.isfinite(f.value(np.zeros(f.dim))) else 1.0
        worst = max(worst, v / scale)
    return worst <= 1e-12, f"max scaled violation {worst:.3g}"


def _inv_gradient_fd(seed):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for f in _catalog_functions():
        step = 1e-5 * float(np.max(f.domain.width))
        tol = 10.0 * step**2
        for x in f.probe_box.sample(rng, 100):
            g = f.gradient(x)
            if g is None:
                continue
            fd = np.array([
                (f.value(x + step * e) - f.value(x - step * e)) / (2 * step)
                for e in np.eye(f.dim)])
            rel = float(np.linalg.norm(fd - g)) / max(1.0, float(np.linalg.norm(g)))
            worst = max(worst, rel / tol)
    return worst <= 1.0, f"worst error / tolerance = {worst:.3g}"


def _inv_kappa_oracle(seed):
    rng = np.random.default_rng(seed)
    cases = [
        (catalog.make_quadratic(np.diag([1.0, 4.0])), [0.3, -0.2]),
        (catalog.make_quadratic(np.diag([2.5])), [0.7]),
        (catalog.make_power(1.0, 3.0), [1.0]),
        (catalog.make_hemisphere([0.0], 1.0, 1.0), [0.6]),
        (catalog.make_hemisphere([0.0, 0.0], 1.0, 1.0), [0.3, 0.3]),
    ]
    worst = 0.0
    for f, x in cases:
        est = kappa.estimate_kappa(f, x)
        lam = kappa.analytic_lambda_max(f, x)
        worst = max(worst, abs(est.value - lam) / lam)
    return worst <= 0.01, f"max relative gap {worst:.3g}"


def _inv_majorization(seed):
    ok = True
    for f, x in [(catalog.make_quadratic(np.diag([1.0])), 0.4),
                 (catalog.make_power(1.0, 2.0), 0.5)]:
        r = 0.5 * support.curvature_radius_1d(f, x)
        d = support.tangent_sphere(f, x, r)
        maj = catalog.make_hemisphere(d.c, d.t, d.r)
        ka = kappa.estimate_kappa(f, x).value
        kb = kappa.estimate_kappa(maj, x).value
        ok &= ka <= kb * (1.0 + 1e-9)
    return ok, "estimate of a function <= estimate of its hemisphere majorant"


def _inv_shift_invariance(seed):
    f = catalog.make_quadratic(np.diag([3.0]))
    x0 = 0.7
    a = kappa.estimate_kappa(f, x0)
    b = kappa.estimate_kappa(catalog.shift_normalize(f, x0), 0.0)
    same = all(qa == qb for (_, qa), (_, qb) in zip(a.per_eps, b.per_eps))
    return same and a.value == b.value, "identical arithmetic after recentering"


def _inv_kappa_lipschitz(seed):
    rng = np.random.default_rng(seed)
    ok = True
    for f in [catalog.make_quadratic(np.diag([1.0, 4.0])), catalog.make_power(1.0, 3.0),
              catalog.make_hemisphere([0.0], 1.0, 1.0)]:
        L = kappa.lipschitz_grad_bound(f, f.probe_box, samples=400, rng=rng)
        for x in f.probe_box.sample(rng, 10):
            ok &= kappa.estimate_kappa(f, x).value <= L * 1.01
    return ok, "estimate <= empirical gradient Lipschitz bound"


def _inv_direction_refinement(seed):
    f = catalog.make_quadratic(np.diag([1.0, 4.0]))
    x = np.array([0.2, 0.1])
    sched = kappa.EpsilonSchedule()
    coarse = kappa.estimate_kappa(f, x, sched, kappa.directions_for_dim(2, 64))
    fine = kappa.estimate_kappa(f, x, sched, kappa.directions_for_dim(2, 128))
    ok = all(qf >= qc - 1e-12 for (_, qc), (_, qf) in zip(coarse.per_eps, fine.per_eps))
    return ok, "per-epsilon max never decreases when directions are refined"


def _random_convex_grid(rng, count=601, lo=-3.0, hi=3.0):
    slopes = np.sort(rng.uniform(-4.0, 4.0, count - 1))
    vals = np.concatenate([[0.0], np.cumsum(slopes * (hi - lo) / (count - 1))])
    vals += rng.uniform(-1.0, 1.0)
    return legendre.GridFunction(axes=((lo, hi, count),), values=vals)


def _inv_conjugate_oracle(seed):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(20):
        g = _random_convex_grid(rng)
        fast = legendre.conjugate_grid_1d(g)
        brute = legendre.conjugate_bruteforce(g, fast.axis_points())
        worst = max(worst, float(np.max(np.abs(fast.values - brute.values))))
    return worst <= 1e-9, f"max sweep-vs-brute deviation {worst:.3g}"


def _inv_order_reversal(seed):
    rng = np.random.default_rng(seed)
    xs = np.linspace(-2, 2, 301)
    slopes = np.linspace(-3, 3, 101)
    ok = True
    for _ in range(10):
        f = _random_convex_grid(rng, count=301, lo=-2, hi=2)
        g = legendre.GridFunction(axes=f.axes, values=f.values + rng.uniform(0.0, 1.0, xs.size))
        fs = legendre.conjugate_bruteforce(f, slopes)
        gs = legendre.conjugate_bruteforce(g, slopes)
        ok &= bool(np.all(fs.values >= gs.values - 1e-12))
    return ok, "f <= g implies conj f >= conj g"


def _inv_fenchel_young(seed):
    rng = np.random.default_rng(seed)
    ok = True
    for _ in range(10):
        f = _random_convex_grid(rng, count=301, lo=-2, hi=2)
        slopes = np.linspace(-3, 3, 101)
        fs = legendre.conjugate_bruteforce(f, slopes)
        xs = f.axis_points()
        lhs = f.values[None, :] + fs.values[:, None]
        rhs = slopes[:, None] * xs[None, :]
        ok &= bool(np.all(lhs >= rhs - 1e-9))
    return ok, "f(x) + conj f(s) >= s x everywhere"


def _inv_biconjugate(seed):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(10):
        f = _random_convex_grid(rng)
        worst = max(worst, legendre.biconjugate_check(f))
    return worst <= 1e-8, f"max involution deviation {worst:.3g}"


def _inv_strong_modulus(seed):
    ok = True
    for c in (0.5, 1.0, 3.0):
        g = legendre.grid_from_function(lambda p, c=c: 0.5 * c * p[0] ** 2, [-3], [3], 601)
        qs, ws = legendre.conjugate_breakpoints(g)
        step = 6.0 / 600.0
        # discrete gradient of the conjugate = hull abscissa; its quotient
        # between consecutive breakpoints is 1/c exactly for a quadratic
        grad = np.diff(ws) / np.diff(qs)
        lip = float(np.max(np.diff(grad) / np.diff(qs[:-1] + 0.5 * np.diff(qs))))
        ok &= lip <= 1.0 / c + 10.0 * step
    return ok, "conjugate gradient Lipschitz constant <= 1/modulus + O(step)"


def _inv_drop_supports(seed):
    rng = np.random.default_rng(seed)
    cases = [
        (catalog.make_quadratic(np.diag([1.0])), 0.0, 0.5),
        (catalog.make_quadratic(np.diag([0.25])), 0.3, 1.5),
        (catalog.from_label("abs"), 0.0, 1.0),
        (catalog.make_pathological(16), 0.0, 1.0),
        (catalog.make_power(1.0, 3.0), 0.5, 0.2),
    ]
    ok = True
    for f, c, r in cases:
        c_arr = np.atleast_1d(np.asarray(c, float))
        lo = np.maximum(c_arr - r, f.domain.lo)
        hi = np.minimum(c_arr + r, f.domain.hi)
        axes = [np.linspace(a, b, 513) for a, b in zip(lo, hi)]
        res = support.drop_sphere(f, c, r, probe_axes=axes)
        S = support.Sphere(c_arr, res.height, r)
        for x in res.contacts:
            ok &= support.is_sphere_of_support(f, S, x, tol=1e-8 * r, probe_axes=axes)
    return ok, "dropped spheres pass the support test at every contact"


def _inv_c11_consistency(seed):
    worst = 0.0
    for r in (0.5, 1.0, 2.0):
        for s in np.linspace(0.0, 0.9, 10) * r:
            lam = support.hemisphere_hessian_eigen(r, s)[0]
            grad = s / math.sqrt(r * r - s * s)
            worst = max(worst, abs(lam - support.c11_bound(grad, r)) / lam)
    return worst <= 1e-12, f"lambda_max vs curvature bound relative gap {worst:.3g}"


def _inv_density_monotone(seed):
    rng = np.random.default_rng(seed)
    axes = [np.linspace(-1, 1, 2049)]
    small = rng.random(2049) < 0.3
    big = small | (rng.random(2049) < 0.3)
    eps = [0.5 * 0.8**j for j in range(10)]
    d_small = support.lower_density(small, axes, 0.0, eps)
    d_big = support.lower_density(big, axes, 0.0, eps)
    ok = all(rb >= rs for (_, rs), (_, rb) in zip(d_small.samples, d_big.samples))
    ok &= all(0.0 <= rho <= 1.0 for _, rho in d_small.samples + d_big.samples)
    return ok, "ratios in [0,1], monotone under set inclusion"


def _inv_duality_of_senses(seed):
    cases = [
        (catalog.make_power(1.0, 4.0 / 3.0), 0.0, 0.5),
        (catalog.make_quadratic(np.diag([1.0])), 0.0, 1.0),
        (catalog.make_power(0.25, 4.0), 1.0, 1.0),
    ]
    ok = True
    for f, x0, m in cases:
        holds, _ = dual.check_quadratic_convexity(f, x0, m)
        if not holds:
            continue
        star, y0, slack = dual.conjugate_restriction(f, x0)
        dual_holds, _ = dual.check_subquadratic_convexity(star, y0, 1.0 / m, slope=0.0,
                                                          extra_tol=slack)
        ok &= dual_holds
    return ok, "quadratic convexity of f gives sub-quadratic convexity of conj f"


def _inv_modulus_monotone(seed):
    f = catalog.make_power(1.0, 4.0 / 3.0)
    qs = [dual.check_quadratic_convexity(f, 0.0, m)[0] for m in (0.25, 0.5, 1.0)]
    g = catalog.make_power(1.0, 3.0)
    subs = [dual.check_subquadratic_convexity(g, 0.0, m)[0] for m in (0.25, 0.5, 1.0)]
    return all(qs) and all(subs), "senses persist under favorable modulus changes"


INVARIANT_CHECKS = [
    ("midpoint-convexity", _inv_midpoint),
    ("gradient-fd-agreement", _inv_gradient_fd),
    ("kappa-hessian-oracle", _inv_kappa_oracle),
    ("kappa-majorization", _inv_majorization),
    ("kappa-shift-invariance", _inv_shift_invariance),
    ("kappa-lipschitz-bound", _inv_kappa_lipschitz),
    ("kappa-direction-refinement", _inv_direction_refinement),
    ("conjugate-oracle-equivalence", _inv_conjugate_oracle),
    ("conjugate-order-reversal", _inv_order_reversal),
    ("fenchel-young", _inv_fenchel_young),
    ("biconjugate-involution", _inv_biconjugate),
    ("strong-convexity-dual-modulus", _inv_strong_modulus),
    ("drop-sphere-supports", _inv_drop_supports),
    ("curvature-bound-consistency", _inv_c11_consistency),
    ("density-monotonicity", _inv_density_monotone),
    ("duality-of-senses", _inv_duality_of_senses),
    ("modulus-monotonicity", _inv_modulus_monotone),
]


def run_suite(name: str, seed: int = 0, threads: int = 1) -> dict:
    """Run a named suite; results keep registry order regardless of threads."""
    try:
        registry = {"paper-checks": PAPER_CHECKS, "invariants": INVARIANT_CHECKS}[name]
    except KeyError:
        raise ValueError(f"unknown suite {name!r}") from None
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(lambda c: c[1](seed), registry))
    else:
        outcomes = [check(seed) for _, check in registry]
    results = [
        {"name": name_, "passed": bool(ok), "detail": detail}
        for (name_, _), (ok, detail) in zip(registry, outcomes)
    ]
    return {"suite": name, "seed": seed,
            "passed": all(r["passed"] for r in results), "checks": results}
