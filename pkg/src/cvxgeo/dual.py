"""Quadratic and sub-quadratic convexity, and conjugate-side curvature bounds.

A convex f is quadratically (resp. sub-quadratically) convex at x0 with
modulus m when some quadratic Q with Hessian m*I touches f at x0 and stays
below (resp. above) f on a ball around x0.  The linear part of any touching
Q is necessarily a subgradient of f at x0, so the checks here always build
Q from a witness subgradient.

The curvature estimate and these notions are conjugate to each other: a
finite estimate k at x0 makes the conjugate quadratically convex at
y0 = grad f(x0) with modulus 1/k, and conversely.  The checks run on the
1-d restriction of f along the gradient direction (hemisphere sections
through the gradient are great circles, so the reduction loses nothing on
the catalog), conjugated on a grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .catalog import Box, ConvexFunction
from .kappa import EpsilonSchedule, estimate_kappa
from .legendre import GridFunction, conjugate_grid_1d, grid_from_function, subdifferential_contains
from .support import Sphere, c11_bound, is_sphere_of_support

__all__ = [
    "QuadWitness",
    "DualityReport",
    "check_quadratic_convexity",
    "check_subquadratic_convexity",
    "conjugate_restriction",
    "forward_dual_convexity",
    "converse_kappa_bound",
    "dual_route_support_bound",
    "dual_osculating_bound",
]

SENSE_SLACK = 1e-9  # absolute slack for the touching-quadratic inequalities
SHRINK_RETRIES = 4  # probe-ball halvings before declaring a sense false


@dataclass(frozen=True)
class QuadWitness:
    """A touching quadratic Q(x) = f(x0) + <s, x-x0> + (m/2)|x-x0|^2 that
    certifies one convexity sense on the ball of radius eps."""

    x0: np.ndarray
    modulus: float
    slope: np.ndarray
    eps: float
    sense: str  # "quadratic" | "sub-quadratic"


@dataclass(frozen=True)
class DualityReport:
    """Outcome of a conjugate-side check tied to a curvature estimate."""

    label: str
    applicable: bool
    reason: str
    passed: bool
    k: float = math.nan
    k0: float = math.nan
    y0: float = math.nan
    moduli: tuple = ()
    bound: float = math.nan
    details: dict | None = None

    def as_dict(self) -> dict:
        def enc(v):
            if isinstance(v, float):
                return "inf" if math.isinf(v) else ("nan" if math.isnan(v) else v)
            return v

        return {
            "label": self.label, "applicable": self.applicable, "reason": self.reason,
            "passed": self.passed, "k": enc(self.k), "k0": enc(self.k0),
            "y0": enc(self.y0), "moduli": [enc(m) for m in self.moduli],
            "bound": enc(self.bound), "details": self.details,
        }


def _witness_slope(f: ConvexFunction, x0: np.ndarray, slope) -> np.ndarray:
    if slope is not None:
        return np.atleast_1d(np.asarray(slope, dtype=float))
    g = f.gradient(x0)
    if g is not None:
        return g
    # kink fallback: the central difference quotient, validated as a subgradient
    step = 1e-5 * float(np.max(f.domain.width))
    cand = np.empty(f.dim)
    for i in range(f.dim):
        e = np.zeros(f.dim)
        e[i] = step
        cand[i] = (f.value(x0 + e) - f.value(x0 - e)) / (2 * step)
    if subdifferential_contains(f, x0, cand, tol=1e-7):
        return cand
    raise ValueError(f"{f.label}: no subgradient witness found at {x0}")


def _probe_ball(f: ConvexFunction, x0: np.ndarray, eps: float, probe: int) -> np.ndarray:
    lo = np.maximum(x0 - eps, f.domain.lo)
    hi = np.minimum(x0 + eps, f.domain.hi)
    if np.any(hi <= lo):
        raise ValueError("probe ball misses the domain")
    axes = [np.linspace(a, b, probe) for a, b in zip(lo, hi)]
    if f.dim == 1:
        pts = axes[0][:, None]
    else:
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.column_stack([m.ravel() for m in mesh])
    return pts[np.linalg.norm(pts - x0, axis=1) <= eps]


def _check_sense(f: ConvexFunction, x0, m: float, eps: float | None, probe: int,
                 slope, sense: str, extra_tol: float = 0.0) -> tuple[bool, QuadWitness | None]:
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if m <= 0:
        raise ValueError("modulus must be positive")
    s = _witness_slope(f, x0, slope)
    f0 = f.value(x0)
    tol = SENSE_SLACK * (1.0 + abs(f0)) + extra_tol
    if eps is None:
        eps = 0.05 * float(np.max(f.domain.width))
    for _ in range(SHRINK_RETRIES + 1):
        pts = _probe_ball(f, x0, eps, probe)
        vals = f.values(pts)
        Q = f0 + (pts - x0) @ s + 0.5 * m * np.sum((pts - x0) ** 2, axis=1)
        if sense == "quadratic":
            ok = bool(np.all(vals >= Q - tol))  # +inf values pass vacuously
        else:
            ok = bool(np.all(vals <= Q + tol))  # +inf values fail the majorization
        if ok:
            return True, QuadWitness(x0=x0, modulus=m, slope=s, eps=eps, sense=sense)
        eps *= 0.5
    return False, None


def check_quadratic_convexity(f: ConvexFunction, x0, m: float, eps: float | None = None,
                              probe: int = 513, slope=None,
                              extra_tol: float = 0.0) -> tuple[bool, QuadWitness | None]:
    """Is f quadratically convex at x0 with modulus m (f >= touching Q)?

    The probe ball starts at eps (default 5% of the domain width) and is
    halved up to SHRINK_RETRIES times before returning False, since the
    definition only asks for some radius.  extra_tol widens the inequality
    slack, e.g. by the representation error of a grid-backed f.
    """
    return _check_sense(f, x0, m, eps, probe, slope, "quadratic", extra_tol)


def check_subquadratic_convexity(f: ConvexFunction, x0, m: float, eps: float | None = None,
                                 probe: int = 513, slope=None,
                                 extra_tol: float = 0.0) -> tuple[bool, QuadWitness | None]:
    """Is f sub-quadratically convex at x0 with modulus m (f <= touching Q)?"""
    return _check_sense(f, x0, m, eps, probe, slope, "sub-quadratic", extra_tol)


def conjugate_restriction(f: ConvexFunction, x0, grid_count: int = 4001,
                          shrink: float = 0.9) -> tuple[ConvexFunction, float, float]:
    """Conjugate of the 1-d restriction of f along its gradient direction.

    Returns (star, y0, slack): star is the grid conjugate of
    t -> f(x0 + t v) as a piecewise-linear convex function of the slope, v
    the unit gradient direction at x0 (first basis vector at critical
    points), and y0 = <grad f(x0), v> the slope image of x0.  The
    restriction's value at slope y0 carries the witness subgradient 0.

    slack bounds how far the piecewise-linear conjugate can sit below the
    true one (the max interpolation gap of the sampled restriction,
    estimated from its second differences); sense checks against star must
    widen their tolerance by it.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    g = f.gradient(x0)
    if g is None:
        raise ValueError(f"{f.label}: gradient undefined at {x0}")
    norm = float(np.linalg.norm(g))
    v = g / norm if norm > 0 else np.eye(f.dim)[0]
    y0 = norm if norm > 0 else 0.0
    # feasible parameter segment of the line x0 + t v inside the domain box
    t_lo, t_hi = -math.inf, math.inf
    for i in range(f.dim):
        if abs(v[i]) < 1e-15:
            continue
        a = (f.domain.lo[i] - x0[i]) / v[i]
        b = (f.domain.hi[i] - x0[i]) / v[i]
        t_lo, t_hi = max(t_lo, min(a, b)), min(t_hi, max(a, b))
    t_lo, t_hi = shrink * t_lo, shrink * t_hi
    ts = np.linspace(t_lo, t_hi, grid_count)
    vals = f.values(x0 + ts[:, None] * v)
    psi = GridFunction(axes=((t_lo, t_hi, grid_count),), values=vals)
    star = conjugate_grid_1d(psi)

    def _gap(v_arr):
        fin = v_arr[np.isfinite(v_arr)]
        d2 = fin[:-2] - 2.0 * fin[1:-1] + fin[2:]
        return float(np.max(np.abs(d2))) / 8.0 if d2.size else 0.0

    # two interpolation layers: the sampled restriction sits above the true
    # one (its conjugate below the true conjugate), and re-interpolating the
    # slope samples sits above the piecewise-linear conjugate
    slack = _gap(vals) + _gap(star.values)
    return _grid_interpolant(star, label=f"conj({f.label})"), y0, slack


def _grid_interpolant(g: GridFunction, label: str) -> ConvexFunction:
    """A 1-d grid function as a piecewise-linear ConvexFunction (+inf outside)."""
    xs = g.axis_points()
    vs = g.values
    finite = np.isfinite(vs)
    xs, vs = xs[finite], vs[finite]

    def _eval(pts):
        x = pts[:, 0]
        out = np.interp(x, xs, vs, left=np.inf, right=np.inf)
        return out

    return ConvexFunction(
        label=label, dim=1,
        domain=Box(np.array([xs[0]]), np.array([xs[-1]])),
        eval=_eval,
    )


def forward_dual_convexity(f: ConvexFunction, x0, k: float,
                           grid_count: int = 4001) -> DualityReport:
    """When the curvature estimate at x0 is some k0 < k, the conjugate is
    quadratically convex at y0 = grad f(x0) with modulus 1/k.

    Verified on the gradient-direction restriction: its grid conjugate must
    majorize the touching quadratic of modulus 1/k at y0 with witness
    subgradient 0 (the parameter image of x0).
    """
    est = estimate_kappa(f, x0)
    if math.isinf(est.value):
        return DualityReport(label=f.label, applicable=False,
                             reason="curvature estimate is infinite", passed=False, k=k)
    if est.value >= k:
        return DualityReport(label=f.label, applicable=False,
                             reason=f"k={k} does not exceed the estimate {est.value:.6g}",
                             passed=False, k=k, k0=est.value)
    star, y0, slack = conjugate_restriction(f, x0, grid_count)
    ok, wit = check_quadratic_convexity(star, y0, 1.0 / k, slope=0.0, extra_tol=slack)
    return DualityReport(label=f.label, applicable=True, reason="", passed=ok,
                         k=k, k0=est.value, y0=y0, moduli=(1.0 / k,),
                         details={"witness_eps": wit.eps if wit else None,
                                  "grid_slack": slack})


def converse_kappa_bound(f: ConvexFunction, x0, k: float,
                         grid_count: int = 4001) -> DualityReport:
    """When the conjugate is quadratically convex at y0 with modulus 1/k,
    the curvature estimate at x0 is at most k (checked with 1% headroom)."""
    star, y0, slack = conjugate_restriction(f, x0, grid_count)
    ok, _ = check_quadratic_convexity(star, y0, 1.0 / k, slope=0.0, extra_tol=slack)
    if not ok:
        return DualityReport(label=f.label, applicable=False,
                             reason="conjugate is not quadratically convex with modulus 1/k",
                             passed=False, k=k, y0=y0)
    est = estimate_kappa(f, x0)
    passed = est.value <= k * 1.01
    return DualityReport(label=f.label, applicable=True, reason="", passed=passed,
                         k=k, k0=est.value, y0=y0, moduli=(1.0 / k,))


def dual_route_support_bound(f: ConvexFunction, x0, S: Sphere,
                             grid_count: int = 4001, probe: int = 513) -> DualityReport:
    """Support sphere of radius r at (x0, f(x0)) implies estimate <=
    (1 + |grad f|^2)^{3/2} / r, established through the conjugate:

    the hemisphere majorant's dual curvature is r / (1 + y0^2)^{3/2}, so the
    conjugate is quadratically convex at y0 with every modulus below it
    (sampled at three), and the curvature bound follows.  Precondition
    failures (no support sphere / no gradient) are reported distinctly.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    try:
        supported = is_sphere_of_support(f, S, x0, probe=probe)
    except ValueError as exc:
        return DualityReport(label=f.label, applicable=False,
                             reason=f"no support sphere: {exc}", passed=False)
    if not supported:
        return DualityReport(label=f.label, applicable=False,
                             reason="sphere does not support the graph", passed=False)
    g = f.gradient(x0)
    if g is None:
        return DualityReport(label=f.label, applicable=False,
                             reason="gradient undefined at the contact", passed=False)
    star, y0, slack = conjugate_restriction(f, x0, grid_count)
    mod_cap = S.r / (1.0 + y0 * y0) ** 1.5
    moduli = tuple(frac * mod_cap for frac in (0.5, 0.75, 0.9))
    for m in moduli:
        ok, _ = check_quadratic_convexity(star, y0, m, slope=0.0, extra_tol=slack)
        if not ok:
            return DualityReport(label=f.label, applicable=True,
                                 reason=f"conjugate not quadratically convex at modulus {m:.6g}",
                                 passed=False, y0=y0, moduli=moduli)
    est = estimate_kappa(f, x0)
    bound = c11_bound(float(np.linalg.norm(g)), S.r)
    passed = est.value <= bound * 1.01
    return DualityReport(label=f.label, applicable=True, reason="", passed=passed,
                         k0=est.value, y0=y0, moduli=moduli, bound=bound)


def dual_osculating_bound(u: ConvexFunction, x0, r_x0: float,
                          grid_count: int = 4001) -> DualityReport:
    """Support radii of a strongly convex C^2 function and of its conjugate
    at the image point obey r_y0 <= (1+|x0|^2)^{3/2} (1+|grad u|^2)^{3/2} / r_x0.

    r_y0 is the conjugate's osculating radius 1/lambda_max(Hess u*(y0)),
    equal to lambda_min(Hess u(x0)) by the Hessian-inverse relation.  In 1-d
    the report carries a grid-conjugate second-difference cross-check of the
    dual curvature.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if not u.strongly_convex:
        return DualityReport(label=u.label, applicable=False,
                             reason="function is not flagged strongly convex", passed=False)
    H = u.hessian(x0)
    g = u.gradient(x0)
    if H is None or g is None:
        return DualityReport(label=u.label, applicable=False,
                             reason="needs analytic Hessian and gradient", passed=False)
    evals = np.linalg.eigvalsh(np.atleast_2d(H))
    lam_min, lam_max = float(evals[0]), float(evals[-1])
    g2 = float(g @ g)
    r_max = (1.0 + g2) ** 1.5 / lam_max
    if r_x0 > r_max * (1.0 + 1e-9):
        return DualityReport(label=u.label, applicable=False,
                             reason=f"r_x0={r_x0:.6g} exceeds the largest support radius {r_max:.6g}",
                             passed=False)
    r_y0 = lam_min
    rhs = (1.0 + float(x0 @ x0)) ** 1.5 * (1.0 + g2) ** 1.5 / r_x0
    details: dict = {"r_y0": r_y0, "rhs": rhs}
    if u.dim == 1:
        star, y0, _slack = conjugate_restriction(u, x0, grid_count)
        h = 0.02 * float(np.max(star.domain.width))
        fd = (star.value(y0 + h) - 2.0 * star.value(y0) + star.value(y0 - h)) / h**2
        details["dual_curvature_fd"] = fd
        details["dual_curvature_exact"] = 1.0 / lam_max if lam_max > 0 else math.inf
    passed = r_y0 <= rhs * (1.0 + 1e-9)
    return DualityReport(label=u.label, applicable=True, reason="", passed=passed,
                         y0=float(np.linalg.norm(g)), bound=rhs, details=details)
