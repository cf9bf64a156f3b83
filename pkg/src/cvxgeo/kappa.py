"""Estimation of the generalized largest eigenvalue of a convex function.

For a convex u differentiable at x0, the quantity estimated here is

    limsup_{eps -> 0}  2 eps^-2 max_h [ u(x0 + eps h) - u(x0) - eps <grad u(x0), h> ]

with h ranging over unit vectors; where the gradient does not exist the
value is +inf by convention.  For C^2 functions this equals the largest
eigenvalue of the Hessian, which is what the analytic oracle below returns.

The limsup is replaced by a max over the trailing window of a geometric
epsilon schedule.  Negative eps is redundant because the direction sets are
antipodally symmetric: eps*h with eps < 0 covers the same probe points as
(-eps)*(-h), so only positive eps is evaluated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .catalog import Box, ConvexFunction

__all__ = [
    "DomainError",
    "EpsilonSchedule",
    "DirectionSet",
    "KappaEstimate",
    "directions_for_dim",
    "peano_quotient",
    "estimate_kappa",
    "kappa_field",
    "analytic_lambda_max",
    "lipschitz_grad_bound",
]

DIVERGENCE_FACTOR = 2.0  # tail growth beyond this declares divergence


class DomainError(ValueError):
    """A probe point left the feasible region of the function."""


@dataclass(frozen=True)
class EpsilonSchedule:
    """Geometric radius schedule eps_j = eps0 * ratio^j, j = 0..count-1."""

    eps0: float = 0.1
    ratio: float = 0.5
    count: int = 14

    def __post_init__(self):
        if self.eps0 <= 0 or not (0.0 < self.ratio < 1.0) or self.count < 1:
            raise ValueError("need eps0 > 0, ratio in (0,1), count >= 1")

    def values(self) -> np.ndarray:
        return self.eps0 * self.ratio ** np.arange(self.count)


@dataclass(frozen=True)
class DirectionSet:
    """A finite, antipodally symmetric set of unit directions in R^n."""

    dim: int
    vectors: np.ndarray

    def __post_init__(self):
        v = np.atleast_2d(np.asarray(self.vectors, dtype=float))
        norms = np.linalg.norm(v, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-12):
            raise ValueError("directions must be unit vectors")
        object.__setattr__(self, "vectors", v)

    def __len__(self) -> int:
        return self.vectors.shape[0]


def directions_for_dim(dim: int, count: int | None = None) -> DirectionSet:
    """Deterministic symmetric direction sets: {-1,+1} in 1-d, equally spaced
    angles in 2-d, and a Fibonacci half-sphere plus its antipodes in 3-d."""
    if dim == 1:
        return DirectionSet(1, np.array([[1.0], [-1.0]]))
    if dim == 2:
        m = count or 256
        if m % 2:
            raise ValueError("2-d direction count must be even for symmetry")
        ang = 2.0 * np.pi * np.arange(m) / m
        return DirectionSet(2, np.column_stack([np.cos(ang), np.sin(ang)]))
    if dim == 3:
        m = count or 1024
        if m % 2:
            raise ValueError("3-d direction count must be even for symmetry")
        half = m // 2
        i = np.arange(half) + 0.5
        phi = np.pi * (1.0 + math.sqrt(5.0)) * i
        z = 1.0 - i / half  # upper half sphere
        rho = np.sqrt(np.maximum(1.0 - z * z, 0.0))
        pts = np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])
        pts /= np.linalg.norm(pts, axis=1)[:, None]
        return DirectionSet(3, np.vstack([pts, -pts]))
    raise ValueError("direction sets are provided for dim <= 3")


@dataclass(frozen=True)
class KappaEstimate:
    """Result of the limsup surrogate.

    value is the max of the per-epsilon quotients over the last tail_window
    entries, +inf when the gradient is undefined or the tail diverges.
    """

    value: float
    per_eps: list = field(default_factory=list)
    tail_window: int = 4
    diverging: bool = False

    def as_dict(self) -> dict:
        return {
            "value": "inf" if math.isinf(self.value) else self.value,
            "diverging": self.diverging,
            "per_eps": [[e, q] for e, q in self.per_eps],
        }


def _gradient_at(u: ConvexFunction, x0: np.ndarray) -> np.ndarray | None:
    return u.gradient(x0)


def peano_quotient(u: ConvexFunction, x0, h, eps: float) -> float:
    """The second-order difference quotient 2 eps^-2 (u(x0+eps h) - u(x0) - eps <g, h>).

    Returns +inf when the gradient at x0 does not exist; raises DomainError
    when the probe point x0 + eps*h leaves the feasible region.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    h = np.atleast_1d(np.asarray(h, dtype=float))
    if eps <= 0:
        raise ValueError("eps must be positive")
    g = _gradient_at(u, x0)
    if g is None:
        return math.inf
    val = u.value(x0 + eps * h)
    if not np.isfinite(val):
        raise DomainError(f"{u.label}: probe point {x0 + eps * h} is infeasible")
    return 2.0 / eps**2 * (val - u.value(x0) - eps * float(g @ h))


def estimate_kappa(u: ConvexFunction, x0, sched: EpsilonSchedule | None = None,
                   dirs: DirectionSet | None = None, tail_window: int = 4) -> KappaEstimate:
    """Estimate the generalized largest eigenvalue at x0.

    For each epsilon of the schedule the maximum quotient over the direction
    set is recorded; the estimate is the max over the trailing window.  The
    value is +inf immediately when the gradient existence test fails, and
    +inf with the diverging flag when the tail quotients grow by more than a
    factor of DIVERGENCE_FACTOR across the window (the power-law blow-up of
    sub-2 exponents, as opposed to convergence).
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    sched = sched or EpsilonSchedule()
    dirs = dirs or directions_for_dim(u.dim)
    if dirs.dim != u.dim:
        raise ValueError("direction set dimension mismatch")
    g = _gradient_at(u, x0)
    if g is None:
        return KappaEstimate(value=math.inf, per_eps=[], tail_window=tail_window)
    f0 = u.value(x0)
    per_eps = []
    H = dirs.vectors
    proj = H @ g
    for eps in sched.values():
        vals = u.values(x0 + eps * H)
        if np.any(~np.isfinite(vals)):
            raise DomainError(f"{u.label}: schedule radius {eps} leaves the domain at {x0}")
        q = 2.0 / eps**2 * (vals - f0 - eps * proj)
        per_eps.append((float(eps), float(np.max(q))))
    tail = [q for _, q in per_eps[-tail_window:]]
    value = max(tail)
    diverging = tail[0] > 1e-9 and tail[-1] > DIVERGENCE_FACTOR * tail[0]
    if diverging:
        value = math.inf
    return KappaEstimate(value=value, per_eps=per_eps, tail_window=tail_window,
                         diverging=diverging)


def kappa_field(u: ConvexFunction, points: np.ndarray, sched: EpsilonSchedule | None = None,
                dirs: DirectionSet | None = None, tail_window: int = 4,
                on_domain_exit: str = "raise") -> np.ndarray:
    """Vectorized estimate over a batch of points (lattice sweeps).

    Returns one estimate per point, +inf where the gradient is undefined or
    where the tail diverges.  Points whose probes leave the feasible region
    raise DomainError by default; with on_domain_exit="exclude" they are
    reported as +inf instead (they leave any sub-k sublevel set), which is
    the conservative choice for density sweeps near a domain edge.
    """
    if on_domain_exit not in ("raise", "exclude"):
        raise ValueError("on_domain_exit must be 'raise' or 'exclude'")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    sched = sched or EpsilonSchedule()
    dirs = dirs or directions_for_dim(u.dim)
    grads = u.gradients(pts)
    defined = ~np.any(np.isnan(grads), axis=1)
    f0 = u.values(pts)
    n_pts = pts.shape[0]
    eps_list = sched.values()
    per_eps = np.full((len(eps_list), n_pts), -np.inf)
    g = np.nan_to_num(grads, nan=0.0)
    exited = np.zeros(n_pts, dtype=bool)
    for i, eps in enumerate(eps_list):
        best = np.full(n_pts, -np.inf)
        for h in dirs.vectors:
            vals = u.values(pts + eps * h)
            bad = defined & ~np.isfinite(vals)
            if np.any(bad):
                if on_domain_exit == "raise":
                    raise DomainError(f"{u.label}: schedule radius {eps} leaves the domain")
                exited |= bad
                vals = np.where(bad, f0, vals)
            q = 2.0 / eps**2 * (vals - f0 - eps * (g @ h))
            np.maximum(best, q, out=best)
        per_eps[i] = best
    tail = per_eps[-tail_window:]
    value = tail.max(axis=0)
    diverging = (tail[0] > 1e-9) & (tail[-1] > DIVERGENCE_FACTOR * tail[0])
    value[diverging] = np.inf
    value[~defined | exited] = np.inf
    return value


def analytic_lambda_max(u: ConvexFunction, x0) -> float:
    """Largest eigenvalue of the analytic Hessian at x0 (symmetric eigensolve)."""
    H = u.hessian(x0)
    if H is None:
        raise ValueError(f"{u.label}: no analytic Hessian at {x0}")
    return float(np.linalg.eigvalsh(H)[-1])


def lipschitz_grad_bound(u: ConvexFunction, region: Box, samples: int = 400,
                         rng: np.random.Generator | None = None,
                         pairs: list | None = None,
                         neighbor_grid: int = 129) -> float:
    """Empirical lower bound on the gradient Lipschitz constant over a region.

    Takes the max of |grad u(x) - grad u(y)| / |x - y| over random point
    pairs, explicitly supplied pairs, and per-axis neighbor pairs of a
    deterministic grid (the grid pairs pin down the supremum for smooth
    functions; random pairs alone approach it slowly).  Pairs with an
    undefined gradient are skipped; if everything is skipped this raises.
    """
    rng = rng or np.random.default_rng(0)
    cand: list[tuple[np.ndarray, np.ndarray]] = []
    if pairs:
        cand.extend((np.atleast_1d(np.asarray(a, float)), np.atleast_1d(np.asarray(b, float)))
                    for a, b in pairs)
    xs = region.sample(rng, samples)
    ys = region.sample(rng, samples)
    cand.extend(zip(xs, ys))
    if neighbor_grid >= 2:
        for axis in range(region.dim):
            ts = np.linspace(region.lo[axis], region.hi[axis], neighbor_grid)
            base = 0.5 * (region.lo + region.hi)
            for a, b in zip(ts[:-1], ts[1:]):
                pa, pb = base.copy(), base.copy()
                pa[axis], pb[axis] = a, b
                cand.append((pa, pb))
    best = -np.inf
    used = 0
    for a, b in cand:
        d = float(np.linalg.norm(a - b))
        if d == 0.0:
            continue
        ga, gb = u.gradient(a), u.gradient(b)
        if ga is None or gb is None:
            continue
        used += 1
        best = max(best, float(np.linalg.norm(ga - gb)) / d)
    if used == 0:
        raise ValueError(f"{u.label}: gradient undefined on every sampled pair")
    return best
