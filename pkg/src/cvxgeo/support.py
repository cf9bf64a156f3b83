"""Spheres of support, ball-drop contacts, and lower-density experiments.

A sphere S with center (c, t) in R^{n+1} and radius r supports the graph of
u from above at (x0, u(x0)) when that point lies on the sphere, the open
ball misses the graph entirely, and the center sits above the graph
(t > u(c)).  Dropping a sphere of radius r down the vertical line over c
until first contact realizes such spheres constructively: the resting
height is t* = max_x [ u(x) + sqrt(r^2 - |x - c|^2) ] and the contact set
is the argmax.

The density experiment measures, on a lattice, the lower density at x0 of
  * the set where the curvature estimate is below k, against ((k-k0)/2k)^n,
  * the set of points carrying a support sphere of radius r, against
    ((R-r)/2R)^n with R the radius of an initial support sphere at x0,
with liminf replaced by a trailing-min over a geometric epsilon list.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .catalog import Box, ConvexFunction, shift_normalize
from .kappa import DirectionSet, EpsilonSchedule, directions_for_dim, estimate_kappa, kappa_field

__all__ = [
    "Sphere",
    "ContactResult",
    "DensityEstimate",
    "SweepResult",
    "DensityConfig",
    "DensityReport",
    "ResolutionError",
    "is_sphere_of_support",
    "drop_sphere",
    "c11_bound",
    "hemisphere_hessian_eigen",
    "osculating_radius",
    "curvature_radius_1d",
    "support_radius_partition",
    "tangent_sphere",
    "support_member_field",
    "sweep_support_contacts",
    "lower_density",
    "verify_density_bounds",
]

CONTACT_HEIGHT_RTOL = 1e-8  # contact ties, relative to r + |t*|
MIN_CELLS_ACROSS = 32  # lattice cells across the smallest density ball


class ResolutionError(ValueError):
    """An epsilon ball covers too few lattice cells to be measured."""


@dataclass(frozen=True)
class Sphere:
    """n-sphere in R^{n+1}: horizontal center c in R^n, height t, radius r."""

    c: np.ndarray
    t: float
    r: float

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.c, dtype=float))
        object.__setattr__(self, "c", c)
        if self.r <= 0:
            raise ValueError("radius must be positive")


@dataclass(frozen=True)
class ContactResult:
    """Resting height and contact set of a dropped sphere."""

    height: float
    contacts: np.ndarray  # (m, n)
    multiple: bool


@dataclass(frozen=True)
class DensityEstimate:
    """Measure ratios of a member set within shrinking balls.

    liminf_estimate is the min over the trailing half of the samples; bound
    carries the theoretical comparison value when one applies.
    """

    samples: list  # [(eps, ratio)]
    liminf_estimate: float
    bound: float | None = None

    def as_dict(self) -> dict:
        return {
            "samples": [[e, r] for e, r in self.samples],
            "liminf_estimate": self.liminf_estimate,
            "bound": self.bound,
        }


def _lattice_axes(lo: np.ndarray, hi: np.ndarray, count: int) -> list[np.ndarray]:
    return [np.linspace(a, b, count) for a, b in zip(np.atleast_1d(lo), np.atleast_1d(hi))]


def _lattice_points(axes: list[np.ndarray]) -> np.ndarray:
    if len(axes) == 1:
        return axes[0][:, None]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([m.ravel() for m in mesh])


def is_sphere_of_support(u: ConvexFunction, S: Sphere, x0, probe: int = 513,
                         tol: float | None = None, local_radius: float | None = None,
                         probe_axes: list[np.ndarray] | None = None) -> bool:
    """Check that S supports the graph of u from above at (x0, u(x0)).

    The contact point must lie on the sphere surface (within tol) and on the
    lower hemisphere; the check then probes a local lattice (box of
    half-width local_radius around c, default 2r, intersected with the
    domain; or explicit probe_axes) for graph points penetrating the open
    ball, and requires the center height to exceed u at the center's
    projection.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if tol is None:
        tol = 1e-8 * (S.r + abs(S.t))
    u0 = u.value(x0)
    if not np.isfinite(u0):
        raise ValueError(f"{u.label}: contact point {x0} is infeasible")
    if u0 > S.t:
        raise ValueError("contact point lies above the center height; "
                         "the lower hemisphere does not reach the graph there")
    surf = math.hypot(float(np.linalg.norm(x0 - S.c)), u0 - S.t)
    if abs(surf - S.r) > max(tol, 1e-7 * S.r):
        raise ValueError(f"point is not on the sphere surface (|dist - r| = {abs(surf - S.r):.3g})")
    if probe_axes is None:
        rho = 2.0 * S.r if local_radius is None else local_radius
        lo = np.maximum(S.c - rho, u.domain.lo)
        hi = np.minimum(S.c + rho, u.domain.hi)
        if np.any(hi <= lo):
            return True  # probe region empty: nothing can penetrate
        probe_axes = _lattice_axes(lo, hi, probe)
    pts = _lattice_points(probe_axes)
    vals = u.values(pts)
    finite = np.isfinite(vals)
    d2 = np.sum((pts[finite] - S.c) ** 2, axis=1) + (vals[finite] - S.t) ** 2
    if np.any(d2 < (S.r - tol) ** 2):
        return False
    uc = u.value(S.c)
    if np.isfinite(uc) and not (S.t > uc):
        return False
    return True


def drop_sphere(u: ConvexFunction, c, r: float, probe: int = 513,
                probe_axes: list[np.ndarray] | None = None) -> ContactResult:
    """Lower a sphere of radius r along the vertical line over c until it
    first touches the graph of u.

    The resting height is the max of u(x) + sqrt(r^2 - |x - c|^2) over the
    feasible probe points (|x - c| <= r, u finite); all probe points within
    a relative height tolerance of the max are reported as contacts.
    """
    c = np.atleast_1d(np.asarray(c, dtype=float))
    if r <= 0:
        raise ValueError("radius must be positive")
    if probe_axes is None:
        lo = np.maximum(c - r, u.domain.lo)
        hi = np.minimum(c + r, u.domain.hi)
        if np.any(hi <= lo):
            raise ValueError("sphere footprint does not meet the domain")
        probe_axes = _lattice_axes(lo, hi, probe)
    pts = _lattice_points(probe_axes)
    d2 = np.sum((pts - c) ** 2, axis=1)
    vals = u.values(pts)
    feas = (d2 <= r * r) & np.isfinite(vals)
    if not np.any(feas):
        raise ValueError("no feasible probe points under the sphere")
    heights = vals[feas] + np.sqrt(np.maximum(r * r - d2[feas], 0.0))
    t_star = float(np.max(heights))
    tol = CONTACT_HEIGHT_RTOL * (r + abs(t_star))
    contacts = pts[feas][heights >= t_star - tol]
    return ContactResult(height=t_star, contacts=contacts, multiple=contacts.shape[0] > 1)


def c11_bound(grad_norm: float, r: float) -> float:
    """The curvature bound (1 + g^2)^{3/2} / r implied by a support sphere
    of radius r at a point with gradient norm g."""
    if r <= 0:
        raise ValueError("radius must be positive")
    if grad_norm < 0:
        raise ValueError("gradient norm must be nonnegative")
    return (1.0 + grad_norm**2) ** 1.5 / r


def hemisphere_hessian_eigen(r: float, s: float) -> tuple[float, float, bool]:
    """Eigenstructure of the lower-hemisphere Hessian at distance s from the
    vertical axis: lambda_max = r^2/(r^2-s^2)^{3/2} along the gradient,
    1/sqrt(r^2-s^2) across it.

    The returned flag confirms by explicit matrix multiplication (canonical
    2-d point (s, 0)) that the gradient is an eigenvector for lambda_max; at
    s = 0 the Hessian is isotropic and the flag reports H = lambda_max I.
    """
    if not (0 <= s < r):
        raise ValueError("need 0 <= s < r")
    s2 = r * r - s * s
    lam_max = r * r / s2**1.5
    lam_other = 1.0 / math.sqrt(s2)
    z = np.array([s, 0.0])
    H = np.eye(2) / math.sqrt(s2) + np.outer(z, z) / s2**1.5
    if s == 0.0:
        ok = bool(np.allclose(H, lam_max * np.eye(2), rtol=1e-12, atol=1e-12))
    else:
        g = z / math.sqrt(s2)
        ok = bool(np.allclose(H @ g, lam_max * g, rtol=1e-12, atol=1e-12))
    return lam_max, lam_other, ok


def osculating_radius(u: ConvexFunction, x0) -> float:
    """Radius 1/lambda_max of the osculating sphere at x0 (+inf when the
    Hessian vanishes)."""
    H = u.hessian(x0)
    if H is None:
        raise ValueError(f"{u.label}: no analytic Hessian at {x0}")
    lam = float(np.linalg.eigvalsh(np.atleast_2d(H))[-1])
    return math.inf if lam <= 1e-300 else 1.0 / lam


def curvature_radius_1d(u: ConvexFunction, x0) -> float:
    """Plane-curve radius of curvature (1 + u'^2)^{3/2} / u'' at a 1-d point."""
    if u.dim != 1:
        raise ValueError("curvature_radius_1d is for 1-d functions")
    g = u.gradient(x0)
    H = u.hessian(x0)
    if g is None or H is None:
        raise ValueError(f"{u.label}: needs gradient and Hessian at {x0}")
    upp = float(np.atleast_2d(H)[0, 0])
    if upp <= 1e-300:
        return math.inf
    return (1.0 + float(g[0]) ** 2) ** 1.5 / upp


def tangent_sphere(u: ConvexFunction, x0, r: float) -> Sphere:
    """The sphere of radius r tangent to the graph at (x0, u(x0)) with center
    along the upward unit normal (-grad u, 1)/sqrt(1 + |grad u|^2)."""
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    g = u.gradient(x0)
    if g is None:
        raise ValueError(f"{u.label}: gradient undefined at {x0}")
    denom = math.sqrt(1.0 + float(g @ g))
    return Sphere(c=x0 - r * g / denom, t=u.value(x0) + r / denom, r=r)


def support_radius_partition(u: ConvexFunction, x0, radii, probe: int = 513) -> list[bool]:
    """For each radius, report whether the tangent sphere at (x0, u(x0)) is a
    local sphere of support.

    Radii below the osculating radius support; radii above it penetrate
    (margins apply near the threshold).
    """
    out = []
    for r in radii:
        S = tangent_sphere(u, x0, float(r))
        out.append(is_sphere_of_support(u, S, x0, probe=probe))
    return out


def support_member_field(u: ConvexFunction, r: float, axes: list[np.ndarray],
                         obstacle_axes: list[np.ndarray] | None = None,
                         use_curvature: bool | None = None,
                         curvature_margin: float = 1e-9) -> np.ndarray:
    """Indicator, on a lattice, of the points whose tangent sphere of radius
    r supports the graph of u from above.

    In 1-d the check is geometric: the tangent sphere at each lattice point
    is tested against every obstacle lattice point (obstacle_axes defaults
    to the membership lattice itself, and can be wider to realize a domain
    restriction).  In 2-d, or when use_curvature is forced, membership uses
    the analytic curvature test r * lambda_max <= (1 + |g|^2)^{3/2}; callers
    cross-check it against the geometric test on samples.
    """
    pts = _lattice_points(axes)
    n_pts = pts.shape[0]
    grads = u.gradients(pts)
    defined = ~np.any(np.isnan(grads), axis=1)
    vals = u.values(pts)
    defined &= np.isfinite(vals)
    member = np.zeros(n_pts, dtype=bool)
    if use_curvature is None:
        use_curvature = u.dim > 1
    if use_curvature:
        if u.hess is None:
            raise ValueError(f"{u.label}: curvature membership needs a Hessian oracle")
        for i in np.flatnonzero(defined):
            H = u.hessian(pts[i])
            if H is None:
                continue
            lam = float(np.linalg.eigvalsh(np.atleast_2d(H))[-1])
            g2 = float(grads[i] @ grads[i])
            member[i] = r * lam <= (1.0 + g2) ** 1.5 * (1.0 - curvature_margin)
        return member.reshape([a.size for a in axes]) if len(axes) > 1 else member
    # geometric 1-d membership
    obstacle_axes = obstacle_axes or axes
    ox = obstacle_axes[0]
    ov = u.values(ox[:, None])
    ofin = np.isfinite(ov)
    ox, ov = ox[ofin], ov[ofin]
    g = np.where(defined, grads[:, 0], 0.0)
    denom = np.sqrt(1.0 + g * g)
    cx = pts[:, 0] - r * g / denom
    ct = vals + r / denom
    tol = 1e-8 * r
    block = 512
    for start in range(0, n_pts, block):
        sl = slice(start, min(start + block, n_pts))
        d2 = (ox[None, :] - cx[sl, None]) ** 2 + (ov[None, :] - ct[sl, None]) ** 2
        member[sl] = ~np.any(d2 < (r - tol) ** 2, axis=1)
    member &= defined
    return member


@dataclass(frozen=True)
class SweepResult:
    """Contacts found by dropping spheres over a lattice of centers."""

    contacts: np.ndarray  # (m, n)
    centers: np.ndarray  # (m, n) witnessing center per contact
    heights: np.ndarray  # (m,)


def sweep_support_contacts(u: ConvexFunction, r: float, center_axes: list[np.ndarray],
                           probe_axes: list[np.ndarray] | None = None,
                           probe: int = 513) -> SweepResult:
    """Drop a sphere of radius r over every center of a lattice and collect
    the contact points, each marked with its witnessing center.

    The contact set is a constructive subset of the points carrying a
    support sphere of radius r.  Callers measuring densities should pass a
    shared probe lattice so contacts land on its cells.
    """
    contacts, centers, heights = [], [], []
    for c in _lattice_points(center_axes):
        try:
            res = drop_sphere(u, c, r, probe=probe, probe_axes=probe_axes)
        except ValueError:
            continue
        for x in res.contacts:
            contacts.append(x)
            centers.append(c)
            heights.append(res.height)
    n = len(center_axes)
    if not contacts:
        return SweepResult(np.empty((0, n)), np.empty((0, n)), np.empty(0))
    return SweepResult(np.asarray(contacts), np.asarray(centers), np.asarray(heights))


def lower_density(member: np.ndarray, axes: list[np.ndarray], x0, eps_list) -> DensityEstimate:
    """Measure ratios |member ∩ B(x0, eps)| / |B(x0, eps)| on a lattice and
    their trailing-min liminf surrogate.

    Every ball must span at least MIN_CELLS_ACROSS lattice cells; smaller
    balls raise ResolutionError, since their ratios are resolution noise.
    """
    member = np.asarray(member, dtype=bool).ravel()
    pts = _lattice_points(axes)
    if member.size != pts.shape[0]:
        raise ValueError("member indicator does not match the lattice")
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    h = max(float(a[1] - a[0]) for a in axes)
    dist = np.linalg.norm(pts - x0, axis=1)
    samples = []
    for eps in eps_list:
        if 2.0 * eps < MIN_CELLS_ACROSS * h:
            raise ResolutionError(
                f"ball of radius {eps:.4g} spans fewer than {MIN_CELLS_ACROSS} cells (h={h:.4g})")
        sel = dist <= eps
        total = int(np.count_nonzero(sel))
        inside = int(np.count_nonzero(member & sel))
        samples.append((float(eps), inside / total))
    tail = [rho for _, rho in samples[len(samples) // 2:]]
    return DensityEstimate(samples=samples, liminf_estimate=min(tail))


@dataclass(frozen=True)
class DensityConfig:
    """Knobs for the density experiment; None means the per-dimension default."""

    lattice_count: int | None = None  # density lattice points per axis (odd)
    eps_count: int | None = None
    eps_ratio: float = 0.8
    eps0: float | None = None
    R_margin: float = 0.95  # R = R_margin / k0
    r_factor: float = 1.1  # r = r_factor / k
    lattice_tol: float = 0.05
    field_dirs: int | None = None  # direction count for the lattice kappa field
    field_eps_count: int | None = None
    sweep_check_count: int = 64  # sampled ball-drop consistency checks
    seed: int = 20240

    def resolved(self, dim: int) -> "DensityConfig":
        lattice = self.lattice_count or (4097 if dim == 1 else 513)
        eps_n = self.eps_count or (20 if dim == 1 else 13)
        dirs = self.field_dirs or (2 if dim == 1 else 64)
        feps = self.field_eps_count or (14 if dim == 1 else 8)
        return DensityConfig(lattice_count=lattice, eps_count=eps_n,
                             eps_ratio=self.eps_ratio, eps0=self.eps0,
                             R_margin=self.R_margin, r_factor=self.r_factor,
                             lattice_tol=self.lattice_tol, field_dirs=dirs,
                             field_eps_count=feps,
                             sweep_check_count=self.sweep_check_count, seed=self.seed)


@dataclass(frozen=True)
class DensityReport:
    """Outcome of the two-route density experiment at a point."""

    label: str
    applicable: bool
    reason: str
    dim: int
    k: float
    k0: float = math.nan
    R: float = math.nan
    r: float = math.nan
    bound_kappa: float = math.nan
    bound_support: float = math.nan
    density_kappa: DensityEstimate | None = None
    density_support: DensityEstimate | None = None
    sweep_agreement: float = math.nan
    lattice_tol: float = math.nan
    passed: bool = False

    def as_dict(self) -> dict:
        def enc(v):
            if isinstance(v, float):
                return "inf" if math.isinf(v) else ("nan" if math.isnan(v) else v)
            return v

        return {
            "label": self.label,
            "applicable": self.applicable,
            "reason": self.reason,
            "dim": self.dim,
            "k": enc(self.k),
            "k0": enc(self.k0),
            "R": enc(self.R),
            "r": enc(self.r),
            "bound_kappa": enc(self.bound_kappa),
            "bound_support": enc(self.bound_support),
            "density_kappa": self.density_kappa.as_dict() if self.density_kappa else None,
            "density_support": self.density_support.as_dict() if self.density_support else None,
            "sweep_agreement": enc(self.sweep_agreement),
            "lattice_tol": enc(self.lattice_tol),
            "passed": self.passed,
        }


def _dome(R: float, d2: np.ndarray) -> np.ndarray:
    return R - np.sqrt(np.maximum(R * R - d2, 0.0))


def _hypothesis_radius(u: ConvexFunction, R: float) -> float:
    """Largest rho so that, on a scan lattice, the closed ball of radius R
    resting at the origin meets the graph of u only at 0 within B(0, rho)."""
    halfwidth = float(np.min(np.minimum(-u.domain.lo, u.domain.hi)))
    reach = min(0.999 * R, halfwidth)
    count = 1025 if u.dim == 1 else 151
    axes = _lattice_axes(-reach * np.ones(u.dim), reach * np.ones(u.dim), count)
    pts = _lattice_points(axes)
    d2 = np.sum(pts * pts, axis=1)
    vals = u.values(pts)
    nonzero = d2 > 1e-20
    bad = nonzero & np.isfinite(vals) & (vals >= _dome(R, d2))
    if not np.any(bad):
        return reach
    return 0.98 * float(np.sqrt(np.min(d2[bad])))


def verify_density_bounds(u: ConvexFunction, x0, k: float,
                          config: DensityConfig | None = None) -> DensityReport:
    """Measure the lower density at x0 of the sub-k curvature set and of the
    radius-r support set, against their respective bounds.

    The function is recentered at x0 first.  The initial support sphere
    radius is R = R_margin/k0 (capped for flat functions), validated on a
    scan lattice and used to restrict the working region; the support-set
    radius is r = r_factor/k.  PASS requires both measured trailing-min
    densities to clear their bounds minus the lattice tolerance.
    """
    cfg = (config or DensityConfig()).resolved(u.dim)
    n = u.dim
    try:
        v = shift_normalize(u, x0)
    except ValueError as exc:
        return DensityReport(label=u.label, applicable=False, reason=str(exc), dim=n, k=k)
    base = estimate_kappa(v, np.zeros(n))
    k0 = base.value
    if math.isinf(k0):
        return DensityReport(label=u.label, applicable=False,
                             reason="curvature estimate at x0 is infinite", dim=n, k=k, k0=k0)
    if k <= k0 * (1.0 + 1e-9):
        return DensityReport(label=u.label, applicable=False,
                             reason=f"k={k} does not exceed the base estimate {k0:.6g}",
                             dim=n, k=k, k0=k0)
    R = cfg.R_margin / k0 if k0 > 1e-12 else 1e6
    r = cfg.r_factor / k
    if not r < 0.999 * R:
        return DensityReport(label=u.label, applicable=False,
                             reason=f"support radius r={r:.4g} does not fit under R={R:.4g}",
                             dim=n, k=k, k0=k0, R=R, r=r)
    d_hyp = _hypothesis_radius(v, R)
    halfwidth = float(np.min(np.minimum(-v.domain.lo, v.domain.hi)))
    bound_k = ((k - k0) / (2.0 * k)) ** n
    bound_r = ((R - r) / (2.0 * R)) ** n

    # curvature-set route: no region restriction beyond the domain itself
    eps0_k = min(cfg.eps0 or 0.35 * halfwidth, 0.9 * halfwidth / 1.05)
    eps_list_k = [eps0_k * cfg.eps_ratio**j for j in range(cfg.eps_count)]
    span_k = 1.05 * eps0_k
    axes_k = _lattice_axes(-span_k * np.ones(n), span_k * np.ones(n), cfg.lattice_count)
    field_eps0 = min(0.1, 0.9 * (halfwidth - span_k))
    sched = EpsilonSchedule(eps0=field_eps0, ratio=0.5, count=cfg.field_eps_count)
    dirs = directions_for_dim(n, None if n == 1 else cfg.field_dirs)
    field = kappa_field(v, _lattice_points(axes_k), sched, dirs, on_domain_exit="exclude")
    dens_k = lower_density(field < k, axes_k, np.zeros(n), eps_list_k)
    dens_k = DensityEstimate(dens_k.samples, dens_k.liminf_estimate, bound=bound_k)

    # support-set route, restricted to the hypothesis region around x0
    eps0_r = min(cfg.eps0 or math.inf, 0.75 * d_hyp, 0.9 * halfwidth / 1.05, 0.95 * R)
    eps_list_r = [eps0_r * cfg.eps_ratio**j for j in range(cfg.eps_count)]
    span_r = 1.05 * eps0_r
    axes_r = _lattice_axes(-span_r * np.ones(n), span_r * np.ones(n), cfg.lattice_count)
    h = float(axes_r[0][1] - axes_r[0][0])
    if n == 1:
        m_obs = int(math.ceil(d_hyp / h))
        obs = [np.arange(-m_obs, m_obs + 1) * h]
        member_r = support_member_field(v, r, axes_r, obstacle_axes=obs).ravel()
    else:
        member_r = support_member_field(v, r, axes_r, use_curvature=True).ravel()
    dens_r = lower_density(member_r, axes_r, np.zeros(n), eps_list_r)
    dens_r = DensityEstimate(dens_r.samples, dens_r.liminf_estimate, bound=bound_r)

    # constructive cross-check: dropped spheres land on member points
    rng = np.random.default_rng(cfg.seed)
    alpha = 0.5 * math.asin(min(eps0_r / R, 1.0))
    delta = (R - r) * math.tan(alpha)
    agree = ok_checks = 0
    ext = max(span_r, min(delta + r + 2 * h, d_hyp))
    m_ext = int(math.ceil(ext / h))
    probe_axes = [np.arange(-m_ext, m_ext + 1) * h for _ in range(n)]
    for _ in range(cfg.sweep_check_count):
        c = rng.uniform(-delta, delta, size=n)
        try:
            res = drop_sphere(v, c, r, probe_axes=probe_axes)
        except ValueError:
            continue
        for x in res.contacts:
            if np.all(np.abs(x) <= span_r + 1e-12):
                idx = 0
                for a, xi in zip(axes_r, x):
                    j = int(round((xi - a[0]) / h))
                    idx = idx * a.size + min(max(j, 0), a.size - 1)
                ok_checks += 1
                agree += bool(member_r[idx])
    agreement = agree / ok_checks if ok_checks else math.nan
    passed = (dens_k.liminf_estimate >= bound_k - cfg.lattice_tol
              and dens_r.liminf_estimate >= bound_r - cfg.lattice_tol)
    return DensityReport(
        label=u.label, applicable=True, reason="", dim=n, k=k, k0=k0, R=R, r=r,
        bound_kappa=bound_k, bound_support=bound_r,
        density_kappa=dens_k, density_support=dens_r,
        sweep_agreement=agreement, lattice_tol=cfg.lattice_tol, passed=passed,
    )
