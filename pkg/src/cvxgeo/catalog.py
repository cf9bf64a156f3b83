"""Catalog of convex test functions with evaluation/gradient/Hessian oracles.

Every function in the toolkit is represented by a :class:`ConvexFunction`:
an evaluation oracle over an axis-aligned box, plus optional analytic
gradient and Hessian oracles.  Evaluation follows the extended-value
convention: points outside the feasible region (the box, or the closed
ball for hemisphere functions) evaluate to ``+inf``.  Extended reals are
plain Python floats; ``math.inf`` compares greater than every real, which
is all the ordering structure we need.

Gradient oracles mark points of non-differentiability (kinks, hemisphere
boundaries) with NaN rows in batched output; the scalar accessors
translate those to ``None``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

__all__ = [
    "Box",
    "ConvexFunction",
    "make_power",
    "make_quadratic",
    "make_hemisphere",
    "make_pathological",
    "make_max_affine",
    "make_max",
    "shift_normalize",
    "from_label",
    "numeric_gradient",
    "pathological_intervals",
    "midpoint_convexity_violation",
]

GRAD_MISMATCH_RTOL = 1e-4  # one-sided quotient mismatch, relative to local slope scale


@dataclass(frozen=True)
class Box:
    """Axis-aligned box [lo_i, hi_i] in R^n."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("box bounds must be 1-d arrays of equal length")
        if np.any(hi <= lo):
            raise ValueError("box must have positive extent on every axis")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return self.lo.size

    @property
    def width(self) -> np.ndarray:
        return self.hi - self.lo

    def contains(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.all((pts >= self.lo) & (pts <= self.hi), axis=-1)

    def shrink(self, margin: float) -> "Box":
        """Box shrunk by ``margin`` (fraction of half-width) on every side."""
        half = 0.5 * self.width
        return Box(self.lo + margin * half, self.hi - margin * half)

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        return rng.uniform(self.lo, self.hi, size=(count, self.dim))


def _as_points(x, dim: int) -> tuple[np.ndarray, bool]:
    """Normalize scalar/vector/batch input to (m, dim); returns (pts, was_single)."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        if dim != 1:
            raise ValueError(f"scalar point given for a {dim}-d function")
        return arr.reshape(1, 1), True
    if arr.ndim == 1:
        if arr.size != dim:
            raise ValueError(f"point of size {arr.size} given for a {dim}-d function")
        return arr.reshape(1, dim), True
    if arr.shape[-1] != dim:
        raise ValueError(f"points of size {arr.shape[-1]} given for a {dim}-d function")
    return arr.reshape(-1, dim), False


@dataclass(frozen=True)
class ConvexFunction:
    """A convex function given by (vectorized) oracles over a box domain.

    eval maps an (m, dim) batch of points to (m,) values (+inf off-domain);
    grad, if present, maps batches to (m, dim) gradients with NaN rows where
    the gradient does not exist; hess, if present, maps a single point to a
    symmetric PSD matrix or None where undefined.  probe_box is the region
    where derivative-based property tests sample (the function is smooth
    with moderate higher derivatives there); it defaults to the domain.
    """

    label: str
    dim: int
    domain: Box
    eval: Callable[[np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray], np.ndarray] | None = None
    hess: Callable[[np.ndarray], np.ndarray | None] | None = None
    probe_box: Box = None  # type: ignore[assignment]
    strongly_convex: bool = False

    def __post_init__(self):
        if self.probe_box is None:
            object.__setattr__(self, "probe_box", self.domain)

    # -- scalar/batch accessors ------------------------------------------------

    def value(self, x) -> float:
        pts, _ = _as_points(x, self.dim)
        return float(self.eval(pts)[0])

    def values(self, points) -> np.ndarray:
        pts, single = _as_points(points, self.dim)
        out = np.asarray(self.eval(pts), dtype=float)
        return out[0] if single else out

    def gradient(self, x) -> np.ndarray | None:
        """Gradient at a point, or None where it does not exist.

        Falls back to the finite-difference existence test when no analytic
        oracle is attached.
        """
        pts, _ = _as_points(x, self.dim)
        if self.grad is None:
            return numeric_gradient(self, pts[0])
        g = np.asarray(self.grad(pts), dtype=float)[0]
        return None if np.any(np.isnan(g)) else g

    def gradients(self, points) -> np.ndarray:
        """Batched gradients, NaN rows where undefined."""
        pts, _ = _as_points(points, self.dim)
        if self.grad is not None:
            return np.asarray(self.grad(pts), dtype=float)
        out = np.empty_like(pts)
        for i, p in enumerate(pts):
            g = numeric_gradient(self, p)
            out[i] = np.nan if g is None else g
        return out

    def hessian(self, x) -> np.ndarray | None:
        if self.hess is None:
            return None
        pts, _ = _as_points(x, self.dim)
        return self.hess(pts[0])


def numeric_gradient(f: ConvexFunction, x: np.ndarray, step: float | None = None) -> np.ndarray | None:
    """Finite-difference gradient with a one-sided existence test.

    Per axis, forward and backward difference quotients are compared; the
    gradient is declared undefined when their mismatch exceeds a tolerance
    proportional to the local slope scale.  The returned value is the central
    quotient (second-order accurate).
    """
    x = np.asarray(x, dtype=float)
    if step is None:
        step = 1e-5 * float(np.max(f.domain.width))
    grad = np.empty(f.dim)
    f0 = f.value(x)
    if not np.isfinite(f0):
        return None
    for i in range(f.dim):
        e = np.zeros(f.dim)
        e[i] = step
        fp, fm = f.value(x + e), f.value(x - e)
        if not (np.isfinite(fp) and np.isfinite(fm)):
            return None
        fwd = (fp - f0) / step
        bwd = (f0 - fm) / step
        scale = max(1.0, abs(fwd), abs(bwd))
        if abs(fwd - bwd) > GRAD_MISMATCH_RTOL * scale:
            return None
        grad[i] = (fp - fm) / (2.0 * step)
    return grad


# -- constructors ---------------------------------------------------------------


def _norms(pts: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(pts * pts, axis=-1))


def make_power(A: float, k: float, n: int = 1) -> ConvexFunction:
    """f(x) = A|x|^k on [-2, 2]^n, convex for k >= 1.

    The gradient oracle is analytic for k > 1 everywhere and for k = 1 away
    from the origin (NaN at the kink).  The Hessian is provided where it is
    finite: away from 0 for k > 1, plus the origin itself for k >= 2.
    """
    if A <= 0:
        raise ValueError("A must be positive")
    if k < 1:
        raise ValueError(f"k={k} < 1 gives a non-convex function")
    dom = Box(-2.0 * np.ones(n), 2.0 * np.ones(n))

    def _eval(pts):
        return A * _norms(pts) ** k

    def _grad(pts):
        r = _norms(pts)
        out = np.empty_like(pts)
        nz = r > 0
        with np.errstate(divide="ignore", invalid="ignore"):
            out[nz] = (A * k * r[nz] ** (k - 2.0))[:, None] * pts[nz]
        out[~nz] = 0.0 if k > 1 else np.nan
        return out

    def _hess(x):
        r = float(np.linalg.norm(x))
        if r == 0.0:
            if k == 2:
                return 2.0 * A * np.eye(n)
            if k > 2:
                return np.zeros((n, n))
            return None  # curvature unbounded at 0 for 1 <= k < 2
        xxt = np.outer(x, x)
        return A * k * r ** (k - 2.0) * np.eye(n) + A * k * (k - 2.0) * r ** (k - 4.0) * xxt

    probe = Box(0.2 * np.ones(n), 1.8 * np.ones(n))
    return ConvexFunction(
        label=f"power:{A:g}:{k:g}" + (f":{n}" if n != 1 else ""),
        dim=n,
        domain=dom,
        eval=_eval,
        grad=_grad,
        hess=_hess if k > 1 else None,
        probe_box=probe,
    )


def make_quadratic(Q: np.ndarray, b: np.ndarray | None = None, c: float = 0.0,
                   halfwidth: float = 2.0) -> ConvexFunction:
    """f(x) = 0.5 <Qx, x> + <b, x> + c with exact gradient and Hessian.

    Q must be symmetric positive semi-definite.
    """
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    n = Q.shape[0]
    if Q.shape != (n, n):
        raise ValueError("Q must be square")
    if not np.allclose(Q, Q.T, atol=1e-12 * max(1.0, float(np.abs(Q).max()))):
        raise ValueError("Q must be symmetric")
    evals = np.linalg.eigvalsh(Q)
    if evals.min() < -1e-10 * max(1.0, float(evals.max())):
        raise ValueError("Q must be positive semi-definite")
    b = np.zeros(n) if b is None else np.asarray(b, dtype=float)
    dom = Box(-halfwidth * np.ones(n), halfwidth * np.ones(n))

    def _eval(pts):
        return 0.5 * np.einsum("mi,ij,mj->m", pts, Q, pts) + pts @ b + c

    def _grad(pts):
        return pts @ Q + b

    diag = np.diag(Q)
    label = "quad:" + ",".join(f"{d:g}" for d in diag)
    strongly = bool(evals.min() > 1e-12)
    return ConvexFunction(
        label=label, dim=n, domain=dom, eval=_eval, grad=_grad,
        hess=lambda x: Q.copy(), probe_box=dom.shrink(0.05),
        strongly_convex=strongly,
    )


def make_hemisphere(c, t: float, r: float) -> ConvexFunction:
    """d(x) = t - sqrt(r^2 - |x - c|^2): the lower hemisphere of the sphere
    with center (c, t) and radius r, as a convex function on the closed ball.

    Evaluation returns +inf outside the closed ball and t on its boundary;
    grad/hess are undefined (NaN/None) on the boundary.
    """
    if r <= 0:
        raise ValueError("radius must be positive")
    c = np.atleast_1d(np.asarray(c, dtype=float))
    n = c.size
    dom = Box(c - r, c + r)

    def _eval(pts):
        d2 = np.sum((pts - c) ** 2, axis=-1)
        out = np.full(d2.shape, np.inf)
        inside = d2 <= r * r
        out[inside] = t - np.sqrt(np.maximum(r * r - d2[inside], 0.0))
        return out

    def _grad(pts):
        z = pts - c
        d2 = np.sum(z * z, axis=-1)
        out = np.full_like(pts, np.nan)
        inside = d2 < r * r * (1.0 - 1e-14)
        s = np.sqrt(r * r - d2[inside])
        out[inside] = z[inside] / s[:, None]
        return out

    def _hess(x):
        z = np.asarray(x, dtype=float) - c
        d2 = float(z @ z)
        if d2 >= r * r * (1.0 - 1e-14):
            return None
        s2 = r * r - d2
        return np.eye(n) / np.sqrt(s2) + np.outer(z, z) / s2 ** 1.5

    cs = ",".join(f"{v:g}" for v in c)
    probe_half = 0.7 * r / math.sqrt(n)  # keep box corners inside |x - c| <= 0.7 r
    return ConvexFunction(
        label=f"hemisphere:{cs}:{t:g}:{r:g}", dim=n, domain=dom,
        eval=_eval, grad=_grad, hess=_hess,
        probe_box=Box(c - probe_half, c + probe_half),
        strongly_convex=True,
    )


def pathological_intervals(count: int = 16) -> list[tuple[Fraction, Fraction]]:
    """Endpoints [a_n, b_n] of the derivative-density intervals, exact rationals.

    b_n = 1/(n+4)^2 and a_n = b_n * (1 - b_n); the density equals n + 4 on
    [a_n, b_n] and 0 elsewhere.  Intervals are disjoint and accumulate at 0.
    """
    out = []
    for m in range(count):
        b = Fraction(1, (m + 4) ** 2)
        out.append((b * (1 - b), b))
    return out


def make_pathological(count: int = 16) -> ConvexFunction:
    """A C^1, twice-differentiable convex function on [-1, 1] whose derivative
    is not Lipschitz in any neighbourhood of 0.

    f(0) = 0 and f'(x) = integral of a step density that equals n + 4 on the
    interval [a_n, b_n] (see :func:`pathological_intervals`) and 0 elsewhere,
    oddly extended.  Only the first ``count`` intervals are kept, so the
    non-Lipschitz behaviour is realized for n < count; f is piecewise
    quadratic and evaluated exactly from a rational breakpoint table.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    ivs = pathological_intervals(count)
    # breakpoints ascending from 0 to 1, with the density on each segment
    pts: list[Fraction] = [Fraction(0)]
    dens: list[int] = []
    for a, b in reversed(ivs):
        pts.extend([a, b])
    pts.append(Fraction(1))
    for j in range(len(pts) - 1):
        mid = (pts[j] + pts[j + 1]) / 2
        dens.append(next((m + 4 for m, (a, b) in enumerate(ivs) if a <= mid <= b), 0))
    # exact cumulative f' and f at breakpoints
    fp = [Fraction(0)]
    fv = [Fraction(0)]
    for j in range(len(pts) - 1):
        w = pts[j + 1] - pts[j]
        fp.append(fp[j] + dens[j] * w)
        fv.append(fv[j] + fp[j] * w + Fraction(dens[j]) * w * w / 2)
    bx = np.array([float(p) for p in pts])
    bfp = np.array([float(v) for v in fp])
    bfv = np.array([float(v) for v in fv])
    bden = np.array([float(d) for d in dens] + [0.0])
    dom = Box(np.array([-1.0]), np.array([1.0]))

    def _locate(ax):
        idx = np.searchsorted(bx, ax, side="right") - 1
        return np.clip(idx, 0, len(bx) - 2)

    def _eval(p):
        ax = np.abs(p[:, 0])
        j = _locate(ax)
        h = ax - bx[j]
        return bfv[j] + bfp[j] * h + 0.5 * bden[j] * h * h

    def _grad(p):
        x = p[:, 0]
        ax = np.abs(x)
        j = _locate(ax)
        h = ax - bx[j]
        return (np.sign(x) * (bfp[j] + bden[j] * h))[:, None]

    # smooth-probe region sits above the largest interval b_0 = 1/16,
    # where the derivative density is zero and f is affine
    return ConvexFunction(
        label=f"pathological:{count}", dim=1, domain=dom,
        eval=_eval, grad=_grad, hess=None,
        probe_box=Box(np.array([0.1]), np.array([0.9])),
    )


def make_max_affine(planes: list[tuple]) -> ConvexFunction:
    """f(x) = max_i (<a_i, x> + b_i); the gradient exists where the argmax
    is unique and is the active plane's slope there."""
    if not planes:
        raise ValueError("at least one plane is required")
    A = np.atleast_2d(np.asarray([p[0] for p in planes], dtype=float))
    if A.ndim == 2 and A.shape[1] == 0:
        raise ValueError("empty slope vectors")
    b = np.asarray([p[1] for p in planes], dtype=float)
    n = A.shape[1]
    dom = Box(-2.0 * np.ones(n), 2.0 * np.ones(n))

    def _vals(pts):
        return pts @ A.T + b

    def _eval(pts):
        return np.max(_vals(pts), axis=-1)

    def _grad(pts):
        v = _vals(pts)
        order = np.argsort(v, axis=-1)
        top, second = order[:, -1], order[:, -2] if v.shape[1] > 1 else (order[:, -1], None)
        out = A[top].astype(float)
        if v.shape[1] > 1:
            vt = np.take_along_axis(v, top[:, None], axis=1)[:, 0]
            vs = np.take_along_axis(v, second[:, None], axis=1)[:, 0]
            tie = (vt - vs) <= 1e-12 * (1.0 + np.abs(vt))
            # a tie is only a kink when the tied planes differ
            kink = tie & np.any(A[top] != A[second], axis=-1)
            out[kink] = np.nan
        return out

    def _hess(x):
        g = _grad(np.asarray(x, dtype=float).reshape(1, n))[0]
        return None if np.any(np.isnan(g)) else np.zeros((n, n))

    parts = ";".join(",".join(f"{v:g}" for v in row) + f",{bb:g}" for row, bb in zip(A, b))
    return ConvexFunction(
        label=f"maxaffine:{parts}", dim=n, domain=dom,
        eval=_eval, grad=_grad, hess=_hess, probe_box=dom.shrink(0.05),
    )


def make_max(f: ConvexFunction, g: ConvexFunction, label: str | None = None) -> ConvexFunction:
    """Pointwise maximum of two convex functions (convex); gradient/Hessian
    come from the active branch and are undefined on the tie set."""
    if f.dim != g.dim:
        raise ValueError("dimension mismatch")
    lo = np.maximum(f.domain.lo, g.domain.lo)
    hi = np.minimum(f.domain.hi, g.domain.hi)
    dom = Box(lo, hi)

    def _eval(pts):
        return np.maximum(f.eval(pts), g.eval(pts))

    def _grad(pts):
        vf, vg = f.eval(pts), g.eval(pts)
        gf, gg = f.gradients(pts), g.gradients(pts)
        out = np.where((vf >= vg)[:, None], gf, gg)
        tie = np.abs(vf - vg) <= 1e-12 * (1.0 + np.abs(vf))
        differs = np.any(np.nan_to_num(gf, nan=np.inf) != np.nan_to_num(gg, nan=np.inf), axis=-1)
        out[tie & differs] = np.nan
        return out

    def _hess(x):
        pts = np.asarray(x, dtype=float).reshape(1, f.dim)
        vf, vg = float(f.eval(pts)[0]), float(g.eval(pts)[0])
        if abs(vf - vg) <= 1e-12 * (1.0 + abs(vf)):
            return None
        active = f if vf >= vg else g
        return active.hessian(x)

    return ConvexFunction(
        label=label or f"max({f.label},{g.label})", dim=f.dim, domain=dom,
        eval=_eval, grad=_grad, hess=_hess, probe_box=dom.shrink(0.05),
    )


def shift_normalize(u: ConvexFunction, x0) -> ConvexFunction:
    """Recenter u at an interior point of differentiability:

        v(x) = u(x + x0) - u(x0) - <grad u(x0), x>

    so that v(0) = 0 exactly and grad v(0) = 0, without changing second-order
    behaviour (difference quotients are the identical arithmetic).
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    g0 = u.gradient(x0)
    if g0 is None:
        raise ValueError(f"{u.label}: gradient undefined at {x0}; cannot normalize")
    u0 = u.value(x0)
    if not np.isfinite(u0):
        raise ValueError(f"{u.label}: x0={x0} outside the feasible region")
    dom = Box(u.domain.lo - x0, u.domain.hi - x0)

    def _eval(pts):
        return u.eval(pts + x0) - u0 - pts @ g0

    def _grad(pts):
        return u.gradients(pts + x0) - g0

    def _hess(x):
        return u.hessian(np.asarray(x, dtype=float) + x0)

    return ConvexFunction(
        label=f"shifted({u.label}@{np.array2string(x0, precision=4)})",
        dim=u.dim, domain=dom, eval=_eval, grad=_grad,
        hess=_hess if u.hess is not None else None,
        probe_box=Box(u.probe_box.lo - x0, u.probe_box.hi - x0)
        if np.all(u.probe_box.hi - x0 > u.probe_box.lo - x0) else None,
        strongly_convex=u.strongly_convex,
    )


def midpoint_convexity_violation(f: ConvexFunction, rng: np.random.Generator,
                                 pairs: int = 10_000) -> float:
    """Max violation of f((x+y)/2) <= (f(x)+f(y))/2 over sampled domain pairs.

    Pairs with an infinite endpoint are vacuous under the extended-value
    convention and are skipped.
    """
    xs = f.domain.sample(rng, pairs)
    ys = f.domain.sample(rng, pairs)
    fx, fy = f.values(xs), f.values(ys)
    fm = f.values(0.5 * (xs + ys))
    ok = np.isfinite(fx) & np.isfinite(fy)
    viol = fm[ok] - 0.5 * (fx[ok] + fy[ok])
    return float(np.max(viol)) if viol.size else 0.0


# -- label grammar ----------------------------------------------------------------

def _parse_floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",")]


def from_label(label: str) -> ConvexFunction:
    """Build a catalog function from its label string.

    Grammar (case-sensitive):
      power:A:k[:n]            A|x|^k on [-2,2]^n (n defaults to 1)
      quad:d1[,d2,...]         0.5 <diag(d) x, x>
      hemisphere:c1[,c2..]:t:r lower hemisphere function
      pathological[:N]         the non-C^{1,1} example, N intervals (default 16)
      maxaffine:a...,b;...     max of affine planes, one "a1[,a2..],b" per plane
      negcircle                -sqrt(1 - x^2) (hemisphere with t=0, r=1)
      abs                      |x| as a two-plane max
    """
    head, _, rest = label.partition(":")
    if head == "power":
        parts = rest.split(":")
        if len(parts) not in (2, 3):
            raise ValueError(f"bad power label {label!r}")
        A, k = float(parts[0]), float(parts[1])
        n = int(parts[2]) if len(parts) == 3 else 1
        return make_power(A, k, n)
    if head == "quad":
        diag = _parse_floats(rest)
        return make_quadratic(np.diag(diag))
    if head == "hemisphere":
        parts = rest.split(":")
        if len(parts) != 3:
            raise ValueError(f"bad hemisphere label {label!r}")
        return make_hemisphere(_parse_floats(parts[0]), float(parts[1]), float(parts[2]))
    if head == "pathological":
        return make_pathological(int(rest) if rest else 16)
    if head == "maxaffine":
        planes = []
        for chunk in rest.split(";"):
            vals = _parse_floats(chunk)
            planes.append((vals[:-1], vals[-1]))
        return make_max_affine(planes)
    if label == "negcircle":
        return make_hemisphere([0.0], 0.0, 1.0)
    if label == "abs":
        return make_max_affine([([1.0], 0.0), ([-1.0], 0.0)])
    raise ValueError(f"unknown function label {label!r}")
