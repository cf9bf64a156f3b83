"""Legendre-Fenchel conjugation on grids and in closed form.

The conjugate of f is f*(s) = sup_x (<s, x> - f(x)).  On a grid we
conjugate the piecewise-linear extension of the samples (extended by +inf
outside the grid box), which makes the discrete transform exactly
representable: the sup over each linear segment is attained at a vertex, so
the hull-sweep fast path and the brute-force max over grid points agree to
rounding.  +inf entries are the off-domain sentinel and are excluded from
hull construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .catalog import ConvexFunction, from_label

__all__ = [
    "GridFunction",
    "ConjugatePair",
    "grid_from_function",
    "conjugate_grid_1d",
    "conjugate_bruteforce",
    "closed_form_conjugate",
    "subdifferential_contains",
    "biconjugate_check",
]

SLOPE_PAD = 0.05  # padding of the attained-slope range for auto slope grids


@dataclass(frozen=True)
class GridFunction:
    """Samples of a function on a regular 1-d or 2-d lattice.

    axes holds (lo, hi, count) per dimension; values has shape (count,) or
    (count_x, count_y) and may contain +inf markers.
    """

    axes: tuple
    values: np.ndarray

    def __post_init__(self):
        axes = tuple((float(lo), float(hi), int(n)) for lo, hi, n in self.axes)
        vals = np.asarray(self.values, dtype=float)
        if len(axes) not in (1, 2):
            raise ValueError("only 1-d and 2-d grids are supported")
        for lo, hi, n in axes:
            if n < 2 or hi <= lo:
                raise ValueError("each axis needs count >= 2 and hi > lo")
        if vals.shape != tuple(n for _, _, n in axes):
            raise ValueError("values shape does not match axes")
        if not np.any(np.isfinite(vals)):
            raise ValueError("grid has no finite values")
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "values", vals)

    @property
    def dim(self) -> int:
        return len(self.axes)

    def axis_points(self, i: int = 0) -> np.ndarray:
        lo, hi, n = self.axes[i]
        return np.linspace(lo, hi, n)

    @property
    def step(self) -> tuple:
        return tuple((hi - lo) / (n - 1) for lo, hi, n in self.axes)


def grid_from_function(f: ConvexFunction | Callable, lo, hi, count) -> GridFunction:
    """Sample a function onto a regular grid (1-d or 2-d)."""
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    counts = np.atleast_1d(np.asarray(count, dtype=int))
    if counts.size == 1 and lo.size > 1:
        counts = np.full(lo.size, counts[0])
    axes = tuple((lo[i], hi[i], int(counts[i])) for i in range(lo.size))
    grids = [np.linspace(a, b, n) for a, b, n in axes]
    if len(axes) == 1:
        pts = grids[0][:, None]
    else:
        X, Y = np.meshgrid(grids[0], grids[1], indexing="ij")
        pts = np.column_stack([X.ravel(), Y.ravel()])
    fn = f.values if isinstance(f, ConvexFunction) else lambda p: np.asarray([f(x) for x in p])
    vals = np.asarray(fn(pts), dtype=float).reshape(tuple(n for _, _, n in axes))
    return GridFunction(axes=axes, values=vals)


def _lower_hull(xs: np.ndarray, vs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Indices-free monotone-chain lower convex hull of (x, v) samples, O(N)."""
    hx: list[float] = []
    hv: list[float] = []
    for x, v in zip(xs, vs):
        while len(hx) >= 2:
            # drop the middle point when it lies on or above the new chord
            x1, v1, x2, v2 = hx[-2], hv[-2], hx[-1], hv[-1]
            if (v2 - v1) * (x - x1) >= (v - v1) * (x2 - x1):
                hx.pop(); hv.pop()
            else:
                break
        hx.append(float(x)); hv.append(float(v))
    return np.asarray(hx), np.asarray(hv)


def _auto_slopes(xs: np.ndarray, vs: np.ndarray, count: int) -> np.ndarray:
    quot = np.diff(vs) / np.diff(xs)
    lo, hi = float(quot.min()), float(quot.max())
    span = max(hi - lo, 1e-12)
    return np.linspace(lo - SLOPE_PAD * span, hi + SLOPE_PAD * span, count)


def conjugate_breakpoints(f: GridFunction) -> tuple[np.ndarray, np.ndarray]:
    """Exact breakpoint representation (slopes, values) of the conjugate of
    the piecewise-linear extension of a 1-d grid function.

    The conjugate is itself piecewise linear with breakpoints exactly at the
    attained hull quotients; between and beyond them it is affine.  This is
    the lossless form of the transform (no slope-grid resampling), used by
    involution and modulus checks.
    """
    if f.dim != 1:
        raise ValueError("breakpoint conjugates are 1-d")
    xs = f.axis_points()
    finite = np.isfinite(f.values)
    if finite.sum() < 2:
        raise ValueError("need at least 2 finite values")
    hx, hv = _lower_hull(xs[finite], f.values[finite])
    qs = np.diff(hv) / np.diff(hx)
    ws = qs * hx[:-1] - hv[:-1]
    return qs, ws


def conjugate_grid_1d(f: GridFunction, slopes: np.ndarray | None = None) -> GridFunction:
    """Fast 1-d conjugate via the lower-hull sweep.

    Exact (to rounding) for the piecewise-linear extension of the samples:
    f*(s) = max_i (s x_i - f_i) with the argmax advancing monotonically in s
    along the hull vertices.  The default slope grid spans the attained
    difference quotients padded by 5%, with as many points as the input.
    """
    if f.dim != 1:
        raise ValueError("conjugate_grid_1d requires a 1-d grid")
    xs = f.axis_points()
    finite = np.isfinite(f.values)
    if finite.sum() < 2:
        raise ValueError("need at least 2 finite values")
    xs, vs = xs[finite], f.values[finite]
    hx, hv = _lower_hull(xs, vs)
    if slopes is None:
        slopes = _auto_slopes(hx, hv, xs.size)
    else:
        slopes = np.asarray(slopes, dtype=float)
    hull_slopes = np.diff(hv) / np.diff(hx) if hx.size > 1 else np.empty(0)
    idx = np.searchsorted(hull_slopes, slopes, side="left")
    star = slopes * hx[idx] - hv[idx]
    lo, hi = (float(slopes[0]), float(slopes[-1])) if slopes.size > 1 else (slopes[0] - 1, slopes[0] + 1)
    return GridFunction(axes=((lo, hi, slopes.size),), values=star)


def conjugate_bruteforce(f: GridFunction, slopes) -> GridFunction:
    """Direct sup over all finite grid points; the independent oracle.

    slopes is an array (1-d) or a pair of per-axis arrays (2-d).  The 2-d
    sup is reassociated per axis (max_{i,j} = max_i max_j), which is exact.
    """
    if f.dim == 1:
        s = np.asarray(slopes, dtype=float)
        xs = f.axis_points()
        finite = np.isfinite(f.values)
        xs, vs = xs[finite], f.values[finite]
        star = np.max(s[:, None] * xs[None, :] - vs[None, :], axis=1)
        return GridFunction(axes=((float(s[0]), float(s[-1]), s.size),), values=star)
    sx = np.asarray(slopes[0], dtype=float)
    sy = np.asarray(slopes[1], dtype=float)
    xs, ys = f.axis_points(0), f.axis_points(1)
    vals = np.where(np.isfinite(f.values), f.values, np.inf)
    # max over (x, y) reassociated: inner[i, j] = max_y (sy_j * y - f(x_i, y))
    inner = np.max(sy[None, :, None] * ys[None, None, :] - vals[:, None, :], axis=2)
    # star[a, j] = max_x (sx_a * x + inner[x, sy_j])
    star = np.max(sx[:, None, None] * xs[None, None, :] + inner.T[None, :, :], axis=2)
    axes = ((float(sx[0]), float(sx[-1]), sx.size), (float(sy[0]), float(sy[-1]), sy.size))
    return GridFunction(axes=axes, values=star)


@dataclass(frozen=True)
class ConjugatePair:
    """A catalog function together with its analytic conjugate.

    dual_closed_form maps slope(s) to the conjugate value; validity is the
    slope box on which the closed form is the true conjugate.
    """

    primal: str
    dual_closed_form: Callable
    validity: tuple


def closed_form_conjugate(label: str) -> ConjugatePair:
    """Analytic conjugates for the closed-form catalog.

    Supported labels: quadratics ("quad:a[,b..]", positive definite),
    powers "power:A:k" with k > 1, hemispheres "hemisphere:c:t:r", and
    "negcircle".  The hemisphere dual is -t + <c, y> + r sqrt(1 + |y|^2),
    from the semicircle pair h(x) = -sqrt(1-x^2) <-> sqrt(1+y^2) and the
    affine-composition rule.
    """
    head = label.partition(":")[0]
    if head == "quad":
        diag = np.asarray([float(v) for v in label.partition(":")[2].split(",")], dtype=float)
        if np.any(diag <= 0):
            raise ValueError("closed-form quadratic dual needs positive definite Q")

        def dual(y):
            y = np.atleast_1d(np.asarray(y, dtype=float))
            return float(0.5 * np.sum(y * y / diag))

        return ConjugatePair(primal=label, dual_closed_form=dual,
                             validity=(-np.inf, np.inf))
    if head == "power":
        parts = label.split(":")
        A, k = float(parts[1]), float(parts[2])
        if k <= 1:
            raise ValueError("power dual requires k > 1")
        q = k / (k - 1.0)
        coef = (1.0 - 1.0 / k) * (A * k) ** (-1.0 / (k - 1.0))

        def dual(y):
            y = np.atleast_1d(np.asarray(y, dtype=float))
            return float(coef * np.linalg.norm(y) ** q)

        return ConjugatePair(primal=label, dual_closed_form=dual,
                             validity=(-np.inf, np.inf))
    if head == "hemisphere" or label == "negcircle":
        if label == "negcircle":
            c, t, r = np.zeros(1), 0.0, 1.0
        else:
            parts = label.split(":")
            c = np.asarray([float(v) for v in parts[1].split(",")], dtype=float)
            t, r = float(parts[2]), float(parts[3])

        def dual(y):
            y = np.atleast_1d(np.asarray(y, dtype=float))
            return float(-t + c @ y + r * np.sqrt(1.0 + y @ y))

        return ConjugatePair(primal=label, dual_closed_form=dual,
                             validity=(-np.inf, np.inf))
    raise ValueError(f"no closed-form conjugate for label {label!r}")


def subdifferential_contains(f: ConvexFunction, x, s, tol: float = 1e-9,
                             probe: int = 257) -> bool:
    """Check f(y) >= f(x) + <s, y - x> - tol on a probe grid of the domain."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    s = np.atleast_1d(np.asarray(s, dtype=float))
    grids = [np.linspace(lo, hi, probe) for lo, hi in zip(f.domain.lo, f.domain.hi)]
    if f.dim == 1:
        pts = grids[0][:, None]
    else:
        mesh = np.meshgrid(*grids, indexing="ij")
        pts = np.column_stack([m.ravel() for m in mesh])
    vals = f.values(pts)
    affine = f.value(x) + (pts - x) @ s
    finite = np.isfinite(vals)
    return bool(np.all(vals[finite] >= affine[finite] - tol))


def _auto_slope_axes(f: GridFunction, count: int | None = None):
    out = []
    for i in range(f.dim):
        xs = f.axis_points(i)
        v = np.where(np.isfinite(f.values), f.values, np.nan)
        quot = np.diff(v, axis=i) / np.diff(xs).reshape([-1 if j == i else 1 for j in range(f.dim)])
        lo, hi = np.nanmin(quot), np.nanmax(quot)
        span = max(hi - lo, 1e-12)
        n = count or f.axes[i][2]
        out.append(np.linspace(lo - SLOPE_PAD * span, hi + SLOPE_PAD * span, n))
    return out


def biconjugate_check(f: GridFunction) -> float:
    """Max |f - f**| over interior finite grid points.

    The double transform of a convex grid function reproduces it (the
    transform is an order-reversing involution on convex inputs).  1-d runs
    through the exact breakpoint conjugate, so the deviation is rounding
    noise for convex data and the hull gap otherwise; 2-d resamples through
    the brute-force oracle and pays a slope-grid quantization error.
    """
    if f.dim == 1:
        xs = f.axis_points()
        qs, ws = conjugate_breakpoints(f)
        # sup_s (x s - f*(s)) over the conjugate's breakpoints; the affine
        # tails of f* never win for x inside the sampled box
        back = np.max(xs[:, None] * qs[None, :] - ws[None, :], axis=1)
        dev = np.abs(back - f.values)[1:-1]
        return float(np.max(dev[np.isfinite(dev)]))
    slopes = _auto_slope_axes(f)
    star = conjugate_bruteforce(f, slopes)
    back = conjugate_bruteforce(star, [f.axis_points(0), f.axis_points(1)])
    dev = np.abs(back.values - f.values)[1:-1, 1:-1]
    return float(np.max(dev[np.isfinite(dev)]))
