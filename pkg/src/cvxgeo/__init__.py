"""cvxgeo: desk-scale numerics for second-order convex analysis.

Modules:
  catalog   convex test functions with eval/gradient/Hessian oracles
  kappa     generalized largest-eigenvalue estimation from difference quotients
  legendre  Legendre-Fenchel conjugation (closed-form, hull sweep, brute force)
  support   spheres of support, ball-drop contacts, lower-density experiments
  dual      quadratic/sub-quadratic convexity and conjugate-side curvature bounds
  cli       batch experiment runner
"""

__version__ = "0.1.0"

from . import catalog, checks, dual, kappa, legendre, support  # noqa: F401
