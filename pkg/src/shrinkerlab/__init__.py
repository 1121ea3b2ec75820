"""Numerics for Gaussian-density entropy and conformal-volume functionals.

Submodules:
  manifold     parametrized charts, quadrature sampling, curvature
  weights      closed-form weight families and exact constants
  functionals  integral functionals and their supremum search
  heatlab      grid heat-kernel convolution and log-concavity estimates
  flow         curve-shortening flow with entropy monitoring
  cli          command-line interface and acceptance runner
"""

from . import flow, functionals, heatlab, manifold, weights

__version__ = "0.1.0"

__all__ = ["manifold", "weights", "functionals", "heatlab", "flow", "__version__"]
