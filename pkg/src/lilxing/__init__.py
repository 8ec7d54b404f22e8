"""Small-time boundary-crossing toolkit for LIL-scaled suprema.

Computes, simulates, and cross-validates the probability that a Brownian
motion or Ito diffusion, scaled by h(u) = sqrt(2 u loglog(1/u)), exceeds a
deviation level before a small time t. Submodules:

* ``analytic``: closed forms, the hitting-time density, quadrature.
* ``paths``: Brownian paths on geometric grids, bridge-corrected suprema.
* ``sde``: Euler-Maruyama diffusions and the reduction diagnostics.
* ``estimators``: Monte Carlo crossing/hitting estimates and rate fits.
* ``cli``: the `lil-xing` experiment runner (CSV/SVG artifacts).
"""

__version__ = "0.1.0"
