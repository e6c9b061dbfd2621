"""spikelab: a numerical laboratory for high-dimensional online SGD scaling limits.

Simulates SGD, heavy-ball momentum SGD (SGD-M) and normalized-gradient SGD
(SGD-U) on spiked tensor PCA and single-index models, integrates the
corresponding ballistic ODE / diffusive SDE limits, locates fixed points and
critical thresholds, and statistically verifies the underlying Gaussian
identities.
"""

from .gauss import McEstimate, RngStream

__all__ = ["RngStream", "McEstimate"]
__version__ = "0.1.0"
