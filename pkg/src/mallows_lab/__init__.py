"""Mallows-distance normal limits for positively associated sequences.

Subpackages and modules:

- :mod:`mallows_lab.transport`: Mallows (Wasserstein) distances in one dimension.
- :mod:`mallows_lab.assoc`: covariance, Cox-Grimmett tail sums, association tests.
- :mod:`mallows_lab.gibbs`: coupling families, heat-bath sampler, exact oracles.
- :mod:`mallows_lab.limits`: stabilized sums, block diagnostics, convergence curves.
- :mod:`mallows_lab.runner` and :mod:`mallows_lab.cli`: batch experiments.
"""

__version__ = "0.1.0"

from .errors import ConfigError, DomainError, ModelGuardError  # noqa: E402
from .normal import STANDARD_NORMAL, NormalLaw  # noqa: E402

__all__ = ["ConfigError", "DomainError", "ModelGuardError", "NormalLaw", "STANDARD_NORMAL", "__version__"]
