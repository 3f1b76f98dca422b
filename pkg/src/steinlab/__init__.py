"""Gamma approximation via Stein's method: bias transforms, exact distances, error bounds."""
from __future__ import annotations

__version__ = "0.1.0"

from .distributions import (  # noqa: E402
    CompoundPoisson,
    Convolution,
    Discrete,
    Dist,
    DistError,
    DistSpecError,
    Empirical,
    Exponential,
    Gamma,
    GammaLevyJump,
    Geometric,
    Logarithmic,
    NegativeBinomial,
    Numeric,
    Poisson,
    Scaled,
    Uniform,
    format_dist,
    make_rng,
    parse_dist,
    point_mass,
    split_rng,
)
from .numeric import NumericLaw  # noqa: E402
from .transforms import (  # noqa: E402
    BiasKind,
    IndexLaw,
    bias,
    equilibrium,
    id_size_bias,
    id_zero_bias,
    size_bias,
    sum_bias_coupling,
    theta_exact,
    zero_bias,
)
from .metrics import (  # noqa: E402
    DistanceEstimate,
    kolmogorov,
    kolmogorov_empirical,
    wasserstein,
    wasserstein_empirical,
)
