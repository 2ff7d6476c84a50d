"""Numerical laboratory for strongly singular rank-one perturbations.

The exact operator lives on an indefinite (Pontryagin) space of triples
``(gamma, rho, phi)``; approximating systems with counterterms live on
``C^{k-1} (+) H``.  The package builds both on a finite diagonal surrogate
and measures how the approximating evolutions converge to the exact ones.
"""

from .approx import ApproxSpace, ApproxVector, build_space
from .convergence import (
    ConvergenceReport,
    Experiment,
    LadderConfig,
    run_m0_reduction,
    run_projection_ladder,
    run_resolvent_convergence,
    run_schrodinger_ladder,
    run_parabolic_ladder,
    run_hyperbolic_ladder,
)
from .exact import (
    Hamiltonian,
    ResolventExact,
    a_limit,
    build_hamiltonian,
    evolve_hyperbolic,
    evolve_parabolic,
    evolve_schrodinger,
    resolvent_exact,
)
from .pontryagin import PontryaginSpace, PontryaginVector, negative_squares, norm1
from .spectral import (
    RegularizedFamily,
    SpectralModel,
    build_family,
    build_model,
    counterterms,
    moment,
    regularize,
)

__version__ = "0.1.0"
