"""Spectral stability of trapped Bose-Einstein condensate vortices.

The package determines whether a vortex standing wave of the two-dimensional
Gross-Pitaevskii equation with a harmonic trap,

    i psi_t = -1/2 Laplacian(psi) + 1/2 r^2 psi + |psi|^2 psi,

is spectrally stable.  The workflow is:

1. ``profile``  -- compute the radial vortex amplitude w(r) for a winding
   number m and chemical potential mu by arclength continuation from the
   zero-amplitude limit, with a multiple-shooting corrector.
2. ``linearized_system`` / ``evans`` -- for each azimuthal perturbation
   index j, evaluate an Evans function E_j(lambda) whose zeros are the
   eigenvalues of the linearization, using exterior-product (compound
   matrix) integration with logarithmic rescaling.
3. ``evans`` -- locate eigenvalues: scans of the real-valued restriction of
   E_j to the imaginary axis, argument-principle winding counts over
   rectangular contours, and moment integrals that pin unstable zeros.
4. ``krein`` -- track eigenvalue branches in mu, label them with Krein
   signatures, detect collision/split/rejoin events (instability bubbles),
   and assemble a completeness certificate.
5. ``gpe_sim`` -- cross-check instability growth rates against a nonlinear
   split-step simulation.
6. ``cli`` -- orchestrate everything via ``vortex-evans`` subcommands.
"""

from .special_functions import (
    LinearMode,
    confluent_m,
    confluent_u,
    gamma_fn,
    laguerre,
    linear_mode_eval,
    linear_radial_solutions,
    linear_spectrum,
)

__all__ = [
    "LinearMode",
    "confluent_m",
    "confluent_u",
    "gamma_fn",
    "laguerre",
    "linear_mode_eval",
    "linear_radial_solutions",
    "linear_spectrum",
]

__version__ = "0.1.0"
