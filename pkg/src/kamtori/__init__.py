"""Fourier-spectral construction of quasiperiodic invariant tori.

The package builds twisted conjugacies H = K o G + beta . r for
near-integrable real-analytic Hamiltonians by a quadratically
convergent iteration, then drives the frequency offset beta to zero
over action translations, producing an invariant torus verified by
direct flow integration.
"""

from .arithmetics import (ApproximationFunction, DiophantineReport,
                          FrequencyVector, check_convergence_criterion,
                          cohomological_bound, diophantine_constant,
                          generalized_cohomological_bound, laplace_transform,
                          solve_cohomological)
from .errors import (CertificateError, ConfigError, ConvergenceError,
                     DimensionMismatch, DivergenceError, GridTooSmall,
                     ResonanceError, SpectralError, TailError,
                     TwistDegeneracyError)
from .fourier import (FourierSeries, product_average, verify_hadamard,
                      verify_hadamard_mixed)
from .jets import ActionJet, multi_indices
from .kolmogorov import (InvariantTorusResult, TwistData, flatten_quadratic,
                         offset_map, solve_invariant_torus,
                         translate_actions, verify_invariance)
from .maps import (ExactOneForm, FiberedSymplectomorphism, TorusMap,
                   compose_torus_maps, group_compose, inverse_group,
                   inversion_certificate, invert_torus_map, lie_transform,
                   pullback_jet, pulled_norm, transport_frame)
from .newton import (NewtonSchedule, NewtonTrace, TwistedConjugacy,
                     assemble_cprime, defect, defect_jet, lipschitz_check,
                     newton_step, normal_form_projection, run_newton,
                     second_derivative_bound, theoretical_radius)

__version__ = "0.1.0"
