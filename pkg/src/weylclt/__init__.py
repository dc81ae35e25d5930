"""Weyl operators, quantum characteristic functions and the Gaussian central
limit scheme on truncated Fock spaces."""

__version__ = "0.1.0"

from .symplectic import PhaseVector, NormingSequence, apply_norming, check_admissibility_bound, delta, symplectic_matrix
from .fock import FockSpace, ProbabilityOperator, InvalidStateError, make_state, validate, weyl_operator
from .charfn import CharFn, Gaussian, OperatorBacked, GridSpec, convolve, translate, delta_pd_check
from .gaussian import covariance_admissible, cm_sample_check, isotropic_spectrum, check_nonsingular
from .moments import DiscreteMeasure, spectral_measure, m1, m2, sigma2, mean_vector
from .clt import CLTRun, clt_convergence_report, gaussian_limit_target, s_n_char
