"""Numerical laboratory for weighted Birkhoff averages of torus rotations.

The package measures how fast windowed time averages

    (1/A_N) sum_{n<N} w(n/N) f(theta + n rho),   A_N = sum_{n<N} w(n/N)

converge to the space average of f for irrational rotation vectors rho on
finite-dimensional and truncated infinite-dimensional tori, in
configurable-precision arithmetic, and checks the nonresonance /
coefficient-decay hypotheses that govern the polynomial and
stretched-exponential convergence regimes.

Module map:

* weights      window families, exact derivative tables, L1 norms
* lattice      integer mode vectors and bounded enumeration
* rotations    rotation vectors, approximation functions, scans
* observables  Fourier-defined test functions with exact means
* engine       averaging runs, kernels, error oracles
* analysis     hypothesis checkers, rate fits, error budgets
* cli          config-driven experiment runner
"""

from .analysis import (AdaptiveFunction, RateFit, check_H1, check_H2_H4,
                       check_H3, error_budget, fit_rate, make_adaptive)
from .engine import (AveragingRun, Continuous, Discrete, RunResult,
                     birkhoff_unweighted, birkhoff_weighted_continuous,
                     birkhoff_weighted_discrete, fourier_error_oracle,
                     kernel_S_N)
from .lattice import (MultiIndex, enumerate_ball_eta, enumerate_ball_finite,
                      eta_norm)
from .observables import (Observable, class_certificate, coefficient,
                          evaluate, make_observable, trig_poly)
from .rotations import (ApproximationFunction, RotationVector, make_approx,
                        make_rotation, nonresonance_scan, small_divisor)
from .weights import (DerivCoeffTable, WeightFunction, deriv_coeff_table,
                      eval_weight, l1_derivative_norm, make_weight,
                      normalization_A_N)

__version__ = "0.1.0"
