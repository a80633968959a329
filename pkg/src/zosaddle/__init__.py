"""Zeroth-order and mixed-order solvers for stochastic saddle-point problems."""
from . import kernels
from .algorithms import (RunConfig, RunResult, Schedule, ScheduleParams, average_iterates, run,
                         run_zoesvia, run_zoesvia_same_direction, run_zosc_esvia, run_zovia, schedule)
from .exceptions import CapabilityError, ConfigError, DomainError, EvaluationError
from .geometry import (INF, Ball2, Box, FeasibleSet, GeometrySetup, SaddleIterate, Simplex,
                       Unconstrained, bregman, dual_norm, prox, rho_n, sample_sphere)
from .metrics import TraceRecord, distance_metrics, eps_sad_bilinear, residual_F
from .oracles import (EstimatorConfig, GradientSample, NoiseModel, estimate, estimator_bias_mc,
                      estimator_second_moment_mc, g_full_coordinate, g_mixed, g_random_direction,
                      noisy_eval)
from .problems import (ProblemSpec, generate_paper_matrix, lagrangian_toy, load_matrix_csv,
                       make_lagrangian, make_matrix_game, make_sc_quadratic, save_matrix_csv)

__version__ = "0.1.0"
