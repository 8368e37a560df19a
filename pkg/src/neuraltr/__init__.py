"""Derivative-free trust-region methods with interpolation and neural surrogate models.

Modules
-------
linalg_small      small dense eigen, determinant and solve routines
interp_geometry   quadratic interpolation sets, Newton and Lagrange polynomials, geometry
newton_model      quadratic models from generalized finite differences
neural_model      feed-forward nets, input derivatives, training, hypercube construction
tr_quadratic      trust-region loop with a loss-trained quadratic model (and a Newton baseline)
tr_blackbox       trust-region loop with a black-box neural model
problems          benchmark objectives
cli               command-line harness
"""

from .interp_geometry import BlockedPointSet, build_newton_basis, poisedness_determinant
from .newton_model import QuadraticModel, interpolation_model
from .neural_model import FeedForwardNet, TrainConfig, input_gradient, input_hessian
from .problems import get_problem, list_problems
from .results import CountingObjective, OptimizationResult
from .tr_blackbox import BlackboxConfig, BlackboxLossWeights, clarke_stationarity_proxy, run_algorithm2
from .tr_quadratic import LossWeightsQuad, QuadTrainConfig, TRConfig, run_algorithm1, run_newton_tr

__version__ = "0.1.0"
