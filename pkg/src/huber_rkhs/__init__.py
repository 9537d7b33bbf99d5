"""Tikhonov-regularized Huber regression in a reproducing kernel Hilbert space,
with quadrature oracles and executable checks of its norm, comparison, bias
and rate bounds."""

from .errors import (
    ContractViolation,
    DivergenceError,
    HuberRKHSError,
    InfiniteMomentError,
    NumericalError,
    NumericalPSDError,
    OptimizationError,
    PreconditionError,
    QuadratureError,
)
from .kernel import KernelSpec, RepresenterFunction, eval_kernel, gram, kappa, rkhs_norm
from .noise import AsymTwoExpNoise, GaussianNoise, StudentTNoise, SymmetricParetoNoise
from .robust_loss import HuberLoss
from .scenario import MarginalX, Scenario, TargetFunction, sample_dataset, scenario_from_dict
from .solver import Dataset, FitConfig, FittedModel, fit_huber_krr, fit_kernel_ridge, tuning_rule

__version__ = "0.1.0"
