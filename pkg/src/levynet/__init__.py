"""Explicit ReLU network approximations of option prices in exponential Levy models."""
from .errors import (AttemptsExhausted, ConfigError, DampingFailure, DimensionMismatch, DimensionTooLarge,
                     Diverges, LayerMismatch, LevyNetError, MomentDiverges, NotSimulable, OutputDimMismatch,
                     ParseError, RhoTooSmall, SectorViolation, SingularFit)
from .kernels import BACKEND
from .levy_models import (LevyModel1D, LevyModelD, SymbolSector, check_sector, exp_moment, martingale_drift,
                          model_from_dict, rng_stream, sample_increments, symbol, triplet_bounds)
from .payoffs import ButterflyLog, GaussianLog, PayoffSpec
from .pricing_oracle import OracleResult, derivative_fourier, price_fourier_1d, price_mc
from .relu_net import ReluNetwork, metrics
from .constructive import ConstructionConfig, construct, rate_study
from .spectral import cheb_approx, gevrey_bound, spectral_emulate
from .chaos import sparse_to_relu, summability_certificate, taylor_coeffs
from .barron import barron_norm, evolved_norm, fit_two_layer
from .experiments import calib_experiment, dimension_sweep

__version__ = "0.1.0"
