"""Growth-optimal and Wasserstein-robust growth-optimal portfolios."""
from .backtest import (BandSummary, MetricsReport, Trajectory, aggregate_trajectories,
                       performance_metrics, run_constant_mix)
from .data import (EpsilonRule, PriceTable, epsilon_from_delta, load_prices, log_returns,
                   simple_returns, synthetic_universe, write_prices)
from .domain import (BallSpec, Norm, ReturnKind, ReturnsMatrix, RobustSolution, SimplexWeights,
                     SolverSettings, Status, Unbounded, convert_returns, make_weights,
                     uniform_weights)
from .errors import *  # noqa: F401,F403
from .experiments import (StudyConfig, StudyReport, SweepTable, boxplot_stats,
                          diversification_sweep, random_subset_study)
from .kelly import KellySolution, kelly_gradient, kelly_objective, solve_kelly
from .kernels import BACKEND
from .oracle import (InnerEvalConfig, conjugate_f, conjugate_h, conjugate_inner_value,
                     inner_min_value, robust_objective)
from .robust import (CertificateReport, ProgramSpec, build_program, certify_solution,
                     entropy_term, perspective_term, solve_wkelly)

__version__ = "0.1.0"
