"""Age-of-trust continuous verification: single-link scheduling and trust-enhanced ALOHA."""

__version__ = "0.1.0"

from .core import AoTTrace, SimMetrics, accumulate_metrics, objective_stderr, step_aot  # noqa: E402
from .service import Categorical, Constant, ServiceProcess, TwoPoint, mean_rate, sample_rate  # noqa: E402
