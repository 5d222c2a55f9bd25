"""faultnet: expert-rated failure networks compiled into leaky noisy-OR
Bayesian networks, with consistency repair and root cause analysis."""

from .model import (
    OCCURRENCE_CLASS_BOUNDS,
    CauseEffectEdge,
    FailureNetwork,
    FailureNode,
    NetworkValidationError,
    class_to_interval,
    parse_network,
    probability_to_class,
    representative_prior,
    serialize_network,
)
from .compiler import (
    CompiledNetwork,
    CompiledNode,
    LeakSolution,
    compile_network,
    insert_aggregation,
    leak_probability,
    marginal_actives,
    noisy_or_row,
    solve_leaks,
)
from .inference import (
    Evidence,
    ImpossibleEvidenceError,
    PosteriorReport,
    exact_posteriors,
    likelihood_weighting,
    rank_causes,
    rank_effects,
)
from .consistency import (
    GAConfig,
    InconsistencyReport,
    ParameterVector,
    Recommendation,
    detect_inconsistencies,
    loss,
    recommend,
)
from .service import RcaService, ServiceConfig, create_app

__version__ = "0.1.0"

__all__ = [
    "OCCURRENCE_CLASS_BOUNDS",
    "CauseEffectEdge",
    "FailureNetwork",
    "FailureNode",
    "NetworkValidationError",
    "class_to_interval",
    "parse_network",
    "probability_to_class",
    "representative_prior",
    "serialize_network",
    "CompiledNetwork",
    "CompiledNode",
    "LeakSolution",
    "compile_network",
    "insert_aggregation",
    "leak_probability",
    "marginal_actives",
    "noisy_or_row",
    "solve_leaks",
    "Evidence",
    "ImpossibleEvidenceError",
    "PosteriorReport",
    "exact_posteriors",
    "likelihood_weighting",
    "rank_causes",
    "rank_effects",
    "GAConfig",
    "InconsistencyReport",
    "ParameterVector",
    "Recommendation",
    "detect_inconsistencies",
    "loss",
    "recommend",
    "RcaService",
    "ServiceConfig",
    "create_app",
    "__version__",
]
