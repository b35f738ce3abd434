from .config import AutoMLConfiguration
from .ensemble import Ensemble, greedy_ensemble, greedy_select, majority_vote
from .evaluation import EvaluationRecord, RungLog, fidelity_ladder, incremental_fit_eval, nested_order
from .objective import constrained_objective, split, stratified_split
from .proposal import propose_next, smbo_maximize, ucb_select
from .search import SAMPLE_COLUMNS, SearchResult, random_run_samples, run_search

__all__ = [
    "AutoMLConfiguration", "Ensemble", "EvaluationRecord", "RungLog", "SAMPLE_COLUMNS", "SearchResult",
    "constrained_objective", "fidelity_ladder", "greedy_ensemble", "greedy_select", "incremental_fit_eval",
    "majority_vote", "nested_order", "propose_next", "random_run_samples", "run_search", "smbo_maximize",
    "split", "stratified_split", "ucb_select",
]
