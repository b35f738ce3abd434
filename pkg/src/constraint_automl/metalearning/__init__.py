from .labeling import SearchLabeler, default_configuration, label_run
from .mining import (ConfigPool, PoolEntry, dynamic_configure, mine_pool, query_constraints, rank_pool,
                     rank_scores)
from .models import MetaModels, f1_score, r2_score, time_series_folds, train_meta_models
from .sampling import (MetaDataset, MetaInstance, MetaSpaces, acquire_uncertain, alternating_sample,
                       cold_start)

__all__ = [
    "ConfigPool", "MetaDataset", "MetaInstance", "MetaModels", "MetaSpaces", "PoolEntry", "SearchLabeler",
    "acquire_uncertain", "alternating_sample", "cold_start", "default_configuration", "dynamic_configure",
    "f1_score", "label_run", "mine_pool", "query_constraints", "r2_score", "rank_pool", "rank_scores",
    "time_series_folds", "train_meta_models",
]
