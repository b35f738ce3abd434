"""Learner zoo, pipeline fitting/measurement and the generic random forest."""
from .forest import (RandomForestModel, TreeModel, fit_tree, forest_fit, forest_predict,
                     forest_predict_std)
from .metrics import balanced_accuracy, equal_opportunity
from .pipeline import (PipelineMetrics, TrainedPipeline, evaluate, fit, measure_pipeline_size,
                       predict)

__all__ = [
    "RandomForestModel", "TreeModel", "fit_tree", "forest_fit", "forest_predict",
    "forest_predict_std", "balanced_accuracy", "equal_opportunity", "PipelineMetrics",
    "TrainedPipeline", "evaluate", "fit", "measure_pipeline_size", "predict",
]
