from .criteria import CRITERIA, ARTIFACT_DEFINED, criterion_index
from .pca import PCAModel, fit_pca
from .model import HBMConfig, HierarchicalQualityModel, ELBOResult, elbo
from .train import (
    fit_hbm,
    infer_quality,
    combine_assessments,
    planted_criteria_dataset,
    save_quality_model,
    load_quality_model,
)

__all__ = [
    "CRITERIA",
    "ARTIFACT_DEFINED",
    "criterion_index",
    "PCAModel",
    "fit_pca",
    "HBMConfig",
    "HierarchicalQualityModel",
    "ELBOResult",
    "elbo",
    "fit_hbm",
    "infer_quality",
    "combine_assessments",
    "planted_criteria_dataset",
    "save_quality_model",
    "load_quality_model",
]
