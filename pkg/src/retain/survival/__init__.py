from retain.survival.records import (
    FEATURE_NAMES,
    SurvivalRecord,
    build_survival_records,
    extract_features,
)
from retain.survival.km import KMCurve, km_estimate, logrank_test, nelson_aalen
from retain.survival.cox import CoxFit, cox_partial_loglik, cox_gradient, fit_cox
from retain.survival.concordance import concordance_index
from retain.survival.forest import RandomSurvivalForest, fit_forest
from retain.survival.nncox import NeuralCoxNet, fit_nncox, nncox_loglik, nncox_gradient
from retain.survival.models import (
    FittedModel,
    RiskScore,
    fit_model,
    model_from_dict,
    model_to_dict,
    predict_risk,
)

__all__ = [
    "FEATURE_NAMES",
    "SurvivalRecord",
    "build_survival_records",
    "extract_features",
    "KMCurve",
    "km_estimate",
    "logrank_test",
    "nelson_aalen",
    "CoxFit",
    "cox_partial_loglik",
    "cox_gradient",
    "fit_cox",
    "concordance_index",
    "RandomSurvivalForest",
    "fit_forest",
    "NeuralCoxNet",
    "fit_nncox",
    "nncox_loglik",
    "nncox_gradient",
    "FittedModel",
    "RiskScore",
    "fit_model",
    "model_from_dict",
    "model_to_dict",
    "predict_risk",
]
