from .cox import CoxFit, NoEvents, NoTreatmentVariation, fit_analysis_set, fit_weighted_cox, partial_loglik
from .km import KmCurve, km_estimate
from .logistic import OnTrialModel, SingularInformation, fit_logistic

__all__ = [
    "CoxFit",
    "KmCurve",
    "NoEvents",
    "NoTreatmentVariation",
    "OnTrialModel",
    "SingularInformation",
    "fit_analysis_set",
    "fit_logistic",
    "fit_weighted_cox",
    "km_estimate",
    "partial_loglik",
]
