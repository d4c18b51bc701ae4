"""Fair representation learning with provable, classifier-independent
fairness certificates: statistical-parity and disparate-impact upper
bounds valid for any downstream decision built on the cleaned data,
plus quantified costs to individual fairness, target utility, and the
price of separating the data producer from the data user."""

from .certificates import (
    CertificateReport,
    LipschitzConstants,
    assemble_report,
    di_certificate,
    estimate_eta_f,
    individual_fairness_bound,
    mistrust_bound,
    sp_certificate_ber,
    sp_certificate_entropy,
    utility_bound,
)
from .metrics import (
    CostParams,
    DecisionRule,
    Orientation,
    balanced_error_rate,
    combined_risk,
    cost_sensitive_risk,
    disparate_impact,
    individual_unfairness,
    reconstruction_stats,
    statistical_parity,
)
from .probability import (
    DiscreteJoint,
    binary_entropy,
    conditional_entropy,
    empirical_joint,
    inverse_binary_entropy,
    marginal_s,
)

__all__ = [
    "CertificateReport",
    "CostParams",
    "DecisionRule",
    "DiscreteJoint",
    "LipschitzConstants",
    "Orientation",
    "assemble_report",
    "balanced_error_rate",
    "binary_entropy",
    "combined_risk",
    "conditional_entropy",
    "cost_sensitive_risk",
    "di_certificate",
    "disparate_impact",
    "empirical_joint",
    "estimate_eta_f",
    "individual_fairness_bound",
    "individual_unfairness",
    "inverse_binary_entropy",
    "marginal_s",
    "mistrust_bound",
    "reconstruction_stats",
    "sp_certificate_ber",
    "sp_certificate_entropy",
    "statistical_parity",
    "utility_bound",
]

__version__ = "0.1.0"
