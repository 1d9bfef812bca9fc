"""Multiple testing with global-local shrinkage priors in the sparse normal means model."""

from ._errors import DomainError, NumericError, UnsupportedKernelError, UsageError
from .baselines import (
    BaselineRule,
    TwoGroupsModel,
    bh_procedure,
    decide_ell,
    ell_values,
    mmle_p,
    oracle_threshold,
    quasi_cauchy_density,
)
from .kernels import (
    KernelValidationReport,
    PriorKernel,
    eval_L,
    horseshoe,
    inverse_gamma_kernel,
    kernel_from_name,
    strawderman_berger,
    tpbn_kernel,
    validate_kernel,
)
from .risk import (
    BetaMin,
    RiskEstimate,
    ThetaSpec,
    Varying,
    estimate_risk,
    fdp_fnp,
    generate_theta,
    hamming_loss,
    sample_data,
    theory_targets,
)
from .rules import (
    DecisionRuleSpec,
    DecisionVector,
    EmpiricalBayes,
    FixedTau,
    FullBayes,
    decide_eb,
    decide_fb,
    decide_fixed_tau,
    estimate_tau_eb,
    tau_posterior_weights,
)
from .shrinkage import (
    QuadratureConfig,
    ShrinkageQuery,
    expected_kappa,
    expected_one_minus_kappa,
    importance_oracle,
    large_a_upper_rate,
    log_posterior_kappa_density_unnorm,
    type1_bound_rate,
)

__version__ = "0.1.0"
