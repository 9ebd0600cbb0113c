"""Estimate true degrees of nodes seen through induced subgraph sampling."""
from .estimators import (
    EstimateVector,
    Estimator,
    PriorSupportError,
    bayes_estimate,
    bayes_estimates,
    bayes_poisson_closed_form,
    empirical_bayes_estimate,
    estimate_lambda_hat,
    make_estimator,
    mme,
    multivariate_risk_minimizer,
    optimal_univariate_coefficient,
    plug_in_mrm,
    univariate_plugin,
    univariate_risk_minimizer,
)
from .graph import (
    Graph,
    common_neighbor_matrix,
    degree_vector,
    from_edges,
    generate_er,
    generate_power_law,
    load_edge_list,
    write_edge_list,
)
from .priors import BinomialKernel, ExplicitPrior, PoissonPrior, PowerLawPrior
from .risk import (
    RiskReport,
    check_prop1,
    check_prop2_class,
    check_prop3_conditions,
    eb_approximation_check,
    exact_poisson_dominance_interval,
    exact_univariate_risk,
    monte_carlo_l2_risk,
    poisson_bayes_dominance_interval,
    restricted_monte_carlo_risk,
)
from .sampling import SampleResult, induced_subgraph_sample, observed_degrees

__version__ = "0.1.0"
