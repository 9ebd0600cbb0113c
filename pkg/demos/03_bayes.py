"""Posterior-mean estimates under Poisson, power-law and estimated priors."""
from degest import (
    PoissonPrior,
    PowerLawPrior,
    bayes_estimate,
    bayes_poisson_closed_form,
    empirical_bayes_estimate,
    estimate_lambda_hat,
    generate_er,
    induced_subgraph_sample,
)

p, lam = 0.2, 10.0
print("d*  generic  closed form")
for k in (0, 2, 4, 8):
    print(f"{k:2d}  {bayes_estimate(k, p, PoissonPrior(lam)):7.4f}  "
          f"{float(bayes_poisson_closed_form(k, p, lam)):7.4f}")

# a heavy-tailed prior pulls small observations up less than the Poisson one
heavy = PowerLawPrior(2.0, 1, 500)
print("power-law prior, d*=4:", round(bayes_estimate(4, p, heavy), 3))

# empirical Bayes: estimate the Poisson rate from the sample's edge density
g = generate_er(2000, 0.05, seed=5)
s = induced_subgraph_sample(g, 0.3, seed=2)
lam_hat = estimate_lambda_hat(s)
print(f"lambda-hat = {lam_hat:.2f} (true mean degree {g.degrees.mean():.2f})")
print("EB estimate for d*=30:", round(empirical_bayes_estimate(30, 0.3, PoissonPrior(lam_hat)), 2))
