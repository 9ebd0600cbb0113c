"""Exact risk comparisons and the Poisson dominance interval."""
from degest import (
    check_prop1,
    exact_poisson_dominance_interval,
    exact_univariate_risk,
    poisson_bayes_dominance_interval,
)

# URM beats MME once d0 > (1-p)/p
for d0, p in [(1, 0.9), (20, 0.5), (3, 0.1)]:
    r = check_prop1(d0, p)
    print(f"d0={d0:3d} p={p}: condition {r.condition_holds!s:5s}  "
          f"URM {r.risk_urm:8.4f}  MME {r.risk_mme:8.4f}")

# where does the Poisson-prior Bayes rule beat scale-up?
lam, p = 100, 0.1
lo, hi = poisson_bayes_dominance_interval(lam, p)
elo, ehi = exact_poisson_dominance_interval(lam, p)
print(f"published interval [{lo:.2f}, {hi:.2f}], exact region ({elo:.2f}, {ehi:.2f})")
for d0 in (71, 72, 139, 140):
    rb = exact_univariate_risk("bayes_poisson", d0, p, lam=lam)
    rm = exact_univariate_risk("mme", d0, p)
    print(f"  d0={d0}: Bayes {rb:7.2f}  MME {rm:7.2f}  {'Bayes wins' if rb < rm else 'MME wins'}")
