"""
Exact and Monte Carlo risk of the degree estimators, plus executable
checks of the dominance conditions for each estimator family.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import gammaln
from scipy.stats import binom

from .estimators import (
    Estimator,
    bayes_poisson_closed_form,
    mme,
    posterior_sums,
    univariate_risk_minimizer,
)
from .graph import Graph, common_neighbor_matrix, degree_vector
from .priors import DegreePrior, ExplicitPrior
from .sampling import (
    SampleResult,
    derive_seed,
    induced_subgraph_sample,
    inclusion_mask,
)

__all__ = [
    "exact_univariate_risk",
    "Prop1Result",
    "check_prop1",
    "EstimatorRisk",
    "RiskReport",
    "monte_carlo_l2_risk",
    "restricted_monte_carlo_risk",
    "ClassMembership",
    "class_membership",
    "check_prop2_class",
    "tail_square_sum",
    "tail_weighted_mean",
    "Prop3Result",
    "check_prop3_conditions",
    "thinning_sums",
    "EBApproximation",
    "eb_approximation_check",
    "perturb_prior",
    "poisson_bayes_dominance_interval",
    "exact_poisson_dominance_interval",
]

ENUMERATION_LIMIT = 10_000


# ---------------------------------------------------------------------------
# Exact univariate risk
# ---------------------------------------------------------------------------

def _rule(estimator, p: float, lam: float | None):
    if callable(estimator):
        return estimator
    if estimator == "mme":
        return lambda k: mme(k, p).values
    if estimator == "urm":
        return lambda k: univariate_risk_minimizer(k, p).values
    if estimator == "bayes_poisson":
        if lam is None:
            raise ValueError("bayes_poisson needs lam")
        return lambda k: bayes_poisson_closed_form(k, p, lam)
    raise ValueError(f"unsupported estimator {estimator!r}")


def exact_univariate_risk(estimator, d0: int, p: float, lam: float | None = None) -> float:
    """Squared-error risk by enumerating ``d* ~ Binomial(d0, p)``.

    ``estimator`` is ``"mme"``, ``"urm"``, ``"bayes_poisson"`` (with ``lam``)
    or any vectorised map from observed to estimated degree.
    """
    if not 0 <= d0 <= ENUMERATION_LIMIT:
        raise ValueError(f"d0 must lie in 0..{ENUMERATION_LIMIT}")
    est = _rule(estimator, p, lam)
    k = np.arange(d0 + 1)
    w = binom.pmf(k, d0, p)
    return float(np.sum(w * (est(k) - d0) ** 2))


@dataclass(frozen=True)
class Prop1Result:
    condition_holds: bool
    risk_urm: float
    risk_mme: float

    @property
    def urm_better(self) -> bool:
        return self.risk_urm < self.risk_mme


def check_prop1(d0: int, p: float) -> Prop1Result:
    """Is ``d0 > (1-p)/p``, and what are the exact URM and MME risks?"""
    return Prop1Result(d0 > (1 - p) / p,
                       exact_univariate_risk("urm", d0, p),
                       exact_univariate_risk("mme", d0, p))


# ---------------------------------------------------------------------------
# Monte Carlo l2 risk
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class EstimatorRisk:
    l2_distance_per_replicate: np.ndarray
    l2_distance_mean: float
    replicates: int


@dataclass(eq=False)
class RiskReport:
    per_estimator: dict[str, EstimatorRisk]
    metadata: dict = field(default_factory=dict)
    accepted: np.ndarray | None = None
    empty: np.ndarray | None = None

    @property
    def acceptance_fraction(self) -> float:
        return float(np.mean(self.accepted)) if self.accepted is not None and len(self.accepted) else 1.0

    @property
    def empty_replicates(self) -> int:
        return int(np.sum(self.empty)) if self.empty is not None else 0

    def means(self) -> dict[str, float]:
        return {tag: r.l2_distance_mean for tag, r in self.per_estimator.items()}

    CSV_COLUMNS = ("graph_id", "model", "N", "p_e_or_s", "m", "p",
                   "estimator", "replicate", "l2_distance")

    def csv_rows(self):
        meta = self.metadata
        base = [meta.get("graph_id", ""), meta.get("model", ""), meta.get("N", ""),
                meta.get("p_e_or_s", ""), meta.get("m", ""), meta.get("p", "")]
        for tag, risk in self.per_estimator.items():
            for r, dist in enumerate(risk.l2_distance_per_replicate.tolist()):
                yield base + [tag, r, repr(float(dist))]
            yield base + [tag, "mean", repr(risk.l2_distance_mean)]

    def to_csv(self, sink, header: bool = True) -> None:
        writer = csv.writer(sink, lineterminator="\r\n")
        if header:
            writer.writerow(self.CSV_COLUMNS)
        writer.writerows(self.csv_rows())


def _replicate(g: Graph, p: float, estimators: Sequence[Estimator], seed: int, r: int,
               membership) -> tuple[np.ndarray, bool, bool]:
    s = induced_subgraph_sample(g, p, derive_seed(seed, r))
    if s.n == 0:
        return np.zeros(len(estimators)), membership is None or bool(membership(s)), True
    if membership is not None and not membership(s):
        return np.zeros(len(estimators)), False, False
    truth = np.asarray(g.degrees)[s.parent_ids].astype(float)
    dists = np.array([math.sqrt(float(np.sum((est(s) - truth) ** 2))) for est in estimators])
    return dists, True, False


def restricted_monte_carlo_risk(g: Graph, p: float, estimators: Sequence[Estimator],
                                replicates: int, seed: int,
                                membership: Callable[[SampleResult], bool] | None,
                                threads: int = 1, metadata: dict | None = None) -> RiskReport:
    """Mean Euclidean error over induced samples, counting only samples in a class.

    Replicates outside the class contribute distance 0.  Replicate ``r``
    uses a seed derived from ``(seed, r)`` and results are collected in
    replicate order, so the report does not depend on ``threads``.
    """
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    estimators = list(estimators)
    tags = [e.tag for e in estimators]
    if len(set(tags)) != len(tags):
        raise ValueError(f"duplicate estimator tags: {tags}")

    def work(r):
        return _replicate(g, p, estimators, seed, r, membership)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, range(replicates)))
    else:
        results = [work(r) for r in range(replicates)]
    dist = np.array([res[0] for res in results]).reshape(replicates, len(estimators))
    accepted = np.array([res[1] for res in results])
    empty = np.array([res[2] for res in results])
    per = {}
    for j, tag in enumerate(tags):
        col = np.ascontiguousarray(dist[:, j])
        col.setflags(write=False)
        per[tag] = EstimatorRisk(col, float(np.mean(col)), replicates)
    meta = {"N": g.num_nodes, "p": p, "seed": seed, "replicates": replicates}
    meta.update(metadata or {})
    return RiskReport(per, meta, accepted, empty)


def monte_carlo_l2_risk(g: Graph, p: float, estimators: Sequence[Estimator],
                        replicates: int, seed: int, threads: int = 1,
                        metadata: dict | None = None) -> RiskReport:
    """Mean Euclidean distance between estimated and true degrees of sampled nodes."""
    return restricted_monte_carlo_risk(g, p, estimators, replicates, seed, None,
                                       threads=threads, metadata=metadata)


# ---------------------------------------------------------------------------
# Multivariate estimator: sampled-graph classes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ClassMembership:
    in_G1: bool
    in_G2: bool
    max_feasible_alpha0: float
    lhs: float
    rhs: float
    lambda_min: float
    d_matrix: str
    overlaps: tuple = ()
    rhs_sampled: float = float("nan")
    rhs_true: float = float("nan")

    @property
    def in_both(self) -> bool:
        return self.in_G1 and self.in_G2


def class_membership(d_star, d_sampled, num_edges: int, p: float, alpha0: float,
                     true_degrees, d_true=None, d_matrix: str = "true") -> ClassMembership:
    """Eigenvector-overlap and sparsity conditions on explicit arrays.

    Overlaps use ``|1^T v|`` since eigenvector signs are arbitrary.  The
    smallest eigenvalue on the right-hand side comes from ``d_true`` or
    ``d_sampled`` per ``d_matrix``; both variants are reported when available.
    """
    d = np.asarray(d_star, dtype=float)
    n = len(d)
    nan = float("nan")
    if n == 0 or np.any(d < 1):
        return ClassMembership(False, False, 0.0, nan, nan, nan, d_matrix)
    M = np.outer(d, d) + np.asarray(d_sampled, dtype=float)
    _, vecs = np.linalg.eigh(M)
    overlaps = np.abs(vecs.sum(axis=0))
    max_alpha = float(min(1.0, overlaps.min() / math.sqrt(n)))
    in_g1 = bool(np.all(overlaps >= math.sqrt(n) * alpha0 - 1e-12))

    if num_edges == 0:
        lhs = math.inf if alpha0 > 0 else 0.0
    else:
        lhs = n ** 3 * alpha0 ** 2 / (num_edges * (2 * num_edges / (n - 1) + n))
    norm_sq = float(np.sum(np.asarray(true_degrees, dtype=float) ** 2))

    def rhs_for(D):
        lam_min = float(np.linalg.eigvalsh(np.asarray(D, dtype=float))[0])
        return 1 - (1 - p) * lam_min / norm_sq, lam_min

    rhs_s, lam_s = rhs_for(d_sampled)
    rhs_t, lam_t = rhs_for(d_true) if d_true is not None else (nan, nan)
    if d_matrix == "true":
        if d_true is None:
            raise ValueError("d_matrix='true' needs the true common-neighbour matrix")
        rhs, lam_min = rhs_t, lam_t
    elif d_matrix == "sampled":
        rhs, lam_min = rhs_s, lam_s
    else:
        raise ValueError("d_matrix must be 'true' or 'sampled'")
    return ClassMembership(in_g1, bool(lhs >= rhs), max_alpha, lhs, rhs, lam_min, d_matrix,
                           tuple(overlaps.tolist()), rhs_s, rhs_t)


def check_prop2_class(s: SampleResult, alpha0: float, true_degrees=None,
                      parent: Graph | None = None, d_matrix: str = "true") -> ClassMembership:
    """Class membership of a sample; ``parent`` supplies the true matrices."""
    if true_degrees is None:
        if parent is None:
            raise ValueError("need true_degrees or parent")
        true_degrees = degree_vector(parent, s.parent_ids)
    d_true = common_neighbor_matrix(parent, s.parent_ids) if parent is not None else None
    if d_true is None and d_matrix == "true":
        d_matrix = "sampled"
    return class_membership(s.d_star, s.common_neighbors, s.subgraph.num_edges, s.p,
                            alpha0, true_degrees, d_true, d_matrix)


# ---------------------------------------------------------------------------
# Bayes estimator: prior tail conditions
# ---------------------------------------------------------------------------

def _support_grid(prior: DegreePrior, start: int, N: int | None = None) -> np.ndarray:
    top = prior.effective_upper()
    if N is not None:
        top = min(top, N - 1)
    return np.arange(max(start, prior.lower), top + 1, dtype=float)


def tail_square_sum(prior: DegreePrior, k: int) -> float:
    """Sum of ``pi(d)**2`` over ``d >= k``."""
    d = _support_grid(prior, k)
    return float(np.sum(prior.pmf(d) ** 2)) if len(d) else 0.0


def _log_thinning(k: int, d: np.ndarray, p: float) -> np.ndarray:
    # log of C(d, k) (1-p)^d
    return gammaln(d + 1) - gammaln(k + 1) - gammaln(d - k + 1) + d * math.log1p(-p)


def tail_weighted_mean(prior: DegreePrior, k: int, p: float, N: int | None = None) -> float:
    """Posterior-weighted mean of the prior over ``d >= k``.

    Weights are ``C(d, k) (1-p)^d``.  Without ``N`` the weight total is the
    closed-form infinite sum ``(1-p)^k / p^(k+1)``; with ``N`` both sums stop
    at ``N - 1``.
    """
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    d = _support_grid(prior, k, N)
    if len(d):
        log_num = np.logaddexp.reduce(_log_thinning(k, d, p) + prior.log_pmf(d))
    else:
        log_num = -np.inf
    if N is None:
        log_den = k * math.log1p(-p) - (k + 1) * math.log(p)
    else:
        full = np.arange(k, N, dtype=float)
        if not len(full):
            return float("nan")
        log_den = np.logaddexp.reduce(_log_thinning(k, full, p))
    return float(math.exp(log_num - log_den))


@dataclass(frozen=True, eq=False)
class Prop3Result:
    """Outcome of the two prior-tail conditions for one node.

    ``cond6`` is ``None`` when the true degree exceeds ``(N - 1)/2`` and the
    condition does not apply.  ``cond7`` uses the unbounded weight total;
    ``cond7_capped_fraction`` gives the ``N - 1``-capped reading.
    """

    cond6: bool | None
    cond7: bool
    d0: int
    expected_tail_sq_mc: float
    expected_tail_sq_exact: float
    cond6_rhs: float
    cond6_exact: bool | None
    d_star: np.ndarray
    tail_sq: np.ndarray
    cond7_lhs: np.ndarray
    cond7_fraction: float
    cond7_capped_fraction: float


def check_prop3_conditions(prior: DegreePrior, g: Graph, node: int, p: float,
                           replicates: int, seed: int) -> Prop3Result:
    """Evaluate both prior-tail conditions for ``node`` over induced samples containing it.

    The expectation in the first condition is estimated by Monte Carlo
    over samples (conditioning on the node being kept) and also computed
    exactly by enumerating ``d* ~ Binomial(d0, p)``.
    """
    N = g.num_nodes
    d0 = int(g.degrees[node])
    nbrs = g.neighbors(node)
    d_star = np.empty(replicates, dtype=np.int64)
    for r in range(replicates):
        keep = inclusion_mask(N, p, derive_seed(seed, r))
        keep[node] = True
        d_star[r] = int(keep[nbrs].sum())

    cache = {}

    def tail_sq(k):
        if k not in cache:
            cache[k] = tail_square_sum(prior, k)
        return cache[k]

    sq = np.array([tail_sq(int(k)) for k in d_star])
    ks = np.arange(d0 + 1)
    exact = float(np.sum(binom.pmf(ks, d0, p) * np.array([tail_sq(int(k)) for k in ks])))
    applicable = d0 <= (N - 1) / 2
    rhs = p * (1 - p) * d0 / (N - 1 - d0) ** 2 if N - 1 - d0 > 0 else math.inf
    mc = float(np.mean(sq))

    lhs7, lhs7_cap = {}, {}
    for k in np.unique(d_star):
        lhs7[k] = tail_weighted_mean(prior, int(k), p)
        lhs7_cap[k] = tail_weighted_mean(prior, int(k), p, N)
    per_rep = np.array([lhs7[k] for k in d_star])
    per_rep_cap = np.array([lhs7_cap[k] for k in d_star])
    tol = 1e-12 * p
    frac = float(np.mean(per_rep >= p - tol))
    frac_cap = float(np.mean(per_rep_cap >= p - tol))
    return Prop3Result(
        cond6=(mc <= rhs) if applicable else None,
        cond7=frac == 1.0,
        d0=d0,
        expected_tail_sq_mc=mc,
        expected_tail_sq_exact=exact,
        cond6_rhs=rhs,
        cond6_exact=(exact <= rhs) if applicable else None,
        d_star=d_star,
        tail_sq=sq,
        cond7_lhs=per_rep,
        cond7_fraction=frac,
        cond7_capped_fraction=frac_cap,
    )


# ---------------------------------------------------------------------------
# Empirical Bayes: sensitivity to the estimated prior
# ---------------------------------------------------------------------------

def thinning_sums(prior: DegreePrior, k: int, p: float) -> tuple[float, float]:
    """``(sum C(d,k)(1-p)^d pi(d), sum d C(d,k)(1-p)^d pi(d))`` over ``d >= k``."""
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    sums = posterior_sums(k, p, prior)
    # the binomial kernel carries p^k (1-p)^-k relative to C(d,k)(1-p)^d
    shift = k * (math.log1p(-p) - math.log(p))
    return math.exp(sums.log_den + shift), math.exp(sums.log_num + shift)


@dataclass(frozen=True)
class EBApproximation:
    """Both sides of the three perturbation bounds.

    ``zeroth_*`` concerns the weight total, ``first_*`` the degree-weighted
    total and ``relative_*`` the relative change of the posterior mean.
    """

    zeroth_diff: float
    zeroth_bound: float
    first_diff: float
    first_bound: float
    relative_change: float
    relative_bound: float
    sup_distance: float

    @property
    def zeroth_holds(self) -> bool:
        return self.zeroth_diff < self.zeroth_bound

    @property
    def first_holds(self) -> bool:
        return self.first_diff < self.first_bound

    @property
    def ratio_bound_holds(self) -> bool:
        return self.relative_change < self.relative_bound

    @property
    def all_hold(self) -> bool:
        return self.zeroth_holds and self.first_holds and self.ratio_bound_holds


def perturb_prior(prior: DegreePrior, epsilon: float, mode: str = "uniform",
                  d_range: tuple[int, int] = (0, 20)) -> ExplicitPrior:
    """Shift ``prior`` by ``epsilon`` on ``d_range`` (unnormalised result).

    ``uniform`` adds ``+epsilon`` everywhere in the range; ``adversarial``
    subtracts it below the prior mean and adds it above.  Entries are
    clipped at zero, so the sup-norm distance never exceeds ``epsilon``.
    """
    top = max(prior.effective_upper(), d_range[1])
    d = np.arange(top + 1)
    probs = prior.pmf(d)
    inside = (d >= d_range[0]) & (d <= d_range[1])
    if mode == "uniform":
        shift = np.where(inside, epsilon, 0.0)
    elif mode == "adversarial":
        mean = float(np.dot(d, probs) / probs.sum())
        shift = np.where(inside, np.where(d <= mean, -epsilon, epsilon), 0.0)
    else:
        raise ValueError("mode must be 'uniform' or 'adversarial'")
    return ExplicitPrior(np.maximum(probs + shift, 0.0), allow_unnormalized=True,
                         name=f"{prior.label}_{mode}_{epsilon:g}")


def _sup_distance(a: DegreePrior, b: DegreePrior) -> float:
    top = max(a.effective_upper(), b.effective_upper())
    d = np.arange(0, top + 1)
    return float(np.max(np.abs(a.pmf(d) - b.pmf(d))))


def eb_approximation_check(prior: DegreePrior, perturbed: DegreePrior, epsilon: float,
                           d_star: int, p: float) -> EBApproximation:
    """Compare Bayes and empirical-Bayes sums against their sup-norm perturbation bounds."""
    sup = _sup_distance(prior, perturbed)
    if sup > epsilon * (1 + 1e-9):
        raise ValueError(f"priors differ by {sup:.3g} in sup norm, more than epsilon={epsilon}")
    k = int(d_star)
    s0, s1 = thinning_sums(prior, k, p)
    t0, t1 = thinning_sums(perturbed, k, p)
    scale = epsilon * (1 - p) ** k
    zeroth_bound = scale / p ** (k + 1)
    first_bound = scale * (k + 1 - p) / p ** (k + 2)
    bayes = s1 / s0
    emp = t1 / t0
    relative_bound = zeroth_bound / s1 + first_bound / s0
    return EBApproximation(abs(t0 - s0), zeroth_bound, abs(t1 - s1), first_bound,
                           abs(emp - bayes) / bayes, relative_bound, sup)


# ---------------------------------------------------------------------------
# Poisson prior: dominance interval
# ---------------------------------------------------------------------------

def poisson_bayes_dominance_interval(lam: float, p: float) -> tuple[float, float]:
    """Published interval of true degrees on which the Poisson-prior Bayes rule beats scale-up.

    ``lam + (1+p)/p * (1/2 -+ sqrt(lam p/(1+p) + 1))``.  This is wider than
    the exact region; see :func:`exact_poisson_dominance_interval`.
    """
    if lam < 0 or not 0 < p <= 1:
        raise ValueError("need lam >= 0 and 0 < p <= 1")
    c = (1 + p) / p
    root = math.sqrt(lam * p / (1 + p) + 1)
    return lam + c * (0.5 - root), lam + c * (0.5 + root)


def exact_poisson_dominance_interval(lam: float, p: float) -> tuple[float, float]:
    """Open interval where the Poisson-prior Bayes risk is strictly below the scale-up risk.

    Solves ``p(1-p)d + (1-p)^2 (d - lam)^2 < d(1-p)/p``, i.e.
    ``(d - lam)^2 < d (1+p)/p``.
    """
    if lam < 0 or not 0 < p < 1:
        raise ValueError("need lam >= 0 and 0 < p < 1")
    c = (1 + p) / p
    root = math.sqrt(lam * p / (1 + p) + 0.25)
    return lam + c * (0.5 - root), lam + c * (0.5 + root)
