"""
Degree estimators for nodes observed through induced subgraph sampling.

All estimators take the observed degrees ``d_star`` (or a whole
:class:`~degest.sampling.SampleResult`) and the sampling probability ``p``
and return estimates of the parent-graph degrees.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg as sla

from .priors import BinomialKernel, DegreePrior, PoissonPrior, SamplingKernel
from .sampling import SampleResult

__all__ = [
    "EstimateVector",
    "PriorSupportError",
    "PosteriorSums",
    "mme",
    "univariate_plugin",
    "univariate_risk_minimizer",
    "optimal_univariate_coefficient",
    "plug_in_mrm",
    "multivariate_risk_minimizer",
    "posterior_sums",
    "bayes_estimate",
    "bayes_estimates",
    "bayes_poisson_closed_form",
    "empirical_bayes_estimate",
    "estimate_lambda_hat",
    "Estimator",
    "make_estimator",
    "ESTIMATOR_NAMES",
]


class PriorSupportError(ArithmeticError):
    """The prior puts no mass on degrees compatible with the observation."""


@dataclass(frozen=True, eq=False)
class EstimateVector:
    values: np.ndarray
    estimator_tag: str
    warning: str | None = None

    def __len__(self):
        return len(self.values)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)


def _check_p(p: float) -> None:
    if not 0 < p <= 1:
        raise ValueError(f"sampling probability must lie in (0, 1], got {p}")


def mme(d_star, p: float) -> EstimateVector:
    """Scale-up estimate ``d*/p``."""
    _check_p(p)
    return EstimateVector(np.asarray(d_star, dtype=float) / p, "mme")


def _shrunk_square(d_star, p: float) -> np.ndarray:
    # d^2 / (p (d + 1 - p)); the 0/0 at d = 0, p = 1 takes its limit 0
    d = np.asarray(d_star, dtype=float)
    den = p * (d + 1 - p)
    return np.divide(d * d, den, out=np.zeros_like(d), where=den > 0)


def univariate_plugin(d_star, p: float) -> EstimateVector:
    """Plug-in univariate minimiser before bias correction."""
    _check_p(p)
    return EstimateVector(_shrunk_square(d_star, p), "urm_plugin")


def univariate_risk_minimizer(d_star, p: float) -> EstimateVector:
    """Bias-corrected plug-in of the risk-optimal scalar multiple of ``d*``."""
    _check_p(p)
    return EstimateVector(_shrunk_square(d_star, p) + (1 - p) / p, "urm")


def optimal_univariate_coefficient(d0: float, p: float) -> float:
    """Oracle scalar ``c`` minimising the l2 risk of ``c * d*`` for true degree ``d0``."""
    _check_p(p)
    if d0 < 0:
        raise ValueError("d0 must be non-negative")
    return d0 / (p * d0 + 1 - p)


def _rank_one_quadratic_form(d: np.ndarray, D: np.ndarray) -> tuple[float, str | None]:
    """``d^T (d d^T + D)^+ d`` and an optional warning.

    ``d`` always lies in the column space of the matrix (it is ``A 1`` and
    ``D = A^2``), so the form is well defined even when the matrix is singular.
    """
    M = np.outer(d, d) + D
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", sla.LinAlgWarning)
            x = sla.solve(M, d, assume_a="pos")
        return float(d @ x), None
    except (np.linalg.LinAlgError, sla.LinAlgWarning):
        pass
    x, *_ = np.linalg.lstsq(M, d, rcond=None)
    resid = np.linalg.norm(M @ x - d)
    if resid > 1e-8 * max(np.linalg.norm(d), 1.0):
        raise np.linalg.LinAlgError(f"inconsistent system, residual {resid:.3g}")
    return float(d @ x), "singular system solved by least squares"


def plug_in_mrm(d_star, common_neighbors, p: float) -> EstimateVector:
    """Plug-in multivariate risk minimiser from explicit arrays.

    Solves ``(d d^T + D) x = d`` on the nodes with ``d* > 0`` and returns
    ``(d^T x) d / p`` there.  Nodes with ``d* = 0`` get the univariate
    estimate.  If the system is inconsistent, every node gets the
    univariate estimate and ``warning`` says so.
    """
    _check_p(p)
    d = np.asarray(d_star, dtype=float)
    out = univariate_risk_minimizer(d, p).values.copy()
    active = np.flatnonzero(d > 0)
    if len(active) == 0:
        return EstimateVector(out, "mrm")
    da = d[active]
    D = np.asarray(common_neighbors, dtype=float)[np.ix_(active, active)]
    try:
        q, note = _rank_one_quadratic_form(da, D)
    except np.linalg.LinAlgError as exc:
        return EstimateVector(out, "mrm", f"fell back to univariate estimates: {exc}")
    out[active] = q * da / p
    return EstimateVector(out, "mrm", note)


def multivariate_risk_minimizer(s: SampleResult) -> EstimateVector:
    """Plug-in multivariate risk minimiser on a sample, using its common-neighbour matrix."""
    return plug_in_mrm(s.d_star, s.common_neighbors, s.p)


# ---------------------------------------------------------------------------
# Bayes family
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PosteriorSums:
    """Log of the weighted sums behind a posterior mean.

    ``stop`` records what bounded the summation: ``support`` (the prior's
    own finite support), ``cap`` (the ``N - 1`` degree ceiling) or ``tail``
    (the relative-tail tolerance on an unbounded prior).
    """

    log_num: float
    log_den: float
    first: int
    last: int
    stop: str

    @property
    def mean(self) -> float:
        return math.exp(self.log_num - self.log_den)


_CHUNK = 512
_MAX_TERMS = 10_000_000


def _logsumexp(a: np.ndarray) -> float:
    top = np.max(a) if len(a) else -np.inf
    if not np.isfinite(top):
        return -np.inf
    return float(top + np.log(np.sum(np.exp(a - top))))


def posterior_sums(k: int, p: float, prior: DegreePrior,
                   kernel: SamplingKernel | None = None,
                   N: int | None = None) -> PosteriorSums:
    """Sums of ``d * xi(k; d) * pi(d)`` and ``xi(k; d) * pi(d)`` over ``d >= k``.

    Unbounded priors are summed in increasing ``d`` until the newest
    numerator term falls below ``prior.truncation`` times the running
    numerator for five terms in a row.
    """
    kernel = kernel or BinomialKernel(p)
    k = int(k)
    first = max(k, prior.lower)
    hi, stop = prior.upper, "support"
    if N is not None and (hi is None or hi > N - 1):
        hi, stop = N - 1, "cap"
    if hi is not None and hi < first:
        raise PriorSupportError(
            f"prior puts no mass on degrees >= {k} (support ends at {hi})")

    if hi is not None and hi - first < _MAX_TERMS:
        d = np.arange(first, hi + 1, dtype=float)
        log_w = kernel.log_pmf(k, d) + prior.log_pmf(d)
        with np.errstate(divide="ignore"):
            log_num = _logsumexp(log_w + np.log(d))
        log_den = _logsumexp(log_w)
        last = hi
    else:
        log_tol = math.log(prior.truncation)
        log_num = log_den = -np.inf
        streak, start, last = 0, first, None
        while last is None:
            if start - first > _MAX_TERMS:
                raise ArithmeticError(f"posterior sum for d*={k} did not converge")
            stop_at = start + _CHUNK - 1 if hi is None else min(start + _CHUNK - 1, hi)
            d = np.arange(start, stop_at + 1, dtype=float)
            log_w = kernel.log_pmf(k, d) + prior.log_pmf(d)
            with np.errstate(divide="ignore"):
                log_t = log_w + np.log(d)
            running = np.logaddexp.accumulate(np.concatenate([[log_num], log_t]))[1:]
            with np.errstate(invalid="ignore"):
                small = (log_t - running) < log_tol
            for i, flag in enumerate(small):
                streak = streak + 1 if flag else 0
                if streak >= 5:
                    last = start + i
                    break
            cut = len(d) if last is None else last - start + 1
            log_num = float(running[cut - 1])
            log_den = float(np.logaddexp(log_den, _logsumexp(log_w[:cut])))
            if last is None and hi is not None and stop_at >= hi:
                last = hi
            start = stop_at + 1
        if hi is None or last < hi:
            stop = "tail"
    if not np.isfinite(log_den):
        raise PriorSupportError(
            f"prior assigns no mass to degrees >= observed degree {k}")
    return PosteriorSums(log_num, log_den, first, int(last), stop)


def bayes_estimate(d_star_i: int, p: float, prior: DegreePrior,
                   N: int | None = None) -> float:
    """Posterior mean of the true degree under ``prior`` and binomial thinning."""
    _check_p(p)
    return posterior_sums(d_star_i, p, prior, None, N).mean


def empirical_bayes_estimate(d_star_i: int, p: float, est_prior: DegreePrior,
                             kernel: SamplingKernel | None = None,
                             N: int | None = None) -> float:
    """Posterior mean under an estimated prior and an arbitrary observation kernel."""
    _check_p(p)
    return posterior_sums(d_star_i, p, est_prior, kernel, N).mean


def bayes_estimates(d_star, p: float, prior: DegreePrior,
                    kernel: SamplingKernel | None = None,
                    N: int | None = None) -> np.ndarray:
    """Vectorised posterior means; each distinct observed degree is summed once."""
    _check_p(p)
    d_star = np.asarray(d_star, dtype=np.int64)
    ks, inverse = np.unique(d_star, return_inverse=True)
    means = np.array([posterior_sums(k, p, prior, kernel, N).mean for k in ks])
    return means[inverse] if len(d_star) else np.zeros(0)


def bayes_poisson_closed_form(d_star_i, p: float, lam: float):
    """Posterior mean under a Poisson(lam) prior: the posterior is ``d*`` plus Poisson(lam(1-p))."""
    if lam < 0:
        raise ValueError("lam must be non-negative")
    return np.asarray(d_star_i, dtype=float) + lam * (1 - p)


def estimate_lambda_hat(s: SampleResult, N: int | None = None) -> float:
    """Mean-degree estimate ``N |E*| / C(n, 2)`` from the sampled edge density."""
    N = s.parent_num_nodes if N is None else N
    if N is None:
        raise ValueError("parent size N is required")
    n = s.n
    if n < 2:
        raise ValueError("need at least two sampled nodes")
    return N * s.subgraph.num_edges / (n * (n - 1) / 2)


# ---------------------------------------------------------------------------
# Named estimators acting on whole samples
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Estimator:
    """A named map from a sample to per-node degree estimates."""

    tag: str
    fn: Callable[[SampleResult], np.ndarray]

    def __call__(self, s: SampleResult) -> np.ndarray:
        if s.n == 0:
            return np.zeros(0)
        return np.asarray(self.fn(s), dtype=float)


def _bayes_fn(prior: DegreePrior, cap: bool):
    def fn(s):
        return bayes_estimates(s.d_star, s.p, prior,
                               N=s.parent_num_nodes if cap else None)
    return fn


def _eb_poisson(s: SampleResult) -> np.ndarray:
    lam_hat = estimate_lambda_hat(s) if s.n >= 2 else 0.0
    return bayes_estimates(s.d_star, s.p, PoissonPrior(lam_hat))


ESTIMATOR_NAMES = ("mme", "urm", "urm_plugin", "mrm", "eb_poisson", "bayes")


def make_estimator(name: str, prior: DegreePrior | None = None,
                   tag: str | None = None, cap: bool = False) -> Estimator:
    """Build a named estimator; ``bayes`` needs a ``prior``.

    ``cap`` bounds Bayes sums at ``N - 1`` using the parent size recorded in
    the sample.
    """
    if name == "mme":
        return Estimator(tag or "mme", lambda s: mme(s.d_star, s.p).values)
    if name == "urm":
        return Estimator(tag or "urm", lambda s: univariate_risk_minimizer(s.d_star, s.p).values)
    if name == "urm_plugin":
        return Estimator(tag or "urm_plugin", lambda s: univariate_plugin(s.d_star, s.p).values)
    if name == "mrm":
        return Estimator(tag or "mrm", lambda s: multivariate_risk_minimizer(s).values)
    if name == "eb_poisson":
        return Estimator(tag or "eb_poisson", _eb_poisson)
    if name == "bayes":
        if prior is None:
            raise ValueError("the bayes estimator needs a prior")
        return Estimator(tag or f"bayes_{prior.label}", _bayes_fn(prior, cap))
    raise ValueError(f"unknown estimator {name!r}; choose from {', '.join(ESTIMATOR_NAMES)}")
