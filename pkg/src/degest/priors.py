"""Degree priors and observation kernels for the Bayes estimators."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import gammaln, xlogy
from scipy.stats import binom

__all__ = [
    "DegreePrior",
    "PoissonPrior",
    "PowerLawPrior",
    "ExplicitPrior",
    "point_mass",
    "uniform_prior",
    "read_pmf_csv",
    "parse_prior",
    "PriorSpecError",
    "SamplingKernel",
    "BinomialKernel",
]

DEFAULT_TRUNCATION = 1e-12
_TINY = 1e-300


class PriorSpecError(ValueError):
    pass


class DegreePrior:
    """Base class: a pmf over non-negative integer degrees.

    Subclasses supply ``log_pmf`` and the support ``[lower, upper]``;
    ``upper`` is ``None`` for unbounded support.
    """

    truncation: float = DEFAULT_TRUNCATION
    normalized: bool = True

    @property
    def lower(self) -> int:
        raise NotImplementedError

    @property
    def upper(self) -> int | None:
        raise NotImplementedError

    @property
    def label(self) -> str:
        raise NotImplementedError

    def log_pmf(self, d) -> np.ndarray:
        raise NotImplementedError

    def pmf(self, d) -> np.ndarray:
        return np.exp(self.log_pmf(d))

    def effective_upper(self) -> int:
        """Finite degree beyond which the prior mass is negligible."""
        if self.upper is None:
            raise NotImplementedError
        return self.upper


@dataclass(frozen=True)
class PoissonPrior(DegreePrior):
    lam: float
    truncation: float = DEFAULT_TRUNCATION

    def __post_init__(self):
        if not self.lam >= 0:
            raise PriorSpecError(f"Poisson rate must be >= 0, got {self.lam}")

    @property
    def lower(self):
        return 0

    @property
    def upper(self):
        # a zero rate is a point mass at 0
        return 0 if self.lam == 0 else None

    @property
    def label(self):
        return f"poisson_{self.lam:g}"

    def log_pmf(self, d):
        d = np.asarray(d, dtype=float)
        out = xlogy(d, self.lam) - self.lam - gammaln(d + 1)
        return np.where(d >= 0, out, -np.inf)

    def effective_upper(self):
        # mass beyond this point is below 1e-300
        return int(self.lam + 40 * math.sqrt(self.lam) + 60)


@dataclass(frozen=True)
class PowerLawPrior(DegreePrior):
    """pmf proportional to ``d**-exponent`` on ``d_min..d_max``.

    ``exponent=0`` gives a uniform prior, for which ``d_min=0`` is allowed.
    """

    exponent: float
    d_min: int
    d_max: int
    truncation: float = DEFAULT_TRUNCATION

    def __post_init__(self):
        if self.d_max < self.d_min:
            raise PriorSpecError("power-law support is empty")
        if self.d_min < 0 or (self.d_min == 0 and self.exponent != 0):
            raise PriorSpecError("power-law support must start at 1 unless exponent is 0")
        d = np.arange(self.d_min, self.d_max + 1, dtype=float)
        log_w = -self.exponent * np.log(d) if self.exponent else np.zeros_like(d)
        top = log_w.max()
        object.__setattr__(self, "_log_norm", top + math.log(np.exp(log_w - top).sum()))

    @property
    def lower(self):
        return self.d_min

    @property
    def upper(self):
        return self.d_max

    @property
    def label(self):
        return f"powerlaw_{self.exponent:g}_{self.d_min}_{self.d_max}"

    def log_pmf(self, d):
        d = np.asarray(d, dtype=float)
        inside = (d >= self.d_min) & (d <= self.d_max)
        with np.errstate(divide="ignore", invalid="ignore"):
            core = -self.exponent * np.log(np.where(d > 0, d, 1.0))
        return np.where(inside, core - self._log_norm, -np.inf)


@dataclass(frozen=True, eq=False)
class ExplicitPrior(DegreePrior):
    """Tabulated pmf over ``0..len(probs)-1``.

    Unnormalised tables are rejected unless ``allow_unnormalized`` is set;
    that is meant for sup-norm perturbation experiments only.
    """

    probs: np.ndarray
    allow_unnormalized: bool = False
    name: str = "explicit"
    truncation: float = DEFAULT_TRUNCATION

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float).ravel()
        if len(probs) == 0:
            raise PriorSpecError("explicit pmf is empty")
        if np.any(probs < 0) or not np.all(np.isfinite(probs)):
            raise PriorSpecError("explicit pmf entries must be finite and >= 0")
        total = probs.sum()
        if abs(total - 1) > 1e-9 and not self.allow_unnormalized:
            raise PriorSpecError(f"explicit pmf sums to {total!r}, not 1")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "normalized", abs(total - 1) <= 1e-9)

    @property
    def lower(self):
        return int(np.flatnonzero(self.probs)[0]) if self.probs.any() else 0

    @property
    def upper(self):
        return len(self.probs) - 1

    @property
    def label(self):
        return self.name

    def log_pmf(self, d):
        d = np.asarray(d)
        idx = np.clip(d, 0, len(self.probs) - 1).astype(np.int64)
        inside = (d >= 0) & (d < len(self.probs))
        with np.errstate(divide="ignore"):
            return np.where(inside, np.log(self.probs[idx]), -np.inf)


def point_mass(K: int) -> ExplicitPrior:
    probs = np.zeros(K + 1)
    probs[K] = 1.0
    return ExplicitPrior(probs, name=f"point_{K}")


def uniform_prior(lo: int, hi: int) -> PowerLawPrior:
    return PowerLawPrior(0.0, lo, hi)


def read_pmf_csv(path) -> ExplicitPrior:
    """Read rows ``d,probability``; a non-numeric first row is taken as a header."""
    path = Path(path)
    rows = []
    with path.open(newline="", encoding="utf-8") as fh:
        for i, row in enumerate(csv.reader(fh), 1):
            if not row or not "".join(row).strip():
                continue
            try:
                rows.append((int(row[0]), float(row[1])))
            except (ValueError, IndexError):
                if i == 1:
                    continue
                raise PriorSpecError(f"{path}:{i}: expected 'd,probability'") from None
    if not rows:
        raise PriorSpecError(f"{path}: no pmf rows")
    top = max(d for d, _ in rows)
    probs = np.zeros(top + 1)
    for d, q in rows:
        if d < 0:
            raise PriorSpecError(f"{path}: negative degree {d}")
        probs[d] += q
    return ExplicitPrior(probs, name=f"explicit_{path.stem}")


def parse_prior(spec: str, base_dir=None) -> DegreePrior:
    """Parse ``kind=poisson lambda=99.9`` style prior descriptions."""
    fields = {}
    for token in spec.replace(",", " ").split():
        key, sep, value = token.partition("=")
        if not sep:
            raise PriorSpecError(f"bad prior token {token!r}; expected key=value")
        fields[key.strip().lower()] = value.strip()
    kind = fields.pop("kind", None)
    try:
        if kind == "poisson":
            return PoissonPrior(float(fields["lambda"]))
        if kind == "powerlaw":
            m = float(fields.get("m", fields.get("alpha", "nan")))
            if math.isnan(m):
                raise KeyError("m")
            return PowerLawPrior(m, int(fields.get("dmin", 1)), int(fields["dmax"]))
        if kind == "explicit":
            path = Path(fields["file"])
            if base_dir is not None and not path.is_absolute():
                path = Path(base_dir) / path
            if not path.exists():
                raise PriorSpecError(f"pmf file not found: {path}")
            return read_pmf_csv(path)
    except KeyError as exc:
        raise PriorSpecError(f"prior {spec!r} is missing parameter {exc.args[0]!r}") from None
    except ValueError as exc:
        if isinstance(exc, PriorSpecError):
            raise
        raise PriorSpecError(f"prior {spec!r}: {exc}") from None
    raise PriorSpecError(f"unknown prior kind {kind!r} in {spec!r}")


class SamplingKernel:
    """Conditional pmf of the observed degree given the true degree."""

    def log_pmf(self, k: int, d) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class BinomialKernel(SamplingKernel):
    """Binomial(d, p) thinning, the kernel of induced subgraph sampling."""

    p: float

    def log_pmf(self, k, d):
        d = np.asarray(d, dtype=float)
        valid = d >= k
        dk = np.where(valid, d - k, 0.0)
        # the gamma-function form loses ~|log C(d,k)| ulps to cancellation;
        # the direct pmf is accurate to a few ulps wherever it is a normal float
        rough = (gammaln(d + 1) - gammaln(k + 1) - gammaln(dk + 1)
                 + xlogy(k, self.p) + xlogy(dk, 1 - self.p))
        direct = binom.pmf(k, np.where(valid, d, k), self.p)
        with np.errstate(divide="ignore"):
            out = np.where(direct > _TINY, np.log(direct), rough)
        return np.where(valid, out, -np.inf)
