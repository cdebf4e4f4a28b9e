"""Limits with nuisance parameters integrated over their priors.

The hybrid CLs criterion averages fixed-nuisance Poisson tail sums over a
sample of the priors; the marginal Bayesian criterion averages the
closed-form credible tail (incomplete-gamma over signal yield) over the
same sample. One :class:`SampleSet` is drawn per solve and reused for
every trial strength, and the equivalence harness shares a single set
across both methods (common random numbers), which makes the agreement
of the two criteria exact in finite samples rather than asymptotic.

Reductions over samples go through ``np.sum``, whose pairwise tree over a
fixed (declaration) sample order keeps results reproducible and
independent of any internal parallelism.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError, ModelError
from .model import CountingModel, SystematicsModel, yields_on_samples
from .special import gamma_q, log_poisson_pmf, poisson_cdf
from .solver import LimitRequest, LimitResult, solve_decreasing

__all__ = [
    "Integrator",
    "NuisanceSample",
    "SampleSet",
    "draw_samples",
    "marginal_likelihood",
    "hybrid_cls",
    "marginal_posterior_tail",
    "marginal_posterior_density",
    "hybrid_cls_upper_limit",
    "bayesian_marginal_upper_limit",
]


@dataclass(frozen=True)
class Integrator:
    """Strategy for discretising the nuisance-prior integrals.

    ``monte_carlo`` draws from the priors with a counter-based Philox
    stream per nuisance, keyed by (seed, nuisance index); ``gauss_hermite``
    builds a tensor-product rule and is valid only when every prior is in
    the normal family.
    """

    kind: str
    n_samples: int = 10000
    seed: int = 0
    nodes_per_dim: int = 16

    def __post_init__(self):
        if self.kind not in ("monte_carlo", "gauss_hermite"):
            raise ConfigError(f"unknown integrator kind {self.kind!r}")
        if self.kind == "monte_carlo":
            if self.n_samples < 1:
                raise ConfigError(f"n_samples must be >= 1, got {self.n_samples}")
            if not 0 <= self.seed < 2**64:
                raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        else:
            if not 2 <= self.nodes_per_dim <= 64:
                raise ConfigError(f"nodes_per_dim must be in [2, 64], got {self.nodes_per_dim}")

    @classmethod
    def monte_carlo(cls, n_samples: int, seed: int) -> "Integrator":
        return cls("monte_carlo", n_samples=int(n_samples), seed=int(seed))

    @classmethod
    def gauss_hermite(cls, nodes_per_dim: int) -> "Integrator":
        return cls("gauss_hermite", nodes_per_dim=int(nodes_per_dim))

    def to_dict(self) -> dict:
        if self.kind == "monte_carlo":
            return {"kind": self.kind, "n_samples": self.n_samples, "seed": self.seed}
        return {"kind": self.kind, "nodes_per_dim": self.nodes_per_dim}


@dataclass(frozen=True)
class NuisanceSample:
    """One integration point: a nuisance vector and its weight."""

    eta: np.ndarray
    weight: float


class SampleSet(Sequence):
    """Weighted nuisance samples, stored columnwise for vectorised use.

    Behaves as a sequence of :class:`NuisanceSample`; the constraint
    densities are absorbed into the sampling measure, so weights sum to
    one and no prior factor is ever multiplied in again.
    """

    def __init__(self, etas: np.ndarray, weights: np.ndarray):
        etas = np.asarray(etas, dtype=float)
        weights = np.asarray(weights, dtype=float)
        if etas.ndim != 2 or weights.ndim != 1 or etas.shape[0] != weights.shape[0]:
            raise ValueError(f"inconsistent sample shapes {etas.shape}, {weights.shape}")
        self.etas = etas
        self.weights = weights

    def __len__(self) -> int:
        return self.etas.shape[0]

    def __getitem__(self, k):
        if isinstance(k, slice):
            return SampleSet(self.etas[k], self.weights[k])
        return NuisanceSample(self.etas[k].copy(), float(self.weights[k]))


def draw_samples(systematics: SystematicsModel, integrator: Integrator) -> SampleSet:
    """Deterministic sample set for (systematics, integrator).

    With no nuisances the set collapses to a single empty point of weight
    one. Gauss-Hermite with any non-normal prior is refused rather than
    run against the wrong measure.
    """
    n_nuis = len(systematics.nuisances)
    if n_nuis == 0:
        return SampleSet(np.zeros((1, 0)), np.ones(1))
    if integrator.kind == "monte_carlo":
        k = integrator.n_samples
        z = np.empty((k, n_nuis))
        for j in range(n_nuis):
            key = np.array([integrator.seed, j], dtype=np.uint64)
            z[:, j] = np.random.Generator(np.random.Philox(key=key)).standard_normal(k)
        weights = np.full(k, 1.0 / k)
    else:
        if not systematics.all_normal_family:
            bad = [nu.name for nu in systematics.nuisances if not nu.prior.is_normal_family]
            raise ConfigError(
                f"gauss_hermite integration requires normal-family priors; "
                f"offending nuisance(s): {bad}"
            )
        x, w = np.polynomial.hermite.hermgauss(integrator.nodes_per_dim)
        nodes = math.sqrt(2.0) * x
        w_norm = w / math.sqrt(math.pi)
        grids = np.meshgrid(*([nodes] * n_nuis), indexing="ij")
        z = np.stack([g.ravel() for g in grids], axis=1)
        w_grids = np.meshgrid(*([w_norm] * n_nuis), indexing="ij")
        weights = np.ones(z.shape[0])
        for g in w_grids:
            weights *= g.ravel()
    weights = weights / np.sum(weights)
    z = systematics.correlate(z)
    etas = np.empty_like(z)
    for j, nu in enumerate(systematics.nuisances):
        etas[:, j] = nu.prior.from_standard_normal(z[:, j])
    return SampleSet(etas, weights)


def _as_sample_set(samples) -> SampleSet:
    if isinstance(samples, SampleSet):
        return samples
    items = list(samples)
    etas = np.stack([np.asarray(s.eta, dtype=float) for s in items])
    weights = np.array([s.weight for s in items], dtype=float)
    return SampleSet(etas, weights)


def marginal_likelihood(model: CountingModel, mu: float, n, samples) -> float:
    """Prior-weighted average of Poisson(n; mu*s(eta) + b(eta))."""
    if mu < 0.0:
        raise ValueError(f"mu must be nonnegative, got {mu}")
    samples = _as_sample_set(samples)
    s, b = yields_on_samples(model, samples.etas)
    pmf = np.exp(log_poisson_pmf(n, mu * s + b))
    return float(np.sum(samples.weights * pmf))


def hybrid_cls(model: CountingModel, mu: float, samples) -> float:
    """Marginalised CLs: averaged tail sums, one sample set for both the
    signal-plus-background numerator and the background-only denominator."""
    if mu < 0.0:
        raise ValueError(f"mu must be nonnegative, got {mu}")
    samples = _as_sample_set(samples)
    s, b = yields_on_samples(model, samples.etas)
    num = np.sum(samples.weights * poisson_cdf(model.n_obs, mu * s + b))
    den = np.sum(samples.weights * poisson_cdf(model.n_obs, b))
    return float(num / den)


def _credible_tail_terms(model: CountingModel, s: np.ndarray, x: np.ndarray) -> np.ndarray:
    # per-sample Q(n_obs + 1; x) / s, the closed-form piece of the
    # marginal posterior tail; a vanishing signal yield at any sample
    # leaves the strength unidentified there
    zero = s == 0.0
    if zero.any():
        k = int(np.argmax(zero))
        raise ModelError(
            f"signal yield is zero at sample {k}; the marginal posterior for mu is degenerate"
        )
    return gamma_q(model.n_obs + 1.0, x) / s


def marginal_posterior_tail(model: CountingModel, mu: float, samples) -> float:
    """Posterior mass above ``mu`` under the uniform strength prior, with
    nuisances marginalised: the Bayesian counterpart of :func:`hybrid_cls`."""
    if mu < 0.0:
        raise ValueError(f"mu must be nonnegative, got {mu}")
    samples = _as_sample_set(samples)
    s, b = yields_on_samples(model, samples.etas)
    num = np.sum(samples.weights * _credible_tail_terms(model, s, mu * s + b))
    den = np.sum(samples.weights * _credible_tail_terms(model, s, b))
    return float(num / den)


def marginal_posterior_density(model: CountingModel, mu: float, samples) -> float:
    """Marginal posterior density of mu; reduces to the exact posterior
    when responses are identity."""
    if mu < 0.0:
        raise ValueError(f"mu must be nonnegative, got {mu}")
    samples = _as_sample_set(samples)
    s, b = yields_on_samples(model, samples.etas)
    num = np.sum(samples.weights * np.exp(log_poisson_pmf(model.n_obs, mu * s + b)))
    den = np.sum(samples.weights * _credible_tail_terms(model, s, b))
    return float(num / den)


def scan_quantity(model: CountingModel, quantity: str, mus, samples, with_stderr: bool):
    """Tabulate a marginal quantity over a strength grid.

    Returns ``(values, stderrs)`` with ``stderrs`` None unless
    ``with_stderr`` (Monte Carlo sample sets only). Quantities: ``cls``,
    ``clsb``, ``clb``, ``posterior``.
    """
    samples = _as_sample_set(samples)
    s, b = yields_on_samples(model, samples.etas)
    w = samples.weights
    n = model.n_obs
    k = len(samples)
    mus = np.asarray(mus, dtype=float)
    if mus.size and float(np.min(mus)) < 0.0:
        raise ValueError("mu grid must be nonnegative")

    def mean_err(terms):
        if not with_stderr or k < 2:
            return None
        return math.sqrt(float(np.var(terms, ddof=1)) / k)

    clb_terms = poisson_cdf(n, b)
    values = np.empty(mus.shape)
    stderrs = np.empty(mus.shape) if with_stderr and k >= 2 else None
    for i, mu in enumerate(mus):
        if quantity == "clsb":
            terms = poisson_cdf(n, mu * s + b)
            values[i] = float(np.sum(w * terms))
            err = mean_err(terms)
        elif quantity == "clb":
            values[i] = float(np.sum(w * clb_terms))
            err = mean_err(clb_terms)
        elif quantity == "cls":
            terms = poisson_cdf(n, mu * s + b)
            values[i] = float(np.sum(w * terms) / np.sum(w * clb_terms))
            err = _ratio_stderr(terms, clb_terms, w) if stderrs is not None else None
        elif quantity == "posterior":
            num_terms = np.exp(log_poisson_pmf(n, mu * s + b))
            den_terms = _credible_tail_terms(model, s, b)
            values[i] = float(np.sum(w * num_terms) / np.sum(w * den_terms))
            err = _ratio_stderr(num_terms, den_terms, w) if stderrs is not None else None
        else:
            raise ValueError(f"unknown scan quantity {quantity!r}")
        if stderrs is not None:
            stderrs[i] = err
    return values, stderrs


def _ratio_stderr(num_terms: np.ndarray, den_terms: np.ndarray, weights: np.ndarray) -> float:
    """Delta-method standard error of a weighted mean ratio (Monte Carlo,
    equal weights)."""
    k = num_terms.size
    if k < 2:
        return 0.0
    a = float(np.sum(weights * num_terms))
    b = float(np.sum(weights * den_terms))
    cov = np.cov(num_terms, den_terms, ddof=1) / k
    var = (a / b) ** 2 * (cov[0, 0] / a**2 + cov[1, 1] / b**2 - 2.0 * cov[0, 1] / (a * b))
    return math.sqrt(max(var, 0.0))


def _attach_mc_stderr(result: LimitResult, criterion, num_terms_at, den_terms, weights) -> LimitResult:
    num_terms = num_terms_at(result.mu_up)
    crit_stderr = _ratio_stderr(num_terms, den_terms, weights)
    h = 1e-5 * result.mu_up
    slope = (criterion(result.mu_up + h) - criterion(result.mu_up - h)) / (2.0 * h)
    mu_stderr = crit_stderr / abs(slope) if slope != 0.0 else math.inf
    return LimitResult(
        result.mu_up,
        result.criterion_at_solution,
        result.iterations,
        result.bracket,
        mu_up_stderr=mu_stderr,
        criterion_stderr=crit_stderr,
    )


def hybrid_cls_upper_limit(
    model: CountingModel,
    req: LimitRequest,
    integrator: Integrator,
    samples: SampleSet | None = None,
) -> LimitResult:
    """Root of the marginalised CLs criterion at ``req.alpha``.

    One sample set is drawn up front and reused for every trial strength;
    pass ``samples`` to share the set with another method.
    """
    if model.s_nom == 0.0:
        raise ModelError("nominal signal yield is zero; the CLs limit is undefined")
    samples = _as_sample_set(samples) if samples is not None else draw_samples(model.systematics, integrator)
    s, b = yields_on_samples(model, samples.etas)
    w = samples.weights
    n = model.n_obs
    den_terms = poisson_cdf(n, b)
    den = np.sum(w * den_terms)

    def num_terms_at(mu: float) -> np.ndarray:
        return poisson_cdf(n, mu * s + b)

    def criterion(mu: float) -> float:
        return float(np.sum(w * num_terms_at(mu)) / den)

    mu_up, crit, evals, bracket = solve_decreasing(criterion, req.alpha, req.rel_tol, req.max_iter)
    result = LimitResult(mu_up, crit, evals, bracket)
    if integrator.kind == "monte_carlo" and len(samples) >= 2:
        result = _attach_mc_stderr(result, criterion, num_terms_at, den_terms, w)
    return result


def bayesian_marginal_upper_limit(
    model: CountingModel,
    req: LimitRequest,
    integrator: Integrator,
    samples: SampleSet | None = None,
) -> LimitResult:
    """Root of the marginal posterior tail at ``req.alpha`` (uniform
    strength prior), sharing ``samples`` with the hybrid method when given."""
    if model.s_nom == 0.0:
        raise ModelError("nominal signal yield is zero; the posterior for mu is improper")
    samples = _as_sample_set(samples) if samples is not None else draw_samples(model.systematics, integrator)
    s, b = yields_on_samples(model, samples.etas)
    w = samples.weights
    den_terms = _credible_tail_terms(model, s, b)
    den = np.sum(w * den_terms)

    def num_terms_at(mu: float) -> np.ndarray:
        return _credible_tail_terms(model, s, mu * s + b)

    def criterion(mu: float) -> float:
        return float(np.sum(w * num_terms_at(mu)) / den)

    mu_up, crit, evals, bracket = solve_decreasing(criterion, req.alpha, req.rel_tol, req.max_iter)
    result = LimitResult(mu_up, crit, evals, bracket)
    if integrator.kind == "monte_carlo" and len(samples) >= 2:
        result = _attach_mc_stderr(result, criterion, num_terms_at, den_terms, w)
    return result
