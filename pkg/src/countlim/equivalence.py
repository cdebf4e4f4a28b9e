"""Side-by-side comparison of the hybrid CLs and marginal Bayesian limits.

Both limits are computed on one shared sample set, so for models whose
signal responses are all identity the two criteria are the same function
of the strength parameter and the limits must coincide to solver
precision. A genuinely uncertain signal breaks that cancellation and the
limits are expected to differ; the size of the gap is model-dependent and
is reported, never thresholded.
"""

from __future__ import annotations

from dataclasses import dataclass

from .marginal import (
    Integrator,
    SampleSet,
    bayesian_marginal_upper_limit,
    draw_samples,
    hybrid_cls_upper_limit,
)
from .model import CountingModel
from .solver import LimitRequest

__all__ = ["EquivalenceReport", "compare_limits"]

VERDICT_EQUIVALENT = "equivalent_within_tol"
VERDICT_EXPECTED = "divergent_as_expected"
VERDICT_UNEXPECTED = "unexpected_divergence"


@dataclass(frozen=True)
class EquivalenceReport:
    """Outcome of one comparison.

    ``signal_uncertain`` is decided syntactically (any non-identity signal
    response), matching the condition under which the methods are supposed
    to part ways. ``mc_stderr`` is the hybrid limit's Monte Carlo standard
    error when applicable.
    """

    mu_up_cls: float
    mu_up_bayes: float
    rel_diff: float
    signal_uncertain: bool
    verdict: str
    tol: float
    mc_stderr: float | None = None

    def to_dict(self) -> dict:
        return {
            "mu_up_cls": self.mu_up_cls,
            "mu_up_bayes": self.mu_up_bayes,
            "rel_diff": self.rel_diff,
            "signal_uncertain": self.signal_uncertain,
            "verdict": self.verdict,
            "tol": self.tol,
            "mc_stderr": self.mc_stderr,
        }


def compare_limits(
    model: CountingModel,
    req: LimitRequest,
    integrator: Integrator,
    tol: float = 1e-6,
    *,
    bayes_samples: SampleSet | None = None,
) -> EquivalenceReport:
    """Run both methods on one shared sample set and classify the outcome.

    ``bayes_samples`` overrides the Bayesian method's sample set and exists
    to let tests and the CLI's debug path demonstrate what a broken
    shared-sample contract looks like.
    """
    if not tol > 0.0:
        raise ValueError(f"tol must be positive, got {tol}")
    samples = draw_samples(model.systematics, integrator)
    res_cls = hybrid_cls_upper_limit(model, req, integrator, samples=samples)
    res_bayes = bayesian_marginal_upper_limit(
        model, req, integrator, samples=bayes_samples if bayes_samples is not None else samples
    )
    a, b = res_cls.mu_up, res_bayes.mu_up
    rel_diff = abs(a - b) / max(a, b)
    signal_uncertain = not model.signal_is_certain
    if rel_diff <= tol:
        verdict = VERDICT_EQUIVALENT
    elif signal_uncertain:
        verdict = VERDICT_EXPECTED
    else:
        verdict = VERDICT_UNEXPECTED
    return EquivalenceReport(
        mu_up_cls=a,
        mu_up_bayes=b,
        rel_diff=rel_diff,
        signal_uncertain=signal_uncertain,
        verdict=verdict,
        tol=tol,
        mc_stderr=res_cls.mu_up_stderr,
    )
