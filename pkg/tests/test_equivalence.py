import itertools

import pytest

from countlim import (
    BackgroundProcess,
    CountingModel,
    Integrator,
    LimitRequest,
    Nuisance,
    Prior,
    Response,
    SystematicsModel,
    compare_limits,
    draw_samples,
)
from countlim.equivalence import (
    VERDICT_EQUIVALENT,
    VERDICT_EXPECTED,
    VERDICT_UNEXPECTED,
)
from helpers import bg_systematic_model, plain_model, signal_systematic_model


def test_no_systematics_equivalent():
    report = compare_limits(
        plain_model(s=1.0, b=1.5, n_obs=3),
        LimitRequest(alpha=0.05),
        Integrator.monte_carlo(100, 1),
    )
    assert report.verdict == VERDICT_EQUIVALENT
    assert report.rel_diff <= 1e-7
    assert not report.signal_uncertain


def test_background_systematic_equivalent():
    report = compare_limits(
        bg_systematic_model(kappa=1.2),
        LimitRequest(alpha=0.05),
        Integrator.monte_carlo(5000, 7),
    )
    assert report.verdict == VERDICT_EQUIVALENT
    assert not report.signal_uncertain
    assert report.mc_stderr is not None


def test_signal_systematic_diverges():
    report = compare_limits(
        signal_systematic_model(kappa=1.2),
        LimitRequest(alpha=0.05),
        Integrator.gauss_hermite(16),
    )
    assert report.verdict == VERDICT_EXPECTED
    assert report.signal_uncertain
    assert report.rel_diff > 0.0
    assert report.mu_up_bayes != report.mu_up_cls


def test_broken_sample_sharing_is_flagged():
    model = bg_systematic_model(kappa=1.2)
    other = draw_samples(model.systematics, Integrator.monte_carlo(500, 999))
    report = compare_limits(
        model,
        LimitRequest(alpha=0.05),
        Integrator.monte_carlo(500, 1),
        bayes_samples=other,
    )
    assert report.verdict == VERDICT_UNEXPECTED
    assert not report.signal_uncertain


def test_report_deterministic():
    model = bg_systematic_model(kappa=1.3)
    req = LimitRequest(alpha=0.1)
    integ = Integrator.monte_carlo(2000, 123)
    assert compare_limits(model, req, integ) == compare_limits(model, req, integ)


def test_report_serialisable():
    report = compare_limits(
        plain_model(), LimitRequest(alpha=0.05), Integrator.gauss_hermite(4)
    )
    d = report.to_dict()
    assert d["verdict"] == VERDICT_EQUIVALENT
    assert set(d) == {
        "mu_up_cls",
        "mu_up_bayes",
        "rel_diff",
        "signal_uncertain",
        "verdict",
        "tol",
        "mc_stderr",
    }


def test_invalid_tolerance():
    with pytest.raises(ValueError):
        compare_limits(plain_model(), LimitRequest(alpha=0.05), Integrator.gauss_hermite(4), tol=0.0)


def test_sweep_with_certain_signal_never_unexpected():
    # 144 configurations varying count, background, prior, response and
    # threshold; every signal response is identity, so any divergence at
    # all would be a defect
    n_obs_values = (0, 1, 3, 10)
    b_values = (0.5, 1.5, 5.0)
    priors = (Prior.standard_normal(), Prior.normal(0.2, 0.8))
    responses = (Response.log_normal(1.1), Response.log_normal(1.3), Response.linear(0.08))
    alphas = (0.05, 0.1)
    integ = Integrator.gauss_hermite(8)
    combos = list(itertools.product(n_obs_values, b_values, priors, responses, alphas))
    assert len(combos) >= 100
    verdicts = set()
    for n_obs, b, prior, resp, alpha in combos:
        model = CountingModel(
            s_nom=1.0,
            backgrounds=(BackgroundProcess("bkg", b, {"pull": resp}),),
            n_obs=n_obs,
            systematics=SystematicsModel(nuisances=(Nuisance("pull", prior),)),
        )
        report = compare_limits(model, LimitRequest(alpha=alpha), integ)
        verdicts.add(report.verdict)
        assert report.verdict != VERDICT_UNEXPECTED
    assert verdicts == {VERDICT_EQUIVALENT}
