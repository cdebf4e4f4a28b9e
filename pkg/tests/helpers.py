"""Shared model builders for the test suite."""

from countlim import (
    BackgroundProcess,
    CountingModel,
    Nuisance,
    Prior,
    Response,
    SystematicsModel,
)


def plain_model(s=1.0, b=1.5, n_obs=3):
    """Model with fixed yields and no nuisance parameters."""
    backgrounds = (BackgroundProcess("bkg", b),) if b > 0 else ()
    return CountingModel(s_nom=s, backgrounds=backgrounds, n_obs=n_obs)


def bg_systematic_model(s=1.0, b=1.5, n_obs=3, kappa=1.2, prior=None):
    """Background yield with one multiplicative log-normal systematic."""
    prior = prior if prior is not None else Prior.standard_normal()
    return CountingModel(
        s_nom=s,
        backgrounds=(
            BackgroundProcess("bkg", b, {"bscale": Response.log_normal(kappa)}),
        ),
        n_obs=n_obs,
        systematics=SystematicsModel(nuisances=(Nuisance("bscale", prior),)),
    )


def signal_systematic_model(s=1.0, b=1.5, n_obs=3, kappa=1.2):
    """Signal yield with one multiplicative log-normal systematic."""
    return CountingModel(
        s_nom=s,
        backgrounds=(BackgroundProcess("bkg", b),),
        n_obs=n_obs,
        systematics=SystematicsModel(
            nuisances=(Nuisance("sscale", Prior.standard_normal()),),
            signal_responses={"sscale": Response.log_normal(kappa)},
        ),
    )


def identity_systematic_model(s=1.0, b=1.5, n_obs=3, n_nuisances=1):
    """Nuisance parameters present but every response is the identity."""
    nuisances = tuple(
        Nuisance(f"idle{j}", Prior.standard_normal()) for j in range(n_nuisances)
    )
    return CountingModel(
        s_nom=s,
        backgrounds=(BackgroundProcess("bkg", b),),
        n_obs=n_obs,
        systematics=SystematicsModel(nuisances=nuisances),
    )
