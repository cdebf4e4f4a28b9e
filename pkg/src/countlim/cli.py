"""Batch command-line front end.

Three commands: ``limit`` solves upper limits, ``scan`` tabulates the
exclusion or posterior curves to CSV, ``equivalence`` runs both limit
methods on shared samples and classifies the outcome. Results go to
``--out`` (``-`` for stdout) as JSON or CSV with every float printed to
17 significant digits, so identical invocations produce byte-identical
files. Exit codes: 0 success, 1 configuration or model error, 2 solver
error, 3 unexpected divergence from the ``equivalence`` command.
"""

from __future__ import annotations

import hashlib
import json
import math
import sys
from pathlib import Path

import click
import numpy as np

from . import exact
from .config import load_model
from .equivalence import VERDICT_UNEXPECTED, compare_limits
from .exceptions import ConfigError, ConvergenceError, ModelError, YieldError
from .marginal import (
    Integrator,
    bayesian_marginal_upper_limit,
    draw_samples,
    hybrid_cls_upper_limit,
    scan_quantity,
)
from .solver import LimitRequest

_FAIL_CONFIG = 1
_FAIL_SOLVER = 2
_FAIL_DIVERGENCE = 3


def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    return format(x, ".17g")


def _json_text(obj, indent: int = 0) -> str:
    """JSON with floats at 17 significant digits (round-trippable doubles)."""
    pad = "  " * indent
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, float):
        return _fmt_float(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        body = ",\n".join(
            f"{pad}  {json.dumps(str(key))}: {_json_text(value, indent + 1)}"
            for key, value in obj.items()
        )
        return "{\n" + body + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_json_text(value, indent) for value in obj) + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _write_output(out: str, text: str) -> None:
    if out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8", newline="\n")


def _config_sha256(path: str) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _alpha_from_cl(cl: float) -> float:
    if not 0.0 < cl < 1.0:
        raise ConfigError(f"--cl must be in (0, 1), got {cl}")
    return 1.0 - cl


def _build_integrator(kind: str, samples: int, seed: int, nodes: int) -> Integrator:
    if kind == "mc":
        return Integrator.monte_carlo(samples, seed)
    return Integrator.gauss_hermite(nodes)


def _handle_errors(fn):
    try:
        return fn()
    except (ConfigError, ModelError) as err:
        click.echo(f"error: {err}", err=True)
        sys.exit(_FAIL_CONFIG)
    except (YieldError, ConvergenceError) as err:
        click.echo(f"error: {err}", err=True)
        sys.exit(_FAIL_SOLVER)


_integrator_options = [
    click.option(
        "--integrator",
        "integrator_kind",
        type=click.Choice(["mc", "gh"]),
        default="mc",
        show_default=True,
        help="Marginalisation rule for models with nuisances: Monte Carlo or Gauss-Hermite.",
    ),
    click.option("--samples", type=int, default=10000, show_default=True, help="Monte Carlo sample count."),
    click.option("--seed", type=int, default=0, show_default=True, help="Monte Carlo seed (never read from the environment)."),
    click.option("--nodes", type=int, default=16, show_default=True, help="Gauss-Hermite nodes per nuisance dimension."),
]


def _with_integrator_options(fn):
    for option in reversed(_integrator_options):
        fn = option(fn)
    return fn


@click.group()
def cli():
    """Upper limits for single-channel Poisson counting experiments."""


@cli.command("limit")
@click.argument("config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--method", type=click.Choice(["cls", "bayes", "both"]), default="cls", show_default=True)
@click.option(
    "--cl",
    type=float,
    default=0.95,
    show_default=True,
    help="Confidence (or credibility) level; the solver targets alpha = 1 - CL, "
    "the CLs exclusion threshold and Bayesian upper tail mass.",
)
@_with_integrator_options
@click.option("--tol", type=float, default=1e-9, show_default=True, help="Root-solver relative tolerance.")
@click.option("--out", type=str, default="-", show_default=True, help="Output path, '-' for stdout.")
def cmd_limit(config_path, method, cl, integrator_kind, samples, seed, nodes, tol, out):
    """Solve the upper limit on the signal strength for a model config."""

    def run():
        model = load_model(config_path)
        alpha = _alpha_from_cl(cl)
        try:
            req = LimitRequest(alpha=alpha, rel_tol=tol)
        except ValueError as err:
            raise ConfigError(str(err)) from err
        methods = ["cls", "bayes"] if method == "both" else [method]
        integrator = None
        results = {}
        if model.has_systematics:
            integrator = _build_integrator(integrator_kind, samples, seed, nodes)
            shared = draw_samples(model.systematics, integrator)
            runners = {
                "cls": lambda: hybrid_cls_upper_limit(model, req, integrator, samples=shared),
                "bayes": lambda: bayesian_marginal_upper_limit(model, req, integrator, samples=shared),
            }
        else:
            runners = {
                "cls": lambda: exact.cls_upper_limit(model, req),
                "bayes": lambda: exact.bayesian_upper_limit_closed_form(model, req),
            }
        for name in methods:
            results[name] = runners[name]().to_dict()
        payload = {
            "config_sha256": _config_sha256(config_path),
            "cl": cl,
            "alpha": alpha,
            "method": method,
            "integrator": integrator.to_dict() if integrator is not None else None,
            "results": results,
        }
        if method == "both":
            a = results["cls"]["mu_up"]
            b = results["bayes"]["mu_up"]
            payload["rel_diff"] = abs(a - b) / max(a, b)
        _write_output(out, _json_text(payload) + "\n")

    _handle_errors(run)


@cli.command("scan")
@click.argument("config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--mu-min", type=float, default=0.0, show_default=True)
@click.option("--mu-max", type=float, required=True)
@click.option("--points", type=int, default=101, show_default=True)
@click.option(
    "--quantity",
    type=click.Choice(["cls", "clsb", "clb", "posterior"]),
    default="cls",
    show_default=True,
)
@_with_integrator_options
@click.option("--out", type=str, default="-", show_default=True, help="Output path, '-' for stdout.")
def cmd_scan(config_path, mu_min, mu_max, points, quantity, integrator_kind, samples, seed, nodes, out):
    """Tabulate a quantity on a strength grid as CSV (columns mu,value
    plus stderr for Monte Carlo quantities)."""

    def run():
        if not (0.0 <= mu_min < mu_max):
            raise ConfigError(f"need 0 <= mu-min < mu-max, got [{mu_min}, {mu_max}]")
        if points < 2:
            raise ConfigError(f"--points must be at least 2, got {points}")
        model = load_model(config_path)
        grid = np.linspace(mu_min, mu_max, points)
        if model.has_systematics:
            integrator = _build_integrator(integrator_kind, samples, seed, nodes)
            sample_set = draw_samples(model.systematics, integrator)
            with_stderr = integrator.kind == "monte_carlo"
            values, stderrs = scan_quantity(model, quantity, grid, sample_set, with_stderr)
        else:
            fns = {
                "cls": lambda mu: exact.cls_value(model, mu),
                "clsb": lambda mu: exact.clsb_value(model, mu),
                "clb": lambda mu: exact.clb_value(model),
                "posterior": lambda mu: exact.posterior_density(model, mu),
            }
            values = np.array([fns[quantity](mu) for mu in grid])
            stderrs = None
        lines = ["mu,value,stderr" if stderrs is not None else "mu,value"]
        for i, mu in enumerate(grid):
            row = f"{_fmt_float(mu)},{_fmt_float(values[i])}"
            if stderrs is not None:
                row += f",{_fmt_float(stderrs[i])}"
            lines.append(row)
        _write_output(out, "\n".join(lines) + "\n")

    _handle_errors(run)


@cli.command("equivalence")
@click.argument("config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--cl", type=float, default=0.95, show_default=True)
@_with_integrator_options
@click.option("--tol", type=float, default=1e-6, show_default=True, help="Relative tolerance for declaring the limits equivalent.")
@click.option("--solver-tol", type=float, default=1e-9, show_default=True, help="Root-solver relative tolerance.")
@click.option("--out", type=str, default="-", show_default=True, help="Output path, '-' for stdout.")
@click.option("--debug-seed-offset", type=int, default=0, hidden=True, help="Offset the Bayesian method's Monte Carlo seed, deliberately breaking the shared-sample contract.")
def cmd_equivalence(config_path, cl, integrator_kind, samples, seed, nodes, tol, solver_tol, out, debug_seed_offset):
    """Compare the two limit methods on one shared sample set.

    Exits 3 when the methods diverge although every signal response is the
    identity (which shared samples should make impossible)."""

    def run():
        model = load_model(config_path)
        alpha = _alpha_from_cl(cl)
        try:
            req = LimitRequest(alpha=alpha, rel_tol=solver_tol)
        except ValueError as err:
            raise ConfigError(str(err)) from err
        integrator = _build_integrator(integrator_kind, samples, seed, nodes)
        bayes_samples = None
        if debug_seed_offset:
            if integrator.kind != "monte_carlo":
                raise ConfigError("--debug-seed-offset requires the Monte Carlo integrator")
            shifted = Integrator.monte_carlo(integrator.n_samples, integrator.seed + debug_seed_offset)
            bayes_samples = draw_samples(model.systematics, shifted)
        report = compare_limits(model, req, integrator, tol=tol, bayes_samples=bayes_samples)
        payload = {
            "config_sha256": _config_sha256(config_path),
            "cl": cl,
            "alpha": alpha,
            "integrator": integrator.to_dict(),
            "report": report.to_dict(),
        }
        _write_output(out, _json_text(payload) + "\n")
        if report.verdict == VERDICT_UNEXPECTED:
            sys.exit(_FAIL_DIVERGENCE)

    _handle_errors(run)


def main():
    cli()


if __name__ == "__main__":
    main()
