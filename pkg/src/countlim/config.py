"""Model configuration files: JSON schema, validation and round-tripping.

Schema (all unknown keys are rejected with path-qualified errors):

    {
      "signal":      {"nominal": number, "responses": {name: response}},
      "backgrounds": [{"name": str, "nominal": number,
                       "responses": {name: response}}],
      "nuisances":   [{"name": str, "prior": prior}],
      "correlation": [[...], ...],          # optional, Gaussian priors only
      "n_obs":       integer
    }

    response: {"kind": "identity"}
            | {"kind": "log_normal", "kappa": number > 0}
            | {"kind": "linear", "delta": number}
    prior:    {"kind": "standard_normal"}
            | {"kind": "normal", "mean": number, "sd": number > 0}
            | {"kind": "log_normal", "mu": number, "sigma": number > 0}
"""

from __future__ import annotations

import json
from pathlib import Path

from .exceptions import ConfigError, ModelError
from .model import (
    BackgroundProcess,
    CountingModel,
    Nuisance,
    Prior,
    Response,
    SystematicsModel,
)

__all__ = ["load_model", "parse_model", "emit_config"]


def _require_mapping(node, path: str) -> dict:
    if not isinstance(node, dict):
        raise ConfigError(f"{path}: expected an object, got {type(node).__name__}")
    return node

def _require_list(node, path: str) -> list:
    if not isinstance(node, list):
        raise ConfigError(f"{path}: expected a list, got {type(node).__name__}")
    return node

def _require_number(node, path: str) -> float:
    if isinstance(node, bool) or not isinstance(node, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {node!r}")
    return float(node)

def _require_int(node, path: str) -> int:
    if isinstance(node, bool) or not isinstance(node, int):
        raise ConfigError(f"{path}: expected an integer, got {node!r}")
    return node

def _require_str(node, path: str) -> str:
    if not isinstance(node, str):
        raise ConfigError(f"{path}: expected a string, got {node!r}")
    return node

def _reject_unknown(node: dict, allowed: set, path: str) -> None:
    for key in node:
        if key not in allowed:
            where = f"{path}.{key}" if path else key
            raise ConfigError(f"{where}: unknown key")

def _take(node: dict, key: str, path: str):
    if key not in node:
        where = f"{path}.{key}" if path else key
        raise ConfigError(f"{where}: missing required key")
    return node[key]


def _parse_response(node, path: str) -> Response:
    node = _require_mapping(node, path)
    kind = _require_str(_take(node, "kind", path), f"{path}.kind")
    if kind == "identity":
        _reject_unknown(node, {"kind"}, path)
        return Response.identity()
    if kind == "log_normal":
        _reject_unknown(node, {"kind", "kappa"}, path)
        kappa = _require_number(_take(node, "kappa", path), f"{path}.kappa")
        if not kappa > 0.0:
            raise ConfigError(f"{path}.kappa: must be positive, got {kappa}")
        return Response.log_normal(kappa)
    if kind == "linear":
        _reject_unknown(node, {"kind", "delta"}, path)
        return Response.linear(_require_number(_take(node, "delta", path), f"{path}.delta"))
    raise ConfigError(f"{path}.kind: unknown response kind {kind!r}")


def _parse_prior(node, path: str) -> Prior:
    node = _require_mapping(node, path)
    kind = _require_str(_take(node, "kind", path), f"{path}.kind")
    if kind == "standard_normal":
        _reject_unknown(node, {"kind"}, path)
        return Prior.standard_normal()
    if kind == "normal":
        _reject_unknown(node, {"kind", "mean", "sd"}, path)
        mean = _require_number(_take(node, "mean", path), f"{path}.mean")
        sd = _require_number(_take(node, "sd", path), f"{path}.sd")
        if not sd > 0.0:
            raise ConfigError(f"{path}.sd: must be positive, got {sd}")
        return Prior.normal(mean, sd)
    if kind == "log_normal":
        _reject_unknown(node, {"kind", "mu", "sigma"}, path)
        mu = _require_number(_take(node, "mu", path), f"{path}.mu")
        sigma = _require_number(_take(node, "sigma", path), f"{path}.sigma")
        if not sigma > 0.0:
            raise ConfigError(f"{path}.sigma: must be positive, got {sigma}")
        return Prior.log_normal(mu, sigma)
    raise ConfigError(f"{path}.kind: unknown prior kind {kind!r}")


def _parse_responses(node, path: str) -> dict:
    node = _require_mapping(node, path)
    return {name: _parse_response(sub, f"{path}.{name}") for name, sub in node.items()}


def parse_model(doc) -> CountingModel:
    """Build a :class:`CountingModel` from a parsed configuration document."""
    doc = _require_mapping(doc, "<root>")
    _reject_unknown(doc, {"signal", "backgrounds", "nuisances", "correlation", "n_obs"}, "")

    signal = _require_mapping(_take(doc, "signal", ""), "signal")
    _reject_unknown(signal, {"nominal", "responses"}, "signal")
    s_nom = _require_number(_take(signal, "nominal", "signal"), "signal.nominal")
    signal_responses = _parse_responses(signal.get("responses", {}), "signal.responses")

    backgrounds = []
    for i, bnode in enumerate(_require_list(doc.get("backgrounds", []), "backgrounds")):
        path = f"backgrounds[{i}]"
        bnode = _require_mapping(bnode, path)
        _reject_unknown(bnode, {"name", "nominal", "responses"}, path)
        backgrounds.append(
            BackgroundProcess(
                name=_require_str(_take(bnode, "name", path), f"{path}.name"),
                b_nom=_require_number(_take(bnode, "nominal", path), f"{path}.nominal"),
                responses=_parse_responses(bnode.get("responses", {}), f"{path}.responses"),
            )
        )

    nuisances = []
    for i, nnode in enumerate(_require_list(doc.get("nuisances", []), "nuisances")):
        path = f"nuisances[{i}]"
        nnode = _require_mapping(nnode, path)
        _reject_unknown(nnode, {"name", "prior"}, path)
        nuisances.append(
            Nuisance(
                name=_require_str(_take(nnode, "name", path), f"{path}.name"),
                prior=_parse_prior(_take(nnode, "prior", path), f"{path}.prior"),
            )
        )

    correlation = None
    if "correlation" in doc:
        rows = _require_list(doc["correlation"], "correlation")
        correlation = [
            [_require_number(v, f"correlation[{i}][{j}]") for j, v in enumerate(_require_list(row, f"correlation[{i}]"))]
            for i, row in enumerate(rows)
        ]

    n_obs = _require_int(_take(doc, "n_obs", ""), "n_obs")
    if n_obs < 0:
        raise ConfigError(f"n_obs: must be nonnegative, got {n_obs}")

    try:
        systematics = SystematicsModel(
            nuisances=tuple(nuisances),
            signal_responses=signal_responses,
            correlation=correlation,
        )
        return CountingModel(
            s_nom=s_nom,
            backgrounds=tuple(backgrounds),
            n_obs=n_obs,
            systematics=systematics,
        )
    except ModelError as err:
        raise ConfigError(str(err)) from err


def load_model(path) -> CountingModel:
    """Parse a JSON configuration file into a model."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"invalid JSON in {path}: {err}") from err
    return parse_model(doc)


def _emit_response(resp: Response) -> dict:
    if resp.kind == "identity":
        return {"kind": "identity"}
    if resp.kind == "log_normal":
        return {"kind": "log_normal", "kappa": resp.kappa}
    return {"kind": "linear", "delta": resp.delta}


def _emit_prior(prior: Prior) -> dict:
    if prior.kind == "standard_normal":
        return {"kind": "standard_normal"}
    if prior.kind == "normal":
        return {"kind": "normal", "mean": prior.loc, "sd": prior.scale}
    return {"kind": "log_normal", "mu": prior.loc, "sigma": prior.scale}


def emit_config(model: CountingModel) -> dict:
    """Configuration document for ``model``; parses back to an equal model."""
    doc = {
        "signal": {
            "nominal": model.s_nom,
            "responses": {
                name: _emit_response(resp)
                for name, resp in model.systematics.signal_responses.items()
            },
        },
        "backgrounds": [
            {
                "name": bkg.name,
                "nominal": bkg.b_nom,
                "responses": {name: _emit_response(resp) for name, resp in bkg.responses.items()},
            }
            for bkg in model.backgrounds
        ],
        "nuisances": [
            {"name": nu.name, "prior": _emit_prior(nu.prior)}
            for nu in model.systematics.nuisances
        ],
        "n_obs": model.n_obs,
    }
    if model.systematics.correlation is not None:
        doc["correlation"] = [list(row) for row in model.systematics.correlation]
    return doc
