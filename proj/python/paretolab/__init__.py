"""Wealth-exchange Monte Carlo and Pareto tail inference.

Thin wrapper over the compiled ``_core`` module. Configs may be given as a
dict or a JSON string; they are validated strictly by the core.
"""

import csv
import io
import json

from ._core import (
    DataError,
    DomainError,
    InsufficientDataError,
    IoError,
    ParameterError,
    ParetolabError,
    RunError,
    StateError,
    ValidationError,
    __version__,
    alpha_from_flows,
    exchange_simulate,
    fit_pareto,
    gini,
    hill_estimator,
    kesten_simulate,
    pareto_mle,
    scale_free_network,
    select_xmin,
    target_alpha_to_drift,
)
from . import _core


def _as_json(config):
    return config if isinstance(config, str) else json.dumps(config)


def resolve_config(config):
    """Resolved config with every field present, as a dict."""
    return json.loads(_core.resolve_config(_as_json(config)))


def config_digest(config):
    return _core.config_digest(_as_json(config))


def run_experiment(config):
    """Runs an experiment and returns its summary dict.

    The summary carries two extra keys: ``timeseries`` (list of row dicts,
    floats) and ``final_wealths`` (replica 0).
    """
    summary_text, csv_text, wealths = _core.run(_as_json(config))
    summary = json.loads(summary_text)
    rows = list(csv.DictReader(io.StringIO(csv_text)))
    summary["timeseries"] = [
        {k: (int(v) if k == "step" else float(v)) for k, v in row.items()} for row in rows
    ]
    summary["final_wealths"] = wealths
    return summary


__all__ = [
    "DataError",
    "DomainError",
    "InsufficientDataError",
    "IoError",
    "ParameterError",
    "ParetolabError",
    "RunError",
    "StateError",
    "ValidationError",
    "__version__",
    "alpha_from_flows",
    "config_digest",
    "exchange_simulate",
    "fit_pareto",
    "gini",
    "hill_estimator",
    "kesten_simulate",
    "pareto_mle",
    "resolve_config",
    "run_experiment",
    "scale_free_network",
    "select_xmin",
    "target_alpha_to_drift",
]
