"""Competing content creation game toolkit (Python front end)."""

import json

from ._core import (
    BudgetExceeded,
    ClusterSampler,
    GameInstance,
    InvalidInput,
    SolverError,
    c_beta_k,
    choice_probabilities,
    creator_utilities,
    dynamic_poa_bound,
    gen_dataset1,
    gen_dataset2,
    gen_exposure_gap_instance,
    gen_lower_bound_instance,
    instance_from_json,
    poa_lower,
    poa_upper,
    utility_table,
    verify_pure_ne,
    welfare,
    welfare_loss_factor,
)
from . import _core


def solve(game, exact_budget=10_000_000, lp_budget=100_000):
    """Max welfare, worst CCE and PoA as a dict."""
    return json.loads(_core._solve_json(game, exact_budget, lp_budget))


def run_dynamics(game, eta=0.1, epsilon=0.1, horizon=5000, seed=0, regret=False):
    """Exp3 for every creator; returns the summary dict with per-round welfare."""
    return json.loads(_core._dynamics_json(game, eta, epsilon, horizon, seed, regret))


def run_experiment(config):
    """Runs an experiment config (dict) and returns (rows_csv, summary_csv)."""
    return _core._experiment_csv(json.dumps(config))


__all__ = [name for name in dir() if not name.startswith("_")]
