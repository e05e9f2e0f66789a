import json
import math
import random

import numpy as np
import pytest
from scipy.optimize import linprog

import ccgame


def random_instance(seed, n=3, actions=3, m=6, beta=0.3, k=2):
    rng = random.Random(seed)
    doc = {
        "beta": beta,
        "k": k,
        "metric": "engagement",
        "users": [{"id": j, "weight": 1.0} for j in range(m)],
        "players": [
            {"id": i, "actions": [{"sigma": [rng.random() for _ in range(m)]} for _ in range(actions)]}
            for i in range(n)
        ],
    }
    return ccgame.instance_from_json(json.dumps(doc))


def scipy_worst_cce(game):
    radices, welfare, utils = ccgame.utility_table(game)
    welfare = np.asarray(welfare)
    utils = np.asarray(utils)
    size = len(welfare)
    strides = [int(np.prod(radices[i + 1:])) for i in range(len(radices))]
    rows = []
    for i, radix in enumerate(radices):
        for dev in range(radix):
            row = np.empty(size)
            for idx in range(size):
                digit = (idx // strides[i]) % radix
                alt = idx + (dev - digit) * strides[i]
                row[idx] = utils[alt, i] - utils[idx, i]
            rows.append(row)
    res = linprog(welfare, A_ub=np.array(rows), b_ub=np.zeros(len(rows)),
                  A_eq=np.ones((1, size)), b_eq=[1.0], bounds=(0, None), method="highs")
    assert res.status == 0
    return res.fun


def test_bounds_values():
    assert ccgame.c_beta_k(0.3, 1) == 1.0
    assert ccgame.poa_upper(0.1, 2) == pytest.approx(1.9307, abs=1e-4)
    assert ccgame.poa_upper(0.5, 5) == pytest.approx(1.5216, abs=1e-4)


def test_dataset1_two_players():
    game = ccgame.gen_dataset1(2, 100, 0.1, 1, 0)
    assert game.num_players == 2 and game.num_users == 100
    assert ccgame.welfare(game, [0, 1]) == pytest.approx(100.0)
    report = ccgame.solve(game)
    assert report["poa"] == pytest.approx(4.0 / 3.0, abs=1e-9)


@pytest.mark.parametrize("seed", range(5))
def test_worst_cce_matches_scipy(seed):
    game = random_instance(seed)
    ours = ccgame.solve(game)["worst_cce_welfare"]
    assert ours == pytest.approx(scipy_worst_cce(game), rel=1e-7)


def test_choice_probabilities_normalized():
    game = random_instance(7, k=3)
    for probs in ccgame.choice_probabilities(game, [0, 1, 2]):
        assert sum(probs) == pytest.approx(1.0, abs=1e-12)


def test_lower_bound_family_equilibrium():
    game = ccgame.gen_lower_bound_instance(4, 2, 0.2)
    ok, gap = ccgame.verify_pure_ne(game, [0, 0, 0, 0])
    assert ok and gap <= 1e-9


def test_exposure_family():
    game, delta, holds = ccgame.gen_exposure_gap_instance(3, 2, 0.1)
    assert holds and delta == pytest.approx(0.10985, abs=1e-5)
    assert game.metric == "exposure"
    ratio = ccgame.welfare(game, [0, 0, 0]) / ccgame.welfare(game, [1, 0, 0])
    assert ratio == pytest.approx(3.857, abs=1e-3)


def test_dynamics_deterministic():
    game = ccgame.gen_dataset1(3, 40, 0.1, 2, 3)
    a = ccgame.run_dynamics(game, horizon=200, seed=5)
    b = ccgame.run_dynamics(game, horizon=200, seed=5)
    assert a["actions"] == b["actions"]
    assert len(a["welfare"]) == 200
    assert 0 < a["avg_welfare"] <= game.total_weight * (1 + 0.1 * math.log(2)) + 1e-9


def test_invalid_input_raises():
    with pytest.raises(ValueError):
        ccgame.gen_lower_bound_instance(2, 1, 0.1)


def test_experiment_roundtrip():
    cfg = {"id": "smoke", "kind": "poa_table", "grid": {"n": [2, 3], "k": [1], "beta": [0.1]},
           "trials": 2, "seed": 1}
    rows, summary = ccgame.run_experiment(cfg)
    assert rows == ccgame.run_experiment(cfg)[0]
    assert rows.splitlines()[0].startswith("experiment_id,family")
    assert "poa" in summary
