import math

import numpy as np
import pytest

import pace_market as pm


def proportional_response(budgets, v, supply, iters=20000):
    b = np.outer(budgets, supply)
    for _ in range(iters):
        p = b.sum(axis=0)
        gain = v * b / p * supply
        u = gain.sum(axis=1)
        b = budgets[:, None] * gain / u[:, None]
    p = b.sum(axis=0)
    u = (v * b / p * supply).sum(axis=1)
    return budgets / u


def random_market(n, m, seed):
    rng = np.random.default_rng(seed)
    v = rng.uniform(0.05, 1.0, (n, m))
    supply = np.full(m, 1.0 / m)
    v /= (v * supply).sum(axis=1, keepdims=True)
    budgets = rng.uniform(0.05, 1.0, n)
    budgets /= budgets.sum()
    return budgets, v, supply


def test_complementary_market_has_closed_form():
    market = pm.Market.synthetic("complementary", 4)
    sol = pm.solve(market)
    assert sol.beta == pytest.approx([0.25] * 4, abs=1e-9)
    assert sol.utility == pytest.approx([1.0] * 4, abs=1e-9)


def test_oracle_matches_proportional_response():
    budgets, v, supply = random_market(4, 6, 3)
    market = pm.Market.finite(list(budgets), v.tolist(), list(supply))
    sol = pm.solve(market)
    reference = proportional_response(budgets, v, supply)
    assert np.max(np.abs(np.array(sol.beta) - reference) / reference) < 1e-6
    assert pm.kkt_check(market, sol.beta)["pass"]


def test_normalization_rescales_rows():
    market = pm.Market.normalized([2.0, 2.0], [[2.0, 0.0], [1.0, 3.0]], [1.0, 1.0])
    assert market.budgets == pytest.approx([0.5, 0.5])
    for row in market.valuations:
        assert 0.5 * row[0] + 0.5 * row[1] == pytest.approx(1.0)


def test_invalid_market_raises():
    with pytest.raises(pm.PaceError):
        pm.Market.finite([0.5, 0.5], [[1.0], [1.0]], [0.5, 0.5])


def test_engine_step_and_box():
    market = pm.Market.synthetic("uniform", 5, 8, seed=2)
    engine = pm.Engine(market)
    step = engine.step(3)
    assert step.t == 1
    best = max(step.bids)
    assert step.winner == step.bids.index(best)
    assert step.price == best
    engine.run_iid(2000, seed=4)
    assert engine.t == 2001
    for b, lo, hi in zip(engine.beta, engine.lower_bounds, engine.upper_bounds):
        assert lo <= b <= hi


def test_engine_tracks_equilibrium():
    market = pm.Market.synthetic("uniform", 5, 8, seed=2)
    sol = pm.solve(market)
    engine = pm.Engine(market)
    engine.run_iid(20000, seed=7)
    avg, _ = pm.relative_errors(engine.beta, sol.beta)
    assert avg < 0.05


def test_quasilinear_box_and_cap():
    market = pm.Market.synthetic("uniform", 6, 10, seed=3, mode=pm.Mode.quasilinear)
    sol = pm.solve(market)
    for i, b in enumerate(sol.beta):
        assert market.ql_beta_min(i) < b <= 1.0
        if b == 1.0:
            assert sol.net_utility[i] == 0.0
        else:
            assert sol.net_utility[i] == pytest.approx((1.0 - b) * sol.utility[i])
    assert pm.kkt_check(market, sol.beta, 1e-6)["pass"]


def test_run_experiment_aggregate(tmp_path):
    market = pm.Market.synthetic("uniform", 4, 6, seed=5)
    result = pm.run_experiment(market, epochs=20, seeds=3, out_dir=str(tmp_path))
    assert len(result["final_beta"]) == 3
    last = result["aggregate"][-1]
    assert last["t"] == 80
    assert len(last["mean"]) == len(result["columns"])
    assert (tmp_path / "aggregate.csv").exists()
    assert (tmp_path / "equilibrium.json").exists()


def test_continuum_discretization():
    market = pm.Market.continuum([0.5, 0.5], [(1.0, 0.5), (-1.0, 1.5)])
    finite = pm.discretize(market, 100)
    assert finite.items == 100
    sol = pm.solve(market, cells=1000)
    assert all(math.isfinite(b) for b in sol.beta)
