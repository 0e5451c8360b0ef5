import math

import numpy as np
import pytest

import phyre


@pytest.fixture(scope="module")
def b_tasks():
    return phyre.load_tier_tasks(phyre.Tier.B)


def test_shipped_tasks_load(b_tasks):
    assert len(b_tasks) == 100
    assert b_tasks[0].id == "B01:000"
    assert b_tasks[0].tier == phyre.Tier.B
    assert len(phyre.load_tier_tasks(phyre.Tier.TwoB)) == 100


def test_authored_solution_solves(b_tasks):
    task = b_tasks[3]
    assert phyre.validate_action(task, task.solution) == "Valid"
    result = phyre.attempt(task, task.solution, stride=30)
    assert result.reward
    assert phyre.solves(task, task.solution)
    assert len(result.frames) >= 2
    assert result.frames[-1]["bodies"]


def test_invalid_action_raises(b_tasks):
    bad = phyre.Action([0.0, 0.0, 0.3])
    assert phyre.validate_action(b_tasks[0], bad) == "OutOfBounds"
    with pytest.raises(phyre.Error) as err:
        phyre.attempt(b_tasks[0], bad)
    assert err.value.code == "InvalidAction"


def test_action_shape_is_checked():
    assert phyre.Action([0.1, 0.2, 0.3]).tier == phyre.Tier.B
    assert phyre.Action([0.1] * 6).tier == phyre.Tier.TwoB
    with pytest.raises(phyre.Error):
        phyre.Action([0.1, 0.2])


def test_rasterize(b_tasks):
    img = phyre.rasterize_task(b_tasks[0])
    assert img.shape == (256, 256)
    assert img.dtype == np.uint8
    assert set(np.unique(img)) <= set(range(1, 8))
    with_ball = phyre.rasterize_task(b_tasks[0], b_tasks[0].solution)
    assert (with_ball == 7).sum() > 0


def test_auccess_helpers():
    assert math.isclose(phyre.weight_share(10), math.log(11) / math.log(101), abs_tol=1e-12)
    curve = [100.0 if k >= 11 else 0.0 for k in range(1, 101)]
    assert abs(phyre.auccess(curve) - 48.043) < 1e-3
    s = phyre.success_curve([1, None, 50, 100])
    assert s[0] == 25.0 and s[99] == 75.0
    assert phyre.wilcoxon_one_sided(list(range(2, 12)), [1.0] * 10) == pytest.approx(1 / 1024)


def test_sample_actions_is_seeded():
    a = phyre.sample_actions(phyre.Tier.B, 5, seed=3)
    b = phyre.sample_actions(phyre.Tier.B, 5, seed=3)
    assert [x.coords for x in a] == [x.coords for x in b]


def test_small_benchmark_run(b_tasks):
    out = phyre.run_benchmark({"agent": "ORACLE", "folds": [0], "action_set_size": 50}, b_tasks)
    assert out["agent"] == "ORACLE"
    assert len(out["folds"]) == 1
    assert 0.0 <= out["folds"][0]["auccess"] <= 100.0
