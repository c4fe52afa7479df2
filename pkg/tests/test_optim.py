import numpy as np
import pytest

from scenegen import nn
from scenegen.nn import optim


def make_param(values):
    return nn.Parameter(np.asarray(values, dtype=np.float32), name="p")


def test_zero_grad_zero_decay_is_identity():
    p = make_param([1.0, -2.0, 3.5])
    p.tensor.grad = np.zeros(3, dtype=np.float32)
    optim.adam_step([p], lr=0.1, weight_decay=0.0)
    np.testing.assert_array_equal(p.data, np.array([1.0, -2.0, 3.5], dtype=np.float32))


def test_first_step_hand_computed():
    # scalar p=1, grad=1, lr=0.1: bias-corrected m_hat=v_hat=1 -> p = 1 - 0.1/(1+eps)
    p = make_param([1.0])
    p.tensor.grad = np.array([1.0], dtype=np.float32)
    optim.adam_step([p], lr=0.1, weight_decay=0.0)
    assert abs(p.data[0] - 0.9) < 1e-6
    assert p.step_count == 1


def test_decay_only_update():
    p = make_param([2.0])
    p.tensor.grad = np.array([0.0], dtype=np.float32)
    optim.adam_step([p], lr=3e-4, weight_decay=0.001)
    np.testing.assert_allclose(p.data, 2.0 * (1.0 - 3e-7), rtol=1e-8)


def test_missing_grad_names_parameter():
    p = make_param([1.0])
    p.name = "blocks.0.attn.wq"
    with pytest.raises(ValueError, match="blocks.0.attn.wq"):
        optim.adam_step([p], lr=0.1)


def test_grads_cleared_and_step_counts():
    p = make_param([1.0, 1.0])
    for step in range(1, 4):
        p.tensor.grad = np.ones(2, dtype=np.float32)
        optim.adam_step([p], lr=0.01)
        assert p.tensor.grad is None
        assert p.step_count == step


def test_decay_applied_before_adam_delta():
    # with grad g and decay wd, step 1: p' = p*(1-lr*wd) - lr*g_hat/(sqrt(v_hat)+eps)
    p = make_param([4.0])
    p.tensor.grad = np.array([2.0], dtype=np.float32)
    optim.adam_step([p], lr=0.1, weight_decay=0.5)
    expected = 4.0 * (1.0 - 0.1 * 0.5) - 0.1 * (1.0 / (1.0 + optim.ADAM_EPS))
    assert abs(p.data[0] - expected) < 1e-6


def test_lr_schedule_endpoints():
    cfg = nn.ScheduleConfig(base_lr=3e-4, min_lr=0.0, restart_period=40000)
    assert optim.lr_at(0, cfg) == pytest.approx(3e-4)
    assert optim.lr_at(20000, cfg) == pytest.approx(1.5e-4)
    assert optim.lr_at(40000, cfg) == pytest.approx(3e-4)


def test_lr_schedule_periodic_and_monotone():
    cfg = nn.ScheduleConfig(base_lr=1e-3, min_lr=1e-5, restart_period=100)
    values = [optim.lr_at(i, cfg) for i in range(100)]
    assert all(a >= b for a, b in zip(values, values[1:]))
    for i in range(250):
        assert optim.lr_at(i, cfg) == pytest.approx(optim.lr_at(i + 100, cfg))


def test_schedule_config_validation():
    with pytest.raises(ValueError):
        nn.ScheduleConfig(base_lr=1e-4, min_lr=2e-4)
    with pytest.raises(ValueError):
        nn.ScheduleConfig(restart_period=0)
