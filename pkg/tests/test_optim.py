import numpy as np
import pytest

from varconstrain.optim import AdamState, GradientNaNError, adam_step


def test_first_step_with_known_numbers():
    # x=0, g=2, lr=0.1: m_hat=2, v_hat=4, step = 0.1 * 2/(2+1e-8)
    s = AdamState.new(1)
    x = adam_step(s, np.array([0.0]), np.array([2.0]), lr=0.1)
    assert x[0] == pytest.approx(-0.1, rel=1e-7)
    assert s.t == 1


def test_zero_gradient_leaves_params_unchanged():
    s = AdamState.new(3)
    p = np.array([1.0, -2.0, 0.5])
    np.testing.assert_array_equal(adam_step(s, p, np.zeros(3), lr=0.1), p)


def test_first_step_direction_is_negative_gradient_sign():
    s = AdamState.new(4)
    g = np.array([3.0, -0.01, 1e-6, -42.0])
    dx = adam_step(s, np.zeros(4), g, lr=0.05)
    assert np.all(np.sign(dx) == -np.sign(g))


def test_first_step_magnitude_bounded_by_lr():
    s = AdamState.new(5)
    g = np.random.default_rng(0).normal(size=5)
    dx = adam_step(s, np.zeros(5), g, lr=0.01)
    assert np.all(np.abs(dx) <= 0.01 * (1 + 1e-6))


def test_deterministic():
    def run():
        s = AdamState.new(2)
        p = np.array([0.3, 0.7])
        for g in ([1.0, -1.0], [0.5, 0.5], [-2.0, 0.1]):
            p = adam_step(s, p, np.array(g), lr=0.02)
        return p

    np.testing.assert_array_equal(run(), run())


def test_nan_gradient_aborts():
    s = AdamState.new(2)
    with pytest.raises(GradientNaNError):
        adam_step(s, np.zeros(2), np.array([1.0, np.nan]), lr=0.1)


def test_custom_betas_respected():
    s = AdamState.new(1, beta1=0.5, beta2=0.9, eps=1e-8)
    x = adam_step(s, np.array([0.0]), np.array([2.0]), lr=0.1)
    # m_hat = (0.5*2)/(1-0.5) = 2, v_hat = (0.1*4)/(1-0.9) = 4
    assert x[0] == pytest.approx(-0.1, rel=1e-7)
