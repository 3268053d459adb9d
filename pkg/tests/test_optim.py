import numpy as np
import pytest

from retargetkit.errors import ShapeError
from retargetkit.optim import AdamState, adam_step


def test_zero_gradient_keeps_params():
    state = AdamState(learning_rate=0.1)
    params = {"w": np.array([1.0, -2.0])}
    out = adam_step(params, {"w": np.zeros(2)}, state)
    assert np.array_equal(out["w"], params["w"])
    assert state.step == 1


def test_constant_gradient_moves_against_sign():
    state = AdamState(learning_rate=0.01)
    params = {"w": np.array([0.0])}
    for _ in range(20):
        params = adam_step(params, {"w": np.array([1.0])}, state)
    assert params["w"][0] < 0


def test_single_step_matches_closed_form_oracle():
    lr, b1, b2, eps = 0.1, 0.5, 0.9, 1e-8
    g = np.array([1.0])
    state = AdamState(learning_rate=lr, beta1=b1, beta2=b2, eps=eps)
    params = adam_step({"w": np.array([0.0])}, {"w": g}, state)
    # scripted closed-form single step
    m = (1 - b1) * g
    v = (1 - b2) * g * g
    m_hat = m / (1 - b1)
    v_hat = v / (1 - b2)
    expected = -lr * m_hat / (np.sqrt(v_hat) + eps)
    assert np.allclose(params["w"], expected, atol=1e-15)


def test_shape_mismatch_rejected():
    state = AdamState()
    with pytest.raises(ShapeError):
        adam_step({"w": np.zeros(3)}, {"w": np.zeros(2)}, state)
