import numpy as np
import pytest

from afresnet.nn import AdamState, NumericError, Tensor, adam_step


def test_zero_gradient_keeps_params_and_decays_moments():
    p = Tensor(np.array([1.0, -2.0]), requires_grad=True)
    state = AdamState()
    state.m["p"] = np.array([0.5, 0.5])
    state.v["p"] = np.array([0.25, 0.25])
    adam_step({"p": p}, {"p": np.zeros(2)}, state)
    # moments shrink toward zero...
    np.testing.assert_allclose(state.m["p"], 0.45)
    np.testing.assert_allclose(state.v["p"], 0.24975)
    # ...but a zero first moment would be needed for a zero step; here the
    # decayed moment still moves the parameter, so test the fresh case too
    q = Tensor(np.array([3.0]), requires_grad=True)
    state2 = AdamState()
    adam_step({"q": q}, {"q": np.zeros(1)}, state2)
    np.testing.assert_array_equal(q.data, [3.0])


def test_first_step_closed_form():
    p = Tensor(np.array([0.0]), requires_grad=True)
    state = AdamState()
    adam_step({"p": p}, {"p": np.ones(1)}, state)
    expected_delta = -1e-3 / (1.0 + 1e-8)
    assert state.t == 1
    np.testing.assert_allclose(p.data, expected_delta, rtol=1e-12)


def test_determinism_over_100_steps():
    def run():
        rng = np.random.default_rng(7)
        p = Tensor(np.array([1.0, 2.0, 3.0]), requires_grad=True)
        state = AdamState()
        for _ in range(100):
            adam_step({"p": p}, {"p": rng.normal(size=3)}, state)
        return p.data.copy()

    a, b = run(), run()
    assert a.tobytes() == b.tobytes()


def test_non_finite_gradient_names_parameter():
    p = Tensor(np.zeros(2), requires_grad=True)
    with pytest.raises(NumericError, match="stem.conv.weight"):
        adam_step({"stem.conv.weight": p},
                  {"stem.conv.weight": np.array([1.0, np.nan])}, AdamState())


def test_missing_gradient_is_skipped():
    p = Tensor(np.array([1.0]), requires_grad=True)
    adam_step({"p": p}, {}, AdamState())
    np.testing.assert_array_equal(p.data, [1.0])
