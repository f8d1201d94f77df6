import numpy as np
import pytest

from afresnet.nn import backend
from afresnet.nn import _conv_np

from helpers import naive_conv1d

cython_missing = "cython" not in backend.available()


@pytest.fixture(autouse=True)
def restore_backend():
    previous = backend.name
    yield
    backend.use(previous)


def test_numpy_backend_always_available():
    assert "numpy" in backend.available()


def test_unknown_backend_rejected():
    with pytest.raises(ValueError, match="unknown or unavailable"):
        backend.use("gpu")


@pytest.mark.skipif(cython_missing, reason="compiled extension not built")
class TestBackendAgreement:
    shapes = [
        ((2, 1, 50), (8, 1, 7), 2),
        ((4, 8, 32), (5, 8, 3), 1),
        ((4, 8, 33), (5, 8, 3), 2),
        ((1, 3, 9), (2, 3, 1), 2),
    ]

    @pytest.mark.parametrize("x_shape,w_shape,stride", shapes)
    def test_forward_agreement(self, rng, x_shape, w_shape, stride):
        from afresnet.nn import _conv_cy

        x = rng.normal(size=x_shape)
        w = rng.normal(size=w_shape)
        padding = w_shape[2] // 2
        a = _conv_np.conv1d_forward(x, w, stride, padding)
        b = _conv_cy.conv1d_forward(x, w, stride, padding)
        np.testing.assert_allclose(a, b, rtol=0, atol=1e-12)
        np.testing.assert_allclose(a, naive_conv1d(x, w, stride, padding),
                                   rtol=0, atol=1e-12)

    @pytest.mark.parametrize("x_shape,w_shape,stride", shapes)
    def test_backward_agreement(self, rng, x_shape, w_shape, stride):
        from afresnet.nn import _conv_cy

        x = rng.normal(size=x_shape)
        w = rng.normal(size=w_shape)
        padding = w_shape[2] // 2
        out = _conv_np.conv1d_forward(x, w, stride, padding)
        grad_out = rng.normal(size=out.shape)
        gx_np, gw_np = _conv_np.conv1d_backward(x, w, grad_out, stride, padding)
        gx_cy, gw_cy = _conv_cy.conv1d_backward(x, w, grad_out, stride, padding)
        np.testing.assert_allclose(gx_np, gx_cy, rtol=0, atol=1e-12)
        np.testing.assert_allclose(gw_np, gw_cy, rtol=0, atol=1e-12)


@pytest.mark.skipif(cython_missing, reason="compiled extension not built")
def test_switching_changes_dispatch(rng):
    x = rng.normal(size=(1, 2, 16))
    w = rng.normal(size=(2, 2, 3))
    backend.use("numpy")
    a = backend.conv1d_forward(x, w, 1, 1)
    assert backend.name == "numpy"
    backend.use("cython")
    b = backend.conv1d_forward(x, w, 1, 1)
    assert backend.name == "cython"
    np.testing.assert_allclose(a, b, atol=1e-12)


@pytest.mark.skipif(cython_missing, reason="compiled extension not built")
def test_training_agrees_across_backends():
    from afresnet.data import generate_synthetic, preprocess, split
    from afresnet.pipeline import TrainSpec, train

    dataset = preprocess(generate_synthetic(10, 0.5, seed=31))
    train_set, valid_set = split(dataset, 0.8, seed=0)
    spec = TrainSpec(config="8; cna; [2]; [1]", epochs=2, batch_size=4,
                     crop_len=400, seed=0)
    losses = {}
    for name in ("numpy", "cython"):
        backend.use(name)
        losses[name] = train(spec, train_set, valid_set).epoch_losses
    np.testing.assert_allclose(losses["numpy"], losses["cython"], rtol=1e-9)
