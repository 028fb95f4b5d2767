"""Conv/dense kernels against naive loops, and backend agreement."""

import numpy as np
import pytest

from eda_personalize import kernels
from eda_personalize.rng import derive_rng

try:
    import numba  # noqa: F401

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False


def _naive_conv1d(x, w, b, stride):
    # independent oracle: direct loop over the definition, float64 math
    batch, length, _ = x.shape
    c_out, _, k = w.shape
    l_out = (length - k) // stride + 1
    out = np.zeros((batch, l_out, c_out))
    x64, w64 = x.astype(np.float64), w.astype(np.float64)
    for n in range(batch):
        for j in range(l_out):
            s = j * stride
            for f in range(c_out):
                out[n, j, f] = np.sum(x64[n, s : s + k, :].T * w64[f]) + b[f]
    return out


def _rand(shape, seed):
    return derive_rng(seed, "kernel-test").normal(size=shape).astype(np.float32)


@pytest.mark.parametrize("stride", [1, 2, 3])
@pytest.mark.parametrize("shape", [(2, 20, 1, 4, 5), (3, 33, 4, 6, 7), (1, 7, 2, 3, 7)])
def test_conv_forward_matches_naive_loops(shape, stride):
    batch, length, c_in, c_out, k = shape
    if (length - k) < 0:
        pytest.skip("kernel longer than input")
    x = _rand((batch, length, c_in), seed=1)
    w = _rand((c_out, c_in, k), seed=2)
    b = _rand((c_out,), seed=3)
    got = kernels.conv1d_forward(x, w, b, stride)
    want = _naive_conv1d(x, w, b, stride)
    assert got.shape == want.shape
    np.testing.assert_allclose(got.astype(np.float64), want, rtol=1e-5, atol=1e-5)


def test_conv_backward_matches_finite_differences():
    x = _rand((2, 15, 3), seed=4).astype(np.float64)
    w = _rand((4, 3, 5), seed=5).astype(np.float64)
    b = _rand((4,), seed=6).astype(np.float64)
    stride = 2
    gy = _rand(kernels.conv1d_forward(x, w, b, stride).shape, seed=7).astype(np.float64)

    gx, gw, gb = kernels.conv1d_backward(x, w, stride, gy)

    def loss(xv, wv, bv):
        return float(np.sum(kernels.conv1d_forward(xv, wv, bv, stride) * gy))

    h = 1e-6
    rng = derive_rng(8, "coords")
    for arr, grad in ((x, gx), (w, gw), (b, gb)):
        flat = arr.reshape(-1)
        for idx in rng.choice(flat.size, size=min(12, flat.size), replace=False):
            bump = np.zeros_like(flat)
            bump[idx] = h
            bumped = bump.reshape(arr.shape)
            plus = loss(x + (bumped if arr is x else 0), w + (bumped if arr is w else 0), b + (bumped if arr is b else 0))
            minus = loss(x - (bumped if arr is x else 0), w - (bumped if arr is w else 0), b - (bumped if arr is b else 0))
            fd = (plus - minus) / (2 * h)
            np.testing.assert_allclose(grad.reshape(-1)[idx], fd, rtol=1e-4, atol=1e-6)


def test_dense_backward_matches_hand_derivation():
    x = _rand((3, 4), seed=9).astype(np.float64)
    w = _rand((4, 2), seed=10).astype(np.float64)
    gy = _rand((3, 2), seed=11).astype(np.float64)
    gx, gw, gb = kernels.dense_backward(x, w, gy)
    np.testing.assert_allclose(gx, gy @ w.T)
    np.testing.assert_allclose(gw, x.T @ gy)
    np.testing.assert_allclose(gb, gy.sum(axis=0))


def test_leaky_relu_branches():
    x = np.array([[-2.0, -0.5, 0.0, 0.5, 2.0]], dtype=np.float32)
    y = kernels.leaky_relu_forward(x, 0.01)
    np.testing.assert_allclose(y, [[-0.02, -0.005, 0.0, 0.5, 2.0]], rtol=1e-6)
    g = kernels.leaky_relu_backward(x, 0.01, np.ones_like(x))
    # the kink at exactly zero takes the alpha branch
    np.testing.assert_allclose(g, [[0.01, 0.01, 0.01, 1.0, 1.0]], rtol=1e-6)
    assert y.dtype == np.float32 and g.dtype == np.float32


def test_backend_selection_respects_names():
    assert kernels.active_backend() == "numpy"
    from eda_personalize.errors import ConfigError

    with pytest.raises(ConfigError):
        kernels.set_backend("cuda")
    assert kernels.set_backend("numpy") == "numpy"


@pytest.mark.skipif(not HAVE_NUMBA, reason="numba backend not installed")
class TestBackendAgreement:
    @pytest.fixture(autouse=True)
    def _restore(self):
        yield
        kernels.set_backend("numpy")

    def test_forward_agrees(self):
        x = _rand((4, 120, 3), seed=20)
        w = _rand((8, 3, 7), seed=21)
        b = _rand((8,), seed=22)
        kernels.set_backend("numpy")
        ref = kernels.conv1d_forward(x, w, b, 3)
        kernels.set_backend("numba")
        jit = kernels.conv1d_forward(x, w, b, 3)
        # float32 accumulation order differs between the two implementations
        np.testing.assert_allclose(jit, ref, rtol=1e-4, atol=1e-5)

    def test_backward_agrees(self):
        x = _rand((4, 60, 5), seed=23)
        w = _rand((6, 5, 7), seed=24)
        b = _rand((6,), seed=25)
        gy = _rand((4, (60 - 7) // 3 + 1, 6), seed=26)
        kernels.set_backend("numpy")
        ref = kernels.conv1d_backward(x, w, 3, gy)
        kernels.set_backend("numba")
        jit = kernels.conv1d_backward(x, w, 3, gy)
        for a, b_ in zip(jit, ref):
            np.testing.assert_allclose(a, b_, rtol=1e-3, atol=1e-4)

    def test_auto_prefers_numba(self):
        assert kernels.set_backend("auto") == "numba"
