import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from wavebcd.errors import ConfigurationError, DimensionError
from wavebcd.proximal import RegularizerSpec, prox_block, regularizer_value, soft_threshold
from wavebcd.wavelet import BlockLayout, CoeffVector, embed_block

finite = st.floats(-10, 10, allow_nan=False)


def test_soft_threshold_examples():
    np.testing.assert_allclose(soft_threshold([2.0], 0.5), [1.5])
    np.testing.assert_array_equal(soft_threshold([0.3, -0.3], 0.5), [0.0, 0.0])
    z = np.array([0.1, -2.0, 3.5])
    np.testing.assert_array_equal(soft_threshold(z, 0.0), z)
    with pytest.raises(ConfigurationError):
        soft_threshold(z, -0.1)


def test_prox_block_examples():
    spec = RegularizerSpec(0.2)
    z = np.array([1.0, -0.1, 5.0])
    np.testing.assert_array_equal(prox_block(spec, 0, z, 2.0), z)
    np.testing.assert_allclose(prox_block(spec, 1, [1.0], 2.0), [0.6])
    layout = BlockLayout(8, 1)
    with pytest.raises(DimensionError):
        prox_block(spec, 1, np.zeros(5), 1.0, layout)
    with pytest.raises(ConfigurationError):
        prox_block(spec, 1, z, 0.0)


def subdifferential_contains(u, residual, scale):
    """Brute-force check that residual in scale * d||.||_1(u), componentwise."""
    ok = True
    for uk, rk in zip(u, residual):
        if uk > 0:
            ok &= abs(rk - scale) <= 1e-12
        elif uk < 0:
            ok &= abs(rk + scale) <= 1e-12
        else:
            ok &= abs(rk) <= scale + 1e-12
    return ok


@settings(max_examples=60, deadline=None)
@given(z=arrays(float, 12, elements=finite), gamma=st.floats(0.01, 3), lam=st.floats(0, 2))
def test_prox_optimality(z, gamma, lam):
    spec = RegularizerSpec(lam)
    u = prox_block(spec, 1, z, gamma)
    assert subdifferential_contains(u, z - u, gamma * lam)


@settings(max_examples=60, deadline=None)
@given(z1=arrays(float, 10, elements=finite), z2=arrays(float, 10, elements=finite), tau=st.floats(0, 5))
def test_nonexpansive(z1, z2, tau):
    d = np.linalg.norm(soft_threshold(z1, tau) - soft_threshold(z2, tau))
    assert d <= np.linalg.norm(z1 - z2) + 1e-12


@settings(max_examples=60, deadline=None)
@given(z=arrays(float, 8, elements=finite), u=arrays(float, 8, elements=finite), gamma=st.floats(0.05, 2), lam=st.floats(0, 1))
def test_prox_minimizes(z, u, gamma, lam):
    p = soft_threshold(z, gamma * lam)

    def f(v):
        return lam * np.abs(v).sum() + np.sum((v - z) ** 2) / (2 * gamma)

    assert f(p) <= f(u) + 1e-9


def test_regularizer_value():
    layout = BlockLayout(4, 1)
    spec = RegularizerSpec(1.0)
    assert regularizer_value(spec, CoeffVector.zeros(layout)) == 0
    assert regularizer_value(spec, embed_block(0, [5.0, -3.0, 1.0, 2.0], layout)) == 0
    w = embed_block(1, np.r_[1.0, -2.0, np.zeros(10)], layout)
    assert regularizer_value(spec, w) == 3.0
    assert regularizer_value(RegularizerSpec(2.5), w) == pytest.approx(7.5)
    custom = RegularizerSpec(1.0, penalize_block=(True, False))
    assert regularizer_value(custom, embed_block(0, [1.0, 1.0, 1.0, -1.0], layout)) == 4.0
    with pytest.raises(ConfigurationError):
        RegularizerSpec(-1.0)


@settings(max_examples=30, deadline=None)
@given(lam=st.floats(0, 5), scale=st.floats(0, 5), seed=st.integers(0, 1000))
def test_regularizer_homogeneous(lam, scale, seed):
    layout = BlockLayout(8, 2)
    w = CoeffVector(layout, np.random.default_rng(seed).standard_normal(64))
    a = regularizer_value(RegularizerSpec(lam * scale), w)
    b = scale * regularizer_value(RegularizerSpec(lam), w)
    assert a == pytest.approx(b, rel=1e-12, abs=1e-12)
