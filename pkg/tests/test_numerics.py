import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import power_iteration_norm
from fimlab.exceptions import NonFiniteEvaluation, NotPositiveDefinite
from fimlab.numerics import (
    as_symmat,
    fd_gradient,
    fd_hessian,
    fd_jacobian,
    is_positive_definite,
    rng_stream,
    spectral_norm,
    stream_for,
    substream_id,
    sym_inverse,
)


def random_spd(gen, p, cond=100.0):
    q, _ = np.linalg.qr(gen.standard_normal((p, p)))
    eig = np.geomspace(1.0, cond, p)
    return q @ np.diag(eig) @ q.T


def test_sym_inverse_identity_and_diagonal():
    np.testing.assert_array_equal(sym_inverse(np.eye(3)), np.eye(3))
    np.testing.assert_allclose(sym_inverse(np.diag([2.0, 4.0])), np.diag([0.5, 0.25]), rtol=1e-15)


def test_sym_inverse_residual(rng):
    m = random_spd(rng, 5)
    inv = sym_inverse(m)
    assert np.max(np.abs(m @ inv - np.eye(5))) < 1e-8
    np.testing.assert_array_equal(inv, inv.T)


def test_sym_inverse_rejects_indefinite():
    with pytest.raises(NotPositiveDefinite):
        sym_inverse(np.diag([1.0, -1.0]))
    with pytest.raises(NotPositiveDefinite):
        sym_inverse(np.array([[1.0, np.nan], [np.nan, 1.0]]))


@given(seed=st.integers(0, 2**32 - 1), p=st.integers(1, 8), logcond=st.floats(0.0, 5.9))
def test_double_inverse_round_trip(seed, p, logcond):
    m = random_spd(np.random.default_rng(seed), p, 10.0**logcond)
    back = sym_inverse(sym_inverse(m))
    assert np.max(np.abs(back - m)) <= 1e-6 * np.max(np.abs(m))


def test_as_symmat_tolerance():
    m = np.array([[1.0, 2.0], [2.0 + 1e-14, 3.0]])
    out = as_symmat(m)
    np.testing.assert_array_equal(out, out.T)
    with pytest.raises(ValueError):
        as_symmat(np.array([[1.0, 2.0], [2.1, 3.0]]))
    with pytest.raises(ValueError):
        as_symmat(np.ones((2, 3)))


def test_spectral_norm_examples(rng):
    assert spectral_norm(np.eye(4)) == pytest.approx(1.0, rel=1e-15)
    assert spectral_norm(np.diag([3.0, -5.0])) == pytest.approx(5.0, rel=1e-15)
    m = rng.standard_normal((6, 6))
    assert spectral_norm(m) == pytest.approx(power_iteration_norm(m), rel=1e-9)


@given(
    m=arrays(float, (4, 3), elements=st.floats(-1e3, 1e3)),
    c=st.floats(-1e3, 1e3),
)
def test_spectral_norm_homogeneous(m, c):
    base = spectral_norm(m)
    assert spectral_norm(c * m) == pytest.approx(abs(c) * base, rel=1e-12, abs=1e-300)


def test_fd_quadratic():
    f = lambda t: float(t @ t)
    np.testing.assert_allclose(fd_gradient(f, np.array([1.0, 2.0]), h=1e-5), [2.0, 4.0], atol=1e-8)
    for theta in ([0.3, -2.0, 7.0], [100.0, 1e-3, -50.0]):
        np.testing.assert_allclose(fd_hessian(f, np.array(theta)), 2.0 * np.eye(3), atol=1e-6)


def test_fd_jacobian_linear():
    a = np.array([[1.0, 2.0], [3.0, -4.0], [0.5, 0.0]])
    np.testing.assert_allclose(fd_jacobian(lambda t: a @ t, np.array([0.2, -1.0])), a, atol=1e-9)


@pytest.mark.parametrize(
    "f, g, x",
    [
        (lambda t: np.sin(t[0]) * np.exp(t[1]), lambda t: [np.cos(t[0]) * np.exp(t[1]), np.sin(t[0]) * np.exp(t[1])], [0.7, 0.3]),
        (lambda t: np.log1p(t[0] ** 2) + t[1] ** 3, lambda t: [2 * t[0] / (1 + t[0] ** 2), 3 * t[1] ** 2], [1.3, -0.8]),
    ],
)
def test_fd_gradient_second_order(f, g, x):
    x = np.asarray(x)
    exact = np.asarray(g(x))
    e1 = np.max(np.abs(fd_gradient(f, x, h=1e-2) - exact))
    e2 = np.max(np.abs(fd_gradient(f, x, h=5e-3) - exact))
    assert 3.0 <= e1 / e2 <= 5.0


def test_fd_rejects_nonfinite_and_bad_step():
    with pytest.raises(NonFiniteEvaluation), np.errstate(invalid="ignore"):
        fd_gradient(lambda t: np.log(t[0]), np.array([0.0]), h=1e-3)
    with pytest.raises(ValueError):
        fd_gradient(lambda t: t @ t, np.zeros(2), h=0.0)


def test_is_positive_definite():
    assert is_positive_definite(np.eye(2))
    assert not is_positive_definite(np.diag([1.0, 0.0]))


def test_stream_determinism():
    a = rng_stream(42, 7)
    b = rng_stream(42, 7)
    np.testing.assert_array_equal(a.draw_uniform(100), b.draw_uniform(100))
    np.testing.assert_array_equal(a.draw_normal(100), b.draw_normal(100))
    np.testing.assert_array_equal(a.draw_bernoulli_pm1(100), b.draw_bernoulli_pm1(100))
    assert not np.array_equal(rng_stream(42, 8).draw_uniform(10), rng_stream(42, 7).draw_uniform(10))
    assert not np.array_equal(rng_stream(43, 7).draw_uniform(10), rng_stream(42, 7).draw_uniform(10))


def test_stream_moments():
    s = rng_stream(0, 0)
    z = s.draw_normal(10**6)
    assert abs(z.mean()) < 4.0 / np.sqrt(10**6)
    b = s.draw_bernoulli_pm1(10**6)
    assert set(np.unique(b)) == {-1.0, 1.0}
    assert abs(b.mean()) < 0.005


def test_stream_independence():
    x = rng_stream(5, 0).draw_normal(10**5)
    y = rng_stream(5, 1).draw_normal(10**5)
    assert abs(np.corrcoef(x, y)[0, 1]) < 0.02


def test_substream_ids_stable_and_distinct():
    assert substream_id("mixture", 12, "data") == substream_id("mixture", 12, "data")
    ids = {substream_id("x", i, role) for i in range(200) for role in ("data", "solve")}
    assert len(ids) == 400
    np.testing.assert_array_equal(
        stream_for(3, "a", 1).draw_uniform(5), stream_for(3, "a", 1).draw_uniform(5)
    )
