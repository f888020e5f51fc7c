"""Dense linear algebra, finite differences, and counter-based random streams."""
from __future__ import annotations

import hashlib

import numpy as np
from scipy import linalg as sla

from .exceptions import NonFiniteEvaluation, NotPositiveDefinite

SYM_RTOL = 1e-12
_EPS = np.finfo(float).eps
_U64 = (1 << 64) - 1


def symmetrize(m):
    """Return ``(m + m.T) / 2`` as a float array."""
    m = np.asarray(m, dtype=float)
    return 0.5 * (m + m.T)


def as_symmat(m, rtol=SYM_RTOL):
    """Validate a square finite matrix and return its symmetrized copy.

    Asymmetry above ``rtol`` relative to the largest entry is an error;
    anything below is rounding and gets averaged away.
    """
    m = np.atleast_2d(np.asarray(m, dtype=float))
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise ValueError(f"expected a non-empty square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    scale = max(np.max(np.abs(m)), 1.0)
    if np.max(np.abs(m - m.T)) > rtol * scale:
        raise ValueError("matrix is not symmetric")
    return symmetrize(m)


def sym_inverse(m):
    """Inverse of a symmetric positive definite matrix via Cholesky.

    Raises:
        NotPositiveDefinite: if the factorization meets a non-positive pivot.
    """
    m = symmetrize(np.atleast_2d(m))
    if not np.all(np.isfinite(m)):
        raise NotPositiveDefinite("matrix has non-finite entries")
    try:
        factor = sla.cho_factor(m, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None
    if np.any(np.diag(factor[0]) <= 0):
        raise NotPositiveDefinite("non-positive Cholesky pivot")
    inv = sla.cho_solve(factor, np.eye(m.shape[0]), check_finite=False)
    return symmetrize(inv)


def is_positive_definite(m):
    try:
        sla.cholesky(symmetrize(m), lower=True, check_finite=True)
    except (np.linalg.LinAlgError, ValueError):
        return False
    return True


def spectral_norm(m):
    """Largest singular value of ``m``."""
    m = np.atleast_2d(np.asarray(m, dtype=float))
    if m.size == 0:
        raise ValueError("empty matrix")
    return float(np.linalg.norm(m, 2))


def _default_steps(theta, h, power):
    theta = np.asarray(theta, dtype=float)
    if h is None:
        return _EPS**power * np.maximum(1.0, np.abs(theta))
    h = np.broadcast_to(np.asarray(h, dtype=float), theta.shape).copy()
    if np.any(h <= 0):
        raise ValueError("finite-difference step must be positive")
    return h


def _probe(f, x):
    val = f(x)
    if not np.all(np.isfinite(val)):
        raise NonFiniteEvaluation(f"non-finite value at {x!r}")
    return val


def fd_gradient(f, theta, h=None):
    """Central-difference gradient of a scalar field.

    Default step per coordinate is ``cbrt(eps) * max(1, |theta_j|)``.
    """
    theta = np.asarray(theta, dtype=float)
    steps = _default_steps(theta, h, 1.0 / 3.0)
    grad = np.empty_like(theta)
    for j in range(theta.size):
        e = np.zeros_like(theta)
        e[j] = steps[j]
        grad[j] = (_probe(f, theta + e) - _probe(f, theta - e)) / (2.0 * steps[j])
    return grad


def fd_hessian(f, theta, h=None):
    """Central-difference Hessian of a scalar field, symmetrized.

    Default step is ``eps**(1/4) * max(1, |theta_j|)``, the optimum for
    second differences of function values.
    """
    theta = np.asarray(theta, dtype=float)
    p = theta.size
    steps = _default_steps(theta, h, 0.25)
    f0 = _probe(f, theta)
    hess = np.empty((p, p))
    for i in range(p):
        ei = np.zeros(p)
        ei[i] = steps[i]
        hess[i, i] = (_probe(f, theta + ei) - 2.0 * f0 + _probe(f, theta - ei)) / steps[i] ** 2
        for j in range(i + 1, p):
            ej = np.zeros(p)
            ej[j] = steps[j]
            val = (
                _probe(f, theta + ei + ej)
                - _probe(f, theta + ei - ej)
                - _probe(f, theta - ei + ej)
                + _probe(f, theta - ei - ej)
            ) / (4.0 * steps[i] * steps[j])
            hess[i, j] = hess[j, i] = val
    return symmetrize(hess)


def fd_jacobian(g, theta, h=None):
    """Central-difference Jacobian of a vector (or array) valued function.

    Output has the derivative axis last: ``J[..., j] = d g / d theta_j``.
    """
    theta = np.asarray(theta, dtype=float)
    steps = _default_steps(theta, h, 1.0 / 3.0)
    cols = []
    for j in range(theta.size):
        e = np.zeros_like(theta)
        e[j] = steps[j]
        cols.append((_probe(g, theta + e) - _probe(g, theta - e)) / (2.0 * steps[j]))
    return np.stack(cols, axis=-1)


def substream_id(*path):
    """Map a path of names/indices to a 64-bit stream id.

    ``substream_id("mixture", 12, "data")`` is stable across runs and
    platforms, so replication ``12`` always sees the same numbers no matter
    how many replications are scheduled or in what order.
    """
    h = hashlib.blake2b(digest_size=8)
    for part in path:
        h.update(repr(part).encode())
        h.update(b"\x1f")
    return int.from_bytes(h.digest(), "little")


class RngStream:
    """Counter-based random stream keyed by ``(master_seed, stream_id)``.

    Backed by the Philox-4x64 bit generator: the 128-bit key is the
    concatenation of the two ids and the counter starts at zero, so equal
    keys replay identical sequences. A stream is single-owner; hand each
    worker its own stream id.
    """

    def __init__(self, master_seed, stream_id=0):
        self.master_seed = int(master_seed) & _U64
        self.stream_id = int(stream_id) & _U64
        key = self.master_seed | (self.stream_id << 64)
        self.generator = np.random.Generator(np.random.Philox(key=key))

    def __repr__(self):
        return f"RngStream(master_seed={self.master_seed}, stream_id={self.stream_id})"

    def child(self, *path):
        """Independent stream under the same master seed."""
        return RngStream(self.master_seed, substream_id(self.stream_id, *path))

    def draw_uniform(self, size=None):
        return self.generator.random(size)

    def draw_normal(self, size=None):
        return self.generator.standard_normal(size)

    def draw_bernoulli_pm1(self, size=None):
        bits = self.generator.integers(0, 2, size=size)
        return 2.0 * bits - 1.0


def rng_stream(master_seed, stream_id=0):
    return RngStream(master_seed, stream_id)


def stream_for(master_seed, *path):
    """Stream for a named role, e.g. ``stream_for(seed, "mc_cov", i, "data")``."""
    return RngStream(master_seed, substream_id(*path))


def as_generator(rng):
    """Accept an ``RngStream``, a numpy ``Generator`` or an integer seed."""
    if isinstance(rng, RngStream):
        return rng.generator
    if isinstance(rng, np.random.Generator):
        return rng
    if rng is None:
        raise ValueError("an explicit random stream is required")
    return RngStream(int(rng)).generator
