import os
import subprocess
import sys

import numpy as np
import pytest

from fimlab import kernels
from fimlab.models import LinearStateSpaceModel
from fimlab.numerics import stream_for

MODEL = LinearStateSpaceModel.default_study()
compiled_only = pytest.mark.skipif(kernels.BACKEND == "python", reason="compiled extension not built")


def _call(theta, n=100, seed=0):
    y = MODEL.sample(np.ones(3), n, stream_for(seed, "kern"))
    return (MODEL.A, MODEL.C, MODEL.R, np.asarray(theta, dtype=float), MODEL.mu0, MODEL.Sigma0, y)


@compiled_only
@pytest.mark.parametrize("theta", [[1.0, 1.0, 1.0], [0.5, 2.0, 0.3], [3.0, 0.1, 1.7]])
def test_backends_agree(theta):
    call = _call(theta)
    py = kernels.python_backend
    assert kernels.ss_nll(*call) == pytest.approx(py.ss_nll(*call), rel=1e-12)
    v1, g1, h1 = kernels.ss_nll_derivs(*call)
    v2, g2, h2 = py.ss_nll_derivs(*call)
    assert v1 == pytest.approx(v2, rel=1e-12)
    np.testing.assert_allclose(g1, g2, rtol=1e-10, atol=1e-10)
    np.testing.assert_allclose(h1, h2, rtol=1e-10, atol=1e-10)


def test_value_matches_derivs_value():
    call = _call([0.7, 1.2, 0.9], n=30)
    for impl in (kernels, kernels.python_backend):
        assert impl.ss_nll(*call) == pytest.approx(impl.ss_nll_derivs(*call)[0], rel=1e-12)


def test_pure_python_switch():
    env = dict(os.environ, FIMLAB_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "from fimlab import kernels; print(kernels.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "python"
