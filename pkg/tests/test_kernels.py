import math
import os
import subprocess
import sys

import mpmath
import numpy as np
import pytest

from fsoirs import _hfkernel_py, kernels

try:
    from fsoirs import _hfkernel
except ImportError:  # pragma: no cover
    _hfkernel = None

needs_ext = pytest.mark.skipif(_hfkernel is None, reason="compiled kernel not built")
K = 2 * math.pi / 1550e-9


def _problem(n_ap, n_lens, rz=200.0, span=0.1, seed=0):
    rng = np.random.default_rng(seed)
    yp = np.linspace(-span, span, n_ap)
    w = rng.normal(size=(2, n_ap))
    ry = rng.uniform(-0.03, 0.03, n_lens)
    return yp, w[0].copy(), w[1].copy(), ry, np.full(n_lens, rz)


def _direct(yp, wre, wim, ry, rz, k):
    # Extended precision avoids the cancellation in rho - rz.
    mpmath.mp.dps = 40
    out = []
    for a, z in zip(ry, rz):
        acc = mpmath.mpc(0)
        for y, wr, wi in zip(yp, wre, wim):
            rho = mpmath.sqrt((mpmath.mpf(a) - y) ** 2 + mpmath.mpf(z) ** 2)
            acc += mpmath.mpc(wr, wi) * mpmath.expj(-k * (rho - z)) / mpmath.sqrt(rho)
        out.append(complex(acc))
    return np.array(out)


def test_numpy_kernel_matches_direct_sum():
    args = _problem(301, 4)
    re, im = _hfkernel_py.hf_line_sum(*args, K)
    ref = _direct(*args, K)
    scale = np.max(np.abs(ref))
    assert np.max(np.abs(re + 1j * im - ref)) <= 1e-9 * scale


@needs_ext
@pytest.mark.parametrize("rz,span", [(200.0, 0.1), (2.0, 0.05), (0.5, 3.0)])
def test_compiled_matches_numpy(rz, span):
    # The last case pushes the phase past the range of the polynomial sine.
    args = _problem(20001, 33, rz=rz, span=span)
    a = _hfkernel_py.hf_line_sum(*args, K)
    b = _hfkernel.hf_line_sum(*args, K)
    scale = max(np.max(np.abs(a[0])), np.max(np.abs(a[1])))
    assert np.max(np.abs(a[0] - b[0])) <= 1e-9 * scale
    assert np.max(np.abs(a[1] - b[1])) <= 1e-9 * scale


@needs_ext
def test_compiled_handles_empty_inputs():
    yp, wre, wim, ry, rz = _problem(5, 0)
    re, im = _hfkernel.hf_line_sum(yp, wre, wim, ry, rz, K)
    assert re.size == 0 and im.size == 0


def test_backend_selection_env():
    env = dict(os.environ, FSOIRS_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from fsoirs import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
    if _hfkernel is not None and not os.environ.get("FSOIRS_PURE_PYTHON"):
        assert kernels.BACKEND == "compiled"
