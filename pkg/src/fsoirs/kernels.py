"""Backend selection for the hot loops.

The compiled extension is used when it was built and ``FSOIRS_PURE_PYTHON``
is not set; otherwise the numpy implementation is used.
"""
import os

from . import _hfkernel_py

BACKEND = "numpy"
hf_line_sum = _hfkernel_py.hf_line_sum

if not os.environ.get("FSOIRS_PURE_PYTHON"):
    try:
        from . import _hfkernel

        hf_line_sum = _hfkernel.hf_line_sum
        BACKEND = "compiled"
    except ImportError:  # pragma: no cover - depends on the build
        pass

__all__ = ["BACKEND", "hf_line_sum"]
