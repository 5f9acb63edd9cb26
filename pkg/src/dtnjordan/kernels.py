"""Backend selection for the element-assembly kernel.

The compiled Cython module is used when it was built; otherwise the NumPy
implementation is used. Setting ``DTNJORDAN_PURE_PYTHON=1`` forces the
fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
assemble_p1 = _kernels_py.assemble_p1

if os.environ.get("DTNJORDAN_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from ._kernels import assemble_p1  # noqa: F811
        BACKEND = "cython"
    except ImportError:
        pass

python_assemble_p1 = _kernels_py.assemble_p1


def compiled_assemble_p1():
    """Return the compiled kernel, or ``None`` if the extension is not built."""
    try:
        from ._kernels import assemble_p1 as fn
    except ImportError:
        return None
    return fn
