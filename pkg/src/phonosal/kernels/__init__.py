"""Hot numeric kernels with a compiled core and a numpy fallback.

The compiled extension (``_ckernels``, built from Cython) is preferred
when it imports; otherwise the numpy implementations are used.  Override
with the environment variable ``PHONOSAL_KERNELS`` set to ``c`` or
``python`` (``auto`` is the default).  ``benchmarks/bench_kernels.py``
compares the two on representative shapes.
"""

import os

from . import _pykernels

_choice = os.environ.get("PHONOSAL_KERNELS", "auto").lower()
if _choice not in ("auto", "c", "python"):
    raise ValueError(f"PHONOSAL_KERNELS must be auto, c or python, not {_choice!r}")

_impl = _pykernels
if _choice in ("auto", "c"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]
    except ImportError:
        if _choice == "c":
            raise

BACKEND_NAME = _impl.BACKEND_NAME

conv1d_forward = _impl.conv1d_forward
conv1d_backward = _impl.conv1d_backward
conv2d_forward = _impl.conv2d_forward
conv2d_backward = _impl.conv2d_backward
maxpool2d_forward = _impl.maxpool2d_forward
maxpool2d_backward = _impl.maxpool2d_backward


def get_backend(name):
    """Return the kernel module for an explicit backend name.

    Used by the benchmark and the backend-parity tests; production code
    goes through the module-level functions above.
    """
    if name == "python":
        return _pykernels
    if name == "c":
        from . import _ckernels

        return _ckernels
    raise ValueError(f"unknown kernel backend {name!r}")
