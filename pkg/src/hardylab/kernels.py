"""Backend selection for the hot kernels.

The compiled module is preferred.  Set ``HARDYLAB_BACKEND=python`` to force
the numpy fallback (used by the equivalence tests and the benchmark).
``HARDYLAB_THREADS`` caps the number of threads used by the compiled point
loop; the default is 1.
"""
from __future__ import annotations

import os

from . import _pykernels


def _load(name: str | None = None):
    name = (name or os.environ.get("HARDYLAB_BACKEND", "auto")).lower()
    if name == "python":
        return _pykernels
    try:
        from . import _ckernels
    except ImportError:
        if name == "cython":
            raise
        return _pykernels
    return _ckernels


def get_backend(name: str | None = None):
    """Return the kernel module for ``name`` ('auto', 'cython' or 'python')."""
    return _load(name)


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("HARDYLAB_THREADS", "1")))
    except ValueError:
        return 1


impl = _load()
BACKEND = impl.BACKEND
