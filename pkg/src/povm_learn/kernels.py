"""Hot-loop kernels, compiled when available.

The Cython build (``_ckernels``) is used if it imports; otherwise the numpy
reference in ``_pykernels`` is used. Set ``POVM_LEARN_PURE_PYTHON=1`` to force
the fallback. :data:`BACKEND` names the active implementation.
"""

import os

from . import _pykernels

if os.environ.get("POVM_LEARN_PURE_PYTHON"):
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:
        _impl = _pykernels

BACKEND = "python" if _impl is _pykernels else "cython"

sample_outcomes = _impl.sample_outcomes
channel_error_counts = _impl.channel_error_counts
shatter_search = _impl.shatter_search


def implementations():
    """All importable backends, keyed by name (used by tests and benchmarks)."""
    out = {"python": _pykernels}
    try:
        from . import _ckernels

        out["cython"] = _ckernels
    except ImportError:
        pass
    return out
