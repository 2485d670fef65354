"""Distance/containment kernels with backend selection at import.

The compiled extension is used when present; the pure-numpy fallback
otherwise. ``DEXSYNTH_KERNELS=numpy`` (or ``compiled``) forces a backend,
mainly for the benchmark and for cross-backend tests.
"""

import os

from . import numpy_backend

_forced = os.environ.get("DEXSYNTH_KERNELS")

_compiled = None
if _forced != "numpy":
    try:
        from . import _core as _compiled
    except ImportError:
        _compiled = None
        if _forced == "compiled":
            raise ImportError(
                "DEXSYNTH_KERNELS=compiled but the extension is not built; "
                "run `pip install -e .` or `python setup.py build_ext --inplace`"
            )

_impl = _compiled if _compiled is not None else numpy_backend

BACKEND = _impl.NAME
closest_points = _impl.closest_points
winding_numbers = _impl.winding_numbers


def available_backends():
    """Names of importable backends (always includes 'numpy')."""
    names = ["numpy"]
    if _compiled is not None:
        names.insert(0, "compiled")
    return names


def get_backend(name):
    """Fetch a backend module by name, independent of the import selection."""
    if name == "numpy":
        return numpy_backend
    if name == "compiled":
        if _compiled is None:
            raise ImportError("compiled kernel extension is not available")
        return _compiled
    raise ValueError(f"unknown kernel backend {name!r}")
