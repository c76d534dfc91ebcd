"""Kernel backend selection.

The compiled extension is used when it was built; otherwise the numpy
implementation is used.  ``DPM_KERNELS=python`` forces the fallback.
"""

from __future__ import annotations

import os
from types import ModuleType

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

BACKENDS: dict[str, ModuleType] = {"python": _pykernels}
if _ckernels is not None:
    BACKENDS["cython"] = _ckernels


def get_backend(name: str | None = None) -> ModuleType:
    if name is None:
        name = os.environ.get("DPM_KERNELS") or ("cython" if "cython" in BACKENDS else "python")
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} unavailable; have {sorted(BACKENDS)}") from None


DEFAULT_BACKEND = "cython" if "cython" in BACKENDS else "python"
