"""Backend selection for the trajectory kernels.

The compiled extension is used when it imports; setting
``CQED_THERMO_BACKEND=python`` forces the pure-Python fallback.
"""

from __future__ import annotations

import importlib
import os

from . import _pykernels

_BACKENDS = {"python": "cqed_thermo._pykernels", "cython": "cqed_thermo._ckernels"}


def load(name: str):
    return importlib.import_module(_BACKENDS[name])


def available() -> list[str]:
    names = []
    for name in _BACKENDS:
        try:
            load(name)
        except ImportError:
            continue
        names.append(name)
    return names


def _select():
    if os.environ.get("CQED_THERMO_BACKEND", "").lower() == "python":
        return _pykernels
    try:
        return load("cython")
    except ImportError:
        return _pykernels


active = _select()
BACKEND = active.NAME
