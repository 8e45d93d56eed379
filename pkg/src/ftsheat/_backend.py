"""Kernel backend selection.

The compiled kernels are used when importable.  ``FTSHEAT_BACKEND=python``
forces the numpy fallback; ``FTSHEAT_BACKEND=cython`` makes a missing
extension an import error instead of a silent fallback.
"""
import os

from . import _pykernels

_requested = os.environ.get("FTSHEAT_BACKEND", "auto").lower()

if _requested not in ("auto", "python", "cython"):
    raise ImportError(f"FTSHEAT_BACKEND must be auto, python or cython, not {_requested!r}")

_ckernels = None
if _requested != "python":
    try:
        from . import _ckernels
    except ImportError:
        if _requested == "cython":
            raise

kernels = _ckernels if _ckernels is not None else _pykernels
BACKEND = kernels.NAME


def available_backends():
    names = {"python": _pykernels}
    if _ckernels is not None:
        names["cython"] = _ckernels
    return names


def get_kernels(name=None):
    if name is None:
        return kernels
    try:
        return available_backends()[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} is not available") from None
