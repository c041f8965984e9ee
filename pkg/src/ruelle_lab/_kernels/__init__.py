"""Hot loops, compiled when available.

The compiled extension ``_ckernels`` is preferred. Set ``RUELLE_LAB_PURE=1`` to
force the pure-Python fallback (used by the benchmark and the parity tests).
"""
import os

from . import _pykernels as pure

compiled = None
if os.environ.get("RUELLE_LAB_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as compiled
    except ImportError:  # extension not built
        compiled = None

backend = compiled if compiled is not None else pure
BACKEND_NAME = "cython" if compiled is not None else "python"

orbit = backend.orbit
aberth = backend.aberth
normalize = backend.normalize

STATUS_OK = pure.STATUS_OK
STATUS_ESCAPED = pure.STATUS_ESCAPED
STATUS_POLE = pure.STATUS_POLE
STATUS_OVERFLOW = pure.STATUS_OVERFLOW

__all__ = [
    "BACKEND_NAME",
    "STATUS_ESCAPED",
    "STATUS_OK",
    "STATUS_OVERFLOW",
    "STATUS_POLE",
    "aberth",
    "backend",
    "compiled",
    "normalize",
    "orbit",
    "pure",
]
