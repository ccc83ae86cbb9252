"""Run-length kernel backends.

`backend` is the module actually in use: the compiled Cython kernel when
its extension imported cleanly, else the vectorized numpy fallback.  Both
implement the same run_batch contract and produce bit-identical stopping
times.  Set CDX_BACKEND=native|fallback to force one (native raises if the
extension is unavailable).
"""

from __future__ import annotations

import os

from . import _fallback
from .plan import KernelPlan, compile_plan, compile_plans
from .seeds import seed_table

__all__ = [
    "backend",
    "backend_name",
    "get_backend",
    "seed_table",
    "KernelPlan",
    "compile_plan",
    "compile_plans",
]

try:
    from . import _native
except ImportError:  # pragma: no cover - depends on build environment
    _native = None

_FORCED = os.environ.get("CDX_BACKEND", "").strip().lower()
if _FORCED == "native":
    if _native is None:
        raise ImportError("CDX_BACKEND=native but the compiled kernel is not built")
    backend = _native
elif _FORCED == "fallback":
    backend = _fallback
elif _FORCED:
    raise ImportError(f"unknown CDX_BACKEND value {_FORCED!r}")
else:
    backend = _native if _native is not None else _fallback

backend_name: str = backend.NAME


def get_backend(name: str | None = None):
    """Backend module by name ('native'/'fallback'), or the active one."""
    if name is None:
        return backend
    if name == "native":
        if _native is None:
            raise ValueError("compiled kernel is not available")
        return _native
    if name == "fallback":
        return _fallback
    raise ValueError(f"unknown backend {name!r}")
