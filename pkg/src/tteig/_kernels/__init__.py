"""Contraction kernel backends.

The compiled extension is preferred when present; otherwise the numpy
fallback is used. Both expose the same ``local_apply`` contract and the
benchmark in ``benchmarks/bench_local_apply.py`` compares them.
"""

from . import fallback

try:
    from . import _core as _impl

    HAVE_COMPILED = True
except ImportError:
    _impl = fallback
    HAVE_COMPILED = False

local_apply = _impl.local_apply
BACKEND = _impl.BACKEND

__all__ = ["local_apply", "fallback", "BACKEND", "HAVE_COMPILED"]
