"""Kernel backend selection.

The compiled extension (ssgtree._kernels) is preferred; the pure-Python
fallback is observationally identical, only slower. Force a choice with
SSGTREE_KERNELS=c or SSGTREE_KERNELS=py.
"""
import os

_forced = os.environ.get("SSGTREE_KERNELS")
if _forced == "py":
    from . import _kernels_py as _impl
elif _forced == "c":
    from . import _kernels as _impl  # ImportError is the right failure here
elif _forced:
    raise RuntimeError(f"SSGTREE_KERNELS must be 'c' or 'py', got {_forced!r}")
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        from . import _kernels_py as _impl

bfs_closure = _impl.bfs_closure


def backend():
    return _impl.BACKEND
