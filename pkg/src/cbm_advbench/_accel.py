"""Kernel dispatch between numba-compiled loops and vectorized numpy.

Set ``CBM_ADVBENCH_NO_JIT=1`` to force the numpy path (also used when numba
is not importable). Both paths are kept bit-compatible; the test suite runs
them against each other.
"""
import os

try:
    from numba import njit as _njit
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

    def _njit(*args, **kwargs):
        def decorator(func):
            return func
        return decorator


def _flag(name):
    return os.environ.get(name, "").strip().lower() not in ("", "0", "false", "no")


USE_JIT = HAVE_NUMBA and not _flag("CBM_ADVBENCH_NO_JIT")


def njit(func):
    """Compile ``func`` with numba in nopython mode when available."""
    if not HAVE_NUMBA:
        return func
    return _njit(cache=True, nogil=True)(func)


def select(jit_impl, numpy_impl, use_jit=None):
    """Pick a kernel implementation; ``use_jit=None`` follows the env flag."""
    if use_jit is None:
        use_jit = USE_JIT
    return jit_impl if (use_jit and HAVE_NUMBA) else numpy_impl
