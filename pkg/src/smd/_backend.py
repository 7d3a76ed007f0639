"""Backend selection for the hot kernels.

``SMD_BACKEND=numpy`` forces the pure-numpy fallback; the default is numba
when it imports cleanly.
"""

import os

_requested = os.environ.get("SMD_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ImportError(f"SMD_BACKEND must be 'numba' or 'numpy', got {_requested!r}")

if _requested == "numba":
    try:
        import numba  # noqa: F401

        USE_NUMBA = True
    except ImportError:  # pragma: no cover - numba is a hard dependency
        USE_NUMBA = False
else:
    USE_NUMBA = False

BACKEND = "numba" if USE_NUMBA else "numpy"


def set_num_threads(k):
    """Set the numba thread count, clamped to what the runtime allows."""
    if not USE_NUMBA:
        return 1
    import warnings

    import numba

    k = max(1, min(int(k), numba.config.NUMBA_NUM_THREADS))
    with warnings.catch_warnings():
        # loading the threading layer may complain about an old TBB; the
        # workqueue/omp fallback is fine since the kernels reduce serially
        warnings.simplefilter("ignore", numba.NumbaWarning)
        numba.set_num_threads(k)
    return k
