"""Hot kernels with two interchangeable implementations.

Every kernel exists in :mod:`smd.kernels._numpy` and
:mod:`smd.kernels._numba` with identical signatures; ``SMD_BACKEND``
selects which one is exported here.
"""

from .._backend import BACKEND, USE_NUMBA

if USE_NUMBA:
    from ._numba import (
        assemble,
        chol_solve,
        column_means,
        euler_update,
        first_coordinate_stats,
        ito_moment,
        moments,
        power_moment,
        small_det,
        wasserstein_sorted,
    )
else:
    from ._numpy import (
        assemble,
        chol_solve,
        column_means,
        euler_update,
        first_coordinate_stats,
        ito_moment,
        moments,
        power_moment,
        small_det,
        wasserstein_sorted,
    )

__all__ = [
    "BACKEND",
    "USE_NUMBA",
    "assemble",
    "chol_solve",
    "column_means",
    "euler_update",
    "first_coordinate_stats",
    "ito_moment",
    "moments",
    "power_moment",
    "small_det",
    "wasserstein_sorted",
]
