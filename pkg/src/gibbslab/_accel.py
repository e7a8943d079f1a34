"""Backend selection for the hot assembly kernels.

The numba path is the default. Set ``GIBBSLAB_NO_NUMBA=1`` to force the
pure-numpy fallback (useful for debugging and as a baseline for
``benchmarks/bench_kernels.py``). ``GIBBSLAB_NUM_THREADS`` caps the numba
thread count; it must be set before the package is imported.
"""

import os

from . import _kernels_numpy

_flag = os.environ.get("GIBBSLAB_NO_NUMBA", "").strip().lower()
_want_numba = _flag not in ("1", "true", "yes")

if _want_numba:
    try:
        from . import _kernels_numba as _impl
        BACKEND = "numba"
    except ImportError:
        _impl = _kernels_numpy
        BACKEND = "numpy"
else:
    _impl = _kernels_numpy
    BACKEND = "numpy"

METROPOLIS = _kernels_numpy.METROPOLIS
GAUSSIAN = _kernels_numpy.GAUSSIAN

alpha_values = _impl.alpha_values
transition_superop = _impl.transition_superop
decay_matrix = _impl.decay_matrix
coherent_bohr = _impl.coherent_bohr
