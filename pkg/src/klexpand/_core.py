"""Backend selection for the hot numeric kernels.

By default the numba-compiled kernels in :mod:`klexpand._core_numba` are
used.  Set ``KLEXPAND_NO_NUMBA=1`` (or numba's own ``NUMBA_DISABLE_JIT=1``)
before import to select the pure-numpy twins instead; if numba is not
installed the fallback is automatic.  ``benchmarks/bench_kernels.py``
compares the two paths.
"""

import os


def _flag_set(name):
    return os.environ.get(name, "").strip().lower() in ("1", "true", "yes", "on")


_disabled = _flag_set("KLEXPAND_NO_NUMBA") or _flag_set("NUMBA_DISABLE_JIT")

if not _disabled:
    try:
        from . import _core_numba as _backend
    except ImportError:
        from . import _core_numpy as _backend

        _disabled = True
else:
    from . import _core_numpy as _backend

BACKEND = "numpy" if _disabled else "numba"

tridiag_eigh_firstrow = _backend.tridiag_eigh_firstrow
tridiag_eigh_full = _backend.tridiag_eigh_full
legendre_table_classical = _backend.legendre_table_classical
legendre_table_monic = _backend.legendre_table_monic
legendre_table_orthonormal = _backend.legendre_table_orthonormal
classical_moment_contraction = _backend.classical_moment_contraction
