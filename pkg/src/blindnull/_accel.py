"""Backend switch for the hot kernels.

Set ``BLINDNULL_NUMBA=0`` to force the pure-numpy path. Any other value (or
leaving the variable unset) uses numba when it can be imported.
"""

import functools
import os

_flag = os.environ.get("BLINDNULL_NUMBA", "1").strip().lower()
_wanted = _flag not in ("0", "false", "no", "off")

try:
    if not _wanted:
        raise ImportError
    import numba as nb

    HAVE_NUMBA = True
    njit = functools.partial(nb.njit, cache=True, nogil=True)
except ImportError:
    HAVE_NUMBA = False
    nb = None

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda fn: fn


def backend():
    return "numba" if HAVE_NUMBA else "numpy"
