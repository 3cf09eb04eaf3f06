"""Selects the compiled kernel extension when available.

Set SLEEPSPIKE_BACKEND=py or SLEEPSPIKE_BACKEND=c to force a choice;
forcing ``c`` raises if the extension was not built. By default the
compiled module is used when importable, the pure-Python twin otherwise.
"""

import os

_forced = os.environ.get("SLEEPSPIKE_BACKEND", "").strip().lower()

if _forced in ("py", "python", "pure"):
    from . import _purecore as _kernels
elif _forced in ("c", "cy", "cython", "fast"):
    from . import _fastcore as _kernels  # type: ignore[no-redef]
elif _forced:
    raise ImportError(f"unknown SLEEPSPIKE_BACKEND value: {_forced!r}")
else:
    try:
        from . import _fastcore as _kernels  # type: ignore[no-redef]
    except ImportError:
        from . import _purecore as _kernels  # type: ignore[no-redef]

BACKEND = _kernels.BACKEND

jac_double = _kernels.jac_double
jac_add = _kernels.jac_add
jac_add_mixed = _kernels.jac_add_mixed
lll_reduce_rows = _kernels.lll_reduce_rows
