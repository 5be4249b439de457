"""Numeric kernels with a compiled fast path.

The same four operations exist twice: a Cython extension (``_cy``) and a
pure-numpy fallback (``_py``).  The compiled version is picked at import
time when available; set ``MMFND_KERNELS=python`` or ``cython`` to force
one side (the benchmark suite does exactly that).
"""

import os

_requested = os.environ.get("MMFND_KERNELS", "auto").lower()

if _requested not in ("auto", "cython", "python"):
    raise ValueError(f"MMFND_KERNELS must be auto|cython|python, got {_requested!r}")

if _requested == "python":
    from . import _py as _impl

    BACKEND = "python"
else:
    try:
        from . import _cy as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        if _requested == "cython":
            raise
        from . import _py as _impl

        BACKEND = "python"

lstm_gates_forward = _impl.lstm_gates_forward
lstm_gates_backward = _impl.lstm_gates_backward
adam_step = _impl.adam_step
sgns_train_block = _impl.sgns_train_block


def get_backend(name: str):
    """Return the kernel module for an explicit backend name (benchmarks)."""
    if name == "python":
        from . import _py

        return _py
    if name == "cython":
        from . import _cy  # raises ImportError when the extension is absent

        return _cy
    raise ValueError(f"unknown kernel backend {name!r}")
