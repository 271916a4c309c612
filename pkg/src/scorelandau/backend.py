"""Backend selection for the O(N^2) pair-sum kernels.

The compiled Cython core is used when its extension module imported
successfully; otherwise the numpy fallback takes over.  Set the environment
variable SCORELANDAU_BACKEND to "compiled" or "python" before import to force
a choice ("compiled" raises if the extension is unavailable).
"""

import os

import numpy as np

from . import _pairwise_py

_REQUESTED = os.environ.get("SCORELANDAU_BACKEND", "auto").strip().lower()

if _REQUESTED in ("auto", "", "compiled"):
    try:
        from . import _core as _impl

        BACKEND = "compiled"
    except ImportError:
        if _REQUESTED == "compiled":
            raise
        _impl = _pairwise_py
        BACKEND = "python"
elif _REQUESTED in ("python", "numpy"):
    _impl = _pairwise_py
    BACKEND = "python"
else:
    raise ValueError(
        f"SCORELANDAU_BACKEND={_REQUESTED!r}; expected 'auto', 'compiled' or 'python'"
    )


def available_backends():
    names = ["python"]
    try:
        from . import _core  # noqa: F401

        names.insert(0, "compiled")
    except ImportError:
        pass
    return names


def get_impl(name):
    """Return a specific backend module (for tests and benchmarks)."""
    if name == "python":
        return _pairwise_py
    if name == "compiled":
        from . import _core

        return _core
    raise ValueError(f"unknown backend {name!r}")


def _prep(arr, shape_hint=None):
    out = np.ascontiguousarray(arr, dtype=np.float64)
    return out


def drift_sum(V, S, kernel):
    """(1/N) sum_j A(v_i - v_j)(s_i - s_j) for every particle i."""
    return _impl.drift_sum(
        _prep(V), _prep(S), kernel.c_gamma, kernel.gamma, kernel.floor,
        kernel.is_identity,
    )


def logdet_rate_sum(V, S, J, kernel):
    """Per-particle rates of log|det grad T| (see density module)."""
    return _impl.logdet_rate_sum(
        _prep(V), _prep(S), _prep(J), kernel.c_gamma, kernel.gamma, kernel.floor,
        kernel.is_identity,
    )


def entropy_rate_sum(V, S, kernel):
    """Estimated entropy decay rate -(1/N^2) sum s_i . A(z_ij)(s_i - s_j)."""
    return float(
        _impl.entropy_rate_sum(
            _prep(V), _prep(S), kernel.c_gamma, kernel.gamma, kernel.floor,
            kernel.is_identity,
        )
    )
