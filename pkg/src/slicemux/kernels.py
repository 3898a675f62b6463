"""Backend selection for the hot loops.

The compiled extension is used when it imports; set ``SLICEMUX_PURE_PYTHON=1``
to force the pure-Python kernels.
"""

from __future__ import annotations

import os

from slicemux import _purepy

BACKENDS = {"python": _purepy}

try:
    from slicemux import _ext
except ImportError:  # extension not built
    _ext = None
else:
    BACKENDS["compiled"] = _ext

if _ext is not None and not os.environ.get("SLICEMUX_PURE_PYTHON"):
    BACKEND = "compiled"
else:
    BACKEND = "python"

_impl = BACKENDS[BACKEND]


def get_backend(name: str | None = None):
    """Return the kernel module for ``name`` (default: the active backend)."""
    if name is None:
        return _impl
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} unavailable; have {sorted(BACKENDS)}") from None


def knapsack(values, weights, capacity):
    return _impl.knapsack(values, weights, capacity)


def run_max_weight(excess, w_c, targets, record_decisions=True, record_deficits=False):
    return _impl.run_max_weight(excess, w_c, targets, record_decisions, record_deficits)


def markov_walk(cumulative, start, uniforms):
    return _impl.markov_walk(cumulative, start, uniforms)
