"""Contraction kernels: a numba-compiled fast path and a pure-numpy fallback.

All three kernels reduce a dense row-major tensor by progressively
contracting one axis at a time against a weight vector, so the total work is
O(prod(shape)) regardless of the axis count.

The active backend is chosen once at import time from the
``TENSORGAMES_BACKEND`` environment variable (``"numba"`` or ``"numpy"``).
When the variable is unset, numba is used if it imports cleanly. ``select()``
switches backends at runtime; the kernel benchmark and the test suite use it
to exercise both paths.
"""

from __future__ import annotations

import os
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

ENV_VAR = "TENSORGAMES_BACKEND"


@dataclass(frozen=True)
class Backend:
    """Kernel set operating on an N-d float array and per-axis weight vectors.

    ``contract_all(arr, xs)`` contracts every axis and returns a float.
    ``contract_skip(arr, xs, i)`` contracts all axes but ``i`` (vector m_i).
    ``contract_skip_pair(arr, xs, i, j)`` with ``i < j`` contracts all axes
    but ``i`` and ``j`` (matrix m_i x m_j).

    ``prepare(xs)`` returns a handle with the same three methods (minus the
    ``xs`` argument) for running many contractions against one weight set
    without re-doing per-call setup.
    """

    name: str
    contract_all: Callable
    contract_skip: Callable
    contract_skip_pair: Callable
    prepare: Callable


# ---------------------------------------------------------------------------
# pure numpy


def _np_contract_all(arr, xs):
    out = arr
    for x in reversed(xs):
        out = out @ x
    return float(out)


def _np_contract_skip(arr, xs, i):
    out = arr
    for ax in range(arr.ndim - 1, i, -1):
        out = out @ xs[ax]
    for ax in range(i):
        out = np.tensordot(xs[ax], out, axes=(0, 0))
    return np.asarray(out, dtype=np.float64)


def _np_contract_skip_pair(arr, xs, i, j):
    out = arr
    for ax in range(arr.ndim - 1, j, -1):
        out = out @ xs[ax]
    for ax in range(i):
        out = np.tensordot(xs[ax], out, axes=(0, 0))
    for ax in range(j - 1, i, -1):
        out = np.tensordot(out, xs[ax], axes=(out.ndim - 2, 0))
    return np.asarray(out, dtype=np.float64)


class _NumpyPrepared:
    __slots__ = ("xs",)

    def __init__(self, xs):
        self.xs = xs

    def contract_all(self, arr):
        return _np_contract_all(arr, self.xs)

    def contract_skip(self, arr, i):
        return _np_contract_skip(arr, self.xs, i)

    def contract_skip_pair(self, arr, i, j):
        return _np_contract_skip_pair(arr, self.xs, i, j)


_NUMPY = Backend("numpy", _np_contract_all, _np_contract_skip,
                 _np_contract_skip_pair, _NumpyPrepared)


# ---------------------------------------------------------------------------
# numba

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False


if _HAVE_NUMBA:

    @njit(cache=True)
    def _nb_all(flat, shape, xcat, xoff):
        buf = flat.copy()
        size = buf.shape[0]
        for ax in range(shape.shape[0] - 1, -1, -1):
            m = shape[ax]
            newsize = size // m
            off = xoff[ax]
            out = np.empty(newsize)
            for p in range(newsize):
                acc = 0.0
                base = p * m
                for k in range(m):
                    acc += buf[base + k] * xcat[off + k]
                out[p] = acc
            buf = out
            size = newsize
        return buf[0]

    @njit(cache=True)
    def _nb_skip(flat, shape, xcat, xoff, i):
        buf = flat.copy()
        size = buf.shape[0]
        for ax in range(shape.shape[0] - 1, i, -1):
            m = shape[ax]
            newsize = size // m
            off = xoff[ax]
            out = np.empty(newsize)
            for p in range(newsize):
                acc = 0.0
                base = p * m
                for k in range(m):
                    acc += buf[base + k] * xcat[off + k]
                out[p] = acc
            buf = out
            size = newsize
        for ax in range(i):
            m = shape[ax]
            newsize = size // m
            off = xoff[ax]
            out = np.zeros(newsize)
            for k in range(m):
                w = xcat[off + k]
                base = k * newsize
                for q in range(newsize):
                    out[q] += w * buf[base + q]
            buf = out
            size = newsize
        return buf

    @njit(cache=True)
    def _nb_skip_pair(flat, shape, xcat, xoff, i, j):
        buf = flat.copy()
        size = buf.shape[0]
        for ax in range(shape.shape[0] - 1, j, -1):
            m = shape[ax]
            newsize = size // m
            off = xoff[ax]
            out = np.empty(newsize)
            for p in range(newsize):
                acc = 0.0
                base = p * m
                for k in range(m):
                    acc += buf[base + k] * xcat[off + k]
                out[p] = acc
            buf = out
            size = newsize
        for ax in range(i):
            m = shape[ax]
            newsize = size // m
            off = xoff[ax]
            out = np.zeros(newsize)
            for k in range(m):
                w = xcat[off + k]
                base = k * newsize
                for q in range(newsize):
                    out[q] += w * buf[base + q]
            buf = out
            size = newsize
        # remaining axes: (m_i, mids..., m_j); contract the axis right after i
        mi = shape[i]
        for ax in range(i + 1, j):
            m = shape[ax]
            post = size // (mi * m)
            off = xoff[ax]
            out = np.zeros(mi * post)
            for p in range(mi):
                dst = p * post
                for k in range(m):
                    w = xcat[off + k]
                    src = (p * m + k) * post
                    for q in range(post):
                        out[dst + q] += w * buf[src + q]
            buf = out
            size = mi * post
        return buf

    def _pack(xs):
        n = len(xs)
        xoff = np.empty(n + 1, dtype=np.int64)
        xoff[0] = 0
        for k, x in enumerate(xs):
            xoff[k + 1] = xoff[k] + x.shape[0]
        xcat = np.empty(xoff[n], dtype=np.float64)
        for k, x in enumerate(xs):
            xcat[xoff[k]:xoff[k + 1]] = x
        return xcat, xoff

    def _numba_contract_all(arr, xs):
        xcat, xoff = _pack(xs)
        shape = np.asarray(arr.shape, dtype=np.int64)
        return float(_nb_all(np.ascontiguousarray(arr).reshape(-1), shape, xcat, xoff))

    def _numba_contract_skip(arr, xs, i):
        xcat, xoff = _pack(xs)
        shape = np.asarray(arr.shape, dtype=np.int64)
        return _nb_skip(np.ascontiguousarray(arr).reshape(-1), shape, xcat, xoff, i)

    def _numba_contract_skip_pair(arr, xs, i, j):
        xcat, xoff = _pack(xs)
        shape = np.asarray(arr.shape, dtype=np.int64)
        flat = _nb_skip_pair(np.ascontiguousarray(arr).reshape(-1), shape, xcat, xoff, i, j)
        return flat.reshape(arr.shape[i], arr.shape[j])

    class _NumbaPrepared:
        """Weight vectors packed once; kernels run on flat views."""

        __slots__ = ("xcat", "xoff", "shape", "tup")

        def __init__(self, xs):
            self.xcat, self.xoff = _pack(xs)
            self.shape = np.array([x.shape[0] for x in xs], dtype=np.int64)
            self.tup = tuple(int(v) for v in self.shape)

        def contract_all(self, arr):
            return float(_nb_all(np.ascontiguousarray(arr).reshape(-1),
                                 self.shape, self.xcat, self.xoff))

        def contract_skip(self, arr, i):
            return _nb_skip(np.ascontiguousarray(arr).reshape(-1),
                            self.shape, self.xcat, self.xoff, i)

        def contract_skip_pair(self, arr, i, j):
            flat = _nb_skip_pair(np.ascontiguousarray(arr).reshape(-1),
                                 self.shape, self.xcat, self.xoff, i, j)
            return flat.reshape(self.tup[i], self.tup[j])

    _NUMBA = Backend(
        "numba", _numba_contract_all, _numba_contract_skip,
        _numba_contract_skip_pair, _NumbaPrepared
    )
    BACKENDS = {"numpy": _NUMPY, "numba": _NUMBA}
else:  # pragma: no cover
    BACKENDS = {"numpy": _NUMPY}


def available() -> tuple[str, ...]:
    """Names of the backends usable in this environment."""
    return tuple(BACKENDS)


_active = _NUMPY


def select(name: str) -> str:
    """Make ``name`` the active backend; returns the previously active name."""
    global _active
    if name not in BACKENDS:
        raise ValueError(f"unknown backend {name!r}; available: {sorted(BACKENDS)}")
    previous = _active.name
    _active = BACKENDS[name]
    return previous


def active() -> Backend:
    return _active


def _initial_choice() -> str:
    choice = os.environ.get(ENV_VAR, "").strip().lower()
    if choice:
        if choice not in ("numba", "numpy"):
            raise ValueError(
                f"{ENV_VAR} must be 'numba' or 'numpy', got {choice!r}"
            )
        if choice == "numba" and "numba" not in BACKENDS:  # pragma: no cover
            warnings.warn(f"{ENV_VAR}=numba requested but numba is unavailable; "
                          "falling back to numpy")
            return "numpy"
        return choice
    return "numba" if "numba" in BACKENDS else "numpy"


select(_initial_choice())
