"""Dense joint-strategy tensors and their multilinear contractions.

A tensor holds one real value per joint pure strategy of an N-player game,
one axis per player. Expected values under mixed strategies are multilinear
forms of the per-player weight vectors; the three contraction operations
below are the full form, its gradient in one player's weights, and its mixed
second derivative in two players' weights.
"""

from __future__ import annotations

import itertools
import math
from typing import Callable, Sequence

import numpy as np

from . import backends

MAX_AXES = 8


class ShapeError(ValueError):
    """Tensor axes and weight-vector dimensions do not line up."""


def _check_shape(shape: tuple[int, ...]) -> None:
    if not (1 <= len(shape) <= MAX_AXES):
        raise ShapeError(
            f"tensors must have between 1 and {MAX_AXES} axes, got {len(shape)}"
        )
    if any(extent < 1 for extent in shape):
        raise ShapeError(f"all axis extents must be positive, got {shape}")


class DenseTensor:
    """Immutable N-axis tensor of float64 values in row-major order.

    ``data`` exposes the flat storage, ``array`` the N-d view. Indexing with a
    joint index (one entry per axis, each within its extent) returns the
    element for that joint pure strategy.
    """

    __slots__ = ("_array",)

    def __init__(self, values):
        arr = np.array(values, dtype=np.float64, order="C")
        _check_shape(arr.shape)
        arr.setflags(write=False)
        self._array = arr

    @classmethod
    def from_flat(cls, data, shape: Sequence[int]) -> "DenseTensor":
        shape = tuple(int(m) for m in shape)
        _check_shape(shape)
        flat = np.asarray(data, dtype=np.float64).reshape(-1)
        if flat.size != math.prod(shape):
            raise ShapeError(
                f"flat data of length {flat.size} cannot fill shape {shape} "
                f"(needs {math.prod(shape)})"
            )
        return cls(flat.reshape(shape))

    @property
    def shape(self) -> tuple[int, ...]:
        return self._array.shape

    @property
    def ndim(self) -> int:
        return self._array.ndim

    @property
    def data(self) -> np.ndarray:
        """Flat row-major view of the entries (read-only)."""
        return self._array.reshape(-1)

    @property
    def array(self) -> np.ndarray:
        """N-d view of the entries (read-only)."""
        return self._array

    def __getitem__(self, joint_index: Sequence[int]) -> float:
        idx = tuple(joint_index)
        if len(idx) != self.ndim:
            raise ShapeError(
                f"joint index needs {self.ndim} entries, got {len(idx)}"
            )
        for ax, (k, m) in enumerate(zip(idx, self.shape)):
            if not 0 <= int(k) < m:
                raise IndexError(
                    f"index {k} out of range for axis {ax} with extent {m}"
                )
        return float(self._array[idx])

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"DenseTensor(shape={self.shape})"


def _as_array(tensor) -> np.ndarray:
    if isinstance(tensor, DenseTensor):
        return tensor.array
    arr = np.asarray(tensor, dtype=np.float64)
    _check_shape(arr.shape)
    return arr


def _as_vectors(shape: tuple[int, ...], x) -> list[np.ndarray]:
    if len(x) != len(shape):
        raise ShapeError(
            f"expected {len(shape)} weight vectors (one per axis), got {len(x)}"
        )
    vectors = []
    for ax, v in enumerate(x):
        v = np.ascontiguousarray(v, dtype=np.float64)
        if v.ndim != 1 or v.shape[0] != shape[ax]:
            raise ShapeError(
                f"weight vector for axis {ax} must have length {shape[ax]}, "
                f"got shape {v.shape}"
            )
        vectors.append(v)
    return vectors


def _check_axis(ndim: int, i: int) -> None:
    if not 0 <= i < ndim:
        raise IndexError(f"axis {i} out of range for a {ndim}-axis tensor")


def full_contract(tensor, x) -> float:
    """Multilinear form sum_K T[K] * prod_i x_i[K_i].

    The vectors need not lie on the simplex; with probability vectors this is
    the expected value of the tensor entries under independent mixing.
    """
    arr = _as_array(tensor)
    vectors = _as_vectors(arr.shape, x)
    return backends.active().contract_all(arr, vectors)


def contract_except(tensor, x, i: int) -> np.ndarray:
    """Contraction of every axis but ``i``: the gradient of ``full_contract``
    in ``x[i]``. Satisfies dot(result, x[i]) == full_contract(tensor, x)."""
    arr = _as_array(tensor)
    vectors = _as_vectors(arr.shape, x)
    _check_axis(arr.ndim, i)
    return backends.active().contract_skip(arr, vectors, i)


def contract_except_pair(tensor, x, i: int, j: int) -> np.ndarray:
    """Contraction of every axis but ``i`` and ``j`` (an m_i x m_j matrix):
    the mixed second derivative of ``full_contract`` in x[i] and x[j]."""
    arr = _as_array(tensor)
    vectors = _as_vectors(arr.shape, x)
    _check_axis(arr.ndim, i)
    _check_axis(arr.ndim, j)
    if i == j:
        raise ValueError(
            "axes must differ: the same-axis second derivative of a "
            "multilinear form is zero"
        )
    if i < j:
        return backends.active().contract_skip_pair(arr, vectors, i, j)
    return backends.active().contract_skip_pair(arr, vectors, j, i).T.copy()


def fill_from(fn: Callable, strategies) -> DenseTensor:
    """Evaluate ``fn`` on every joint pure strategy.

    ``strategies`` holds one sequence of pure strategies per player; the
    output entry at joint index K is ``fn(s_1[K_1], ..., s_N[K_N])``.
    """
    per_player = [list(s) for s in strategies]
    shape = tuple(len(s) for s in per_player)
    _check_shape(shape)
    flat = np.empty(math.prod(shape), dtype=np.float64)
    for pos, combo in enumerate(itertools.product(*per_player)):
        flat[pos] = fn(*combo)
    return DenseTensor.from_flat(flat, shape)
