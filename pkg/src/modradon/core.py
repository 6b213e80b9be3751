"""Scalar and sequence primitives: centered modulo folding, forward
differences, running sums (anti-differences), and rounding onto the fold grid.

Everything downstream is built from these operators.  All functions are pure
and accept either scalars or numpy arrays where that makes sense; sequences
with an explicit (possibly negative) base index are carried by
:class:`SampleSeq`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, SizeError

#: Relative guard band applied before float floor/ceil so that values sitting
#: on a grid line (up to accumulated rounding) do not flip to the wrong side.
GUARD = 1e-12


def guarded_floor(x):
    """Floor with a small relative guard band toward +inf."""
    x = np.asarray(x, dtype=float)
    return np.floor(x + GUARD * np.maximum(1.0, np.abs(x)))


def guarded_ceil(x):
    """Ceil with a small relative guard band toward -inf."""
    x = np.asarray(x, dtype=float)
    return np.ceil(x - GUARD * np.maximum(1.0, np.abs(x)))


@dataclass(frozen=True)
class Threshold:
    """Half-range of the centered fold; values are folded into [-lam, lam).

    Parameters
    ----------
    lam : float
        Positive fold threshold, in signal units.
    """

    lam: float

    def __post_init__(self):
        if not np.isfinite(self.lam) or self.lam <= 0.0:
            raise DomainError(f"threshold must be a positive finite real, got {self.lam}")


@dataclass(frozen=True, eq=False)
class SampleSeq:
    """A finite run of real samples indexed from an explicit base index.

    The absolute index k maps to ``values[k - base_index]``; base indices may
    be negative, which is how extended left margins are represented.

    Parameters
    ----------
    base_index : int
        Absolute index of the first element.
    values : array_like
        Non-empty 1-D sequence of finite reals.
    """

    base_index: int
    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise SizeError("SampleSeq requires a non-empty 1-D value array")
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "base_index", int(self.base_index))

    def __len__(self) -> int:
        return self.values.size

    @property
    def end_index(self) -> int:
        """Absolute index of the last element."""
        return self.base_index + self.values.size - 1

    def covers(self, k: int) -> bool:
        return self.base_index <= k <= self.end_index

    def at(self, k: int) -> float:
        """Value at absolute index k."""
        if not self.covers(k):
            raise DomainError(f"index {k} outside [{self.base_index}, {self.end_index}]")
        return float(self.values[k - self.base_index])

    def window(self, k_lo: int, k_hi: int) -> "SampleSeq":
        """Restriction to absolute indices [k_lo, k_hi]."""
        if k_lo > k_hi:
            raise SizeError(f"empty window [{k_lo}, {k_hi}]")
        if not (self.covers(k_lo) and self.covers(k_hi)):
            raise DomainError(
                f"window [{k_lo}, {k_hi}] outside [{self.base_index}, {self.end_index}]"
            )
        lo = k_lo - self.base_index
        return SampleSeq(k_lo, self.values[lo : k_hi - self.base_index + 1].copy())

    def indices(self) -> np.ndarray:
        """Absolute indices as an int array."""
        return np.arange(self.base_index, self.base_index + self.values.size)


def modulo_fold(t, thr: Threshold):
    """Centered fold of t into [-lam, lam).

    Computes ``t - 2*lam*floor((t + lam) / (2*lam))`` elementwise.  Scalars
    return a float, arrays an array of the same shape.

    Raises
    ------
    DomainError
        If any input value is not finite.
    """
    lam = thr.lam
    arr = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("modulo_fold requires finite input")
    two_lam = 2.0 * lam
    out = arr - two_lam * np.floor((arr + lam) / two_lam)
    if np.isscalar(t) or arr.ndim == 0:
        return float(out)
    return out


def fold_count(t, thr: Threshold):
    """Integer fold count n with ``t == modulo_fold(t) + 2*lam*n``."""
    lam = thr.lam
    arr = np.asarray(t, dtype=float)
    return np.floor((arr + lam) / (2.0 * lam)).astype(np.int64)


def forward_diff(a: SampleSeq, order: int = 1) -> SampleSeq:
    """Order-fold forward difference; result keeps the base index.

    ``result[k] = sum_m C(order, m) (-1)^(order-m) a[k+m]``, with length
    reduced by ``order``.

    Raises
    ------
    SizeError
        If the sequence has no more than ``order`` samples.
    """
    order = int(order)
    if order < 1:
        raise DomainError(f"difference order must be >= 1, got {order}")
    if len(a) <= order:
        raise SizeError(f"need more than {order} samples, got {len(a)}")
    return SampleSeq(a.base_index, np.diff(a.values, n=order))


def anti_diff(a: SampleSeq) -> SampleSeq:
    """Running sum anchored at the base index.

    The result has one more sample than the input, starts at zero, and
    inverts :func:`forward_diff` up to the value at the base index:
    ``anti_diff(forward_diff(a))[k] == a[k] - a[base]``.
    """
    out = np.empty(a.values.size + 1)
    out[0] = 0.0
    np.cumsum(a.values, out=out[1:])
    return SampleSeq(a.base_index, out)


def anti_diff_bilateral(a: SampleSeq) -> SampleSeq:
    """Running sum anchored at absolute index 0, extended to both sides.

    ``result[0] = 0``; ``result[k] = sum_{j=0}^{k-1} a[j]`` for k > 0 and
    ``result[k] = -sum_{j=k}^{-1} a[j]`` for k < 0.  The result covers
    ``[base, base+len]``.

    Raises
    ------
    DomainError
        If the input does not cover index 0 (``base <= 0 < base+len``).
    """
    if not (a.base_index <= 0 < a.base_index + len(a)):
        raise DomainError(
            f"bilateral running sum needs index 0 inside [{a.base_index}, {a.end_index}]"
        )
    c = np.empty(a.values.size + 1)
    c[0] = 0.0
    np.cumsum(a.values, out=c[1:])
    # subtracting the cumulative value at index 0 re-anchors the sum there
    return SampleSeq(a.base_index, c - c[-a.base_index])


def round_to_2lambda(x, thr: Threshold):
    """Round onto the grid of even multiples of lam: ``2*lam*ceil(floor(x/lam)/2)``.

    Values already on the grid are fixed points; guard bands keep float
    representations of grid points from flipping to a neighbour.
    """
    lam = thr.lam
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("round_to_2lambda requires finite input")
    m = guarded_ceil(guarded_floor(arr / lam) / 2.0)
    out = (2.0 * lam) * m
    if np.isscalar(x) or arr.ndim == 0:
        return float(out)
    return out
