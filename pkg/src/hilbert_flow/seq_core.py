"""Finitely supported bi-infinite sequences and Cauchy-kernel tail estimates.

A :class:`Sequence` stores its values densely over a contiguous
:class:`Window`; every index outside the window reads as exactly zero.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np
from scipy.special import digamma, polygamma


@dataclass(frozen=True)
class Window:
    """Inclusive integer index range ``[lo, hi]``."""

    lo: int
    hi: int

    def __post_init__(self):
        if int(self.lo) != self.lo or int(self.hi) != self.hi:
            raise ValueError(f"window bounds must be integers, got {self.lo}, {self.hi}")
        object.__setattr__(self, "lo", int(self.lo))
        object.__setattr__(self, "hi", int(self.hi))
        if self.lo > self.hi:
            raise ValueError(f"empty window [{self.lo}, {self.hi}]")

    @property
    def width(self) -> int:
        return self.hi - self.lo + 1

    def indices(self) -> np.ndarray:
        return np.arange(self.lo, self.hi + 1)

    def expand(self, left: int, right: int | None = None) -> "Window":
        right = left if right is None else right
        return Window(self.lo - left, self.hi + right)

    def shift(self, n: int) -> "Window":
        return Window(self.lo + n, self.hi + n)

    def contains(self, other: "Window") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    def hull(self, other: "Window") -> "Window":
        return Window(min(self.lo, other.lo), max(self.hi, other.hi))

    def __contains__(self, m) -> bool:
        return self.lo <= m <= self.hi

    @classmethod
    def parse(cls, text: str) -> "Window":
        """Parse ``"lo:hi"``."""
        lo, sep, hi = text.partition(":")
        if not sep:
            raise ValueError(f"window must look like LO:HI, got {text!r}")
        return cls(int(lo), int(hi))


@dataclass(frozen=True)
class TailBudget:
    """Absolute truncation tolerance per output entry."""

    epsilon: float = 1e-8

    def __post_init__(self):
        if not (self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise ValueError(f"tail budget must be positive and finite, got {self.epsilon}")


@dataclass(frozen=True, eq=False)
class Sequence:
    """Real sequence on ℤ, zero outside ``support``.

    ``values`` may be complex only for results of complex-time series
    evaluation; everything else is real.
    """

    support: Window
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, copy=True)
        if vals.dtype.kind not in "fc":
            vals = vals.astype(float)
        if vals.ndim != 1 or vals.shape[0] != self.support.width:
            raise ValueError(
                f"expected {self.support.width} values for {self.support}, got shape {vals.shape}"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("sequence values must be finite")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    # construction helpers
    @classmethod
    def from_array(cls, lo: int, values) -> "Sequence":
        values = np.asarray(values)
        return cls(Window(lo, lo + len(values) - 1), values)

    @classmethod
    def from_dict(cls, entries: Mapping[int, float]) -> "Sequence":
        if not entries:
            return cls.zero()
        lo, hi = min(entries), max(entries)
        vals = np.zeros(hi - lo + 1)
        for n, v in entries.items():
            vals[n - lo] = v
        return cls(Window(lo, hi), vals)

    @classmethod
    def impulse(cls, n: int = 0, value: float = 1.0) -> "Sequence":
        return cls(Window(n, n), np.array([value], dtype=float))

    @classmethod
    def zero(cls, window: Window | None = None) -> "Sequence":
        window = window or Window(0, 0)
        return cls(window, np.zeros(window.width))

    # access
    @property
    def lo(self) -> int:
        return self.support.lo

    @property
    def hi(self) -> int:
        return self.support.hi

    @property
    def is_complex(self) -> bool:
        return self.values.dtype.kind == "c"

    def __getitem__(self, m: int):
        if self.lo <= m <= self.hi:
            return self.values[m - self.lo]
        return 0.0

    def on(self, window: Window) -> np.ndarray:
        """Values over ``window`` as a fresh array (zeros outside the support)."""
        out = np.zeros(window.width, dtype=self.values.dtype)
        lo, hi = max(window.lo, self.lo), min(window.hi, self.hi)
        if lo <= hi:
            out[lo - window.lo : hi - window.lo + 1] = self.values[lo - self.lo : hi - self.lo + 1]
        return out

    def restrict(self, window: Window) -> "Sequence":
        return Sequence(window, self.on(window))

    def trimmed(self) -> "Sequence":
        """Smallest window holding every nonzero entry."""
        nz = np.flatnonzero(self.values)
        if nz.size == 0:
            return Sequence.zero(Window(self.lo, self.lo))
        return Sequence(Window(self.lo + nz[0], self.lo + nz[-1]), self.values[nz[0] : nz[-1] + 1])

    def is_zero(self) -> bool:
        return not np.any(self.values)

    # arithmetic on the union of supports
    def _binary(self, other: "Sequence", op) -> "Sequence":
        w = self.support.hull(other.support)
        return Sequence(w, op(self.on(w), other.on(w)))

    def __add__(self, other: "Sequence") -> "Sequence":
        return self._binary(other, np.add)

    def __sub__(self, other: "Sequence") -> "Sequence":
        return self._binary(other, np.subtract)

    def __mul__(self, c) -> "Sequence":
        return Sequence(self.support, self.values * c)

    __rmul__ = __mul__

    def __neg__(self) -> "Sequence":
        return Sequence(self.support, -self.values)

    def __repr__(self) -> str:
        return f"Sequence([{self.lo}, {self.hi}], {np.array2string(self.values, threshold=8)})"


def inner(a: Sequence, b: Sequence) -> float:
    """ℓ² inner product (no conjugation; sequences are real)."""
    lo, hi = max(a.lo, b.lo), min(a.hi, b.hi)
    if lo > hi:
        return 0.0
    x = a.values[lo - a.lo : hi - a.lo + 1]
    y = b.values[lo - b.lo : hi - b.lo + 1]
    return compensated_dot(x, y)


def norm(a: Sequence) -> float:
    return math.sqrt(max(inner(a, a).real, 0.0)) if not a.is_complex else float(np.linalg.norm(a.values))


def signed_shift(a: Sequence, N: int) -> Sequence:
    """``b_m = (-1)^N a_{m+N}``: the integer-time flow."""
    N = int(N)
    vals = -a.values if N % 2 else a.values
    return Sequence(a.support.shift(-N), vals)


# compensated accumulation


def compensated_dot(x: np.ndarray, y: np.ndarray):
    """Dot product accumulated with error-free transformations."""
    if x.dtype.kind == "c" or y.dtype.kind == "c":
        p = x * y
        return complex(math.fsum(p.real), math.fsum(p.imag))
    return math.fsum((x * y).tolist())


def compensated_sum(terms: Iterable[np.ndarray]) -> np.ndarray:
    """Neumaier summation of equally shaped arrays in the given order."""
    total = None
    carry = None
    for term in terms:
        term = np.asarray(term)
        if total is None:
            total = term.astype(np.result_type(term, float), copy=True)
            carry = np.zeros_like(total)
            continue
        if term.dtype.kind == "c" and total.dtype.kind != "c":
            total = total.astype(complex)
            carry = carry.astype(complex)
        new = total + term
        big = np.abs(total) >= np.abs(term)
        carry += np.where(big, (total - new) + term, (term - new) + total)
        total = new
    if total is None:
        raise ValueError("compensated_sum of no terms")
    return total + carry


# Cauchy-kernel tails


def _inverse_square_range_bound(x1: float, x2: float) -> float:
    """Upper bound for Σ_{j=0}^{J} (x1 + j)^-2 with x1 > 0 and x1 + J = x2."""
    if x2 < x1:
        return 0.0
    # first term exactly, the rest under the decreasing integral
    return 1.0 / (x1 * x1) + (1.0 / x1 - 1.0 / x2)


def _range_inverse_square_bound(n1: int, n2: int, c: float) -> float:
    """Upper bound for Σ_{n=n1}^{n2} (n - c)^-2; raises if some n equals c."""
    if n1 > n2:
        return 0.0
    if n1 <= c <= n2 and float(c).is_integer():
        raise ZeroDivisionError(f"excluded range contains the pole at n = {c:g}")
    total = 0.0
    if n2 - c > 0:  # part of the range to the right of the pole
        start = max(n1, math.floor(c) + 1)
        total += _inverse_square_range_bound(start - c, n2 - c)
    if n1 - c < 0:  # part to the left, mirrored
        stop = min(n2, math.ceil(c) - 1)
        total += _inverse_square_range_bound(c - stop, c - n1)
    return total


def cauchy_tail_bound(a_norm: float, support: Window, m: int, t: float, inner_window: Window) -> float:
    """Bound |Σ_{n ∈ support, n ∉ inner_window} a_n / (m - n + t)|.

    Cauchy–Schwarz against ``a_norm`` (which must bound the ℓ² mass of
    ``a`` outside ``inner_window``) and an integral bound on Σ (m-n+t)^-2.
    """
    pieces = [
        (support.lo, min(support.hi, inner_window.lo - 1)),
        (max(support.lo, inner_window.hi + 1), support.hi),
    ]
    c = m + t
    s = sum(_range_inverse_square_bound(n1, n2, c) for n1, n2 in pieces)
    return a_norm * math.sqrt(s)


def cauchy_mass_bound(a: Sequence, window: Window, t: float = 0.0, parity: bool = False) -> float:
    """Upper bound on ``sqrt(Σ_{m ∉ window} |Σ_n a_n/(m-n+t)|²)``.

    ``parity=True`` restricts every inner sum to n of opposite parity to m
    (the Kak kernel); the bound stays valid since it only drops terms.
    """
    s = 0.0
    for n in range(a.lo, a.hi + 1):
        c = n - t
        s += _range_inverse_square_bound(window.hi + 1, window.hi + 1 + 10**15, c)
        s += _range_inverse_square_bound(window.lo - 1 - 10**15, window.lo - 1, c)
    return norm(a) * math.sqrt(s)


def _pair_tail(x: np.ndarray, y: np.ndarray, q: int) -> np.ndarray:
    """Σ_{j≥0} 1 / ((x + q j)(y + q j)) for positive x, y (elementwise)."""
    xs, ys = x / q, y / q
    d = ys - xs
    close = np.abs(d) < 1e-9 * np.maximum(1.0, np.abs(xs))
    safe_d = np.where(close, 1.0, d)
    general = (digamma(ys) - digamma(xs)) / safe_d
    return np.where(close, polygamma(1, 0.5 * (xs + ys)), general) / (q * q)


def cauchy_tail_mass(a: Sequence, window: Window, t: float = 0.0, parity: bool = False) -> float:
    """Exact Σ_{m ∉ window} |Σ_n a_n/(m-n+t)|², summed in closed form.

    With ``parity=True`` only n of opposite parity to m contribute (Kak
    kernel). Every pole position ``n - t`` must lie inside the window edges.
    """
    if not (window.hi + 1 - a.hi + t > 0 and a.lo - t - (window.lo - 1) > 0):
        raise ValueError(f"window {window} too narrow for support {a.support} at shift {t}")
    n = a.support.indices()
    av = a.values
    total = 0.0
    if not parity:
        groups = [(1, window.hi + 1, window.lo - 1, np.ones(n.size, bool))]
    else:
        groups = []
        for p in (0, 1):
            right0 = window.hi + 1 + ((p - (window.hi + 1)) % 2)
            left0 = window.lo - 1 - (((window.lo - 1) - p) % 2)
            groups.append((2, right0, left0, (n % 2) != p))
    for q, right0, left0, mask in groups:
        if not mask.any():
            continue
        nn, vv = n[mask], av[mask]
        x = (right0 - nn + t).astype(float)
        xl = (nn - t - left0).astype(float)
        w = np.outer(vv, vv)
        right = _pair_tail(x[:, None], x[None, :], q)
        left = _pair_tail(xl[:, None], xl[None, :], q)
        total += math.fsum((w * (right + left)).ravel().tolist())
    return max(total, 0.0)


# text format


def read_sequence_csv(source) -> Sequence:
    """Read ``index,value`` CSV (indices strictly increasing)."""
    if isinstance(source, (str, Path)):
        text = Path(source).read_text()
    else:
        text = source.read()
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != ["index", "value"]:
        raise ValueError(f"expected header 'index,value', got {header}")
    entries: dict[int, float] = {}
    last = None
    for row in reader:
        if not row or not "".join(row).strip():
            continue
        idx, val = int(row[0]), float(row[1])
        if last is not None and idx <= last:
            raise ValueError(f"indices must be strictly increasing (row index {idx} after {last})")
        if not math.isfinite(val):
            raise ValueError(f"non-finite value at index {idx}")
        entries[idx] = val
        last = idx
    return Sequence.from_dict(entries)


def write_sequence_csv(a: Sequence, dest=None) -> str:
    buf = io.StringIO()
    buf.write("index,value\n")
    for m, v in zip(a.support.indices(), a.values):
        buf.write(f"{m},{float(v)!r}\n")
    text = buf.getvalue()
    if dest is not None:
        Path(dest).write_text(text)
    return text


def random_sequence(rng: np.random.Generator, span: int = 5, max_abs: int = 9) -> Sequence:
    """Nonzero integer-valued sequence with support inside ``[-span, span]``.

    Draw order: lo, hi, then the values; fixed so seeds reproduce.
    """
    while True:
        lo, hi = sorted(int(x) for x in rng.integers(-span, span + 1, size=2))
        vals = rng.integers(-max_abs, max_abs + 1, size=hi - lo + 1).astype(float)
        if np.any(vals):
            return Sequence(Window(lo, hi), vals)
