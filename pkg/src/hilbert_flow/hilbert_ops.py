"""Discrete Hilbert, scaled Hilbert and Kak–Hilbert transforms on windows.

All operators here are Toeplitz: ``(T a)_m = Σ_n κ(m - n) a_n``.  For a
finitely supported input each output entry is a finite sum, so the direct
and FFT paths are exact up to rounding.  Powers of H are applied through
the exact Fourier coefficients of their symbol ``(-iθ)^r`` rather than by
repeated windowed application.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .seq_core import Sequence, TailBudget, Window, norm

CROSSOVER_WIDTH = 512
HARD_CAP_WIDTH = 1 << 22
DIRECT_BLOCK = 256


class BudgetInfeasible(RuntimeError):
    """A requested tolerance needs a window beyond the configured hard cap."""


class Tag(str, enum.Enum):
    HTILDE = "htilde"
    H = "h"
    KAK = "kak"


@dataclass(frozen=True)
class OperatorKind:
    """Which generator, with its exponential type and canonical sampling step."""

    tag: Tag
    sigma: float
    step: float
    group_bound: float  # sup_t ‖e^{t·Op}‖

    @property
    def name(self) -> str:
        return self.tag.value

    @classmethod
    def parse(cls, name: str) -> "OperatorKind":
        try:
            return {"htilde": HTILDE, "h": H, "kak": KAK}[name.lower()]
        except KeyError:
            raise ValueError(f"unknown operator kind {name!r}; expected htilde, h or kak") from None


HTILDE = OperatorKind(Tag.HTILDE, sigma=1.0, step=math.pi, group_bound=1.0)
H = OperatorKind(Tag.H, sigma=math.pi, step=1.0, group_bound=1.0)
KAK = OperatorKind(Tag.KAK, sigma=1.0, step=math.pi, group_bound=2.0)


class Method(str, enum.Enum):
    DIRECT = "direct"
    FAST = "fast"
    AUTO = "auto"


@dataclass(frozen=True)
class ApplyPlan:
    out_window: Window
    method: Method = Method.AUTO
    budget: TailBudget = field(default_factory=TailBudget)

    def resolved_method(self) -> Method:
        if self.method is Method.AUTO:
            return Method.FAST if self.out_window.width >= CROSSOVER_WIDTH else Method.DIRECT
        return self.method


def _as_plan(plan) -> ApplyPlan:
    return plan if isinstance(plan, ApplyPlan) else ApplyPlan(plan)


# Toeplitz core


def _kernel_range(a: Sequence, out: Window) -> np.ndarray:
    return np.arange(out.lo - a.hi, out.hi - a.lo + 1)


def _direct(kernel: np.ndarray, a: Sequence, out: Window) -> np.ndarray:
    # row m uses kernel[(m - out.lo) + (a.hi - n)] for n = a.lo..a.hi
    w = a.support.width
    rev = a.values[::-1]
    res = np.empty(out.width, dtype=np.result_type(kernel, rev))
    for start in range(0, out.width, DIRECT_BLOCK):
        stop = min(out.width, start + DIRECT_BLOCK)
        rows = np.arange(start, stop)[:, None] + np.arange(w)[None, :]
        res[start:stop] = kernel[rows] @ rev
    return res


def _fast(kernel: np.ndarray, a: Sequence, out: Window) -> np.ndarray:
    w = a.support.width
    size = 1 << int(math.ceil(math.log2(kernel.size + w - 1)))
    if np.iscomplexobj(kernel) or a.is_complex:
        conv = np.fft.ifft(np.fft.fft(kernel, size) * np.fft.fft(a.values, size))
    else:
        conv = np.fft.irfft(np.fft.rfft(kernel, size) * np.fft.rfft(a.values, size), size)
    return conv[w - 1 : w - 1 + out.width]


def toeplitz_apply(kernel: np.ndarray, a: Sequence, out: Window, method: Method = Method.AUTO) -> Sequence:
    """Apply ``(T a)_m = Σ_n kernel[m - n] a_n`` with kernel tabulated on ``_kernel_range``."""
    need = out.width + a.support.width - 1
    if len(kernel) != need:
        raise ValueError(f"kernel has {len(kernel)} entries, expected {need} for this support and window")
    if method is Method.AUTO:
        method = Method.FAST if out.width >= CROSSOVER_WIDTH else Method.DIRECT
    vals = _direct(kernel, a, out) if method is Method.DIRECT else _fast(kernel, a, out)
    return Sequence(out, vals)


def shifted_cauchy_kernel(j: np.ndarray, t: float, exclude_zero: bool = False) -> np.ndarray:
    """``1 / (j + t)``; with ``exclude_zero`` the entry where ``j + t = 0`` is 0."""
    den = j + t
    hit = den == 0
    if hit.any() and not exclude_zero:
        raise ZeroDivisionError(f"kernel 1/(j + {t}) has a zero denominator in range")
    with np.errstate(divide="ignore"):
        return np.where(hit, 0.0, 1.0 / np.where(hit, 1.0, den))


def fast_toeplitz_apply(
    kernel_shift: float,
    scale: float,
    a: Sequence,
    out_window: Window,
    exclude_zero: bool = False,
    method: Method = Method.FAST,
) -> Sequence:
    """``b_m = scale · Σ_n a_n / (m - n + t)`` via zero-padded FFT convolution."""
    j = _kernel_range(a, out_window)
    kern = scale * shifted_cauchy_kernel(j.astype(float), kernel_shift, exclude_zero)
    return toeplitz_apply(kern, a, out_window, method)


def htilde_kernel(j: np.ndarray) -> np.ndarray:
    return shifted_cauchy_kernel(j.astype(float), 0.0, exclude_zero=True) / math.pi


def kak_kernel(j: np.ndarray) -> np.ndarray:
    odd = (j % 2) != 0
    with np.errstate(divide="ignore"):
        return np.where(odd, 2.0 / (math.pi * np.where(odd, j, 1)), 0.0)


def apply_htilde(a: Sequence, plan) -> Sequence:
    """``b_m = (1/π) Σ_{n≠m} a_n/(m-n)``, exact for finite support."""
    plan = _as_plan(plan)
    return toeplitz_apply(htilde_kernel(_kernel_range(a, plan.out_window)), a, plan.out_window, plan.resolved_method())


def apply_h(a: Sequence, plan) -> Sequence:
    """``H = π·H̃``."""
    plan = _as_plan(plan)
    kern = math.pi * htilde_kernel(_kernel_range(a, plan.out_window))
    return toeplitz_apply(kern, a, plan.out_window, plan.resolved_method())


def apply_kak(a: Sequence, plan) -> Sequence:
    """Kak–Hilbert transform: ``(2/π) Σ a_n/(m-n)`` over n of opposite parity to m."""
    plan = _as_plan(plan)
    return toeplitz_apply(kak_kernel(_kernel_range(a, plan.out_window)), a, plan.out_window, plan.resolved_method())


def apply_op(kind: OperatorKind, a: Sequence, plan) -> Sequence:
    if kind.tag is Tag.HTILDE:
        return apply_htilde(a, plan)
    if kind.tag is Tag.H:
        return apply_h(a, plan)
    return apply_kak(a, plan)


# exact kernels of H^r e^{tH}

_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gauss_legendre(n: int):
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GL_CACHE[n]


def _moment_integrals(rmax: int, omega: np.ndarray) -> np.ndarray:
    """``I_r(ω) = ∫_{-π}^{π} θ^r e^{-iωθ} dθ`` for r = 0..rmax (rows)."""
    omega = np.asarray(omega, dtype=float)
    out = np.empty((rmax + 1, omega.size), dtype=complex)
    far = np.abs(omega) > rmax + 1
    if far.any():
        # integration by parts; stable because each step scales by r/|ω| < 1
        w = omega[far]
        ep, em = np.exp(-1j * w * math.pi), np.exp(1j * w * math.pi)
        cur = 2.0 * np.sin(math.pi * w) / w + 0j
        out[0, far] = cur
        for r in range(1, rmax + 1):
            boundary = math.pi**r * ep - (-math.pi) ** r * em
            cur = boundary / (-1j * w) + (r / (1j * w)) * cur
            out[r, far] = cur
    near = ~far
    if near.any():
        w = omega[near]
        npts = rmax + 2 * int(np.max(np.abs(w))) + 48
        x, wt = _gauss_legendre(npts)
        theta = math.pi * x
        phase = np.exp(-1j * np.outer(theta, w)) * (math.pi * wt)[:, None]
        powers = np.ones_like(theta)
        for r in range(rmax + 1):
            out[r, near] = powers @ phase
            powers = powers * theta
    return out


def h_power_kernels(rmax: int, j: np.ndarray, t: float = 0.0) -> np.ndarray:
    """Toeplitz kernels of ``H^r e^{tH}`` for r = 0..rmax at integer lags ``j``.

    Row r is ``(-1)^j/(2π) ∫_{-π}^{π} (-iθ)^r e^{-i(j+t)θ} dθ``: the Fourier
    coefficients of the symbol ``(-iθ)^r e^{-iθt}``.
    """
    j = np.asarray(j)
    moments = _moment_integrals(rmax, j + t)
    sign = np.where(j % 2 == 0, 1.0, -1.0)
    factors = np.array([(-1j) ** r for r in range(rmax + 1)])[:, None]
    return ((factors * moments).real * sign) / (2 * math.pi)


@lru_cache(maxsize=64)
def _cached_power_kernel(r: int, jlo: int, jhi: int, t: float) -> np.ndarray:
    k = h_power_kernels(r, np.arange(jlo, jhi + 1), t)[r]
    k.flags.writeable = False
    return k


def apply_h_power(a: Sequence, r: int, plan, method: str = "kernel") -> Sequence:
    """``H^r a`` on ``plan.out_window``.

    ``method="kernel"`` (default) convolves with the exact kernel of H^r and
    has only rounding error. ``method="iterate"`` applies H r times on
    nested windows sized by :func:`iterate_margins` to meet the plan's
    per-entry budget, raising :class:`BudgetInfeasible` past the hard cap.
    """
    plan = _as_plan(plan)
    if r < 1:
        raise ValueError(f"power must be >= 1, got {r}")
    if r == 1:
        return apply_h(a, plan)
    if method == "kernel":
        j = _kernel_range(a, plan.out_window)
        kern = _cached_power_kernel(r, int(j[0]), int(j[-1]), 0.0)
        return toeplitz_apply(kern, a, plan.out_window, plan.resolved_method())
    if method != "iterate":
        raise ValueError(f"unknown method {method!r}")
    margins = iterate_margins(norm(a), r, plan.budget.epsilon)
    windows = [plan.out_window]
    for d in reversed(margins[1:]):
        windows.insert(0, windows[0].expand(d))
    if windows[0].width > HARD_CAP_WIDTH:
        raise BudgetInfeasible(
            f"H^{r} to tolerance {plan.budget.epsilon:g} needs an intermediate window of "
            f"width {windows[0].width} > cap {HARD_CAP_WIDTH}"
        )
    b = a
    for w in windows:
        b = apply_h(b, ApplyPlan(w, plan.method, plan.budget))
    return b


def iterate_margins(a_norm: float, r: int, epsilon: float) -> list[int]:
    """Window margins for r-fold application (index 0 unused: the input is exact).

    Stage k truncates ``H^{k-1} a`` (mass ≤ π^{k-1}‖a‖) and must keep the
    Cauchy tail under ``ε / (r π^{r-1})``.
    """
    target = epsilon / (r * math.pi ** (r - 1))
    margins = [0]
    for k in range(2, r + 1):
        mass = math.pi ** (k - 1) * a_norm
        # smallest D with mass * sqrt(2/(D-1)) <= target
        d = 2.0 * (mass / target) ** 2 + 1.0 if mass > 0 else 1.0
        if d > HARD_CAP_WIDTH:
            raise BudgetInfeasible(
                f"stage {k} of H^{r} needs margin {d:.3g} for tolerance {epsilon:g} (cap {HARD_CAP_WIDTH})"
            )
        d = int(math.ceil(d))
        margins.append(d)
    return margins


def kak_power(a: Sequence, k: int, plan) -> Sequence:
    """``K^k a`` from the symbol ``(-i·sgn sin ξ)^k``: ±a for even k, ±Ka for odd k."""
    plan = _as_plan(plan)
    sign = -1.0 if (k // 2) % 2 else 1.0
    if k % 2 == 0:
        return Sequence(plan.out_window, sign * a.on(plan.out_window))
    return apply_kak(a, plan) * sign


# operator norms


def truncated_matrix(kind: OperatorKind, window: Window) -> np.ndarray:
    idx = window.indices()
    d = idx[:, None] - idx[None, :]
    if kind.tag is Tag.KAK:
        return kak_kernel(d)
    base = htilde_kernel(d)
    return base * math.pi if kind.tag is Tag.H else base


def estimate_operator_norm(
    kind: OperatorKind, window: Window, iters: int = 5000, tol: float = 1e-10, seed: int = 0
) -> float:
    """Power iteration on ``TᵀT`` for the truncation ``T`` of the operator to ``window``."""
    if iters < 1:
        raise ValueError("iters must be >= 1")
    T = truncated_matrix(kind, window)
    G = T.T @ T
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(window.width)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        w = G @ v
        new = float(v @ w)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
        if abs(new - lam) <= tol * max(new, 1.0):
            lam = new
            break
        lam = new
    return math.sqrt(lam)
