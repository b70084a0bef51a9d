"""Riesz–Boas interpolation: coefficient tables, the operators R^(r)(N)
built from flow translates, their powers, the Q^(n) operators, and
convergence probes against the exact H^r kernel.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.special import zeta

from .flow import flow, flow_h_values, sin_pi
from .hilbert_ops import (
    HARD_CAP_WIDTH,
    H,
    ApplyPlan,
    BudgetInfeasible,
    OperatorKind,
    Tag,
    _kernel_range,
    apply_h,
    apply_kak,
    h_power_kernels,
    toeplitz_apply,
)
from .sampling import sinc_deriv
from .seq_core import Sequence, TailBudget, Window, cauchy_mass_bound, norm, signed_shift

ORDER_CAP = 6
Q_ORDER_CAP = 6


def _check_order(s: int, cap: int = ORDER_CAP):
    if not 1 <= s <= cap:
        raise ValueError(f"order must be in [1, {cap}], got {s}")


def _truncated_taylor(y: float, s: int, odd: bool) -> float:
    """``Σ_{j<s} (-1)^j y^{2j+odd}/(2j+odd)!`` at y = π·(half-)integer.

    There cos y (resp. sin y) vanishes, so for small |y| the value is minus
    the alternating remainder, summed without cancellation.
    """
    off = 1 if odd else 0
    if abs(y) < 2 * s + 1:
        terms = []
        j = s
        while True:
            term = (-1) ** j * y ** (2 * j + off) / math.factorial(2 * j + off)
            terms.append(-term)
            if abs(term) < 1e-18 * abs(terms[0]):
                break
            j += 1
        return math.fsum(terms)
    return math.fsum((-1) ** j * y ** (2 * j + off) / math.factorial(2 * j + off) for j in range(s))


def coeff_A(s: int, k: int) -> float:
    """``A_{s,k} = (2s-1)!/(π x^{2s}) Σ_{j<s} (-1)^j (πx)^{2j}/(2j)!``, x = k - 1/2."""
    _check_order(s)
    x = k - 0.5
    return math.factorial(2 * s - 1) / (math.pi * x ** (2 * s)) * _truncated_taylor(math.pi * x, s, odd=False)


def coeff_B(s: int, k: int) -> float:
    """``B_{s,k} = (2s)!/(π k^{2s+1}) Σ_{j<s} (-1)^j (πk)^{2j+1}/(2j+1)!``; ``B_{s,0} = (-1)^{s+1} π^{2s}/(2s+1)``."""
    _check_order(s)
    if k == 0:
        return (-1) ** (s + 1) * math.pi ** (2 * s) / (2 * s + 1)
    return math.factorial(2 * s) / (math.pi * k ** (2 * s + 1)) * _truncated_taylor(math.pi * k, s, odd=True)


def _coeffs(s: int, odd: bool, N: int) -> tuple[np.ndarray, np.ndarray]:
    ks = np.arange(-N, N + 1)
    f = coeff_A if odd else coeff_B
    return ks, np.array([f(s, int(k)) for k in ks])


def coeff_tail_abs(s: int, odd: bool, N: int) -> float:
    """``Σ_{|k|>N} |coefficient|`` in closed form through Hurwitz zeta.

    Both families keep the sign ``(-1)^{s-1}`` for every k, so the absolute
    tail is a signed combination of power tails.
    """
    _check_order(s)
    sign = (-1) ** (s - 1)
    terms = []
    if odd:
        # Σ_{k>N} x^{-2p} with x = k - 1/2, and Σ_{k<-N} |x|^{-2p}
        for j in range(s):
            p = 2 * s - 2 * j
            c = math.factorial(2 * s - 1) / math.pi * (-1) ** j * math.pi ** (2 * j) / math.factorial(2 * j)
            terms.append(c * (zeta(p, N + 0.5) + zeta(p, N + 1.5)))
    else:
        for j in range(s):
            p = 2 * s - 2 * j
            c = math.factorial(2 * s) / math.pi * (-1) ** j * math.pi ** (2 * j + 1) / math.factorial(2 * j + 1)
            terms.append(c * 2.0 * zeta(p, N + 1))
    return sign * math.fsum(float(x) for x in terms)


@dataclass(frozen=True)
class RbCoeffTable:
    """``A_{s,k}`` (odd parity) or ``B_{s,k}`` (even parity) for |k| ≤ N."""

    s: int
    odd: bool
    N: int
    ks: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, s: int, odd: bool, N: int) -> "RbCoeffTable":
        _check_order(s)
        if N < 0:
            raise ValueError("range must be non-negative")
        ks, vals = _coeffs(s, odd, N)
        return cls(s, odd, N, ks, vals)

    @property
    def parity(self) -> str:
        return "odd" if self.odd else "even"

    @property
    def limit(self) -> float:
        """Total absolute sum over all of ℤ."""
        return math.pi ** (2 * self.s - (1 if self.odd else 0))

    def abs_sum(self) -> float:
        return math.fsum(np.abs(self.values).tolist())

    def completed_abs_sum(self) -> float:
        return self.abs_sum() + coeff_tail_abs(self.s, self.odd, self.N)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["s", "parity", "k", "value"])
        for k, v in zip(self.ks, self.values):
            w.writerow([self.s, self.parity, int(k), repr(float(v))])
        return buf.getvalue()


# operators


def _half_step_flow(a: Sequence, window: Window, t: float) -> Sequence:
    """``e^{(t - 1/2)H} a`` on ``window``."""
    return Sequence(window, flow_h_values(a, t - 0.5, window))


def _signed_correlate(coef: np.ndarray, b: Sequence, out: Window, N: int) -> np.ndarray:
    """``-Σ_{|k|≤N} coef_k b_{m+k}`` for m in ``out``; b must cover out widened by N."""
    vals = b.on(out.expand(N))
    return -np.correlate(vals, coef, mode="valid")


def _kak_scalars(coef: np.ndarray, taus: np.ndarray) -> tuple[float, float]:
    """(Σ c_k cos τ_k, Σ c_k sin τ_k) with τ_k multiples of π/2 evaluated exactly."""
    quarter = np.round(2 * taus / math.pi).astype(int) % 4
    cos_t = np.array([1.0, 0.0, -1.0, 0.0])[quarter]
    sin_t = np.array([0.0, 1.0, 0.0, -1.0])[quarter]
    return math.fsum((coef * cos_t).tolist()), math.fsum((coef * sin_t).tolist())


def _kak_combination(a: Sequence, alpha: float, beta: float, scale: float, out: Window) -> Sequence:
    vals = alpha * a.on(out)
    if beta != 0.0:
        vals = vals + beta * apply_kak(a, ApplyPlan(out)).values
    return Sequence(out, scale * vals)


def apply_rb_odd(a: Sequence, s: int, N: int, kind: OperatorKind, out_window: Window) -> Sequence:
    """``step^{1-2s} Σ_{|k|≤N} (-1)^{k+1} A_{s,k} e^{(k-1/2)·step·Op} a``.

    For H (step 1) the translates are ``e^{kH}`` applied to ``e^{-H/2}a``,
    i.e. signed shifts of one flow, so the sum is a correlation.
    """
    _check_order(s)
    if N < 1:
        raise ValueError("N must be >= 1")
    ks, A = _coeffs(s, True, N)
    r = 2 * s - 1
    if kind.tag is Tag.KAK:
        signs = np.where(ks % 2 == 0, -1.0, 1.0)
        alpha, beta = _kak_scalars(signs * A, (ks - 0.5) * kind.step)
        return _kak_combination(a, alpha, beta, kind.step ** (-r), out_window)
    if kind.tag is not Tag.H:
        raise ValueError(f"Riesz–Boas operators are defined for H and KAK, got {kind.name}")
    b = _half_step_flow(a, out_window.expand(N), 0.0)
    return Sequence(out_window, _signed_correlate(A, b, out_window, N))


def apply_rb_even(a: Sequence, s: int, N: int, kind: OperatorKind, out_window: Window) -> Sequence:
    """``step^{-2s} Σ_{|k|≤N} (-1)^{k+1} B_{s,k} e^{k·step·Op} a``, summed over signed shifts for H."""
    _check_order(s)
    if N < 1:
        raise ValueError("N must be >= 1")
    ks, B = _coeffs(s, False, N)
    if kind.tag is Tag.KAK:
        signs = np.where(ks % 2 == 0, -1.0, 1.0)
        alpha, beta = _kak_scalars(signs * B, ks * kind.step)
        return _kak_combination(a, alpha, beta, kind.step ** (-2 * s), out_window)
    if kind.tag is not Tag.H:
        raise ValueError(f"Riesz–Boas operators are defined for H and KAK, got {kind.name}")
    terms = [(-1.0 if k % 2 == 0 else 1.0) * c * signed_shift(a, int(k)).on(out_window) for k, c in zip(ks, B)]
    return Sequence(out_window, np.sum(terms, axis=0))


def rb_odd_entrywise(a: Sequence, s: int, N: int, out_window: Window) -> Sequence:
    """``c_m = Σ_k (-1)^{k+1} (sin π(k-1/2)/π) A_{s,k} Σ_n a_n/(m-n+k-1/2)``, entry by entry."""
    ks, A = _coeffs(s, True, N)
    n = a.support.indices()
    vals = []
    for m in out_window.indices():
        per_k = []
        for k, c in zip(ks, A):
            tau = k - 0.5
            inner_sum = math.fsum((a.values / (m - n + tau)).tolist())
            per_k.append((1.0 if k % 2 else -1.0) * float(sin_pi(tau)) / math.pi * c * inner_sum)
        vals.append(math.fsum(per_k))
    return Sequence(out_window, np.array(vals))


def rb_even_entrywise(a: Sequence, s: int, N: int, out_window: Window) -> Sequence:
    """``d_m = -Σ_{|k|≤N} B_{s,k} a_{m+k}``, entry by entry."""
    ks, B = _coeffs(s, False, N)
    vals = [-math.fsum(c * a[int(m + k)] for k, c in zip(ks, B)) for m in out_window.indices()]
    return Sequence(out_window, np.array(vals))


def rb_truncation_majorant(a_norm: float, r: int, N: int, kind: OperatorKind = H) -> float:
    """Bound on ``‖Op^r a - R^(r)(N)a‖``: group bound times the coefficient tail."""
    s, odd = (r + 1) // 2, r % 2 == 1
    return kind.group_bound * a_norm * coeff_tail_abs(s, odd, N) * kind.step ** (-r)


def apply_rb(a: Sequence, r: int, N: int, kind: OperatorKind, out_window: Window) -> Sequence:
    """``R^(r)(N) a`` for either parity of r."""
    if r % 2:
        return apply_rb_odd(a, (r + 1) // 2, N, kind, out_window)
    return apply_rb_even(a, r // 2, N, kind, out_window)


class RbPowerResult(NamedTuple):
    value: Sequence
    dropped_bound: float


def apply_rb_power(
    a: Sequence,
    r: int,
    N: int,
    kind: OperatorKind,
    out_window: Window,
    margin: int | None = None,
    budget: TailBudget | None = None,
) -> RbPowerResult:
    """``R^(1)(N)`` applied r times on nested windows.

    Each intermediate is kept on a window ``margin`` wider per remaining
    stage; ``dropped_bound`` bounds the effect of the truncated tails on the
    final result. With a ``budget`` the windows are doubled until that bound
    fits, raising :class:`BudgetInfeasible` past the hard width cap.
    """
    if r < 1:
        raise ValueError(f"power must be >= 1, got {r}")
    margin = N + 1 if margin is None else margin
    while True:
        result = _rb_power_stages(a, r, N, kind, out_window, margin)
        if budget is None or result.dropped_bound <= budget.epsilon:
            return result
        margin *= 2
        if out_window.width + 2 * r * (margin + N) > HARD_CAP_WIDTH:
            raise BudgetInfeasible(
                f"R^{r} staging cannot meet {budget.epsilon:g} within width {HARD_CAP_WIDTH} "
                f"(bound {result.dropped_bound:.3g})"
            )


def _rb_power_stages(a: Sequence, r: int, N: int, kind: OperatorKind, out: Window, margin: int) -> RbPowerResult:
    op_norm = kind.group_bound * math.pi / kind.step
    windows = [out]
    for _ in range(r - 1):
        windows.insert(0, windows[0].expand(N + margin))
    b, dropped = a, 0.0
    for i, w in enumerate(windows):
        b_next = apply_rb_odd(b, 1, N, kind, w)
        if i < r - 1:
            # the part of R b outside w is dropped before the next stage
            dropped = op_norm * (dropped + _rb_odd_outside(b, N, kind, w))
        b = b_next
    return RbPowerResult(b, dropped)


def _rb_odd_outside(b: Sequence, N: int, kind: OperatorKind, w: Window) -> float:
    """Bound on ``‖R^(1)(N) b‖`` outside ``w`` via the Cauchy tails of the translates."""
    ks, A = _coeffs(1, True, N)
    if kind.tag is Tag.KAK:
        _, beta = _kak_scalars(np.where(ks % 2 == 0, -1.0, 1.0) * A, (ks - 0.5) * kind.step)
        return abs(beta) / kind.step * (2 / math.pi) * cauchy_mass_bound(b, w, 0.0, parity=True)
    total = 0.0
    for k, c in zip(ks, A):
        # e^{τH} b = (sin πτ/π) Σ b_n/(m-n+τ), |sin πτ| = 1 at half-integers
        total += abs(c) / math.pi * cauchy_mass_bound(b, w, float(k) - 0.5)
    return total


# Q operators


def q_weights(n: int, t: float, ks: np.ndarray) -> np.ndarray:
    """``n sinc^{(n-1)}(t - k) + t sinc^{(n)}(t - k)``."""
    x = t - np.asarray(ks, dtype=float)
    w = n * sinc_deriv(n - 1, x)
    if t != 0.0:
        w = w + t * sinc_deriv(n, x)
    return np.asarray(w, dtype=float)


def apply_q(a: Sequence, n: int, N: int, out_window: Window, t: float = 0.0) -> Sequence:
    """Truncated ``w_0 Ha + Σ_{0<|k|≤N} w_k (e^{kH}a - a)/k`` with weights :func:`q_weights`.

    Approximates ``H^n e^{tH} a``; at t = 0 this is ``Q^(n)(N) a ≈ H^n a``.
    """
    _check_order(n, Q_ORDER_CAP)
    if N < 1:
        raise ValueError("N must be >= 1")
    ks = np.concatenate([np.arange(-N, 0), np.arange(1, N + 1)])
    w = q_weights(n, t, np.concatenate([[0], ks]))
    a_out = a.on(out_window)
    terms = [w[0] * apply_h(a, ApplyPlan(out_window)).values]
    for k, wk in zip(ks, w[1:]):
        if wk != 0.0:
            terms.append((wk / k) * (signed_shift(a, int(k)).on(out_window) - a_out))
    return Sequence(out_window, np.sum(terms, axis=0))


def _sinc_deriv_bound_tail(m: int, N: int, t: float, extra_power: int) -> float:
    """``Σ_{|k|>N} |sinc^{(m)}(t-k)| / |k|^{extra_power}``, bounded term by term.

    Uses ``|sinc^{(m)}(x)| ≤ Σ_j C(m,j) π^{j-1} (m-j)!/|x|^{m-j+1}`` and
    ``|k| ≥ |x| ≥ |k| - |t|``.
    """
    shift = abs(t)
    if N + 1 - shift <= 0:
        raise ValueError(f"N = {N} too small for |t| = {shift}")
    total = []
    for j in range(m + 1):
        c = math.comb(m, j) * math.pi ** (j - 1) * math.factorial(m - j)
        total.append(2.0 * c * float(zeta(m - j + 1 + extra_power, N + 1 - shift)))
    return math.fsum(total)


def q_majorant(a_norm: float, n: int, N: int, t: float = 0.0) -> float:
    """Bound on the ``|k| > N`` remainder of :func:`apply_q`: ``2‖a‖ Σ_{|k|>N} |w_k/k|``."""
    if n == 1 and t == 0.0:
        # every weight sinc(-k) vanishes
        return 0.0
    s = n * _sinc_deriv_bound_tail(n - 1, N, t, 1)
    if t != 0.0:
        s += abs(t) * _sinc_deriv_bound_tail(n, N, t, 1)
    return 2.0 * a_norm * s


# checks against the exact kernels


def h_power_flow(a: Sequence, r: int, t: float, out_window: Window) -> Sequence:
    """``H^r e^{tH} a`` on a window through its exact kernel."""
    j = _kernel_range(a, out_window)
    return toeplitz_apply(h_power_kernels(r, j, t)[r], a, out_window)


class IdentityCheck(NamedTuple):
    lhs: Sequence
    rhs: Sequence
    residual: float
    majorant: float


def flow_rb_identity_check(a: Sequence, s: int, t: float, N: int, odd: bool = True, window: Window | None = None) -> IdentityCheck:
    """``e^{tH} H^r a`` against ``Σ_{|k|≤N} (-1)^{k+1} c_k e^{(t+τ_k)H} a`` on a window.

    τ_k = k - 1/2 with A-coefficients (r = 2s-1) or τ_k = k with B (r = 2s).
    """
    window = window or a.support.expand(N + 10)
    r = 2 * s - 1 if odd else 2 * s
    lhs = h_power_flow(a, r, t, window)
    ks, c = _coeffs(s, odd, N)
    b = Sequence(window.expand(N), flow_h_values(a, t - 0.5 if odd else t, window.expand(N)))
    rhs = Sequence(window, _signed_correlate(c, b, window, N))
    residual = float(np.linalg.norm(lhs.values - rhs.values))
    return IdentityCheck(lhs, rhs, residual, rb_truncation_majorant(norm(a), r, N))


class ProbeResult(NamedTuple):
    Ns: list[int]
    l2_errors: list[float]
    sup_errors: list[float]
    l2_slope: float
    sup_slope: float


def loglog_slope(Ns, errors) -> float:
    return float(np.polyfit(np.log(np.asarray(Ns, float)), np.log(np.asarray(errors, float)), 1)[0])


def convergence_probe(a: Sequence, r: int, Ns: list[int], window: Window | None = None) -> ProbeResult:
    """Errors of ``R^(r)(N)a`` against ``H^r a`` (exact kernel) over a common window.

    The default window extends ``4·max(Ns)`` past the support so that it
    holds the bulk of every truncation error.
    """
    if list(Ns) != sorted(set(Ns)):
        raise ValueError("Ns must be strictly increasing")
    window = window or a.support.expand(4 * max(Ns))
    ref = h_power_flow(a, r, 0.0, window).values
    l2, sup = [], []
    for N in Ns:
        err = apply_rb(a, r, N, H, window).values - ref
        l2.append(float(np.linalg.norm(err)))
        sup.append(float(np.max(np.abs(err))))
    return ProbeResult(list(Ns), l2, sup, loglog_slope(Ns, l2), loglog_slope(Ns, sup))
