"""The groups e^{tH} and e^{tK}: closed forms and exponential series."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammainc

from .hilbert_ops import (
    H,
    ApplyPlan,
    Method,
    OperatorKind,
    Tag,
    _kernel_range,
    apply_kak,
    h_power_kernels,
    kak_power,
    toeplitz_apply,
)
from .seq_core import Sequence, TailBudget, Window, cauchy_tail_mass, compensated_sum, norm, signed_shift

INTEGER_TIME_TOL = 1e-12


@dataclass(frozen=True)
class FlowRequest:
    kind: OperatorKind
    t: float
    out_window: Window
    budget: TailBudget = field(default_factory=TailBudget)
    method: Method = Method.AUTO


@dataclass(frozen=True)
class SeriesOrder:
    max_terms: int
    remainder_bound: float


def integer_time(t: float) -> int | None:
    """The integer N if ``|t - N| < 1e-12``, else None."""
    n = round(t)
    return int(n) if abs(t - n) < INTEGER_TIME_TOL else None


def sin_pi(t):
    """``sin(πt)`` with argument reduction; exactly 0 at integers."""
    t = np.asarray(t, dtype=float)
    n = np.round(t)
    sign = np.where(np.mod(n, 2) == 0, 1.0, -1.0)
    return sign * np.sin(np.pi * (t - n))


def flow_h_values(a: Sequence, t: float, out: Window, method: Method = Method.AUTO) -> np.ndarray:
    """``e^{tH}a`` on ``out`` (values only)."""
    N = integer_time(t)
    if N is not None:
        return signed_shift(a, N).on(out)
    n0 = round(t)
    delta = t - n0
    s = float(sin_pi(t))
    j = _kernel_range(a, out)
    # lag j = -n0 (n = m + n0) is nearly singular; it is added below in sinc form
    diag = j == -n0
    kern = (s / math.pi) * np.where(diag, 0.0, 1.0 / np.where(diag, 1.0, j + t))
    vals = toeplitz_apply(kern, a, out, method).values
    # (s/π)/δ = (-1)^n0 sinc(δ); the sign is carried by signed_shift
    sinc_delta = math.sin(math.pi * delta) / (math.pi * delta)
    return vals + sinc_delta * signed_shift(a, n0).on(out)


def flow_h(req: FlowRequest, a: Sequence) -> Sequence:
    """``b_m = (sin πt/π) Σ_n a_n/(m-n+t)``; integer t gives ``(-1)^t a_{m+t}``."""
    if req.kind.tag is not Tag.H:
        raise ValueError(f"flow_h needs kind H, got {req.kind.name}")
    return Sequence(req.out_window, flow_h_values(a, req.t, req.out_window, req.method))


def flow_kak(req: FlowRequest, a: Sequence) -> Sequence:
    """``e^{tK} = cos t · I + sin t · K``."""
    if req.kind.tag is not Tag.KAK:
        raise ValueError(f"flow_kak needs kind KAK, got {req.kind.name}")
    ka = apply_kak(a, ApplyPlan(req.out_window, req.method))
    return Sequence(req.out_window, math.cos(req.t) * a.on(req.out_window) + math.sin(req.t) * ka.values)


def flow(kind: OperatorKind, t: float, a: Sequence, out: Window, method: Method = Method.AUTO) -> Sequence:
    req = FlowRequest(kind, t, out, method=method)
    return flow_h(req, a) if kind.tag is Tag.H else flow_kak(req, a)


# series


def exp_tail(x: float, K: int) -> float:
    """``Σ_{k>K} x^k/k!`` for x ≥ 0."""
    if x == 0.0:
        return 0.0
    return float(math.exp(x) * gammainc(K + 1, x))


def series_order(sigma: float, z: complex, target: float, max_terms: int = 400) -> SeriesOrder:
    """Smallest K with ``e^{σ|z|} (σ|z|)^{K+1}/(K+1)! ≤ target``."""
    x = sigma * abs(z)
    if x == 0.0:
        return SeriesOrder(0, 0.0)
    log_target = math.log(target)
    for K in range(max_terms + 1):
        lagrange = x + (K + 1) * math.log(x) - math.lgamma(K + 2)
        if lagrange <= log_target:
            return SeriesOrder(K, exp_tail(x, K))
    raise ValueError(f"no series order <= {max_terms} reaches {target:g} at σ|z| = {x:g}")


def flow_h_series(a: Sequence, z: complex, order: SeriesOrder, plan: ApplyPlan) -> Sequence:
    """Partial sum ``Σ_{k≤K} H^k a z^k/k!`` (complex result for complex z)."""
    an = norm(a)
    if an > 0 and order.remainder_bound > plan.budget.epsilon / an * (1 + 1e-12):
        raise ValueError(
            f"series remainder {order.remainder_bound:g} exceeds budget {plan.budget.epsilon:g}/‖a‖"
        )
    out = plan.out_window
    j = _kernel_range(a, out)
    kernels = h_power_kernels(order.max_terms, j)
    method = plan.resolved_method()
    terms = []
    coef = 1.0 + 0j
    for k in range(order.max_terms + 1):
        if k:
            coef = coef * z / k
        terms.append(coef * toeplitz_apply(kernels[k], a, out, method).values)
    total = compensated_sum(terms)
    if np.isrealobj(z) or complex(z).imag == 0:
        total = total.real
    return Sequence(out, total)


def flow_kak_series(a: Sequence, t: float, order: SeriesOrder, plan: ApplyPlan) -> Sequence:
    """Taylor partial sum of e^{tK}a with K^k from :func:`kak_power`."""
    out = plan.out_window
    terms = []
    coef = 1.0
    for k in range(order.max_terms + 1):
        if k:
            coef = coef * t / k
        terms.append(coef * kak_power(a, k, plan).values)
    return Sequence(out, compensated_sum(terms))


# norms over all of ℤ


def flow_norm(kind: OperatorKind, t: float, a: Sequence, window: Window) -> tuple[float, float]:
    """(‖e^{t·Op}a‖ over ℤ, out-of-window mass) with the tail summed in closed form.

    ``window`` must contain the support of ``a`` widened by ``|t| + 1``.
    """
    inside = flow(kind, t, a, window).values
    inside_sq = float(np.dot(inside, inside))
    if kind.tag is Tag.H:
        N = integer_time(t)
        if N is not None:
            tail = 0.0 if window.contains(a.support.shift(-N)) else float("nan")
        else:
            tail = (float(sin_pi(t)) / math.pi) ** 2 * cauchy_tail_mass(a, window, t)
    else:
        # cos t · a vanishes outside the window; only sin t · Ka leaks
        tail = (math.sin(t) * 2 / math.pi) ** 2 * cauchy_tail_mass(a, window, 0.0, parity=True)
    return math.sqrt(inside_sq + tail), tail
