"""Normalized sinc and its derivatives; regular and irregular sampling
reconstructions of trajectories of e^{tH} and e^{tK}.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.special import digamma, gammaln, polygamma, zeta

from .flow import flow, integer_time, sin_pi
from .hilbert_ops import H, ApplyPlan, OperatorKind, Tag, apply_op
from .seq_core import Sequence, Window, inner, norm, signed_shift
from .trajectories import TrajectoryPair, _Correlation, phi, psi

SINC_DERIV_CAP = 12
SINC_TAYLOR_SWITCH = 1e-4
SINC_SERIES_RADIUS = 2.0


def sinc(z):
    """``sin(πz)/(πz)``; exactly 1 at 0 and exactly 0 at the other integers."""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < SINC_TAYLOR_SWITCH
    safe = np.where(small, 1.0, z)
    pz2 = (np.pi * z) ** 2
    out = np.where(small, 1.0 - pz2 / 6.0 + pz2 * pz2 / 120.0, sin_pi(safe) / (np.pi * safe))
    return out if out.ndim else float(out)


def _sinc_deriv_series(n: int, t: np.ndarray) -> np.ndarray:
    # sinc(t) = Σ_j (-1)^j (πt)^{2j}/(2j+1)!, differentiated term by term
    jmin = (n + 1) // 2
    out = np.zeros_like(t)
    for j in range(jmin, jmin + 60):
        p = 2 * j - n
        coef = (-1) ** j * math.pi ** (2 * j) / ((2 * j + 1) * math.factorial(p))
        out = out + coef * t**p
    return out


def _sinc_deriv_leibniz(n: int, t: np.ndarray) -> np.ndarray:
    # (sin πt / π) · t^{-1}, Leibniz rule; needs |t| bounded away from 0
    n0 = np.round(t)
    sign = np.where(np.mod(n0, 2) == 0, 1.0, -1.0)
    arg = np.pi * (t - n0)
    s, c = sign * np.sin(arg), sign * np.cos(arg)
    trig = [s, c, -s, -c]
    out = np.zeros_like(t)
    for j in range(n + 1):
        p = n - j
        term = math.comb(n, j) * math.pi ** (j - 1) * trig[j % 4] * ((-1) ** p * math.factorial(p)) / t ** (p + 1)
        out = out + term
    return out


def sinc_deriv(n: int, t):
    """n-th derivative of the normalized sinc (n ≤ 12)."""
    if n < 0 or n > SINC_DERIV_CAP:
        raise ValueError(f"sinc derivative order must be in [0, {SINC_DERIV_CAP}], got {n}")
    arr = np.asarray(t, dtype=float)
    if n == 0:
        return sinc(arr)
    flat = np.atleast_1d(arr).astype(float)
    near = np.abs(flat) <= SINC_SERIES_RADIUS
    out = np.empty_like(flat)
    if near.any():
        out[near] = _sinc_deriv_series(n, flat[near])
    if (~near).any():
        out[~near] = _sinc_deriv_leibniz(n, flat[~near])
    return out.reshape(arr.shape) if arr.ndim else float(out[0])


# regular sampling


@dataclass(frozen=True)
class SamplingPlan:
    """Truncation ``|k| ≤ K``; ``gamma`` is the FST oversampling factor.

    ``gamma`` may be a :class:`fractions.Fraction`, in which case sample
    times ``γk`` that are whole multiples of the step are detected exactly.
    """

    K: int
    kind: OperatorKind = H
    gamma: float | Fraction | None = None

    def __post_init__(self):
        if self.K < 1:
            raise ValueError(f"truncation K must be >= 1, got {self.K}")
        if self.gamma is not None and not (0 < self.gamma < 1):
            raise ValueError(f"oversampling factor must lie in (0, 1), got {self.gamma}")


def _sample_time_exact(gamma, k: int) -> tuple[float, int | None]:
    """(γk as float, γk if it is an integer by exact rational test else None)."""
    if isinstance(gamma, Fraction):
        g = gamma * k
        return float(g), (int(g) if g.denominator == 1 else None)
    return float(gamma) * k, (0 if k == 0 else None)


def fst_terms(pair: TrajectoryPair, t: float, plan: SamplingPlan) -> tuple[float, float]:
    """(S1, S2) of the truncated oversampled cardinal series for Φ.

    S2 collects the samples whose time γk·step is an integer multiple of the
    step (exact shifts); S1 the rest.
    """
    if plan.gamma is None:
        raise ValueError("FST needs an oversampling factor gamma")
    step = pair.kind.step
    g = float(plan.gamma)
    s1, s2 = [], []
    u = t / (g * step)
    for k in range(plan.K + 1):
        for kk in ((k,) if k == 0 else (k, -k)):
            gk, whole = _sample_time_exact(plan.gamma, kk)
            weight = sinc(u - kk)
            if whole is not None:
                s2.append(_phi_at_whole_step(pair, whole) * weight)
            else:
                s1.append(phi(pair, gk * step) * weight)
    return math.fsum(s1), math.fsum(s2)


def _phi_at_whole_step(pair: TrajectoryPair, n: int) -> float:
    if pair.kind.tag is Tag.H:
        return phi(pair, float(n))
    # e^{nπK} = (-1)^n I
    return (-1.0 if n % 2 else 1.0) * phi(pair, 0.0)


def reconstruct_phi_fst(pair: TrajectoryPair, t: float, plan: SamplingPlan) -> float:
    """``Σ_{|k|≤K} Φ(γ k·step) sinc(t/(γ·step) - k)``."""
    s1, s2 = fst_terms(pair, t, plan)
    return s1 + s2


def fst_majorant(pair: TrajectoryPair, t: float, plan: SamplingPlan) -> float:
    """Bound on the ``|k| > K`` remainder of :func:`reconstruct_phi_fst`.

    Kind H uses ``|Φ(τ)| ≤ ‖c‖₁/(π(|τ| - R))`` for |τ| > R, where c is the
    correlation of a with a* and R its reach, so that with
    ``q = max(R/γ, |u|)`` the remainder is at most
    ``(|sin πu|/π)(‖c‖₁/π)(2/γ) ζ(2, K+1-q)``.

    Kind KAK has ``Φ(τ) = Re(C e^{iτ})`` with ``C = ⟨a,a*⟩ - i⟨Ka,a*⟩``, so the
    remainder is ``(sin πu/π) Re(C Σ_{|k|>K} e^{iπ(1+γ)k}/(u-k))``. Abel
    summation bounds each one-sided sum by its first term over
    ``|sin(π(1+γ)/2)| = cos(πγ/2)``.
    """
    g = float(plan.gamma)
    u = t / (g * pair.kind.step)
    if pair.kind.tag is Tag.KAK:
        if plan.K + 1 - abs(u) <= 0:
            raise ValueError(f"K = {plan.K} too small for t = {t}")
        ka = apply_op(pair.kind, pair.a, ApplyPlan(pair.a_star.support))
        c = math.hypot(inner(pair.a, pair.a_star), inner(ka, pair.a_star))
        first = 1.0 / (plan.K + 1 - u) + 1.0 / (plan.K + 1 + u)
        return abs(float(sin_pi(u))) / math.pi * c * first / math.cos(math.pi * g / 2)
    if pair.kind.tag is not Tag.H:
        raise ValueError("the FST majorant needs kind H or KAK")
    corr = _Correlation(pair.a, pair.a_star)
    q = max(corr.reach / g, abs(u))
    if plan.K + 1 - q <= 0:
        raise ValueError(f"K = {plan.K} too small for reach {corr.reach} and t = {t}")
    s = abs(float(sin_pi(u))) / math.pi
    return s * corr.l1 / math.pi * 2.0 / g * float(zeta(2, plan.K + 1 - q))


class _Translates:
    """``e^{τ·Op} a`` on a fixed window, reusing ``Op a`` for the Kak group."""

    def __init__(self, a: Sequence, kind: OperatorKind, out: Window):
        self.a, self.kind, self.out = a, kind, out
        self.a_out = a.on(out)
        self.op_a = apply_op(kind, a, ApplyPlan(out)).values

    def at_step_multiple(self, k: int) -> np.ndarray:
        if self.kind.tag is Tag.H:
            return signed_shift(self.a, k).on(self.out)
        return (-1.0 if k % 2 else 1.0) * self.a_out

    def at(self, tau: float) -> np.ndarray:
        if self.kind.tag is Tag.H:
            return flow(self.kind, tau, self.a, self.out).values
        return math.cos(tau) * self.a_out + math.sin(tau) * self.op_a


def reconstruct_flow_sst(a: Sequence, t: float, K: int, kind: OperatorKind, out_window: Window) -> Sequence:
    """``a + t sinc(u) Op a + t Σ_{0<|k|≤K} (e^{k·step·Op}a - a)/(k·step) sinc(u - k)``, u = t/step."""
    if K < 1:
        raise ValueError("K must be >= 1")
    tr = _Translates(a, kind, out_window)
    step = kind.step
    u = t / step
    terms = [tr.a_out, t * sinc(u) * tr.op_a]
    for k in range(1, K + 1):
        for kk in (k, -k):
            w = sinc(u - kk)
            if w != 0.0:
                terms.append((t * w / (kk * step)) * (tr.at_step_multiple(kk) - tr.a_out))
    return Sequence(out_window, np.sum(terms, axis=0))


def reconstruct_flow_vt(a: Sequence, t: float, K: int, kind: OperatorKind, out_window: Window) -> Sequence:
    """``sinc(u) a + t sinc(u) Op a + Σ_{0<|k|≤K} t/(k·step) sinc(u - k) e^{k·step·Op}a``."""
    if K < 1:
        raise ValueError("K must be >= 1")
    tr = _Translates(a, kind, out_window)
    step = kind.step
    u = t / step
    su = sinc(u)
    terms = [su * tr.a_out, t * su * tr.op_a]
    for k in range(1, K + 1):
        for kk in (k, -k):
            w = sinc(u - kk)
            if w != 0.0:
                terms.append((t * w / (kk * step)) * tr.at_step_multiple(kk))
    return Sequence(out_window, np.sum(terms, axis=0))


def sst_entrywise(a: Sequence, t: float, K: int, out_window: Window) -> Sequence:
    """Entry formula for the SST reconstruction with kind H, summed per entry."""
    vals = []
    for m in range(out_window.lo, out_window.hi + 1):
        hil = math.fsum(a[n] / (m - n) for n in range(a.lo, a.hi + 1) if n != m)
        corr = []
        for k in range(1, K + 1):
            for kk in (k, -k):
                sgn = -1.0 if kk % 2 else 1.0
                corr.append((sgn * a[m + kk] - a[m]) / kk * sinc(t - kk))
        vals.append(a[m] + t * sinc(t) * hil + t * math.fsum(corr))
    return Sequence(out_window, np.array(vals))


def vt_entrywise(a: Sequence, t: float, K: int, out_window: Window) -> Sequence:
    """Entry formula for the Valiron–Tschakaloff reconstruction with kind H."""
    vals = []
    for m in range(out_window.lo, out_window.hi + 1):
        hil = math.fsum(a[n] / (m - n) for n in range(a.lo, a.hi + 1) if n != m)
        corr = []
        for k in range(1, K + 1):
            for kk in (k, -k):
                sgn = -1.0 if kk % 2 else 1.0
                corr.append(sgn * sinc(t - kk) / kk * a[m + kk])
        vals.append(a[m] * sinc(t) + t * sinc(t) * hil + t * math.fsum(corr))
    return Sequence(out_window, np.array(vals))


# tail majorants


def _inv_k_dist_tail(u: float, K: int) -> float:
    """``Σ_{|k|>K} 1/(|k| |u - k|)`` for non-integer u with |u| < K + 1."""
    if abs(u) >= K + 1:
        raise ValueError(f"|u| = {abs(u)} must be below K + 1 = {K + 1}")
    if u == 0.0:
        return 2.0 * float(polygamma(1, K + 1))
    # Σ_{k>K} 1/(k(k-u)) + Σ_{k>K} 1/(k(k+u))
    right = (digamma(K + 1) - digamma(K + 1 - u)) / u
    left = (digamma(K + 1 + u) - digamma(K + 1)) / u
    return float(right + left)


def sst_majorant(a_norm: float, t: float, K: int, kind: OperatorKind = H) -> float:
    """``|t| (M+1)‖a‖ Σ_{|k|>K} |sinc(u-k)|/(|k| step)`` with M the group bound."""
    u = t / kind.step
    if integer_time(u) is not None and abs(u) <= K:
        return 0.0
    s = abs(float(sin_pi(u))) / math.pi
    return abs(t) * (kind.group_bound + 1.0) * a_norm * s * _inv_k_dist_tail(u, K) / kind.step


def vt_majorant(a_norm: float, t: float, K: int, kind: OperatorKind = H) -> float:
    """``M‖a‖ Σ_{|k|>K} |t/(k step)| |sinc(u-k)|``."""
    u = t / kind.step
    if integer_time(u) is not None and abs(u) <= K:
        return 0.0
    s = abs(float(sin_pi(u))) / math.pi
    return kind.group_bound * a_norm * abs(t) * s * _inv_k_dist_tail(u, K) / kind.step


def reconstruction_error(a: Sequence, t: float, K: int, kind: OperatorKind, formula: str, margin: int = 64) -> float:
    """``‖reconstruction - e^{t·Op}a‖`` over all of ℤ for the SST or VT formula.

    Inside a window holding every shifted copy the difference is computed
    directly. Outside it the translates vanish and what remains is
    ``t sinc(u) Op a - e^{t·Op} a``: for H its kernel is
    ``-(sin πt/π) t/(j(j+t))``, bounded in closed form; for K the two
    coefficients of Ka coincide, so nothing remains.
    """
    recon = {"sst": reconstruct_flow_sst, "vt": reconstruct_flow_vt}[formula]
    reach = K * int(math.ceil(kind.step)) + margin
    w = a.support.expand(reach)
    inside = float(np.linalg.norm(recon(a, t, K, kind, w).values - flow(kind, t, a, w).values))
    if kind.tag is not Tag.H:
        return inside
    d = reach + 1
    l1 = float(np.abs(a.values).sum())
    c = abs(float(sin_pi(t))) * abs(t) * l1 / math.pi
    tail = c * math.sqrt(2.0 * float(zeta(4, d - abs(t)))) if d - abs(t) > 1 else math.inf
    return math.hypot(inside, tail)


# irregular sampling


@dataclass(frozen=True)
class IrregularNodes:
    """Nodes ``t_k = k + δ_k`` for |k| ≤ K_range, ``t_k = k`` beyond."""

    K_range: int
    deltas: np.ndarray = field(repr=False)

    def __post_init__(self):
        d = np.asarray(self.deltas, dtype=float)
        if d.shape != (2 * self.K_range + 1,):
            raise ValueError(f"need {2 * self.K_range + 1} perturbations, got shape {d.shape}")
        if not np.all(np.abs(d) < 0.25):
            raise ValueError(f"perturbations must satisfy sup|δ| < 1/4, got {np.max(np.abs(d)):g}")
        d = d.copy()
        d.flags.writeable = False
        object.__setattr__(self, "deltas", d)

    @classmethod
    def regular(cls, K_range: int) -> "IrregularNodes":
        return cls(K_range, np.zeros(2 * K_range + 1))

    @classmethod
    def random(cls, K_range: int, sup: float, rng: np.random.Generator, odd: bool = False) -> "IrregularNodes":
        d = rng.uniform(-sup, sup, size=2 * K_range + 1)
        if odd:
            d[K_range] = 0.0
            d[:K_range] = -d[K_range + 1 :][::-1]
        return cls(K_range, d)

    def node(self, k):
        k = np.asarray(k)
        inside = np.abs(k) <= self.K_range
        idx = np.clip(k + self.K_range, 0, 2 * self.K_range)
        return k + np.where(inside, self.deltas[idx], 0.0)


def _log_unperturbed_tail(P: int, t):
    """``log Π_{k>P} (1 - t²/k²) = log Γ(P+1)² / (Γ(P+1-t) Γ(P+1+t))`` for |t| < P + 1."""
    t = np.asarray(t, dtype=float)
    return 2.0 * gammaln(P + 1) - gammaln(P + 1 - t) - gammaln(P + 1 + t)


def _signed_log_prod(x: np.ndarray) -> tuple[float, float]:
    sign = float(np.prod(np.sign(x)))
    if sign == 0.0:
        return 0.0, -math.inf
    return sign, float(np.sum(np.log(np.abs(x))))


def _factors(nodes: IrregularNodes, P: int, t: np.ndarray) -> np.ndarray:
    """Rows per point in ``t``; columns (t - t_0), then (1 - t/t_k) for k = 1..P, -1..-P."""
    ks = np.concatenate([np.arange(1, P + 1), -np.arange(1, P + 1)])
    tk = nodes.node(ks)
    if np.any(tk == 0):
        raise ValueError("a paired factor has its node at zero")
    t = np.atleast_1d(np.asarray(t, dtype=float))
    return np.column_stack([t - nodes.node(0), 1.0 - t[:, None] / tk[None, :]])


def higgins_G(nodes: IrregularNodes, t: float, prod_range: int | None = None) -> float:
    """``G(t) = (t - t_0) Π_{k≥1} (1 - t/t_k)(1 - t/t_{-k})``.

    Factors up to ``prod_range`` are multiplied out; the unperturbed tail
    beyond is the closed-form Gamma ratio.
    """
    P = max(nodes.K_range, prod_range or 0)
    if abs(t) >= P + 1:
        raise ValueError(f"|t| must be below prod_range + 1 = {P + 1}")
    tt = np.atleast_1d(np.asarray(t, dtype=float))
    sign, logmag = _signed_log_prod(_factors(nodes, P, tt)[0])
    if sign == 0.0:
        return 0.0
    return sign * math.exp(logmag + float(_log_unperturbed_tail(P, t)))


def lagrange_weights(nodes: IrregularNodes, t: float, K: int, prod_range: int | None = None) -> np.ndarray:
    """``G(t)/(G'(t_k)(t - t_k))`` for k = -K..K, derivative by factor deletion."""
    P = max(nodes.K_range, K, prod_range or 0)
    ks = np.arange(-K, K + 1)
    tks = nodes.node(ks)
    if abs(t) >= P + 1:
        raise ValueError(f"|t| must be below {P + 1}")
    pts = np.concatenate([[t], tks])
    f = _factors(nodes, P, pts)  # rows: evaluation points; cols: factors
    tails = _log_unperturbed_tail(P, pts)
    # column of each node's own factor: 0 for k = 0, k for k > 0, P + |k| for k < 0
    col = np.where(ks == 0, 0, np.where(ks > 0, ks, P - ks))
    weights = np.empty(ks.size)
    for i, c in enumerate(col):
        # ℓ_k(t) = Q_k(t)/Q_k(t_k) with Q_k = G without the factor vanishing at t_k
        keep = np.ones(f.shape[1], bool)
        keep[c] = False
        s_t, l_t = _signed_log_prod(f[0, keep])
        s_k, l_k = _signed_log_prod(f[1 + i, keep])
        weights[i] = s_t * s_k * math.exp(l_t - l_k + tails[0] - tails[1 + i]) if s_t else 0.0
    return weights


def reconstruct_psi_irregular(pair: TrajectoryPair, t: float, nodes: IrregularNodes, K: int) -> float:
    """``Σ_{|k|≤K} Ψ(t_k) G(t)/(G'(t_k)(t - t_k))``."""
    ks = np.arange(-K, K + 1)
    tks = nodes.node(ks)
    hit = np.flatnonzero(tks == t)
    if hit.size:
        return psi(pair, float(tks[hit[0]]))
    w = lagrange_weights(nodes, t, K)
    samples = np.array([psi(pair, float(x)) for x in tks])
    return math.fsum((w * samples).tolist())


def regular_psi_series(pair: TrajectoryPair, t: float, K: int) -> float:
    """``Σ_{|k|≤K} Ψ(k) sinc(t - k)``."""
    return math.fsum(psi(pair, float(k)) * sinc(t - k) for k in range(-K, K + 1))
