"""Scalar trajectories Φ(t) = ⟨e^{tH}a, a*⟩, their divided differences Ψ, and
the Parseval identity for products of Ψ's.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.special import zeta

from .flow import flow, flow_h_series, integer_time, series_order, sin_pi
from .hilbert_ops import H, ApplyPlan, OperatorKind, Tag, apply_op, h_power_kernels, kak_power
from .seq_core import Sequence, TailBudget, Window, inner, norm

PSI_TAYLOR_SWITCH = 1e-4
PSI_TAYLOR_TERMS = 4


@dataclass(frozen=True)
class TrajectoryPair:
    a: Sequence
    a_star: Sequence
    kind: OperatorKind = H


@dataclass(frozen=True)
class QuadratureSpec:
    """Composite Gauss–Legendre rule on ``[-half_width, half_width]``.

    Panels are 0.25 wide for |t| ≤ 10 and 1 wide beyond.
    """

    half_width: float = 1000.0
    degree: int = 16
    check_degree: int = 24
    tail_exponent: int = field(default=2, init=False)

    def __post_init__(self):
        if self.half_width <= 0:
            raise ValueError("quadrature half-width must be positive")


def moment(pair: TrajectoryPair, k: int) -> float:
    """``⟨Op^k a, a*⟩``: the k-th derivative of Φ at 0."""
    out = pair.a_star.support
    if k == 0:
        return inner(pair.a, pair.a_star)
    if pair.kind.tag is Tag.KAK:
        return inner(kak_power(pair.a, k, out), pair.a_star)
    return _Correlation(pair.a, pair.a_star).moment(k)


def phi(pair: TrajectoryPair, t: float) -> float:
    """``Φ(t) = ⟨e^{t·Op} a, a*⟩``."""
    return inner(flow(pair.kind, t, pair.a, pair.a_star.support), pair.a_star)


def phi_complex(pair: TrajectoryPair, z: complex, epsilon: float = 1e-12) -> complex:
    """Φ at complex time through the exponential series (H only)."""
    if pair.kind.tag is not Tag.H:
        raise ValueError("complex-time evaluation is implemented for H only")
    an = norm(pair.a)
    if an == 0:
        return 0j
    order = series_order(math.pi, z, epsilon / an)
    plan = ApplyPlan(pair.a_star.support, budget=TailBudget(epsilon))
    b = flow_h_series(pair.a, z, order, plan)
    return complex(np.dot(b.values, pair.a_star.values))


def psi(pair: TrajectoryPair, t: float) -> float:
    """``Ψ(t) = (Φ(t) - Φ(0))/t``, ``Ψ(0) = ⟨Op a, a*⟩``; Taylor form near 0."""
    if abs(t) < PSI_TAYLOR_SWITCH:
        return math.fsum(
            moment(pair, k) * t ** (k - 1) / math.factorial(k) for k in range(1, PSI_TAYLOR_TERMS + 1)
        )
    return (phi(pair, t) - phi(pair, 0.0)) / t


class _Correlation:
    """Φ for kind H written as ``(sin πt/π) Σ_d c_d/(d + t)``, ``c_d = Σ_n a_n a*_{n+d}``.

    Vectorised over t; agrees with :func:`phi` entry for entry.
    """

    def __init__(self, a: Sequence, a_star: Sequence):
        self.d = np.arange(a_star.lo - a.hi, a_star.hi - a.lo + 1)
        self.c = np.correlate(a_star.values, a.values, mode="full")
        self.c0 = float(self.c[self.d == 0][0]) if (self.d == 0).any() else 0.0
        self.l1 = float(np.abs(self.c).sum())
        self.reach = int(np.max(np.abs(self.d)))

    def phi(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        n0 = np.round(t)
        delta = t - n0
        s = sin_pi(t)
        den = self.d[None, :] + t[:, None]
        on_pole = self.d[None, :] == -n0[:, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            regular = np.where(on_pole, 0.0, self.c[None, :] / np.where(on_pole, 1.0, den)).sum(axis=1)
            sinc_delta = np.where(delta == 0, 1.0, np.sin(np.pi * delta) / (np.pi * np.where(delta == 0, 1.0, delta)))
        sign = np.where(np.mod(n0, 2) == 0, 1.0, -1.0)
        pole_c = np.where(on_pole, self.c[None, :], 0.0).sum(axis=1)
        return s / math.pi * regular + sign * sinc_delta * pole_c

    def moment(self, k: int) -> float:
        if k == 0:
            return self.c0
        return math.fsum((h_power_kernels(k, self.d)[k] * self.c).tolist())

    def psi(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        small = np.abs(t) < PSI_TAYLOR_SWITCH
        safe = np.where(small, 1.0, t)
        out = (self.phi(t) - self.c0) / safe
        if small.any():
            ts = t[small]
            out[small] = sum(self.moment(k) * ts ** (k - 1) / math.factorial(k) for k in range(1, PSI_TAYLOR_TERMS + 1))
        return out

    def psi_integer(self, k: int) -> float:
        if k == 0:
            return self.moment(1)
        phik = (-1.0 if k % 2 else 1.0) * (float(self.c[self.d == -k][0]) if (self.d == -k).any() else 0.0)
        return (phik - self.c0) / k


def _panels(T: float) -> np.ndarray:
    inner_edge = min(T, 10.0)
    fine = np.arange(-inner_edge, inner_edge + 1e-12, 0.25)
    if T <= 10.0:
        return fine
    n_coarse = int(math.ceil(T - 10.0))
    right = 10.0 + np.arange(1, n_coarse + 1, dtype=float)
    right[-1] = T
    return np.concatenate([-right[::-1], fine, right])


def quadrature_nodes(quad: QuadratureSpec, degree: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(degree or quad.degree)
    edges = _panels(quad.half_width)
    lo, hi = edges[:-1], edges[1:]
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def psi_square_integral(pair: TrajectoryPair, quad: QuadratureSpec) -> float:
    """``∫_{-T}^{T} Ψ(t)² dt`` by the composite rule."""
    corr = _Correlation(pair.a, pair.a_star)
    nodes, weights = quadrature_nodes(quad)
    vals = corr.psi(nodes)
    return math.fsum((weights * vals * vals).tolist())


class ParsevalResult(NamedTuple):
    lhs: float
    rhs: float
    bound: float


def _require_h(pair: TrajectoryPair):
    if pair.kind.tag is not Tag.H:
        raise ValueError("the Parseval identity is stated for the H group")


def parseval_check(pairA: TrajectoryPair, pairB: TrajectoryPair, quad: QuadratureSpec, K: int) -> ParsevalResult:
    """Both sides of ``∫ Ψ_A Ψ_B dt = Ψ_A(0)Ψ_B(0) + Σ_{k≠0} Ψ_A(k)Ψ_B(k)``.

    Both truncations are completed by their leading ``Φ_A(0)Φ_B(0)/t²``
    tails in closed form. ``bound`` covers the rigorous remainder of the
    integral tail, the quadrature error estimate, and rounding.
    """
    _require_h(pairA)
    _require_h(pairB)
    if quad.half_width < 1 or K < 1:
        raise ValueError("need T >= 1 and K >= 1")
    ca, cb = _Correlation(pairA.a, pairA.a_star), _Correlation(pairB.a, pairB.a_star)
    T = quad.half_width
    reach = max(ca.reach, cb.reach)
    if T <= 2 * reach + 2:
        raise ValueError(f"half-width {T} too small for correlation reach {reach}")

    nodes, weights = quadrature_nodes(quad)
    prod = ca.psi(nodes) * cb.psi(nodes)
    body = math.fsum((weights * prod).tolist())
    nodes2, weights2 = quadrature_nodes(quad, quad.check_degree)
    body2 = math.fsum((weights2 * ca.psi(nodes2) * cb.psi(nodes2)).tolist())
    quad_err = abs(body2 - body)

    pa, pb = ca.c0, cb.c0
    lhs = body2 + 2.0 * pa * pb / T
    # |Φ(t)| ≤ ‖c‖₁/(π(|t| - reach)) for |t| > reach
    ua = ca.l1 / (math.pi * (1.0 - ca.reach / T))
    ub = cb.l1 / (math.pi * (1.0 - cb.reach / T))
    tail_remainder = 2.0 * (ua * ub / (3.0 * T**3) + (abs(pa) * ub + abs(pb) * ua) / (2.0 * T**2))

    # Ψ(k) = -Φ(0)/k exactly once |k| exceeds both reaches
    kmax = max(K, reach)
    terms = [ca.moment(1) * cb.moment(1)]
    for k in range(1, kmax + 1):
        terms.append(ca.psi_integer(k) * cb.psi_integer(k))
        terms.append(ca.psi_integer(-k) * cb.psi_integer(-k))
    terms.append(2.0 * pa * pb * float(zeta(2, kmax + 1)))
    rhs = math.fsum(terms)

    scale = abs(body2) + sum(abs(x) for x in terms) + 1.0
    bound = tail_remainder + quad_err + 1e-12 * scale
    return ParsevalResult(lhs, rhs, bound)
