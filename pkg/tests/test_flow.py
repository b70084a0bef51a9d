import cmath
import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hilbert_flow.flow import (
    FlowRequest,
    exp_tail,
    flow,
    flow_h,
    flow_h_series,
    flow_kak,
    flow_kak_series,
    flow_norm,
    integer_time,
    series_order,
    sin_pi,
)
from hilbert_flow.hilbert_ops import H, KAK, ApplyPlan, apply_kak
from hilbert_flow.seq_core import Sequence, TailBudget, Window, norm, signed_shift

from conftest import sequences


def _closed_form_mp(a, t, m):
    # (sin πt/π) Σ_n a_n/(m - n + t), all n, at 50 digits
    with mp.workdps(50):
        t = mp.mpf(t)
        s = mp.sin(mp.pi * t) / mp.pi * mp.fsum(mp.mpf(a[n]) / (m - n + t) for n in range(a.lo, a.hi + 1))
        return float(s)


def test_half_time_impulse():
    b = flow(H, 0.5, Sequence.impulse(0), Window(-2, 2))
    assert np.allclose(b.values, [1 / (math.pi * (m + 0.5)) for m in range(-2, 3)], rtol=1e-15)


@given(sequences(), st.floats(-3.0, 3.0).filter(lambda t: abs(t - round(t)) > 1e-3))
def test_flow_matches_high_precision(a, t):
    w = a.support.expand(5)
    got = flow(H, t, a, w).values
    ref = [_closed_form_mp(a, t, m) for m in w.indices()]
    assert np.max(np.abs(got - ref)) <= 1e-13 * max(1.0, norm(a))


@pytest.mark.parametrize("delta", [1e-7, 1e-10, 1e-11, -5e-12])
def test_near_integer_time_is_stable(delta):
    a = Sequence.from_dict({0: 1.0, 1: -2.0, 3: 4.0})
    w = Window(-4, 6)
    t = 2 + delta
    got = flow(H, t, a, w).values
    ref = [_closed_form_mp(a, t, m) for m in w.indices()]
    assert np.max(np.abs(got - np.array(ref))) <= 1e-13


@given(sequences(), st.integers(-6, 6))
def test_integer_time_is_signed_shift(a, n):
    w = a.support.expand(8)
    assert np.array_equal(flow(H, float(n), a, w).values, signed_shift(a, n).on(w))


def test_integer_time_detection():
    assert integer_time(3.0 + 5e-13) == 3
    assert integer_time(3.0 + 2e-12) is None
    assert sin_pi(7.0) == 0.0


@given(sequences(), st.sampled_from([0.1, 0.5, 0.9, 2.3, -1.4]))
def test_isometry_with_exact_tail(a, t):
    w = a.support.expand(int(math.ceil(abs(t))) + 3)
    nb, tail = flow_norm(H, t, a, w)
    assert tail > 0
    assert abs(nb - norm(a)) <= 1e-12 * norm(a)


@given(sequences())
def test_kak_flow_bounded_by_two(a):
    w = a.support.expand(10)
    for t in (0.3, 1.2, 2.8):
        nb, _ = flow_norm(KAK, t, a, w)
        assert nb <= 2 * norm(a)


def test_kak_flow_closed_form():
    a = Sequence.from_dict({0: 1.0, 1: 2.0})
    w = Window(-5, 6)
    t = 0.7
    ka = apply_kak(a, w).values
    got = flow_kak(FlowRequest(KAK, t, w), a).values
    assert np.allclose(got, math.cos(t) * a.on(w) + math.sin(t) * ka, atol=1e-15)


def test_kind_mismatch_raises():
    a = Sequence.impulse(0)
    with pytest.raises(ValueError):
        flow_h(FlowRequest(KAK, 0.1, Window(0, 0)), a)
    with pytest.raises(ValueError):
        flow_kak(FlowRequest(H, 0.1, Window(0, 0)), a)


def test_exp_tail_matches_direct_sum():
    for x, K in [(0.5, 3), (2.0, 10), (9.0, 30)]:
        direct = math.fsum(x**k / math.factorial(k) for k in range(K + 1, K + 100))
        assert math.isclose(exp_tail(x, K), direct, rel_tol=1e-12)


def test_series_order_is_minimal():
    order = series_order(math.pi, 0.3, 1e-10)
    x = math.pi * 0.3
    lagrange = lambda K: math.exp(x) * x ** (K + 1) / math.factorial(K + 1)
    assert lagrange(order.max_terms) <= 1e-10 < lagrange(order.max_terms - 1)
    assert order.remainder_bound <= lagrange(order.max_terms)


@pytest.mark.parametrize("t", [0.3, 1.7, -0.8])
def test_series_matches_closed_form(t):
    a = Sequence.from_dict({-2: 3.0, 0: -1.0, 1: 5.0})
    w = a.support.expand(20)
    eps = 1e-10
    order = series_order(math.pi, t, eps / norm(a))
    s = flow_h_series(a, t, order, ApplyPlan(w, budget=TailBudget(eps)))
    assert np.max(np.abs(s.values - flow(H, t, a, w).values)) <= 1e-8


def test_series_rejects_insufficient_order():
    a = Sequence.impulse(0, 5.0)
    order = series_order(math.pi, 1.0, 1e-3)
    with pytest.raises(ValueError):
        flow_h_series(a, 1.0, order, ApplyPlan(Window(-2, 2), budget=TailBudget(1e-12)))


def test_complex_time_series_is_analytic_continuation():
    # at z = iy the flow of e_0 has symbol e^{-iθ z}; its m-th entry is
    # (-1)^m/(2π) ∫ e^{yθ} e^{-imθ} dθ
    y = 0.4
    a = Sequence.impulse(0)
    w = Window(-3, 3)
    order = series_order(math.pi, 1j * y, 1e-13)
    got = flow_h_series(a, 1j * y, order, ApplyPlan(w, budget=TailBudget(1e-12))).values
    for i, m in enumerate(w.indices()):
        f = lambda th: mp.exp(y * th) * mp.exp(-1j * int(m) * th)
        ref = complex((-1) ** int(m) * mp.quad(f, [-mp.pi, mp.pi]) / (2 * mp.pi))
        assert abs(got[i] - ref) <= 1e-11


def test_kak_series_matches_closed_form():
    a = Sequence.from_dict({0: 2.0, 3: -1.0})
    w = a.support.expand(15)
    for t in (0.3, 1.7):
        order = series_order(1.0, t, 1e-12)
        s = flow_kak_series(a, t, order, ApplyPlan(w))
        assert np.max(np.abs(s.values - flow(KAK, t, a, w).values)) <= 1e-10


@pytest.mark.parametrize("t1,t2", [(0.3, 0.4), (1.5, -0.5), (-0.25, 0.25)])
def test_group_law_within_dropped_mass(t1, t2):
    a = Sequence.from_dict({-1: 2.0, 0: 1.0, 2: -3.0})
    w = a.support.expand(10)
    wide = w.expand(200)
    lhs = flow(H, t1, flow(H, t2, a, wide), w).values
    rhs = flow(H, t1 + t2, a, w).values
    _, tail = flow_norm(H, t2, a, wide)
    assert np.linalg.norm(lhs - rhs) <= math.sqrt(tail) + 1e-12
