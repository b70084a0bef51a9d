import io
import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hilbert_flow.seq_core import (
    Sequence,
    TailBudget,
    Window,
    cauchy_mass_bound,
    cauchy_tail_bound,
    cauchy_tail_mass,
    compensated_sum,
    inner,
    norm,
    random_sequence,
    read_sequence_csv,
    signed_shift,
    write_sequence_csv,
)

from conftest import sequences


def test_window_basics():
    w = Window.parse("-3:4")
    assert (w.lo, w.hi, w.width) == (-3, 4, 8)
    assert w.expand(2) == Window(-5, 6)
    assert w.shift(-1) == Window(-4, 3)
    assert 0 in w and 5 not in w
    with pytest.raises(ValueError):
        Window(2, 1)
    with pytest.raises(ValueError):
        Window.parse("3")


def test_budget_must_be_positive():
    with pytest.raises(ValueError):
        TailBudget(0.0)


def test_sequence_reads_zero_outside_support():
    a = Sequence.from_dict({-1: 2.0, 2: 3.0})
    assert a[-1] == 2.0 and a[0] == 0.0 and a[2] == 3.0 and a[100] == 0.0
    assert np.array_equal(a.on(Window(-2, 3)), [0, 2, 0, 0, 3, 0])


def test_sequence_is_immutable():
    a = Sequence.from_array(0, [1.0, 2.0])
    with pytest.raises(ValueError):
        a.values[0] = 5.0


def test_signed_shift_example():
    # b_m = (-1)^N a_{m+N}
    a = Sequence.from_dict({0: 1.0, 1: 2.0})
    b = signed_shift(a, 1)
    assert b[-1] == -1.0 and b[0] == -2.0


@given(sequences(), st.integers(-20, 20), st.integers(-20, 20))
def test_signed_shift_composes(a, n, m):
    lhs = signed_shift(signed_shift(a, n), m)
    rhs = signed_shift(a, n + m)
    assert lhs.support == rhs.support and np.array_equal(lhs.values, rhs.values)


@given(sequences(), sequences())
def test_inner_cauchy_schwarz(a, b):
    assert abs(inner(a, b)) <= norm(a) * norm(b) * (1 + 1e-15)


@given(sequences())
def test_csv_round_trip(a):
    text = write_sequence_csv(a)
    b = read_sequence_csv(io.StringIO(text))
    assert np.array_equal(b.on(a.support), a.values)


def test_csv_rejects_unsorted_indices():
    with pytest.raises(ValueError):
        read_sequence_csv(io.StringIO("index,value\n2,1.0\n1,3.0\n"))


def test_compensated_sum_recovers_cancellation():
    terms = [np.array([1e16]), np.array([1.0]), np.array([-1e16])]
    assert compensated_sum(terms)[0] == 1.0


def test_random_sequence_reproducible():
    a = random_sequence(np.random.default_rng(7))
    b = random_sequence(np.random.default_rng(7))
    assert a.support == b.support and np.array_equal(a.values, b.values)
    assert a.support.lo >= -5 and a.support.hi <= 5 and np.all(np.abs(a.values) <= 9)


def _brute_tail_mass(a, window, t, parity, reach):
    # direct mpmath summation out to `reach`, plus the leading 1/m² remainder
    tot = mp.mpf(0)
    for side in (1, -1):
        start = window.hi + 1 if side > 0 else window.lo - 1
        for i in range(reach):
            m = start + side * i
            s = mp.fsum(
                mp.mpf(a[n]) / (m - n + mp.mpf(t))
                for n in range(a.lo, a.hi + 1)
                if not parity or (m - n) % 2
            )
            tot += s * s
    return tot


def test_tail_mass_matches_brute_sum():
    a = Sequence.from_dict({-1: 2.0, 0: -1.0, 2: 3.0})
    w = Window(-6, 7)
    for t, parity in [(0.0, False), (0.37, False), (-1.6, False), (0.0, True)]:
        exact = cauchy_tail_mass(a, w, t, parity)
        reach = 20000
        brute = float(_brute_tail_mass(a, w, t, parity, reach))
        # what remains past the brute range is below Σ_a² /reach
        rem = (np.abs(a.values).sum() ** 2) * 2 / (reach - 10)
        assert brute <= exact + 1e-15
        assert exact - brute <= rem


def test_tail_mass_requires_wide_window():
    a = Sequence.from_dict({0: 1.0, 3: 1.0})
    with pytest.raises(ValueError):
        cauchy_tail_mass(a, Window(0, 3), -1.5)


def test_mass_bound_dominates_exact():
    a = Sequence.from_dict({-2: 1.0, 1: -4.0, 3: 2.0})
    w = Window(-10, 10)
    for t in (0.0, 0.3, 2.5):
        assert cauchy_mass_bound(a, w, t) >= math.sqrt(cauchy_tail_mass(a, w, t))


def test_tail_bound_dominates_direct_sum():
    vals = 1.0 / (1.0 + np.arange(200.0))
    a = Sequence(Window(0, 199), vals)
    inner_w = Window(0, 49)
    outer = Sequence(Window(50, 199), vals[50:])
    for m, t in [(0, 0.0), (10, 0.5), (-3, 1.25)]:
        direct = abs(sum(a[n] / (m - n + t) for n in range(50, 200)))
        assert direct <= cauchy_tail_bound(norm(outer), a.support, m, t, inner_w)


def test_tail_bound_pole_raises():
    with pytest.raises(ZeroDivisionError):
        cauchy_tail_bound(1.0, Window(0, 10), 5, 0.0, Window(0, 2))
