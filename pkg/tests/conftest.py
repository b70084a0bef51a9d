import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from hilbert_flow.seq_core import Sequence, Window, random_sequence

settings.register_profile("default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@st.composite
def sequences(draw, span: int = 5, max_abs: int = 9):
    """Nonzero integer-valued sequences supported inside [-span, span]."""
    lo = draw(st.integers(-span, span))
    hi = draw(st.integers(lo, span))
    vals = draw(st.lists(st.integers(-max_abs, max_abs), min_size=hi - lo + 1, max_size=hi - lo + 1))
    if not any(vals):
        vals[0] = 1
    return Sequence(Window(lo, hi), np.array(vals, dtype=float))


@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.fixture
def seqs(rng):
    return [random_sequence(rng) for _ in range(8)]
