"""Acceptance suite: thirteen end-to-end numerical criteria.

Run with pytest (one PASS/FAIL line per criterion is printed) or directly
with ``python3 tests/test_acceptance.py``.
"""
import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from hilbert_flow.cli import bench_compare
from hilbert_flow.flow import flow, flow_h_series, flow_kak_series, flow_norm, series_order
from hilbert_flow.hilbert_ops import HTILDE, H, KAK, ApplyPlan, apply_h_power, apply_htilde, apply_kak, estimate_operator_norm
from hilbert_flow.riesz_boas import (
    RbCoeffTable,
    apply_q,
    apply_rb,
    coeff_A,
    coeff_B,
    convergence_probe,
    q_majorant,
    rb_truncation_majorant,
)
from hilbert_flow.sampling import (
    IrregularNodes,
    SamplingPlan,
    fst_majorant,
    reconstruct_flow_sst,
    reconstruct_flow_vt,
    reconstruct_phi_fst,
    reconstruct_psi_irregular,
    reconstruction_error,
    regular_psi_series,
    sst_entrywise,
    sst_majorant,
    vt_entrywise,
    vt_majorant,
)
from hilbert_flow.seq_core import TailBudget, Window, cauchy_tail_mass, norm, random_sequence
from hilbert_flow.trajectories import QuadratureSpec, TrajectoryPair, parseval_check, phi, psi

EPS = 1e-8
SLOPE_RANGE = (-2.5, -1.5)


def seeded(seed: int, count: int = 1):
    rng = np.random.default_rng(seed)
    return [random_sequence(rng) for _ in range(count)]


def isometry():
    worst = 0.0
    ok = True
    for seed in range(20):
        (a,) = seeded(seed)
        for t in (0.1, 0.5, 0.9, 2.3):
            w = a.support.expand(64 + math.ceil(t))
            full, tail = flow_norm(H, t, a, w)
            windowed = norm(flow(H, t, a, w))
            # windowed norm misses exactly the closed-form tail; the completed norm is exact
            ok &= abs(full - norm(a)) <= EPS and norm(a) - windowed <= math.sqrt(tail) + EPS
            worst = max(worst, abs(full - norm(a)))
    return ok, f"max |‖e^(tH)a‖ - ‖a‖| = {worst:.2e} (tol {EPS:g})"


def series_agreement():
    worst = 0.0
    for seed in range(20):
        (a,) = seeded(seed)
        w = a.support.expand(32)
        for t in (0.3, 1.7):
            order = series_order(math.pi, t, EPS / norm(a))
            ser = flow_h_series(a, t, order, ApplyPlan(w, budget=TailBudget(EPS)))
            worst = max(worst, float(np.max(np.abs(ser.values - flow(H, t, a, w).values))))
    return worst <= EPS, f"max entry difference {worst:.2e} (tol {EPS:g})"


def group_law():
    ok, worst = True, 0.0
    for seed in range(5):
        (a,) = seeded(seed)
        for t1, t2 in ((0.3, 0.4), (1.5, -0.5), (-0.25, 0.25)):
            w = a.support.expand(64)
            wide = w.expand(math.ceil(abs(t2)) + 256)
            lhs = flow(H, t1, flow(H, t2, a, wide), w).values
            rhs = flow(H, t1 + t2, a, w).values
            _, tail = flow_norm(H, t2, a, wide)
            budget = math.sqrt(tail) + EPS
            err = float(np.linalg.norm(lhs - rhs))
            ok &= err <= 2 * budget
            worst = max(worst, err / budget)
    return ok, f"max error/budget = {worst:.3f} (tol 2)"


def schur_strictness():
    est = estimate_operator_norm(HTILDE, Window(-200, 200))
    ok = 0.9 < est < 1.0
    worst = 0.0
    rng = np.random.default_rng(4)
    for _ in range(50):
        a = random_sequence(rng)
        while norm(a) == 0:
            a = random_sequence(rng)
        w = a.support.expand(200)
        b = apply_htilde(a, w).values
        full = math.sqrt(float(b @ b) + cauchy_tail_mass(a, w) / math.pi**2)
        ok &= full < norm(a)
        worst = max(worst, full / norm(a))
    return ok, f"‖H̃‖ estimate on [-200,200] = {est:.6f}; max ‖H̃a‖/‖a‖ = {worst:.6f}"


def fst():
    ok, details = True, []
    for seed in range(5):
        a, a_star = seeded(100 + seed, 2)
        pair = TrajectoryPair(a, a_star)
        exact = phi(pair, 0.37)
        errs = [abs(reconstruct_phi_fst(pair, 0.37, SamplingPlan(K, H, 0.8)) - exact) for K in (25, 50, 100, 200)]
        tol = 1e-3 * norm(a) * norm(a_star)
        ok &= all(x > y for x, y in zip(errs, errs[1:])) and errs[-1] < tol
        details.append(errs[-1] / tol)
    return ok, f"monotone in K; max error/(1e-3‖a‖‖a*‖) at K=200 = {max(details):.2e}"


def sst_vt():
    ok, ratio, ent = True, 0.0, 0.0
    for seed in range(5):
        (a,) = seeded(200 + seed)
        for t in (0.4, 1.5):
            e_s = reconstruction_error(a, t, 400, H, "sst")
            e_v = reconstruction_error(a, t, 400, H, "vt")
            m_s, m_v = sst_majorant(norm(a), t, 400, H), vt_majorant(norm(a), t, 400, H)
            ok &= e_s <= m_s and e_v <= m_v
            ratio = max(ratio, e_s / m_s, e_v / m_v)
            w = a.support.expand(40)
            d1 = np.max(np.abs(sst_entrywise(a, t, 400, w).values - reconstruct_flow_sst(a, t, 400, H, w).values))
            d2 = np.max(np.abs(vt_entrywise(a, t, 400, w).values - reconstruct_flow_vt(a, t, 400, H, w).values))
            ent = max(ent, float(d1), float(d2))
    ok &= ent <= 1e-10
    return ok, f"max error/majorant = {ratio:.2e}; entrywise vs operator {ent:.1e} (tol 1e-10)"


def irregular():
    ok, worst = True, 0.0
    t = 0.41
    for seed in range(5):
        a, a_star = seeded(300 + seed, 2)
        pair = TrajectoryPair(a, a_star)
        d0 = abs(reconstruct_psi_irregular(pair, t, IrregularNodes.regular(100), 100) - regular_psi_series(pair, t, 100))
        worst = max(worst, d0)
        nodes = IrregularNodes.random(100, 0.2, np.random.default_rng(seed))
        exact = psi(pair, t)
        errs = [abs(reconstruct_psi_irregular(pair, t, nodes, K) - exact) for K in (25, 50, 100)]
        ok &= d0 <= EPS and errs[0] > errs[1] > errs[2]
    return ok, f"δ=0 vs regular series {worst:.1e} (tol 1e-8); errors decrease over K for sup|δ|=0.2"


def coefficients():
    worst = 0.0
    for s in (1, 2, 3):
        for odd in (True, False):
            table = RbCoeffTable.build(s, odd, 200)
            worst = max(worst, abs(table.completed_abs_sum() - table.limit))
    spot = [abs(coeff_A(1, 0) - 4 / math.pi), abs(coeff_B(1, 0) - math.pi**2 / 3)]
    spot += [abs(coeff_B(1, k) - 2 / k**2) for k in (1, 2, 3, -5, 40)]
    ok = worst <= 1e-6 and max(spot) <= 1e-12
    return ok, f"completed sums off by {worst:.1e} (tol 1e-6); spot values off by {max(spot):.1e} (tol 1e-12)"


def riesz_boas_rate():
    ok, slopes, sups, maj = True, [], [], 0.0
    Ns = [50, 100, 200, 400]
    for seed in range(5):
        (a,) = seeded(400 + seed)
        for r in (1, 2):
            res = convergence_probe(a, r, Ns, window=a.support.expand(16 * Ns[-1]))
            lo, hi = SLOPE_RANGE
            ok &= lo <= res.l2_slope <= hi
            slopes.append(res.l2_slope)
            sups.append(res.sup_slope)
            w = a.support.expand(4000)
            err = float(np.linalg.norm(apply_rb(a, r, 1000, H, w).values - apply_h_power(a, r, w).values))
            m = rb_truncation_majorant(norm(a), r, 1000)
            ok &= err <= m
            maj = max(maj, err / m)
    return ok, (
        f"ℓ² slopes in [{min(slopes):.3f}, {max(slopes):.3f}] (need {list(SLOPE_RANGE)}); "
        f"sup slopes in [{min(sups):.3f}, {max(sups):.3f}]; N=1000 error/majorant <= {maj:.2e}"
    )


def q_operator():
    ok, worst = True, 0.0
    for seed in range(5):
        (a,) = seeded(500 + seed)
        w = a.support.expand(3000)
        for n in (1, 2):
            err = float(np.linalg.norm(apply_q(a, n, 1000, w).values - apply_h_power(a, n, w).values))
            m = q_majorant(norm(a), n, 1000)
            ok &= err <= m
            worst = max(worst, err / m if m else err)
    return ok, f"max error/majorant = {worst:.2e}"


def kak_suite():
    ok, notes = True, []
    for seed in range(5):
        (a,) = seeded(600 + seed)
        # K(Ka) = -a, with Ka truncated to W and the dropped part bounded by its mass
        W = a.support.expand(400)
        inner_w = a.support.expand(5)
        kka = apply_kak(apply_kak(a, W), inner_w).values
        dropped = (2 / math.pi) * math.sqrt(cauchy_tail_mass(a, W, 0.0, parity=True))
        ok &= np.linalg.norm(kka + a.on(inner_w)) <= dropped + 1e-12
        # ‖Ka‖ with the exact out-of-window mass
        W2 = a.support.expand(30)
        ka = apply_kak(a, W2).values
        full = math.sqrt(float(ka @ ka) + (2 / math.pi) ** 2 * cauchy_tail_mass(a, W2, 0.0, parity=True))
        ok &= abs(full - norm(a)) <= EPS
        w = a.support.expand(32)
        order = series_order(KAK.sigma, 0.7, EPS / norm(a))
        ser = flow_kak_series(a, 0.7, order, ApplyPlan(w, budget=TailBudget(EPS)))
        ok &= float(np.max(np.abs(ser.values - flow(KAK, 0.7, a, w).values))) <= EPS
        for t in (0.3, math.pi / 4, 2.0, 5.5):
            nb, _ = flow_norm(KAK, t, a, a.support.expand(40))
            ok &= nb <= 2 * norm(a) + EPS
    notes.append("K²=-I, isometry, series, bound 2 ok" if ok else "algebraic checks failed")

    (a, a_star) = seeded(700, 2)
    pair = TrajectoryPair(a, a_star, KAK)
    errs = []
    for K in (25, 50, 100, 200):
        plan = SamplingPlan(K, KAK, 0.8)
        errs.append(abs(reconstruct_phi_fst(pair, 1.1, plan) - phi(pair, 1.1)))
        ok &= errs[-1] <= fst_majorant(pair, 1.1, plan)
    ok &= all(x > y for x, y in zip(errs, errs[1:]))
    for formula, maj in (("sst", sst_majorant), ("vt", vt_majorant)):
        es = [reconstruction_error(a, 2.0, K, KAK, formula) for K in (100, 200, 400)]
        ok &= all(x > y for x, y in zip(es, es[1:])) and es[-1] <= maj(norm(a), 2.0, 400, KAK)
        notes.append(f"{formula} {es[0]:.1e}->{es[-1]:.1e}")
    notes.append(f"fst {errs[0]:.1e}->{errs[-1]:.1e}")
    return ok, "; ".join(notes)


def parseval():
    ok, worst = True, 0.0
    quad = QuadratureSpec(half_width=1000.0)
    for seed in range(10):
        a, a_star, b, b_star = seeded(800 + seed, 4)
        res = parseval_check(TrajectoryPair(a, a_star), TrajectoryPair(b, b_star), quad, 1000)
        ok &= abs(res.lhs - res.rhs) <= res.bound
        worst = max(worst, abs(res.lhs - res.rhs) / res.bound)
    return ok, f"max |lhs-rhs|/bound = {worst:.2e}"


def performance():
    res = bench_compare(16384, 42)
    speedup = res["direct"] / res["fast"]
    ok = res["max_diff"] <= 1e-9 and speedup >= 5
    return ok, f"max diff {res['max_diff']:.1e} (tol 1e-9); speedup {speedup:.0f}x (need 5x)"


CRITERIA = [
    ("01 isometry of e^(tH)", isometry),
    ("02 series vs closed form", series_agreement),
    ("03 group law", group_law),
    ("04 strict contraction of H̃", schur_strictness),
    ("05 oversampled trajectory reconstruction", fst),
    ("06 vector sampling reconstructions", sst_vt),
    ("07 irregular sampling", irregular),
    ("08 interpolation coefficients", coefficients),
    ("09 interpolation operator rate", riesz_boas_rate),
    ("10 derivative-weight operator", q_operator),
    ("11 Kak transform", kak_suite),
    ("12 Parseval identity", parseval),
    ("13 fast Toeplitz path", performance),
]


def run_one(name, fn):
    t0 = time.perf_counter()
    ok, detail = fn()
    return ok, f"{'PASS' if ok else 'FAIL'} {name}: {detail} [{time.perf_counter() - t0:.1f}s]"


@pytest.mark.parametrize("name,fn", CRITERIA, ids=[c[0].split()[0] for c in CRITERIA])
def test_criterion(name, fn, capsys):
    ok, line = run_one(name, fn)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


if __name__ == "__main__":
    results = [run_one(name, fn) for name, fn in CRITERIA]
    for _, line in results:
        print(line)
    sys.exit(0 if all(ok for ok, _ in results) else 1)
