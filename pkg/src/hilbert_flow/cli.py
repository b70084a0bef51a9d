"""Command-line experiment harness.

Every subcommand prints a table of rows ``case, check, param, value,
bound, pass`` (bench adds ``seconds``). Error rows pass when
``value <= bound * safety``; slope rows pass when the slope lies in the
stated interval. Exit status: 0 all rows pass, 1 a numerical check failed,
2 invalid configuration.

Random inputs are integer sequences with values in [-9, 9] on supports
inside [-5, 5], drawn from ``numpy.random.default_rng(seed)`` in case
order. ``HILBERT_FLOW_THREADS`` caps the number of worker threads.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from .flow import flow, flow_h_series, flow_kak_series, flow_norm, series_order
from .hilbert_ops import (
    ApplyPlan,
    Method,
    OperatorKind,
    Tag,
    _kernel_range,
    apply_h_power,
    apply_op,
    htilde_kernel,
    kak_power,
    toeplitz_apply,
)
from .riesz_boas import apply_rb, convergence_probe, rb_truncation_majorant
from .sampling import (
    IrregularNodes,
    SamplingPlan,
    fst_majorant,
    reconstruct_flow_sst,
    reconstruct_flow_vt,
    reconstruct_phi_fst,
    reconstruct_psi_irregular,
    regular_psi_series,
    sst_majorant,
    vt_majorant,
)
from .seq_core import Sequence, TailBudget, Window, norm, random_sequence, read_sequence_csv
from .trajectories import QuadratureSpec, TrajectoryPair, parseval_check, phi, psi

COLUMNS = ["case", "check", "param", "value", "bound", "pass"]
SLOPE_RANGE = (-2.5, -1.5)


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    command: str
    seed: int = 42
    cases: int = 5
    window: Window | None = None
    epsilon: float = 1e-8
    fmt: str = "csv"
    safety: float = 1.0
    input: str | None = None
    kind: str = "h"
    method: str = "auto"
    params: dict = field(default_factory=dict)

    def echo(self) -> dict:
        d = asdict(self)
        d["window"] = None if self.window is None else f"{self.window.lo}:{self.window.hi}"
        return d


def _row(case, check, param, value, bound, passed=None, safety=1.0, **extra) -> dict:
    if passed is None:
        passed = bool(value <= bound * safety)
    return {"case": case, "check": check, "param": param, "value": value, "bound": bound, "pass": bool(passed), **extra}


def _slope_row(case, check, param, slope) -> dict:
    lo, hi = SLOPE_RANGE
    return _row(case, check, param, slope, f"[{lo},{hi}]", passed=lo <= slope <= hi)


def _threads() -> int:
    raw = os.environ.get("HILBERT_FLOW_THREADS", "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigError(f"HILBERT_FLOW_THREADS must be an integer, got {raw!r}") from exc
    if n < 1:
        raise ConfigError("HILBERT_FLOW_THREADS must be >= 1")
    return n


def _run_cases(fn, inputs: list) -> list[dict]:
    """Map ``fn(i, x)`` over inputs; rows keep case order whatever the thread count."""
    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        chunks = list(pool.map(lambda ix: fn(*ix), enumerate(inputs)))
    return [r for chunk in chunks for r in chunk]


def _sequences(cfg: ExperimentConfig, per_case: int) -> list[tuple[Sequence, ...]]:
    rng = np.random.default_rng(cfg.seed)
    given = read_sequence_csv(cfg.input) if cfg.input else None
    n_cases = 1 if given is not None else cfg.cases
    out = []
    for _ in range(n_cases):
        seqs = [random_sequence(rng) for _ in range(per_case)]
        if given is not None:
            seqs[0] = given
        out.append(tuple(seqs))
    return out


def _kind(cfg: ExperimentConfig) -> OperatorKind:
    try:
        return OperatorKind.parse(cfg.kind)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _window_for(cfg: ExperimentConfig, a: Sequence, pad: int) -> Window:
    return cfg.window if cfg.window is not None else a.support.expand(pad)


# commands


def cmd_transform(cfg: ExperimentConfig) -> list[dict]:
    kind = _kind(cfg)
    bound = {Tag.HTILDE: 1.0, Tag.H: math.pi, Tag.KAK: 1.0}[kind.tag]

    def case(i, seqs):
        (a,) = seqs
        w = _window_for(cfg, a, 64)
        b = apply_op(kind, a, ApplyPlan(w, Method(cfg.method)))
        rows = [_row(i, "norm_ratio", kind.name, norm(b) / norm(a), bound, safety=cfg.safety)]
        if kind.tag is not Tag.KAK:
            direct = apply_op(kind, a, ApplyPlan(w, Method.DIRECT)).values
            fast = apply_op(kind, a, ApplyPlan(w, Method.FAST)).values
            rows.append(_row(i, "fast_vs_direct", kind.name, float(np.max(np.abs(fast - direct))), 1e-9, safety=cfg.safety))
        return rows

    return _run_cases(case, _sequences(cfg, 1))


def cmd_flow(cfg: ExperimentConfig) -> list[dict]:
    kind = _kind(cfg)
    if kind.tag is Tag.HTILDE:
        raise ConfigError("flow needs --kind h or kak")
    t = cfg.params["t"]
    check = cfg.params["check"]

    def case(i, seqs):
        (a,) = seqs
        pad = int(math.ceil(abs(t))) + 2 + 64
        w = _window_for(cfg, a, pad)
        an = norm(a)
        if check == "isometry":
            nb, _ = flow_norm(kind, t, a, w)
            if kind.tag is Tag.H:
                return [_row(i, "isometry", f"t={t}", abs(nb - an), cfg.epsilon, safety=cfg.safety)]
            return [_row(i, "group_bound", f"t={t}", nb / an, float(kind.group_bound), safety=cfg.safety)]
        if check == "series":
            plan = ApplyPlan(w, budget=TailBudget(cfg.epsilon))
            order = series_order(kind.sigma, t, cfg.epsilon / an)
            ser = flow_h_series(a, t, order, plan) if kind.tag is Tag.H else flow_kak_series(a, t, order, plan)
            err = float(np.max(np.abs(ser.values - flow(kind, t, a, w).values)))
            return [_row(i, "series_vs_closed", f"t={t}", err, cfg.epsilon, safety=cfg.safety)]
        t2 = cfg.params["t2"]
        wide = w.expand(int(math.ceil(abs(t2))) + 64)
        inner = flow(kind, t2, a, wide)
        lhs = flow(kind, t, inner, w).values
        rhs = flow(kind, t + t2, a, w).values
        # the intermediate is truncated to `wide`; its dropped mass bounds the error
        _, tail = flow_norm(kind, t2, a, wide)
        budget = float(kind.group_bound) * math.sqrt(tail) + cfg.epsilon
        return [_row(i, "group_law", f"s={t},t={t2}", float(np.linalg.norm(lhs - rhs)), budget, safety=cfg.safety)]

    return _run_cases(case, _sequences(cfg, 1))


def _parse_gamma(text: str) -> Fraction | float:
    try:
        g = Fraction(text)
    except ValueError as exc:
        raise ConfigError(f"bad gamma {text!r}") from exc
    if not 0 < g < 1:
        raise ConfigError(f"gamma must lie in (0, 1), got {text}")
    return g


def cmd_sample(cfg: ExperimentConfig) -> list[dict]:
    kind = _kind(cfg)
    if kind.tag is Tag.HTILDE:
        raise ConfigError("sample needs --kind h or kak")
    p = cfg.params
    t, K, which = p["t"], p["K"], p["formula"]
    if K < 1:
        raise ConfigError("K must be >= 1")

    def case(i, seqs):
        a, a_star = seqs
        if which == "fst":
            pair = TrajectoryPair(a, a_star, kind)
            plan = SamplingPlan(K, kind, _parse_gamma(p["gamma"]))
            err = abs(reconstruct_phi_fst(pair, t, plan) - phi(pair, t))
            bound = fst_majorant(pair, t, plan)
            return [_row(i, "fst", f"t={t},K={K}", err, bound, safety=cfg.safety)]
        if which == "irregular":
            if kind.tag is not Tag.H:
                raise ConfigError("irregular sampling is implemented for kind H")
            pair = TrajectoryPair(a, a_star)
            if p["delta"] == 0:
                nodes = IrregularNodes.regular(K)
                err = abs(reconstruct_psi_irregular(pair, t, nodes, K) - regular_psi_series(pair, t, K))
                return [_row(i, "irregular_vs_regular", f"t={t},K={K}", err, 1e-8, safety=cfg.safety)]
            nodes = IrregularNodes.random(K, p["delta"], np.random.default_rng((cfg.seed, i)))
            # the error at K must improve on the error at K/2
            half = max(K // 2, 1)
            err_half = abs(reconstruct_psi_irregular(pair, t, nodes, half) - psi(pair, t))
            err = abs(reconstruct_psi_irregular(pair, t, nodes, K) - psi(pair, t))
            return [_row(i, "irregular_improves", f"t={t},K={K},delta={p['delta']}", err, err_half)]
        w = a.support.expand(K * int(math.ceil(kind.step)) + 64)
        ref = flow(kind, t, a, w).values
        recon = reconstruct_flow_sst if which == "sst" else reconstruct_flow_vt
        maj = sst_majorant if which == "sst" else vt_majorant
        err = float(np.linalg.norm(recon(a, t, K, kind, w).values - ref))
        return [_row(i, which, f"t={t},K={K}", err, maj(norm(a), t, K, kind), safety=cfg.safety)]

    return _run_cases(case, _sequences(cfg, 2))


def cmd_riesz_boas(cfg: ExperimentConfig) -> list[dict]:
    kind = _kind(cfg)
    p = cfg.params
    s, odd = p["s"], p["parity"] == "odd"
    r = 2 * s - 1 if odd else 2 * s
    probe = p["probe"]

    def case(i, seqs):
        (a,) = seqs
        rows = []
        if probe and kind.tag is Tag.H:
            res = convergence_probe(a, r, probe)
            for N, e2, es in zip(res.Ns, res.l2_errors, res.sup_errors):
                rows.append(_row(i, "rb_error", f"r={r},N={N}", e2, rb_truncation_majorant(norm(a), r, N), safety=cfg.safety))
            rows.append(_slope_row(i, "rb_sup_slope", f"r={r}", res.sup_slope))
            rows.append(_slope_row(i, "rb_l2_slope", f"r={r}", res.l2_slope))
            return rows
        N = p["N"]
        w = _window_for(cfg, a, 64)
        ref = apply_h_power(a, r, w) if kind.tag is Tag.H else kak_power(a, r, w)
        err = float(np.linalg.norm(apply_rb(a, r, N, kind, w).values - ref.values))
        rows.append(_row(i, "rb_error", f"r={r},N={N}", err, rb_truncation_majorant(norm(a), r, N, kind), safety=cfg.safety))
        return rows

    if kind.tag is Tag.HTILDE:
        raise ConfigError("riesz-boas needs --kind h or kak")
    return _run_cases(case, _sequences(cfg, 1))


def cmd_parseval(cfg: ExperimentConfig) -> list[dict]:
    quad = QuadratureSpec(half_width=cfg.params["T"])
    K = cfg.params["K"]

    def case(i, seqs):
        a, a_star, b, b_star = seqs
        res = parseval_check(TrajectoryPair(a, a_star), TrajectoryPair(b, b_star), quad, K)
        return [_row(i, "parseval", f"T={quad.half_width},K={K}", abs(res.lhs - res.rhs), res.bound, safety=cfg.safety)]

    return _run_cases(case, _sequences(cfg, 4))


def bench_compare(n: int, seed: int, repeats: int = 3) -> dict:
    """Time DIRECT and FAST H̃ application at output width n; best of ``repeats``."""
    rng = np.random.default_rng(seed)
    a = Sequence(Window(0, n - 1), rng.standard_normal(n))
    out = Window(0, n - 1)
    kern = htilde_kernel(_kernel_range(a, out))
    timings, vals = {}, {}
    for m in (Method.DIRECT, Method.FAST):
        best = math.inf
        for _ in range(repeats):
            t0 = time.perf_counter()
            vals[m] = toeplitz_apply(kern, a, out, m).values
            best = min(best, time.perf_counter() - t0)
        timings[m] = best
    diff = float(np.max(np.abs(vals[Method.FAST] - vals[Method.DIRECT])))
    return {"direct": timings[Method.DIRECT], "fast": timings[Method.FAST], "max_diff": diff}


def cmd_bench(cfg: ExperimentConfig) -> list[dict]:
    n = cfg.params["n"]
    if n < 1:
        raise ConfigError("--n must be positive")
    res = bench_compare(n, cfg.seed)
    speedup = res["direct"] / res["fast"]
    return [
        _row(0, "fast_vs_direct", f"n={n}", res["max_diff"], 1e-9, seconds="", safety=cfg.safety),
        _row(0, "direct_time", f"n={n}", 0.0, 0.0, passed=True, seconds=res["direct"]),
        _row(0, "fast_time", f"n={n}", 0.0, 0.0, passed=res["fast"] < res["direct"], seconds=res["fast"]),
        _row(0, "speedup", f"n={n}", speedup, "", passed=speedup > 1.0, seconds=""),
    ]


def cmd_suite(cfg: ExperimentConfig) -> list[dict]:
    base = dict(seed=cfg.seed, cases=cfg.cases, epsilon=cfg.epsilon, safety=cfg.safety, input=cfg.input)
    plan = [
        ("transform", dict(kind="htilde"), {}),
        ("flow", dict(kind="h"), dict(t=0.5, check="isometry")),
        ("flow", dict(kind="h"), dict(t=0.3, check="series")),
        ("flow", dict(kind="kak"), dict(t=0.7, check="series")),
        ("sample", dict(kind="h"), dict(formula="fst", t=0.37, K=200, gamma="4/5")),
        ("sample", dict(kind="h"), dict(formula="sst", t=0.4, K=400)),
        ("sample", dict(kind="h"), dict(formula="vt", t=1.5, K=400)),
        ("riesz-boas", dict(kind="h"), dict(s=1, parity="odd", N=1000, probe=None)),
        ("riesz-boas", dict(kind="kak"), dict(s=1, parity="even", N=1000, probe=None)),
    ]
    rows = []
    for command, opts, params in plan:
        sub = ExperimentConfig(command=command, **base, **opts, params=params)
        for r in COMMANDS[command](sub):
            r = dict(r)
            r["check"] = f"{command}/{r['check']}"
            rows.append(r)
    return rows


COMMANDS = {
    "transform": cmd_transform,
    "flow": cmd_flow,
    "sample": cmd_sample,
    "riesz-boas": cmd_riesz_boas,
    "parseval": cmd_parseval,
    "bench": cmd_bench,
    "suite": cmd_suite,
}


def run(cfg: ExperimentConfig) -> dict:
    rows = COMMANDS[cfg.command](cfg)
    passed = sum(r["pass"] for r in rows)
    return {
        "config": cfg.echo(),
        "cases": rows,
        "summary": {"rows": len(rows), "passed": passed, "failed": len(rows) - passed, "ok": passed == len(rows)},
    }


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render(report: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report, indent=2, default=str) + "\n"
    cols = COLUMNS + (["seconds"] if any("seconds" in r for r in report["cases"]) else [])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in report["cases"]:
        w.writerow([_fmt(r.get(c, "")) for c in cols])
    return buf.getvalue()


def _int_list(text: str) -> list[int]:
    try:
        vals = [int(x) for x in text.split(",") if x]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc
    if not vals or vals != sorted(set(vals)):
        raise argparse.ArgumentTypeError("values must be strictly increasing")
    return vals


def _window_arg(text: str) -> Window:
    try:
        return Window.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=42, help="generator seed (default 42)")
    common.add_argument("--cases", type=int, default=5, help="number of random cases")
    common.add_argument("--window", type=_window_arg, help="output window lo:hi")
    common.add_argument("--epsilon", type=float, default=1e-8, help="tail budget")
    common.add_argument("--format", dest="fmt", choices=["csv", "json"], default="csv")
    common.add_argument("--safety", type=float, default=1.0, help="multiplier applied to every bound")
    common.add_argument("--input", help="sequence CSV (index,value) used as the first input")
    common.add_argument("--kind", default="h", help="htilde, h or kak")
    common.add_argument("--method", choices=["direct", "fast", "auto", "compare"], default="auto",
                        help="Toeplitz path; bench always compares DIRECT and FAST")
    common.add_argument("--output", help="write the report here instead of stdout")

    p = argparse.ArgumentParser(prog="hilbert-flow", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("transform", parents=[common], help="apply H̃, H or K; rows norm_ratio and fast_vs_direct")
    f = sub.add_parser("flow", parents=[common], help="e^{tH}/e^{tK}; rows isometry, series_vs_closed or group_law")
    f.add_argument("--t", type=float, default=0.5)
    f.add_argument("--t2", type=float, default=0.9, help="second time for the group law")
    f.add_argument("--check", choices=["isometry", "series", "group"], default="isometry")
    s = sub.add_parser("sample", parents=[common], help="sampling reconstructions; rows fst, sst, vt or irregular")
    s.add_argument("--formula", choices=["fst", "sst", "vt", "irregular"], default="sst")
    s.add_argument("--t", type=float, default=0.4)
    s.add_argument("--K", type=int, default=400)
    s.add_argument("--gamma", default="4/5", help="FST oversampling factor, e.g. 0.8 or 4/5")
    s.add_argument("--delta", type=float, default=0.2, help="sup of irregular node perturbations")
    r = sub.add_parser("riesz-boas", parents=[common], help="R^(r)(N) against the exact H^r; rows rb_error and slopes")
    r.add_argument("--s", type=int, default=1)
    r.add_argument("--parity", choices=["odd", "even"], default="odd")
    r.add_argument("--N", type=int, default=1000)
    r.add_argument("--probe", type=_int_list, help="comma-separated increasing N values for a rate fit")
    q = sub.add_parser("parseval", parents=[common], help="Parseval identity for Ψ; rows parseval")
    q.add_argument("--T", type=float, default=1000.0)
    q.add_argument("--K", type=int, default=1000)
    b = sub.add_parser("bench", parents=[common], help="DIRECT vs FAST timing; adds a seconds column")
    b.add_argument("--n", type=int, default=16384)
    sub.add_parser("suite", parents=[common], help="a compact run of every command")
    return p


_COMMON = {"command", "seed", "cases", "window", "epsilon", "fmt", "safety", "input", "kind", "method", "output"}


def config_from_args(ns: argparse.Namespace) -> ExperimentConfig:
    params = {k: v for k, v in vars(ns).items() if k not in _COMMON}
    if ns.method == "compare" and ns.command != "bench":
        raise ConfigError("--method compare is only meaningful for bench")
    return ExperimentConfig(
        command=ns.command, seed=ns.seed, cases=ns.cases, window=ns.window, epsilon=ns.epsilon,
        fmt=ns.fmt, safety=ns.safety, input=ns.input, kind=ns.kind, method=ns.method, params=params,
    )


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = config_from_args(ns)
        if cfg.cases < 1 or cfg.epsilon <= 0 or cfg.safety <= 0:
            raise ConfigError("--cases, --epsilon and --safety must be positive")
        report = run(cfg)
    except (ConfigError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    text = render(report, cfg.fmt)
    if ns.output:
        with open(ns.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0 if report["summary"]["ok"] else 1


if __name__ == "__main__":
    sys.exit(main())
