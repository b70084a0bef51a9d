"""Error of the truncated interpolation operators R^(r)(N) against H^r a.

Prints ℓ² and sup errors per N and the fitted log-log slopes.
"""
import argparse

import numpy as np

from hilbert_flow.riesz_boas import convergence_probe
from hilbert_flow.seq_core import random_sequence


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--orders", default="1,2")
    p.add_argument("--Ns", default="50,100,200,400,800")
    p.add_argument("--cases", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()
    orders = [int(x) for x in args.orders.split(",")]
    Ns = [int(x) for x in args.Ns.split(",")]
    rng = np.random.default_rng(args.seed)
    seqs = [random_sequence(rng) for _ in range(args.cases)]
    print("case r " + " ".join(f"l2@{N:<5d}" for N in Ns) + "  l2_slope sup_slope")
    for i, a in enumerate(seqs):
        for r in orders:
            res = convergence_probe(a, r, Ns, window=a.support.expand(16 * Ns[-1]))
            errs = " ".join(f"{e:.2e}" for e in res.l2_errors)
            print(f"{i:4d} {r} {errs}  {res.l2_slope:8.3f} {res.sup_slope:9.3f}")


if __name__ == "__main__":
    main()
