"""Truncation error of the sampling reconstructions as K grows.

Columns: the trajectory series at oversampling 4/5, the two vector
series (ℓ² error over all of ℤ) and the irregular series with
perturbed nodes.
"""
import argparse
from fractions import Fraction

import numpy as np

from hilbert_flow.hilbert_ops import OperatorKind, Tag
from hilbert_flow.sampling import (
    IrregularNodes,
    SamplingPlan,
    reconstruct_phi_fst,
    reconstruct_psi_irregular,
    reconstruction_error,
)
from hilbert_flow.seq_core import random_sequence
from hilbert_flow.trajectories import TrajectoryPair, phi, psi


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--kind", default="h")
    p.add_argument("--t", type=float, default=0.41)
    p.add_argument("--Ks", default="25,50,100,200,400")
    p.add_argument("--delta", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()
    kind = OperatorKind.parse(args.kind)
    Ks = [int(x) for x in args.Ks.split(",")]
    rng = np.random.default_rng(args.seed)
    a, a_star = random_sequence(rng), random_sequence(rng)
    pair = TrajectoryPair(a, a_star, kind)
    t = args.t
    exact_phi = phi(pair, t)
    nodes = IrregularNodes.random(max(Ks), args.delta, rng) if kind.tag is Tag.H else None
    print(f"{'K':>5} {'fst':>10} {'sst':>10} {'vt':>10} {'irregular':>10}")
    for K in Ks:
        fst = abs(reconstruct_phi_fst(pair, t, SamplingPlan(K, kind, Fraction(4, 5))) - exact_phi)
        sst = reconstruction_error(a, t, K, kind, "sst")
        vt = reconstruction_error(a, t, K, kind, "vt")
        irr = abs(reconstruct_psi_irregular(pair, t, nodes, K) - psi(pair, t)) if nodes else float("nan")
        print(f"{K:5d} {fst:10.2e} {sst:10.2e} {vt:10.2e} {irr:10.2e}")


if __name__ == "__main__":
    main()
