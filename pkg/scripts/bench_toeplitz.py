"""DIRECT vs FAST Toeplitz application of H̃ over a range of widths."""
import argparse

from hilbert_flow.cli import bench_compare


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--widths", default="256,1024,4096,16384")
    p.add_argument("--seed", type=int, default=42)
    args = p.parse_args()
    print(f"{'n':>6} {'direct_s':>10} {'fast_s':>10} {'speedup':>8} {'max_diff':>9}")
    for n in (int(x) for x in args.widths.split(",")):
        r = bench_compare(n, args.seed)
        print(f"{n:6d} {r['direct']:10.4f} {r['fast']:10.4f} {r['direct'] / r['fast']:8.1f} {r['max_diff']:9.1e}")


if __name__ == "__main__":
    main()
