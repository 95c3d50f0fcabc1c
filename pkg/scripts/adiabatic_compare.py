"""Roland-Cerf vs linear schedule success at equal total time."""
from __future__ import annotations

import argparse

import numpy as np

from qlectra import qadiabatic


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("-n", type=int, default=4)
    ap.add_argument("--marked", type=int, default=3)
    ap.add_argument("--eps", type=float, default=0.2)
    ap.add_argument("--times", type=float, nargs="+", default=[2, 5, 10, 20, 40, 80])
    args = ap.parse_args()
    print("T        roland_cerf  linear")
    for T in args.times:
        rc = qadiabatic.adiabatic_grover(args.n, args.marked, args.eps, "roland_cerf", T=T)["success"]
        lin = qadiabatic.adiabatic_grover(args.n, args.marked, args.eps, "linear", T=T)["success"]
        print(f"{T:<8g} {rc:.6f}     {lin:.6f}")
    N = 2 ** args.n
    print(f"minimum gap {qadiabatic.grover_gap(0.5, N):.6f} = 1/sqrt(N) for N = {N}")


if __name__ == "__main__":
    main()
