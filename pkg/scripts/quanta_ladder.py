"""Amplitude quantization errors over a grain ladder."""
from __future__ import annotations

import argparse
import math

import numpy as np

from qlectra import qproto
from qlectra.qstate import Ket


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dim", type=int, default=0, help="0 uses the Hadamard pair, else a random instance")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--eps", type=float, nargs="+", default=[0.1, 0.03, 0.01, 0.003, 0.001])
    args = ap.parse_args()
    if args.dim:
        A, psi = qproto.random_equilibrium(args.dim, np.random.default_rng(args.seed))
    else:
        A = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
        psi = Ket((2,), [1 / math.sqrt(2)] * 2)
    print("eps       nu     quanta      in_error    fin_error   agreement")
    for e in args.eps:
        r = qproto.quanta_report(A, psi, e)
        print(f"{e:<8g} {r['nu']:5d} {r['quanta']:10d}  {r['in_error']:.3e}   {r['fin_error']:.3e}   "
              f"{r['agreement_max_rel']:.3e}")


if __name__ == "__main__":
    main()
