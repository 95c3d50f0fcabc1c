"""CHSH terms and the polymer strategy table."""
from __future__ import annotations

import argparse
import itertools

import numpy as np

from qlectra import qproto
from qlectra.qstate import density_of, epr


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rho = density_of(epr())
    print("setting  correlation  weighted")
    for (A, B), s in zip(itertools.product(qproto.CHSH_ALICE, qproto.CHSH_BOB), qproto.CHSH_SIGN.ravel()):
        c = qproto.correlation(rho, A, B)
        print(f"{A.label:>3s},{B.label:<3s}  {c:+.6f}    {s * c / 4:+.6f}")
    print(f"exact {qproto.chsh_exact():.6f}, mixture {qproto.chsh_exact(qproto.classical_mixture()):.6f}")
    est, se = qproto.chsh_sample_seeded(args.trials, args.seed)
    print(f"sampled {est:.5f} +- {se:.5f}\n")

    print("site1(a,b) site2(a,b)  glue")
    for s in qproto.all_classical_strategies():
        print(f"  {s.site1!s:10s} {s.site2!s:10s} {qproto.polymer_expected(s):.2f}")
    mc = qproto.polymer_run_seeded(args.trials, qproto.EPR, args.seed)
    print(f"EPR: exact {qproto.polymer_expected(qproto.EPR):.4f}, Monte Carlo {mc:.4f}")


if __name__ == "__main__":
    main()
