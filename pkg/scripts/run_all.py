"""Run every registered experiment with its defaults and write one JSON file each."""
from __future__ import annotations

import argparse
import os

from qlectra import cli


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--only", nargs="*", default=None)
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)
    for name in args.only or cli.list_experiments():
        rep = cli.run(cli.build_config(name, None, seed=args.seed))
        cli.emit(rep, "json", os.path.join(args.out, f"{name}.json"))
        print(f"{name:18s} {rep.wall_time:7.2f}s  {cli.to_json(rep.metrics)[:100]}")


if __name__ == "__main__":
    main()
