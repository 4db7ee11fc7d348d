"""Regenerate the bundled synthetic advertising series.

Usage: python3 scripts/make_synthetic_advertising.py [--seed 1968] [--out PATH]
"""

import argparse
from pathlib import Path

from invgame.datasets import write_trajectory_csv
from invgame.game import GameDefinition
from invgame.scenarios import synthetic_advertising_series


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=1968)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "src/invgame/data/advertising_synthetic.csv"))
    args = ap.parse_args()
    times, a, shares = synthetic_advertising_series(seed=args.seed)
    game = GameDefinition.scalar(2, 0.0, float("inf"))
    write_trajectory_csv(args.out, [game.profile(list(r)) for r in a], shares, times=times)
    print(f"wrote {len(times)} rows to {args.out}")


if __name__ == "__main__":
    main()
