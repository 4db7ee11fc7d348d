"""Estimate advertising-effectiveness beliefs with the L-infinity, L2 and OLS
estimators and print them next to the reference cola estimates.

Usage: python3 scripts/run_advertising.py [--data FILE.csv] [--mode joint-profile|fixed-opponent]
"""

import argparse

from invgame.scenarios import AdvertisingConfig, run_advertising


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--data", help="t,a1,a2,state CSV; defaults to the bundled synthetic series")
    ap.add_argument("--mode", default="joint-profile", choices=["joint-profile", "fixed-opponent"])
    ap.add_argument("--out-dir", default="results/advertising")
    args = ap.parse_args()
    report = run_advertising(AdvertisingConfig(data_path=args.data, comparison_mode=args.mode))
    print(report.side_by_side())
    print("dominance:", report.dominance())
    for p in report.write(args.out_dir):
        print("wrote", p)


if __name__ == "__main__":
    main()
