"""Check both three-player equilibria and the NashConv reference values.

    python scripts/verify_equilibria.py [--samples 10000]
"""
import argparse
import sys

from onuw.verify import verify_all


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--alpha-points", type=int, default=10)
    ap.add_argument("--gamma-points", type=int, default=5)
    ap.add_argument("--samples", type=int, default=10_000)
    args = ap.parse_args()
    report = verify_all((args.alpha_points, args.gamma_points), args.samples)
    print("\n".join(report.lines))
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
