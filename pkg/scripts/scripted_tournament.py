"""Scripted-agent win-rate matrix on a pinned five-player setting, plus the
NashConv of sampled three-player play at growing log counts.

    python scripts/scripted_tournament.py --setting five_hard --repeats 30 --out runs/hard
"""
import argparse

from onuw import equilibrium as eq
from onuw.harness import ExperimentConfig, estimate_strategy_and_nashconv, profile_games, run_tournament

LINEUPS = [
    {"name": "scripted"},
    {"name": "random-tactic", "kind": "RandomTactic"},
    {"name": "silent", "scripted_tactic": "none"},
]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--setting", default="five_easy")
    ap.add_argument("--repeats", type=int, default=30)
    ap.add_argument("--workers", type=int, default=4)
    ap.add_argument("--out")
    args = ap.parse_args()

    cfg = ExperimentConfig(setting=args.setting, village=LINEUPS, werewolf=LINEUPS,
                           repeats=args.repeats, workers=args.workers)
    res = run_tournament(cfg, args.out)
    print(f"Village win rate, {args.setting}, {args.repeats} games per cell (rows: Village, columns: Werewolf)")
    print(" " * 14 + "".join(f"{n:>15}" for n in res.werewolf_names))
    for name, row in zip(res.village_names, res.win_rate):
        print(f"{name:<14}" + "".join(f"{x:15.3f}" for x in row))

    print("\nNashConv of logged three-player play (plain rules)")
    profiles = {
        "theorem-1": eq.theorem1_profile(0.5)[0],
        "s=0,p=1,q=0": eq.StrategyProfile3P(s=0, p=1, q1=0, q2=0),
    }
    for label, prof in profiles.items():
        for n in (100, 500, 2000):
            est = estimate_strategy_and_nashconv(profile_games(prof.behavior(), n, seed=7))
            print(f"{label:<12} {n:5d} games  NashConv {est.nash_conv:.4f}")


if __name__ == "__main__":
    main()
