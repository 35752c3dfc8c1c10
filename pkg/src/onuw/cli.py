"""Command-line entry point ``onuw``.

Exit codes: 0 success, 1 a verification failed, 2 runtime or input error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import IntegrityError, OnuwError

EXIT_OK, EXIT_VERIFY, EXIT_ERROR = 0, 1, 2


def _load_json(path) -> dict:
    if path is None:
        return {}
    return json.loads(Path(path).read_text(encoding="utf-8"))


def _experiment(args):
    from .harness import ExperimentConfig

    d = _load_json(getattr(args, "config", None))
    if getattr(args, "setting", None):
        d["setting"] = args.setting
    if getattr(args, "fixture", None):
        d["fixture"] = args.fixture
    if getattr(args, "repeats", None):
        d["repeats"] = args.repeats
    return ExperimentConfig.from_dict(d)


def _log_paths(items) -> list:
    out = []
    for item in items:
        p = Path(item)
        out += sorted(p.glob("*.json")) if p.is_dir() else [p]
    return out


def _load_logs(items) -> list:
    from .gamelog import load

    return [load(p) for p in _log_paths(items)]


def cmd_play(args) -> int:
    from .gamelog import save
    from .harness import run_match

    cfg = _experiment(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for k in range(args.games):
        seed = args.seed + k
        g = run_match(cfg, seed)
        save(g, out / f"game_{seed:05d}.json")
        deaths = ", ".join(f"Player {d + 1}" for d in g.deaths) or "nobody"
        status = g.outcome.value if g.valid else "invalid"
        print(f"seed {seed}: deaths {deaths}; outcome {status}")
    return EXIT_OK


def cmd_tournament(args) -> int:
    from .harness import run_tournament

    cfg = _experiment(args)
    res = run_tournament(cfg, args.out or cfg.output_dir)
    width = max(len(n) for n in res.village_names + ["village"])
    print("village win rate".ljust(width), *res.werewolf_names, sep="  ")
    for name, row in zip(res.village_names, res.win_rate):
        print(name.ljust(width), *(f"{x:.3f}" for x in row), sep="  ")
    return EXIT_OK


def cmd_extract(args) -> int:
    from .harness import extract_transitions
    from .policy import save_transitions

    logs = [g for g in _load_logs(args.logs) if g.valid]
    rows, stats = extract_transitions(logs, args.reward_mode, args.encoder_mode)
    save_transitions(args.out, rows, args.reward_mode, args.encoder_mode)
    print(f"{len(logs)} logs, {stats.speeches} speeches -> {stats.rows} transitions ({stats.skipped} skipped)")
    return EXIT_OK


def cmd_train(args) -> int:
    from .policy import TrainerConfig, load_transitions, save_loss_curve, train

    header, rows = load_transitions(args.data)
    d = _load_json(args.config)
    d.setdefault("state_dim", header["state_dim"])
    cfg = TrainerConfig(**d)
    q, curve = train(rows, cfg)
    q.save(args.out)
    if args.curve:
        save_loss_curve(args.curve, curve)
    print(f"trained on {len(rows)} transitions; final epoch loss {curve[-1]:.5f}")
    return EXIT_OK


def cmd_stats(args) -> int:
    from .harness import tactic_statistics

    table = tactic_statistics(_load_logs(args.logs))
    if args.out:
        table.to_csv(args.out)
    for role, row in table.percent.items():
        note = "  (no speeches)" if role in table.flagged else ""
        print(f"{role.value:<13}", *(f"{x:5.1f}" for x in row), note)
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import verify_all

    report = verify_all(grid=(args.alpha_points, args.gamma_points), samples=args.samples)
    for line in report.lines:
        print(line)
    return EXIT_OK if report.passed else EXIT_VERIFY


def cmd_nashconv(args) -> int:
    from . import equilibrium as eq
    from .harness import estimate_strategy_and_nashconv

    if args.profile:
        s, p, q1, q2 = (float(x) for x in args.profile.split(","))
        prof = eq.StrategyProfile3P(s=s, p=p, q1=q1, q2=q2)
        tree = eq.build_tree_no_discussion(draw_on_no_death=not args.strict)
        print(f"NashConv {eq.nash_conv(tree, prof):.6f}")
        return EXIT_OK
    est = estimate_strategy_and_nashconv(_load_logs(args.logs), with_discussion=args.with_discussion)
    for k, v in est.behavior.items():
        print(f"{k:<12}", " ".join(f"{x:.3f}" for x in v), "(unvisited)" if k in est.unvisited else "")
    note = "  [low confidence: fewer than 30 logs]" if est.low_confidence else ""
    print(f"NashConv estimate {est.nash_conv:.4f}{note}")
    return EXIT_OK


def cmd_replay(args) -> int:
    from .gamelog import load, replay

    try:
        state = replay(load(args.log))
    except IntegrityError as exc:
        print(f"replay failed at {exc.event}: {exc}")
        return EXIT_VERIFY
    print(f"replay ok: deaths {sorted(d + 1 for d in state.deaths)}, outcome {state.outcome.value}")
    return EXIT_OK


def cmd_human(args) -> int:
    from .gamelog import save
    from .harness import interactive_seat

    cfg = _experiment(args)
    g = interactive_seat(cfg, args.seat - 1, seed=args.seed)
    if args.out:
        save(g, args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="onuw", description="One Night Ultimate Werewolf experiments")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def with_config(p):
        p.add_argument("--config", help="experiment config (JSON)")
        p.add_argument("--setting", choices=["three_player", "five_easy", "five_hard", "five_standard"])
        p.add_argument("--fixture", help="replay-only: serve LLM calls from this transcript")

    p = sub.add_parser("play", help="play matches and save their logs")
    with_config(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--games", type=int, default=1)
    p.add_argument("--out", default="logs")
    p.set_defaults(fn=cmd_play)

    p = sub.add_parser("tournament", help="win-rate matrix over agent lineups")
    with_config(p)
    p.add_argument("--repeats", type=int)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_tournament)

    p = sub.add_parser("extract", help="build an offline-RL transition file from logs")
    p.add_argument("logs", nargs="+")
    p.add_argument("--reward-mode", choices=["per-step", "terminal-only"], default="per-step")
    p.add_argument("--encoder-mode", choices=["structural"], default="structural")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_extract)

    p = sub.add_parser("train", help="train the tactic Q-function with CQL")
    p.add_argument("data")
    p.add_argument("--config", help="trainer config (JSON)")
    p.add_argument("--out", required=True)
    p.add_argument("--curve")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("stats", help="tactic percentages per dealt role")
    p.add_argument("logs", nargs="+")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_stats)

    p = sub.add_parser("verify-equilibria", help="check both three-player equilibria")
    p.add_argument("--alpha-points", type=int, default=10)
    p.add_argument("--gamma-points", type=int, default=5)
    p.add_argument("--samples", type=int, default=10_000)
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("nashconv", help="NashConv of logged three-player play or of a profile")
    p.add_argument("logs", nargs="*")
    p.add_argument("--with-discussion", action="store_true")
    p.add_argument("--profile", help="s,p,q1,q2 evaluated on the no-discussion tree")
    p.add_argument("--strict", action="store_true", help="score no-death votes as Werewolf wins")
    p.set_defaults(fn=cmd_nashconv)

    p = sub.add_parser("replay", help="re-run a log and check its digests and result")
    p.add_argument("log")
    p.set_defaults(fn=cmd_replay)

    p = sub.add_parser("human", help="play one seat yourself")
    with_config(p)
    p.add_argument("--seat", type=int, default=1, help="1-based seat number")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_human)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.fn(args)
    except (OnuwError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
