"""Equilibrium certificates for the three-player game, as one report."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import equilibrium as eq
from .errors import ConstraintViolation


@dataclass
class VerifyReport:
    lines: list = field(default_factory=list)
    passed: bool = True

    def add(self, name: str, ok: bool, detail: str = "") -> None:
        self.passed &= bool(ok)
        self.lines.append(f"{'PASS' if ok else 'FAIL'}  {name}" + (f"  ({detail})" if detail else ""))


def theorem1_certificate(n_p: int = 10, seed: int = 0, tol: float = 1e-9) -> tuple:
    tree = eq.build_tree_no_discussion()
    rng = np.random.default_rng(seed)
    worst_u, worst_nc, ok = 0.0, 0.0, True
    for p in rng.uniform(0, 1, n_p):
        prof, beliefs = eq.theorem1_profile(float(p))
        rep = eq.verify_pbe(tree, prof, beliefs, tol)
        u = eq.expected_utilities(tree, prof)
        worst_u = max(worst_u, max(abs(a - b) for a, b in zip(u, (0, 0, 1))))
        worst_nc = max(worst_nc, rep.nash_conv)
        ok &= rep.passed
    return ok and worst_u == 0 and worst_nc <= 1e-12, worst_u, worst_nc


def theorem2_certificate(n_alpha: int = 10, n_gamma: int = 5, tol: float = 1e-9) -> tuple:
    worst_u, worst_station, failures = 0.0, 0.0, []
    for bt in eq.region_grid(n_alpha, n_gamma):
        prof, beliefs = eq.theorem2_profile(bt)
        tree = eq.build_tree_with_discussion(bt)
        rep = eq.verify_pbe(tree, prof, beliefs, tol)
        u = eq.expected_utilities(tree, prof)
        worst_u = max(worst_u, max(abs(a - b) for a, b in zip(u, eq.closed_form_utilities(bt))))
        worst_station = max(worst_station, eq.stationarity_check(bt, prof))
        q, p = eq.theorem2_params(bt)
        in_unit = -1e-12 <= q <= 1 + 1e-12 and -1e-12 <= p <= 1 + 1e-12
        if not rep.passed or not in_unit:
            failures.append((bt.as_tuple(), rep.failures()))
    return failures, worst_u, worst_station


def region_soundness(samples: int = 10_000, seed: int = 0) -> tuple:
    """Profile construction succeeds iff region_check passes, and both agree
    with the direct test that the equilibrium's p and q are probabilities."""
    rng = np.random.default_rng(seed)
    pts = rng.dirichlet((1, 1, 1), samples)
    false_accept = false_reject = inside = 0
    for a, b, c in pts:
        bt = eq.BeliefTriple(a, b, c)
        try:
            eq.theorem2_profile(bt)
            built = True
        except ConstraintViolation:
            built = False
        q, p = eq.theorem2_params(bt)
        oracle = 0 <= q <= 1 and 0 <= p <= 1
        region = bool(eq.region_check(bt))
        inside += oracle
        false_accept += (built or region) and not oracle
        false_reject += oracle and not (built and region)
    return false_accept, false_reject, inside


def verify_all(grid=(10, 5), samples: int = 10_000) -> VerifyReport:
    rep = VerifyReport()

    t = time.perf_counter()
    ok, wu, wnc = theorem1_certificate()
    rep.add("no-discussion equilibrium is a PBE at 10 random p", ok, f"max |u - (0,0,1)| = {wu:.1e}, max NashConv = {wnc:.1e}, {time.perf_counter() - t:.2f}s")

    t = time.perf_counter()
    fails, wu, ws = theorem2_certificate(*grid)
    rep.add(f"discussion equilibrium is a PBE on {grid[0] * grid[1]}-point region grid", not fails and wu <= 1e-12,
            f"max utility error {wu:.1e}, {len(fails)} failures, {time.perf_counter() - t:.2f}s")
    rep.add("discussion equilibrium stationarity", ws <= 1e-6, f"max |partial| = {ws:.1e}")

    for bt, want in (((1 / 3, 1 / 3, 1 / 3), (-1 / 12, -1 / 12, 1 / 4)), ((0.5, 0.25, 0.25), (-0.5, -0.5, 1.0))):
        got = eq.closed_form_utilities(eq.BeliefTriple(*bt))
        tree = eq.build_tree_with_discussion(eq.BeliefTriple(*bt))
        trav = eq.expected_utilities(tree, eq.theorem2_profile(eq.BeliefTriple(*bt))[0])
        rep.add(f"spot value {tuple(round(x, 4) for x in bt)}", eq.is_close(got, want) and eq.is_close(trav, want),
                f"traversal {tuple(round(x, 6) for x in trav)}")

    t = time.perf_counter()
    fa, fr, inside = region_soundness(samples)
    rep.add(f"region soundness on {samples} simplex samples", fa == 0 and fr == 0,
            f"{inside} inside, {fa} false accepts, {fr} false rejects, {time.perf_counter() - t:.2f}s")

    strict = eq.build_tree_no_discussion(draw_on_no_death=False)
    nc1 = eq.nash_conv(eq.build_tree_no_discussion(), eq.theorem1_profile()[0])
    nc2 = eq.nash_conv(strict, eq.StrategyProfile3P(s=0, p=1, q1=0, q2=0))
    rep.add("NashConv of the no-discussion equilibrium", abs(nc1) <= 1e-12, f"{nc1:.1e}")
    rep.add("NashConv of (s=0, p=1, q=0) under the plain rules", nc2 == 2, f"{nc2}")
    return rep
