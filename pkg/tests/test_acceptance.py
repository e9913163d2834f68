"""Acceptance gate: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py`` or directly as a script.
"""

import math
import sys
import time

import numpy as np
import pytest
from scipy.optimize import brentq

from conftest import four_node, random_topology, unit_line
from hdmrc import (
    Topology,
    build_gain_matrix,
    df_rate,
    four_node_closed_form,
    full_duplex_df_rate,
    grid_oracle,
    is_rsnr_degraded,
    maximin_lp,
    solve_algorithm2,
    solve_algorithm3,
)
from hdmrc.cli import SweepSpec, run_sweep, write_csv
from hdmrc.rates import reception_rows
from hdmrc.sched import grid_lipschitz

SUPPORT_TOL = 1e-9
GRID_STEP = 0.005


def verdict(capsys, num, ok, detail):
    with capsys.disabled():
        print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {num}: {detail}")
    assert ok, detail


def is_prefix(nodes):
    return tuple(nodes) == tuple(range(2, 2 + len(nodes)))


# shared instance sets ---------------------------------------------------------


@pytest.fixture(scope="module")
def acc_seed(request):
    return request.config.getoption("--seed")


@pytest.fixture(scope="module")
def random_sets(acc_seed):
    out = {}
    for D in (3, 4, 5):
        rng = np.random.default_rng([acc_seed, D])
        insts = []
        for _ in range(200):
            t = random_topology(rng, D)
            insts.append((t, build_gain_matrix(t)))
        out[D] = insts
    return out


@pytest.fixture(scope="module")
def closed_form_set(acc_seed):
    rng = np.random.default_rng([acc_seed, 6])
    insts = []
    for _ in range(200):
        t = random_topology(rng, 4)
        insts.append((t, build_gain_matrix(t)))
    return insts


def degraded_line(rng):
    while True:
        D = int(rng.integers(3, 9))
        x = np.concatenate([[0.0], np.cumsum(rng.uniform(1, 5, D - 1))])
        t = Topology(rng.uniform(1, 20, D - 1), [float(rng.uniform(0.005, 1))] * (D - 1),
                     positions=[(float(v), 0.0) for v in x])
        g = build_gain_matrix(t)
        if is_rsnr_degraded(g, t)[0]:
            return t, g


@pytest.fixture(scope="module")
def degraded_set(acc_seed):
    rng = np.random.default_rng([acc_seed, 7])
    return [degraded_line(rng) for _ in range(100)]


@pytest.fixture(scope="module")
def position_sweep():
    t0 = time.perf_counter()
    reps = {}
    for y3 in range(0, 101):
        t, g = four_node(66, y3)
        reps[y3] = solve_algorithm2(t, g)
    return reps, time.perf_counter() - t0


@pytest.fixture(scope="module")
def solved(random_sets, closed_form_set, degraded_set):
    """Algorithm 2 reports (with cut-set bound) on every instance of criteria 5 to 7."""
    out = []
    for insts in list(random_sets.values()) + [closed_form_set, degraded_set]:
        out += [(t, g, solve_algorithm2(t, g)) for t, g in insts]
    return out


# criteria ----------------------------------------------------------------------


def test_criterion_01_full_duplex_constant(capsys):
    t0 = time.perf_counter()
    worst = 0.0
    for D in range(2, 21):
        t, g = unit_line(D)
        worst = max(worst, abs(full_duplex_df_rate(g, t)[0] - math.log2(11)))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-12 and elapsed < 1.0
    verdict(capsys, 1, ok, f"full-duplex D=2..20 max |rate - log2 11| = {worst:.2e}, {elapsed:.3f}s")


def test_criterion_02_half_duplex_three_nodes(capsys):
    t0 = time.perf_counter()
    t, g = unit_line(3)
    rep = solve_algorithm3(t, g)
    elapsed = time.perf_counter() - t0
    G = lambda x: math.log2(1 + x)  # noqa: E731
    a = brentq(lambda a: a * G(10) - (a * G(2.5) + (1 - a) * G(12.5)), 0, 1, xtol=1e-15)
    oracle = a * G(10)
    err = abs(rep.df_rate - oracle)
    ok = err <= 1e-9 and abs(rep.df_rate - 2.4) <= 0.1 and elapsed < 1.0
    verdict(capsys, 2, ok, f"D=3 rate {rep.df_rate:.10f} vs bisection {oracle:.10f} (err {err:.1e}), {elapsed:.3f}s")


def test_criterion_03_relay_position_structure(capsys, position_sweep):
    reps, elapsed = position_sweep
    sup = {y3: set(r.support(SUPPORT_TOL)) for y3, r in reps.items()}
    bad_a = [y3 for y3 in range(1, 100) if 3 in sup[y3]]
    bad_b = [y3 for y3 in range(21, 53) if sup[y3] != {0, 1}]
    three = list(range(5, 16)) + list(range(55, 96))
    bad_c = [y3 for y3 in three if len(sup[y3]) != 3]
    ok = not bad_a and not bad_b and not bad_c and elapsed < 10.0
    detail = (f"(a) (T,T) used at y3={bad_a or 'none'}; (b) off-support y3={bad_b or 'none'}; "
              f"(c) not three-state y3={bad_c or 'none'}; sweep {elapsed:.2f}s")
    verdict(capsys, 3, ok, detail)


def test_criterion_04_region_law(capsys):
    t0 = time.perf_counter()
    single_wrong, pairs = [], []
    for y2 in range(0, 101, 5):
        for y3 in range(0, 101, 5):
            t, g = four_node(y2, y3)
            rep = solve_algorithm2(t, g, bound=False)
            if len(rep.bottleneck) == 1 and y2 < y3:
                single_wrong.append((y2, y3))
            if len(rep.bottleneck) == 2:
                pairs.append((y2, y3))
    elapsed = time.perf_counter() - t0
    ok = not single_wrong and not pairs and elapsed < 60.0
    verdict(capsys, 4, ok, f"|B|=1 with y2<y3 at {single_wrong or 'none'}; |B|=2 at {pairs or 'none'}; {elapsed:.2f}s")


def test_criterion_05_oracle_triangle(capsys, random_sets):
    t0 = time.perf_counter()
    worst_lp, grid_bad = 0.0, []
    for D, insts in random_sets.items():
        for k, (t, g) in enumerate(insts):
            R = reception_rows(g, t)
            a2 = solve_algorithm2(t, g, bound=False).df_rate
            _, lp = maximin_lp(R)
            worst_lp = max(worst_lp, abs(a2 - lp))
            if D in (3, 4):
                _, gv = grid_oracle(R, GRID_STEP)
                tol = grid_lipschitz(R) * GRID_STEP
                if abs(a2 - gv) > tol or abs(lp - gv) > tol:
                    grid_bad.append((D, k))
    elapsed = time.perf_counter() - t0
    ok = worst_lp <= 1e-8 and not grid_bad and elapsed < 300
    verdict(capsys, 5, ok, f"max |algo2 - LP| = {worst_lp:.1e}; grid misses {grid_bad or 'none'}; {elapsed:.1f}s")


def test_criterion_06_closed_form(capsys, closed_form_set):
    worst_v, worst_s = 0.0, 0.0
    for t, g in closed_form_set:
        ref = solve_algorithm2(t, g, bound=False)
        cf = four_node_closed_form(t, g, bound=False)
        worst_v = max(worst_v, abs(cf.df_rate - ref.df_rate))
        worst_s = max(worst_s, abs(df_rate(cf.schedule, g, t)[0] - df_rate(ref.schedule, g, t)[0]))
    ok = worst_v <= 1e-8 and worst_s <= 1e-8
    verdict(capsys, 6, ok, f"max value diff {worst_v:.1e}, max schedule-rate diff {worst_s:.1e}")


def test_criterion_07_degraded_lines(capsys, degraded_set):
    fails = []
    for k, (t, g) in enumerate(degraded_set):
        try:
            rep = solve_algorithm3(t, g, bound=False)
        except Exception as exc:  # noqa: BLE001
            fails.append((k, f"raised {exc}"))
            continue
        r = np.array(list(rep.reception_rates.values()))
        if r.max() - r.min() > 1e-9:
            fails.append((k, "rates differ"))
        if rep.bottleneck != tuple(range(2, t.D + 1)):
            fails.append((k, "bottleneck"))
        if abs(rep.df_rate - solve_algorithm2(t, g, bound=False).df_rate) > 1e-9:
            fails.append((k, "value"))
    sizes = sorted({t.D for t, _ in degraded_set})
    verdict(capsys, 7, not fails, f"100 degraded lines, D in {sizes}; failures {fails or 'none'}")


def test_criterion_08_sandwich(capsys, solved, position_sweep):
    over = [k for k, (_, _, rep) in enumerate(solved) if rep.df_rate > rep.cutset_bound + 1e-9]
    reps, _ = position_sweep
    min_gap = min(r.cutset_bound - r.df_rate for r in reps.values())
    ok = not over and min_gap > 1e-6
    verdict(capsys, 8, ok, f"{len(solved)} instances, bound violated at {over or 'none'}; "
                           f"smallest gap on the y3 sweep {min_gap:.3e}")


def test_criterion_09_bottleneck_prefix(capsys, solved, position_sweep):
    reports = [rep for _, _, rep in solved] + list(position_sweep[0].values())
    for D in range(2, 11):
        reports.append(solve_algorithm3(*unit_line(D), bound=False))
    bad = [rep.bottleneck for rep in reports if not is_prefix(rep.bottleneck)]
    verdict(capsys, 9, not bad, f"{len(reports)} solved instances, non-prefix bottlenecks {bad or 'none'}")


def test_criterion_10_determinism(capsys, tmp_path):
    spec = SweepSpec("relay-position-1d", y2=(66.0,), y3=tuple(float(v) for v in range(0, 101)))
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_csv(run_sweep(spec), str(a))
    write_csv(run_sweep(spec, threads=4), str(b))
    same = a.read_bytes() == b.read_bytes()
    verdict(capsys, 10, same, f"two y3 sweeps ({len(a.read_bytes())} bytes) byte-identical: {same}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
