"""End-to-end acceptance checks. Each prints one PASS/FAIL line and then asserts.

Every check returns its CSV/JSON artifacts so the determinism check can
re-run all of them and compare bytes.
"""
import json
import time

import numpy as np
import pytest

from topobound import geometry as g
from topobound.approx import fit_polynomial, select_degree
from topobound.bounds import Verdict, reports_to_csv
from topobound.condition import kappa
from topobound.experiments import (CUTOFF_FIELDS, MORSE_FIELDS, cell_campaign, cutoff_campaign,
                                   morse_campaign, mv_campaign, rows_to_csv, sharpness_family,
                                   sharpness_run, variety_sweep)
from topobound.homology import CubicalComplex, betti, zero_set_betti
from topobound.morse import critical_count
from topobound.poly import Polynomial
from topobound.smoothmap import BuiltinMap

from test_experiments import ORACLE_ZEROS

SEED = 0
# frozen from tests/oracles/condition_circle.py
ORACLE_DELTA = 0.5
ORACLE_KAPPA = 3.8284271247461900976

FIRST_RUN = {}


def _dump(obj) -> bytes:
    return (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode()


def _annulus(n):
    c = (np.arange(n) + 0.5) / n * 2 - 1
    X, Y = np.meshgrid(c, c, indexing="ij")
    r = np.hypot(X, Y)
    return (r > 0.4) & (r < 0.8)


def crit_condition():
    t = time.perf_counter()
    rep = kappa(BuiltinMap("sin", {"p": 1, "shift": -0.5}), g.circle(), 2 ** 16)
    dt = time.perf_counter() - t
    ok = abs(rep.delta - ORACLE_DELTA) <= 1e-6 and abs(rep.kappa - ORACLE_KAPPA) <= 1e-2 and dt < 2
    return ok, f"delta={rep.delta:.9f} kappa={rep.kappa:.6f} {dt:.2f}s", {
        "condition.json": _dump(rep.to_json())}


def crit_cutoff():
    t = time.perf_counter()
    recs = cutoff_campaign(g.circle(), 50, 5, 4096, SEED) + cutoff_campaign(g.torus_flat(), 50, 5, 48, SEED)
    dt = time.perf_counter() - t
    ties = sum(r.tie for r in recs)
    ok = ties == 100 and dt < 60
    return ok, f"{ties}/100 exact ties {dt:.1f}s", {
        "cutoff.csv": rows_to_csv([r.row() for r in recs], CUTOFF_FIELDS).encode()}


def crit_mv():
    t = time.perf_counter()
    reps = mv_campaign(200, SEED, (32, 32), 4)
    dt = time.perf_counter() - t
    bad = sum(r.verdict != Verdict.HOLDS for r in reps)
    kinds = {r.inputs["masks"] for r in reps}
    ok = bad == 0 and kinds == {"closed", "open_closure"} and dt < 120
    return ok, f"{len(reps)} reports, {bad} not holding {dt:.1f}s", {"mv.csv": reports_to_csv(reps).encode()}


def crit_variety():
    t = time.perf_counter()
    reps = variety_sweep(100, SEED, 3, 256)
    dt = time.perf_counter() - t
    holds = all(r.verdict == Verdict.HOLDS for r in reps)
    values = all(r.value == {1: 4, 2: 8, 3: 12}[r.inputs["d"]] for r in reps)
    oracle = [r.measured for r in reps] == ORACLE_ZEROS
    ok = holds and values and oracle and dt < 60
    return ok, f"holds={holds} values={values} oracle={oracle} {dt:.1f}s", {
        "bounds.csv": reports_to_csv(reps).encode()}


def crit_sharpness():
    t = time.perf_counter()
    run = sharpness_run(g.torus_flat(), 4, resolution=128)
    dt = time.perf_counter() - t
    counts = [r.b_total for r in run.records]
    exact = counts == [2 * n * n for n in range(1, 5)]
    ok = run.truncated_at is None and exact and run.holds and dt < 300
    return ok, f"b={counts} verdict={run.verdict} {dt:.1f}s", {
        "sharpness.csv": run.to_csv().encode(), "sharpness.json": _dump(run.verdict)}


def crit_homology():
    t = time.perf_counter()
    out = {}
    for N in (8, 16):
        out[f"torus_{N}"] = list(betti(CubicalComplex.full((N, N), (True, True))))
    for N in (40, 80):
        out[f"annulus_{N}"] = list(betti(CubicalComplex.from_top_cells(_annulus(N), (False, False))))
    for N in (512, 1024):
        out[f"sin_{N}"] = [zero_set_betti(BuiltinMap("sin", {"p": p}), g.circle(), N, 1.0)[0]
                           for p in range(1, 11)]
    dt = time.perf_counter() - t
    ok = (out["torus_8"] == out["torus_16"] == [1, 2, 1]
          and out["annulus_40"] == out["annulus_80"] == [1, 1, 0]
          and out["sin_512"] == out["sin_1024"] == [2 * p for p in range(1, 11)] and dt < 30)
    return ok, f"torus={out['torus_16']} annulus={out['annulus_80']} {dt:.1f}s", {
        "homology.json": _dump(out)}


def crit_cells():
    t = time.perf_counter()
    reps = cell_campaign(g.torus_flat(), 50, SEED, 3)
    dt = time.perf_counter() - t
    held = sum(r.verdict == Verdict.HOLDS for r in reps)
    ok = held == 50 and dt < 300
    return ok, f"{held}/50 hold {dt:.1f}s", {"semialg.csv": reports_to_csv(reps).encode()}


def crit_weierstrass():
    t = time.perf_counter()
    M = g.circle()
    exact = fit_polynomial(BuiltinMap("sin", {"p": 3}), M, 3).sup_error
    bump = sharpness_family(M, 1)
    c0 = {d: fit_polynomial(bump, M, d).c0_hat for d in (8, 16, 32)}
    spread = max(c0.values()) / min(c0.values())
    sel = select_degree(1, 3.8284)
    dt = time.perf_counter() - t
    ok = exact < 1e-10 and spread < 2 and sel == 8 and dt < 30
    return ok, f"exact={exact:.1e} c0={[round(v, 4) for v in c0.values()]} spread={spread:.2f} " \
               f"select={sel} {dt:.1f}s", {
        "fit.json": _dump({"exact": exact, "c0": {str(k): v for k, v in c0.items()}, "select": sel})}


def crit_morse():
    t = time.perf_counter()
    C = g.implicit_circle()
    a = critical_count(C.polys, Polynomial.variable(2, 0), C, 64)
    T = g.torus_quartic(axis=1)
    b = critical_count(T.polys, Polynomial.variable(3, 2), T, 32)
    recs = morse_campaign(50, SEED)
    dt = time.perf_counter() - t
    ok = ((a.count, a.bound) == (2, 2) and (b.count, b.bound) == (4, 36)
          and all(r.holds for r in recs) and len(recs) == 100 and dt < 120)
    return ok, f"circle {a.count}<={a.bound} torus {b.count}<={b.bound} " \
               f"campaign max={max(r.count for r in recs)} {dt:.1f}s", {
        "morse.csv": rows_to_csv([r.row() for r in recs], MORSE_FIELDS).encode()}


CRITERIA = [
    (1, "condition oracle", crit_condition),
    (2, "subset cutoff", crit_cutoff),
    (3, "Mayer-Vietoris campaign", crit_mv),
    (4, "variety bound sweep", crit_variety),
    (5, "sharpness on the torus", crit_sharpness),
    (6, "homology engine", crit_homology),
    (7, "cell decomposition", crit_cells),
    (8, "polynomial approximation", crit_weierstrass),
    (9, "critical point counts", crit_morse),
]


def _line(capsys, num, name, ok, detail):
    with capsys.disabled():
        print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {num}: {name}: {detail}")


def _run(num):
    if num not in FIRST_RUN:
        fn = CRITERIA[num - 1][2]
        FIRST_RUN[num] = fn()
    return FIRST_RUN[num]


@pytest.mark.parametrize("num,name", [(n, s) for n, s, _ in CRITERIA], ids=[f"c{n}" for n, _, _ in CRITERIA])
def test_criterion(num, name, capsys):
    ok, detail, _ = _run(num)
    _line(capsys, num, name, ok, detail)
    assert ok, detail


def test_criterion_10_determinism(capsys):
    t = time.perf_counter()
    diffs = []
    for num, _, fn in CRITERIA:
        _, _, first = _run(num)
        _, _, second = fn()
        diffs += [f"c{num}:{k}" for k in first if first[k] != second.get(k)]
    dt = time.perf_counter() - t
    ok = not diffs
    _line(capsys, 10, "determinism", ok, f"{'all artifacts identical' if ok else diffs} {dt:.1f}s")
    assert ok, diffs
