"""Acceptance criteria 1-9, one PASS/FAIL line each.

Run under pytest (lines appear in the "acceptance criteria" summary section)
or directly with ``python tests/test_acceptance.py``.
"""

import math
import os
import sys
import time

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from conftest import ACCEPTANCE_LINES  # noqa: E402
from helpers import rand_lhs_assemblage, rand_state_assemblage, rand_task_hamiltonians  # noqa: E402
from steerkit.assemblage import (  # noqa: E402
    assemblage_from_state,
    isotropic_assemblage,
    isotropic_state,
    maxent_assemblage,
)
from steerkit.bounds import eta_grid, maxent_robustness_lb, thresholds, xi_lb_isotropic  # noqa: E402
from steerkit.cli import main as cli_main  # noqa: E402
from steerkit.cooling import (  # noqa: E402
    CoolingTask,
    advantage_ratio,
    average_heat,
    certified_advantage,
    simulate_protocol,
)
from steerkit.mub import conjugate_projectors, mub_family  # noqa: E402
from steerkit.steering import (  # noqa: E402
    canonical_mub_witness,
    robustness_dual,
    robustness_primal,
    verify_witness_feasibility,
)


def record(n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def test_criterion_1_unsteerability_threshold():
    f = mub_family(2)
    t0 = time.perf_counter()
    r50 = robustness_dual(isotropic_assemblage(2, 0.50, f)).R
    r51 = robustness_dual(isotropic_assemblage(2, 0.51, f)).R
    dt = time.perf_counter() - t0
    ok = r50 <= 1e-6 and r51 > 1e-6 and dt < 10
    record(1, ok, f"R(0.50)={r50:.3e} (<=1e-6), R(0.51)={r51:.3e} (>1e-6), {dt:.2f}s (<10s)")


@pytest.mark.slow
def test_criterion_2_maxent_bound():
    parts, ok = [], True
    for d in (2, 3, 5):
        t0 = time.perf_counter()
        res = robustness_dual(maxent_assemblage(mub_family(d)))
        dt = time.perf_counter() - t0
        lb = maxent_robustness_lb(d)
        good = res.R >= lb - 1e-6 and res.certified and (d != 5 or dt < 600)
        ok &= good
        parts.append(f"d={d} R={res.R:.5f}>=lb {lb:.5f} ({dt:.1f}s)")
    record(2, ok, "; ".join(parts))


def test_criterion_3_theorem_certification():
    ok, worst, cells = True, math.inf, 0
    for d in (2, 3):
        a = maxent_assemblage(mub_family(d))
        res = robustness_dual(a)
        for beta in (0.1, 1, 10):
            zs = []
            for eps in (0.1, 1, 10):
                rep = certified_advantage(a, eps, beta, robustness=res)
                cells += 1
                margin = -math.inf if rep.xi is None else rep.xi - rep.one_plus_R
                worst = min(worst, margin)
                ok &= margin >= -1e-6 and rep.S <= 1 + 1e-8
                zs.append(rep.z)
            ok &= all(b <= a_ for a_, b in zip(zs, zs[1:]))
    record(3, ok, f"{cells} cells, min(xi - 1 - R)={worst:.3e}, S<=1+1e-8, z nonincreasing in eps")


def test_criterion_4_witness_property():
    rng = np.random.default_rng(2024)
    ok, max_r, max_xi, degenerate = True, -math.inf, -math.inf, 0
    for k in range(50):
        d = 2 + k % 2
        n, o = int(rng.integers(2, 4)), int(rng.integers(2, 4))
        a = rand_lhs_assemblage(rng, d, n, o)
        res = robustness_dual(a)
        max_r = max(max_r, res.R)
        ok &= res.R <= 1e-6
        xis = [certified_advantage(a, 1.0, 1.0, robustness=res).xi]
        task = CoolingTask(rand_task_hamiltonians(rng, n, o, d), float(rng.uniform(0.1, 5)))
        xis.append(advantage_ratio(a, task).xi)
        for xi in xis:
            if xi is None:
                degenerate += 1
            else:
                max_xi = max(max_xi, xi)
                ok &= xi <= 1 + 1e-6
    record(4, ok, f"50 LHS assemblages: max R={max_r:.2e}, max xi={max_xi:.8f}, {degenerate} zero-denominator ratios")


def test_criterion_5_canonical_witness_feasibility():
    ok, parts = True, []
    for d in (2, 3, 5):
        rep = verify_witness_feasibility(canonical_mub_witness(mub_family(d)))
        ok &= rep.passed and rep.exhaustive and rep.max_norm <= 1 + 1e-9
        parts.append(f"d={d} max norm {rep.max_norm:.12f} over {rep.checked}")
    record(5, ok, "; ".join(parts))


def test_criterion_6_primal_dual_agreement():
    rng = np.random.default_rng(7)
    ok, worst = True, 0.0
    for k in range(30):
        d, n, o = (int(v) for v in rng.integers(2, 4, size=3))
        a = rand_state_assemblage(rng, d, n, o, rank=int(rng.integers(1, 3)))
        rd, rp = robustness_dual(a), robustness_primal(a)
        worst = max(worst, abs(rd.R - rp.R))
        ok &= abs(rd.R - rp.R) <= 1e-6 and rd.certified and rp.certified
    record(6, ok, f"30 random assemblages, max |R_primal - R_dual|={worst:.2e}, all certificates pass")


def test_criterion_7_fig3_sweep(tmp_path, capsys):
    out = tmp_path / "fig3.csv"
    t0 = time.perf_counter()
    code = cli_main(["sweep", "--dims", "2:50", "--eta", "0:1:0.02", "--out", str(out)])
    dt = time.perf_counter() - t0
    capsys.readouterr()
    import csv

    rows = list(csv.DictReader(out.open()))
    err, cross_ok = 0.0, True
    for r in rows:
        d, eta = int(r["d"]), float(r["eta"])
        ref = (d + 1) * (1 + eta * (d - 1)) / (d * (1 + math.sqrt(d)))
        err = max(err, abs(float(r["xi_lb"]) - ref))
    for d in range(2, 51):
        t = 1 / (math.sqrt(d) + 1 / (d + math.sqrt(d) + 1))
        cross_ok &= abs(xi_lb_isotropic(d, t) - 1) <= 1e-12 and abs(thresholds(d).advantage - t) <= 1e-15
        cross_ok &= all((float(r["xi_lb"]) > 1) == (float(r["eta"]) > t) for r in rows if int(r["d"]) == d)
    ok = code == 0 and len(rows) == 49 * 51 and err <= 1e-12 and cross_ok and dt < 5
    record(7, ok, f"{len(rows)} rows, max |xi_lb - formula|={err:.1e}, crossing exact, {dt:.2f}s (<5s)")


def test_criterion_8_construction_cross_check():
    worst = 0.0
    for d in (2, 3, 5):
        f = mub_family(d)
        m = conjugate_projectors(f)
        for eta in (0, 0.3, 0.7, 1):
            a = isotropic_assemblage(d, eta, f)
            b = assemblage_from_state(isotropic_state(d, eta), m)
            worst = max(worst, float(np.abs(a.members - b.members).max()))
    record(8, worst <= 1e-12, f"max entrywise difference {worst:.1e} over 12 cases")


def test_criterion_9_monte_carlo():
    rng = np.random.default_rng(99)
    ok, worst = True, 0.0
    for k in range(20):
        d, n, o = (int(v) for v in rng.integers(2, 4, size=3))
        a = rand_state_assemblage(rng, d, n, o)
        task = CoolingTask(rand_task_hamiltonians(rng, n, o, d), float(rng.uniform(0.1, 5)))
        seed = int(rng.integers(0, 2**31))
        r1 = simulate_protocol(a, task, 10**6, seed)
        r2 = simulate_protocol(a, task, 10**6, seed)
        z = abs(r1.mean - average_heat(a, task)) / r1.std_error if r1.std_error > 0 else 0.0
        worst = max(worst, z)
        ok &= z <= 5 and r1 == r2
    record(9, ok, f"20 pairs at 1e6 shots, max deviation {worst:.2f} standard errors, reruns identical")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
