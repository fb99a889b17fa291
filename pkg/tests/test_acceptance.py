"""Acceptance gates, one test per criterion, each printing a pass/fail line.

Every criterion runs at its pre-registered tolerance from the checked-in
default configs; nothing is calibrated at test time.
"""

import time
from pathlib import Path

import pytest

from modsel.experiments import default_config, list_experiments, run_experiment
from modsel.reporting import rows_to_csv_text


def _report(name, profile="full"):
    return run_experiment(default_config(name, profile))


def _announce(criterion, ok, detail=""):
    print(f"\nACCEPTANCE {criterion}: {'PASS' if ok else 'FAIL'} {detail}")
    assert ok, detail


def _failures(report):
    return [f"{r.model}: {r.mc_mean} vs {r.exact_or_bound}" for r in report.rows if r.passed is False]


def test_criterion_1_exact_formula_suite():
    start = time.perf_counter()
    report = _report("exact-formulas")
    elapsed = time.perf_counter() - start
    ok = report.passed and elapsed < 1.0 * len(report.rows)
    _announce(1, ok, f"exact formulas, {len(report.rows)} identities in {elapsed:.2f}s {_failures(report)}")


def test_criterion_2_distance_identities():
    report = _report("distance-identities")
    _announce(2, report.passed, f"distance identities at 1e-8 on randomized cases {_failures(report)}")


def test_criterion_3_risk_identity_mc():
    times = {}
    reports = {}
    for name in ("his-exact", "gauss-exact"):
        start = time.perf_counter()
        reports[name] = _report(name)
        times[name] = time.perf_counter() - start
    ok = all(r.passed for r in reports.values()) and all(t < 120.0 for t in times.values())
    detail = "; ".join(f"{k}: {times[k]:.0f}s" for k in reports) + str([_failures(r) for r in reports.values()])
    _announce(3, ok, detail)


def test_criterion_4_test_bound_mc():
    g = _report("gtest-bound")
    d = _report("density-test-bound")
    ok = g.passed and d.passed
    _announce(4, ok, f"Gaussian grid and density test bounds {_failures(g) + _failures(d)}")


def test_criterion_5_lattice_and_nets():
    dev = _report("lattice-deviation")
    net = _report("net-counting")
    ok = dev.passed and net.passed
    _announce(5, ok, f"deviation tails and exact net counts {_failures(dev) + _failures(net)}")


def test_criterion_6_rate_reproduction():
    start = time.perf_counter()
    report = _report("rate-holder")
    elapsed = time.perf_counter() - start
    slopes = [r for r in report.rows if "slope" in r.model]
    ok = report.passed and elapsed < 600.0 and len(slopes) == 2
    detail = ", ".join(f"{r.model}={r.mc_mean:.3f} (target {r.exact_or_bound:.3f})" for r in slopes)
    _announce(6, ok, f"{detail}, {elapsed:.0f}s")


def test_criterion_7_oracle_ratio_gates():
    g = _report("oracle-ratio-gauss")
    h = _report("oracle-ratio-holdout")
    ratios = [r for r in g.rows + h.rows if r.model.endswith("ratio")]
    ok = g.passed and h.passed and all(r.mc_mean <= 10.0 for r in ratios)
    worst = max(r.mc_mean for r in ratios)
    _announce(7, ok, f"worst measured ratio {worst:.2f} <= 10 {_failures(g) + _failures(h)}")


def test_criterion_8_lower_bound_floor():
    report = _report("assouad-floor")
    floors = [r for r in report.rows if "sup-l2-risk" in r.model]
    wedge = [r for r in report.rows if "hellinger" in r.model]
    ok = report.passed and len(floors) == 4 and len(wedge) == 1
    detail = "; ".join(f"{r.model}: {r.mc_mean:.3f} vs floor {r.exact_or_bound:.4f}" for r in floors)
    detail += f"; wedge {wedge[0].mc_mean:.4f} <= {wedge[0].exact_or_bound:.4f}"
    _announce(8, ok, detail)


def test_criterion_9_determinism(tmp_path):
    outputs = []
    for run in range(2):
        batch = {}
        for name, _ in list_experiments():
            report = run_experiment(default_config(name, "quick"))
            batch[name] = rows_to_csv_text(report.rows)
            for tname, text in report.tables.items():
                batch[f"{name}.{tname}"] = text
        outputs.append(batch)
    same = outputs[0] == outputs[1]
    diffs = [k for k in outputs[0] if outputs[0][k] != outputs[1].get(k)]
    _announce(9, same, f"verify-all reports byte-identical across reruns (diffs: {diffs})")
