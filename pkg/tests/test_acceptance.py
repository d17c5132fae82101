"""Acceptance suite: one test per criterion, each reporting a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py`` (the lines are repeated in the
terminal summary) or directly with ``python tests/test_acceptance.py``.
Criteria 6 and 7 share two runs of the full ablation matrix and take a few
minutes.
"""

import math
import os
import sys
import time

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

sys.path.insert(0, os.path.dirname(__file__))

from conftest import brute_force_metrics, random_field  # noqa: E402
from fakes import KinematicTarget  # noqa: E402
from tacreorient.geometry import matrix_angle, rpy_matrix  # noqa: E402
from tacreorient.harness import load_document, scenario_config  # noqa: E402
from tacreorient.harness.ablation import results_csv, run_ablation, summary  # noqa: E402
from tacreorient.harness.config import echo  # noqa: E402
from tacreorient.harness.demo import run_two_phase_demo  # noqa: E402
from tacreorient.optimizer import (  # noqa: E402
    COOR,
    TASK,
    OptimizerState,
    Pose,
    executed_vector,
    nominal_pose,
    optimize_step,
    rotation_loss,
)
from tacreorient.simulation import SUITE_IDS  # noqa: E402
from tacreorient.tactile import LEFT, MarkerField, slip_metrics  # noqa: E402

REPORT: list[str] = []
T = 0.033


def report(number, name, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {name} -- {detail}"
    REPORT.append(line)
    print(line)
    assert ok, line


# -- 1 -------------------------------------------------------------------------------

def test_criterion_1_tactile_oracle():
    rng = np.random.default_rng(20240101)
    fields = [random_field(rng) for _ in range(1000)]
    t0 = time.perf_counter()
    got = [slip_metrics(f) for f in fields]
    elapsed = time.perf_counter() - t0
    worst = 0.0
    for f, s in zip(fields, got):
        bs1, bs2 = brute_force_metrics(f.ref_positions, f.displacements, f.normals)
        bs1 = np.asarray(bs1)
        worst = max(worst, np.linalg.norm(s.s1 - bs1) / np.linalg.norm(bs1), abs(s.s2 - bs2) / abs(bs2))
    sizes = [f.n_markers for f in fields]
    report(1, "tactile oracle equivalence", worst <= 1e-12 and elapsed < 5.0,
           f"1000 fields, N in [{min(sizes)}, {max(sizes)}], worst relative error {worst:.2e}, "
           f"{elapsed:.3f} s")


# -- 2 -------------------------------------------------------------------------------

def test_criterion_2_analytic_s2():
    half_diag, theta = 5.0, 0.01
    ref = np.array([[half_diag, 0, 0], [0, half_diag, 0], [-half_diag, 0, 0], [0, -half_diag, 0.0]])
    n = np.array([0.0, 0.0, 1.0])
    r = ref.mean(axis=0) - ref
    d = theta * np.cross(n, r)
    s = slip_metrics(MarkerField(LEFT, ref, d, np.tile(n, (4, 1))))
    ok = abs(s.s2 - 0.05) <= 1e-9 and np.max(np.abs(s.s1)) <= 1e-12
    report(2, "analytic rotational tendency", ok, f"S2 = {s.s2:.12f} mm, |S1|max = {np.max(np.abs(s.s1)):.1e}")


# -- 3 -------------------------------------------------------------------------------

def test_criterion_3_gradient_fidelity():
    rng = np.random.default_rng(3)
    epsilons = [0.05, 0.025, 0.0125, 0.00625]
    worst_ratio = math.inf
    for _ in range(10):
        q_star = rng.normal(size=3)
        q_star /= np.linalg.norm(q_star)
        q0 = rng.normal(size=3)
        q0 /= np.linalg.norm(q0)
        # planted quadratic in the executed (normalised) task direction
        closed = 2.0 * (np.eye(3) - np.outer(q0, q0)) @ (q0 - q_star)
        errors = []
        for eps in epsilons:
            opt = OptimizerState.for_task(q0, epsilon=eps)
            target = KinematicTarget(5.0, T, loss_fn=lambda p: float(np.sum((p.action - q_star) ** 2)))
            _, trace = optimize_step(target.for_mode(TASK), opt, v0=5.0, cycle_time=T, speed_limit=10.0,
                                     detrend=False)
            errors.append(np.linalg.norm(trace.gradient - closed))
        worst_ratio = min(worst_ratio, *(a / b for a, b in zip(errors, errors[1:])))
    report(3, "gradient fidelity", worst_ratio >= 3.9,
           f"10 planted quadratics, eps {epsilons[0]} halved 3 times, worst error reduction {worst_ratio:.3f}x")


# -- 4 -------------------------------------------------------------------------------

def test_criterion_4_restoration():
    rng = np.random.default_rng(4)
    worst_p = worst_r = 0.0
    cap = math.radians(3.0)
    for k in range(100):
        mode = TASK if k % 2 == 0 else COOR
        v0 = float(rng.uniform(1.0, 20.0))
        start = Pose(rpy_matrix(rng.uniform(-1, 1, 3)), rng.uniform(-100, 100, 3))
        if mode == TASK:
            opt = OptimizerState.for_task(rng.normal(size=3), epsilon=float(rng.uniform(0.01, 0.3)))
        else:
            opt = OptimizerState.for_coordination(rng.uniform(-0.05, 0.05, 3), epsilon=float(rng.uniform(1e-3, 0.02)))
        extras = [(rng.uniform(-v0, v0, 3), rng.uniform(-0.4, 0.4, 3) * cap) for _ in range(6)]
        target = KinematicTarget(v0, T, extra=lambda i: extras[i], start=start).for_mode(mode)
        optimize_step(target, opt, v0=v0, cycle_time=T, speed_limit=2.0 * v0)
        goal = nominal_pose(start, opt, v0, T)
        worst_p = max(worst_p, float(np.linalg.norm(target.p - goal.position)))
        worst_r = max(worst_r, matrix_angle(target.R.T @ goal.rotation))
        for velocity, rpy in target.moves:
            assert np.linalg.norm(velocity) <= 2.0 * v0 * (1 + 1e-12)
            assert matrix_angle(rpy_matrix(rpy)) <= cap + 1e-12
    report(4, "restoration invariant", worst_p < 1e-9 and worst_r < 1e-9,
           f"100 schedules, worst deviation {worst_p:.1e} mm / {worst_r:.1e} rad")


# -- 5 -------------------------------------------------------------------------------

def test_criterion_5_loss_branches():
    lines, ok = [], True
    for lam in (0.5, 1.0, 2.0):
        gap = abs(rotation_loss(1e-9, lam) - rotation_loss(-1e-9, lam))
        at_zero = rotation_loss(0.0, lam)
        res = minimize_scalar(lambda s: rotation_loss(s, lam), bounds=(1e-12, 4 * lam), method="bounded",
                              options={"xatol": 1e-10})
        value = rotation_loss(lam, lam)
        good = gap < 1e-8 and at_zero == 0.0 and abs(res.x - lam) < 1e-6 and value == -lam ** 2
        ok &= good
        lines.append(f"lambda0={lam}: argmin {res.x:.8f}, L2(lambda0)={value}, jump at 0 {gap:.1e}")
    report(5, "loss branch correctness", ok, "; ".join(lines))


# -- 6 and 7 -----------------------------------------------------------------------------

@pytest.fixture(scope="module")
def ablation_runs():
    doc = load_document()
    t0 = time.perf_counter()
    first = run_ablation(doc, SUITE_IDS, jobs=1)
    single_core = time.perf_counter() - t0
    second = run_ablation(doc, SUITE_IDS, jobs=max(2, min(8, os.cpu_count() or 1)))
    return first, second, single_core


@pytest.mark.slow
def test_criterion_6_determinism(ablation_runs):
    first, second, _ = ablation_runs
    a, b = results_csv(first).encode(), results_csv(second).encode()
    report(6, "determinism", a == b,
           f"two full matrices ({len(first)} episodes each; serial and multi-process), "
           f"{'byte-identical' if a == b else 'different'} results files")


@pytest.mark.slow
def test_criterion_7_ablation_pattern(ablation_runs):
    results, _, runtime = ablation_runs
    s = summary(results)
    c, a = s["contact"], s["in_air"]
    checks = {
        "CG contact >= 14/15": c["CG"]["success"] >= 14,
        "CG in-air >= 14/15": a["CG"]["success"] >= 14,
        "NTO contact ST on >= 3/5": c["NTO"]["objects_with_stall"] >= 3,
        "NC contact SL on >= 3/5": c["NC"]["objects_with_slip"] >= 3,
        "NOA fails in contact": c["NOA"]["success"] < c["NOA"]["episodes"],
        "NOA fails in air": a["NOA"]["success"] < a["NOA"]["episodes"],
        "NCB in-air >= 4/5": a["NCB"]["objects_all_success"] >= 4,
        "NCB contact fails on >= 2/5": c["NCB"]["objects_with_failure"] >= 2,
        "runtime < 10 min": runtime < 600.0,
    }
    failed = [k for k, v in checks.items() if not v]
    detail = (f"CG {c['CG']['success']}/15 contact, {a['CG']['success']}/15 in air; "
              f"NTO ST {c['NTO']['objects_with_stall']}/5; NC SL {c['NC']['objects_with_slip']}/5; "
              f"NOA failures {c['NOA']['episodes'] - c['NOA']['success']} contact, "
              f"{a['NOA']['episodes'] - a['NOA']['success']} air; "
              f"NCB {a['NCB']['objects_all_success']}/5 air, fails {c['NCB']['objects_with_failure']}/5 contact; "
              f"{runtime:.0f} s on one core")
    report(7, "qualitative ablation pattern", not failed, detail + (f"; failed: {failed}" if failed else ""))


# -- 8 -------------------------------------------------------------------------------

def test_criterion_8_thresholds():
    doc = load_document()
    echoes = [echo(scenario_config(doc, o, sc)) for o in SUITE_IDS for sc in ("contact", "in_air")]
    ok = all(e["success_deg"] == 5.0 and e["slip_mm"] == 20.0 and abs(e["rotation_cap_deg"] - 3.0) < 1e-12
             for e in echoes)
    e = echoes[0]
    report(8, "published thresholds", ok,
           f"success < {e['success_deg']} deg, SL > {e['slip_mm']} mm, cap {e['rotation_cap_deg']:.6g} deg/cycle "
           f"(all {len(echoes)} scenario configs)")


# -- 9 -------------------------------------------------------------------------------

@pytest.mark.slow
def test_criterion_9_demo():
    doc = load_document()
    assert doc.get("demo", {}).get("disturbance_pct", 20.0) <= 20.0
    outcomes = [run_two_phase_demo(doc, seed) for seed in range(5)]
    wins = sum(o.success for o in outcomes)
    labels = ", ".join("/".join(p.label for p in o.phases) for o in outcomes)
    report(9, "two-phase demo", wins >= 4, f"{wins}/5 seeds completed both phases with a 20% cable pull ({labels})")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
