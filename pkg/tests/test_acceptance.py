"""Acceptance criteria, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py`` (lines appear in the terminal
summary) or ``python tests/test_acceptance.py``.
"""
import json
import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))
import conftest  # noqa: E402

from sfrj import ann  # noqa: E402
from sfrj.atmosphere import freestream_totals  # noqa: E402
from sfrj.cli import main as cli_main  # noqa: E402
from sfrj.equilibrium import (  # noqa: E402
    EquilibriumProblem, element_moles, equilibrate_hp, fuel_air_reactants, hp_combustion,
)
from sfrj.harness import (  # noqa: E402
    SCENARIOS, LoopConfig, final_quarter_mean_abs_z, hyperparameter_sweep, run_closed_loop,
    sweep_summary, trend_report,
)
from sfrj.inlet import R0_MAX, R0_MIN  # noqa: E402
from sfrj.rcac import RcacConfig, RcacState, batch_minimizer, rcac_update  # noqa: E402
from sfrj.thermo import mass_enthalpy  # noqa: E402

ATM = 101325.0


def report(num, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {num}: {detail}"
    conftest.ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def surrogate():
    data = ann.generate_dataset(20)
    res = ann.train(data, ann.TrainConfig())
    return data, res


def test_criterion_1_freestream_totals():
    free = freestream_totals(3.25, 30000.0)
    t0 = time.perf_counter()
    for _ in range(100):
        freestream_totals(3.25, 30000.0)
    per_call = (time.perf_counter() - t0) / 100
    ratio = free.Tt0 / free.T0
    ok = 63040.0 <= free.Pt0 <= 64314.0 and abs(ratio - 3.1125) < 1e-12 and per_call < 1e-3
    report(1, ok, f"Pt0 = {free.Pt0:.1f} Pa (band 63040..64314), Tt0/T0 = {ratio:.6f}, "
                  f"{per_call * 1e6:.1f} us/call")


def test_criterion_2_rls_batch_equivalence():
    t0 = time.perf_counter()
    worst = 0.0
    for seq in range(30):
        rng = np.random.default_rng(1000 + seq)
        cfg = RcacConfig(p=10 ** rng.uniform(-4, 0), Rz=rng.uniform(0.5, 2.0),
                         filter_coeffs=tuple(rng.normal(size=rng.integers(1, 4))),
                         theta0=tuple(rng.normal(size=3)))
        n = 50
        z, u, phi = rng.normal(size=n), rng.normal(size=n), rng.normal(size=(n, 3))
        N = cfg.performance_filter
        phi_f, u_f = np.zeros((n, 3)), np.zeros(n)
        for k in range(n):
            for i, Ni in enumerate(N, start=1):
                if k - i >= 0:
                    phi_f[k] += Ni * phi[k - i]
                    u_f[k] += Ni * u[k - i]
        s = RcacState.initial(cfg)
        for k in range(n):
            s = rcac_update(s, cfg, z[k], u[k], phi[k])
            ref = batch_minimizer(cfg, z[:k + 1], phi_f[:k + 1], u_f[:k + 1])
            worst = max(worst, np.linalg.norm(s.theta - ref) / max(np.linalg.norm(ref), 1e-300))
    elapsed = time.perf_counter() - t0
    report(2, worst < 1e-8 and elapsed < 1.0,
           f"max relative error {worst:.2e} over 30 x 50 prefixes (< 1e-8), {elapsed:.2f} s")


def test_criterion_3_equilibrium_conservation():
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    worst_el = worst_h = 0.0
    failures = 0
    for _ in range(200):
        phi, P, T2 = rng.uniform(0.2, 1.5), rng.uniform(0.5, 5.0) * ATM, rng.uniform(400, 900)
        moles = fuel_air_reactants(phi)
        h = mass_enthalpy(moles, T2)
        try:
            res = equilibrate_hp(EquilibriumProblem.fixed_H(moles, P, h))
        except Exception:
            failures += 1
            continue
        b_in, b_out = element_moles(moles), element_moles(res.moles)
        worst_el = max(worst_el, max(abs(b_out[e] - v) / v for e, v in b_in.items()))
        worst_h = max(worst_h, abs(res.h - h) / abs(h))
    T = [hp_combustion(phi, 600.0, 2 * ATM).temperature for phi in np.linspace(0.2, 1.0, 5)]
    monotone = bool(np.all(np.diff(T) > 0))
    elapsed = time.perf_counter() - t0
    ok = failures == 0 and worst_el < 1e-8 and worst_h < 1e-6 and monotone and elapsed < 30
    report(3, ok, f"{200 - failures}/200 converged, element err {worst_el:.1e}, enthalpy err "
                  f"{worst_h:.1e}, lean T_eq monotone {monotone}, {elapsed:.1f} s")


def _fd_error(model, s, t, eps=1e-6):
    _, gW, gb = model.loss_and_grads(s, t)
    analytic = np.concatenate([g.ravel() for g in gW + gb])
    numeric = []
    for p in model.weights + model.biases:
        flat = p.reshape(-1)
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + eps
            lp = model.loss_and_grads(s, t)[0]
            flat[i] = old - eps
            lm = model.loss_and_grads(s, t)[0]
            flat[i] = old
            numeric.append((lp - lm) / (2 * eps))
    numeric = np.array(numeric)
    return np.max(np.abs(analytic - numeric)) / max(np.max(np.abs(numeric)), 1e-12)


def test_criterion_4_mlp_correctness():
    t0 = time.perf_counter()
    worst = 0.0
    for act in ann.ACTIVATIONS:
        for net in range(10):
            rng = np.random.default_rng(40 + net)
            hidden = int(rng.integers(2, 8))
            m = ann.MlpModel.init((4, hidden, 1), act, seed=net)
            m.biases = [rng.normal(scale=0.1, size=b.shape) for b in m.biases]
            s, t = rng.uniform(size=(16, 4)), rng.uniform(size=16)
            worst = max(worst, _fd_error(m, s, t))
    data = ann.generate_dataset(4)
    cfg = ann.TrainConfig(epochs=5, batch_size=16)
    a, b = ann.train(data, cfg), ann.train(data, cfg)
    same = all(np.array_equal(x, y) for x, y in zip(a.model.weights + a.model.biases,
                                                    b.model.weights + b.model.biases))
    same = same and a.train_loss == b.train_loss and a.test_loss == b.test_loss
    elapsed = time.perf_counter() - t0
    report(4, worst < 1e-5 and same and elapsed < 10,
           f"max FD gradient error {worst:.1e} over {10 * len(ann.ACTIVATIONS)} networks, "
           f"bit-reproducible {same}, {elapsed:.1f} s")


def test_criterion_5_surrogate_quality():
    t0 = time.perf_counter()
    data = ann.generate_dataset(20)
    res = ann.train(data, ann.TrainConfig())
    elapsed = time.perf_counter() - t0
    mse = res.test_loss[-1]
    pred = res.model.predict(data.X[res.test_idx])
    rel = np.median(np.abs(pred - data.y[res.test_idx]) / data.y[res.test_idx])
    report(5, len(data) == 8000 and mse < 1e-3 and elapsed < 300,
           f"{len(data)} rows, normalized test MSE {mse:.2e} (< 1e-3), median relative thrust "
           f"error {rel:.1%}, {elapsed:.1f} s")


def test_criterion_6_step_following(surrogate):
    _, res = surrogate
    t0 = time.perf_counter()
    rec = run_closed_loop(LoopConfig(), SCENARIOS["step"], res.model)
    elapsed = time.perf_counter() - t0
    z = np.abs(rec["z_N"])
    above = np.nonzero(z >= 2.0)[0]
    entry = int(above[-1]) + 1 if above.size else 0
    finite = all(np.all(np.isfinite(v)) for v in rec.columns.values())
    in_bounds = bool(np.all((rec["r0_m"] >= R0_MIN) & (rec["r0_m"] <= R0_MAX)))
    ok = rec.reason == "burnout" and entry < len(rec) and finite and in_bounds and elapsed < 120
    report(6, ok, f"initial |z| {z[0]:.1f} N, |z| < 2 N from step {entry} "
                  f"({entry * 0.01:.1f} s) to {rec.reason} at step "
                  f"{len(rec)}, r0 in bounds {in_bounds}, finite {finite}, "
                  f"true thrust at end {rec['thrust_true_N'][-1]:.1f} N, {elapsed:.1f} s")
    # diagnostic only: the filter applied literally to the u -> z path
    lit = run_closed_loop(LoopConfig(duration=60.0, rcac=RcacConfig(filter_target="performance")),
                          SCENARIOS["step"], res.model)
    print(f"  diagnostic, literal filter sign: final |z| {abs(lit['z_N'][-1]):.1f} N, "
          f"{lit.saturated_steps}/{len(lit)} steps saturated")


def test_criterion_7_scenarios(surrogate):
    _, res = surrogate
    t0 = time.perf_counter()
    parts, ok = [], True
    for name in ("doublet", "ramp", "harmonic"):
        signal = SCENARIOS[name]
        rec = run_closed_loop(LoopConfig(), signal, res.model)
        err = final_quarter_mean_abs_z(rec)
        finite = all(np.all(np.isfinite(v)) for v in rec.columns.values())
        ok &= finite and err < 0.05 * signal.scale
        parts.append(f"{name} {err:.3f} N (limit {0.05 * signal.scale:.2f})")
    elapsed = time.perf_counter() - t0
    report(7, ok and elapsed < 360, "final-quarter mean |z|: " + ", ".join(parts) +
           f", {elapsed:.1f} s")


def test_criterion_8_sweep(surrogate):
    _, res = surrogate
    t0 = time.perf_counter()
    results = hyperparameter_sweep(LoopConfig(), SCENARIOS["step"], res.model)
    elapsed = time.perf_counter() - t0
    bounded = all(r.record is not None and not r.error
                  and all(np.all(np.isfinite(v)) for v in r.record.columns.values())
                  and np.all((r.record["r0_m"] >= R0_MIN) & (r.record["r0_m"] <= R0_MAX))
                  for r in results)
    summary = sweep_summary(results)
    for row in summary:
        print(f"  n={row['n']:<4g} p={row['p']:<6g} overshoot {row['overshoot_N']:8.3f} N  "
              f"settling step {row['settling_step']}")
    for line in trend_report(results):
        print("  " + line)
    report(8, len(results) == 12 and bounded and len(summary) == 12 and elapsed < 900,
           f"{len(results)} runs complete and bounded {bounded}, {elapsed:.1f} s")


def test_criterion_9_cli_determinism(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"ann": {"points_per_axis": 6, "train": {"epochs": 10}},
                               "loop": {"duration": 3.0}}))
    commands = (["gen-data"], ["train-ann"], ["eval-ann"], ["sweep-ann", "--no-plots"],
                ["simulate", "--scenario", "ramp"], ["simulate", "--feedback", "true"],
                ["sweep-rcac", "--no-plots"])
    snapshots = []
    for run in ("a", "b"):
        out = tmp_path / run
        for cmd in commands:
            assert cli_main([*cmd, "--config", str(cfg), "--out", str(out), "--seed", "7"]) == 0
        snapshots.append({p.name: p.read_bytes() for p in sorted(out.glob("*.csv"))})
    same = snapshots[0].keys() == snapshots[1].keys() and all(
        snapshots[0][k] == snapshots[1][k] for k in snapshots[0])
    report(9, same and len(snapshots[0]) > 10,
           f"{len(snapshots[0])} CSV files from {len(commands)} commands byte-identical {same}")


if __name__ == "__main__":
    code = pytest.main([__file__, "-q"])
    print("\n".join(conftest.ACCEPTANCE_LINES))
    sys.exit(code)
