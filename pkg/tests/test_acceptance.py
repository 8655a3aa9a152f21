"""Acceptance suite: every release gate in one module, one line per check.

Run with ``pytest tests/test_acceptance.py -s`` to see the PASS/FAIL line
for each criterion.  Tolerances are fixed here and nowhere else.
"""
import itertools
import json
import subprocess
import sys

import numpy as np

from gridgame import (compute_gsf, compute_sensitivity, detect_bad_data,
                      estimate_state, find_pure_saddle, solve_lp, solve_mixed,
                      synthesize_attack)
from gridgame.estimation import estimation_gain, residual_covariance
from gridgame.lp import LpProblem

from conftest import (ATTACKER_MIX, DEFENDER_MIX, FIXTURES, PAYOFF_TABLE,
                      SHIFT_FACTOR_TABLE)
from test_game import solve_2x2_reference
from test_lp import brute_force_optimum, _random_problem


def check(criterion, ok, detail):
    print(f"[acceptance {criterion:>2}] {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, f"criterion {criterion}: {detail}"


def test_01_shift_factor_reproduction(pjm):
    gsf = compute_gsf(pjm.config.network)
    worst = max(float(np.abs(gsf.row(*key) - np.array(vals)).max())
                for key, vals in SHIFT_FACTOR_TABLE.items())
    check(1, worst < 5e-3,
          f"all 30 shift factors within 5e-3 (worst {worst:.2e})")


def test_02_day_ahead_congestion_and_prices(pjm):
    net = pjm.config.network
    da = pjm.stage("dcopf")["outcome"]
    flow = float(da.flows[5])
    shadow = float(-da.mu[5])
    lmp4, lmp5 = da.lmp_at(net, 4), da.lmp_at(net, 5)
    ok = ((5, 4) in da.congested and abs(flow - 240.0) <= 1e-6
          and shadow > 0 and abs(lmp4 - 35.0) <= 0.01
          and abs(lmp5 - 20.0) <= 0.01)
    check(2, ok, f"L54 at {flow:.6f} MW shadow {shadow:.2f}, "
                 f"LMP4 {lmp4:.4f}, LMP5 {lmp5:.4f}")


def test_03_attack_reproduction(pjm):
    att = pjm.stage("attack")["attack"]
    z = att.z_a
    others = float(np.abs(np.delete(z, [0, 3])).max())
    p54 = float(pjm.stage("estimate")["estimated_flows"][5])
    ok = (abs(z[0] - 8.21) <= 0.3 and abs(z[3] - 8.09) <= 0.3
          and others == 0.0 and abs(p54 - 236.59) <= 0.5)
    check(3, ok, f"z_a = ({z[0]:.3f}, {z[3]:.3f}) MW on z1/z4, "
                 f"estimated L54 flow {p54:.2f} MW")


def test_04_stealth(pjm):
    cfg = pjm.config
    est = pjm.stage("estimate")
    passed = est["bdd_passed"]
    jac = pjm.jacobian()
    z0 = pjm.base_measurements()
    base = estimate_state(jac, cfg.plan.sigmas, z0)
    rng = np.random.default_rng(31)
    worst = 0.0
    for _ in range(100):
        c = rng.uniform(-3, 3, 4)
        shifted = estimate_state(jac, cfg.plan.sigmas, z0 + jac.h @ c)
        worst = max(worst, float(np.abs(shifted.residual - base.residual).max()))
    ok = passed and worst <= 1e-9
    check(4, ok, f"attack undetected at gamma={cfg.gamma}; "
                 f"stealth-subspace residual drift {worst:.2e} MW")


def test_05_real_time_repricing(pjm):
    net = pjm.config.network
    da = pjm.stage("dcopf")["outcome"]
    ex = pjm.stage("expost")
    rt, clean = ex["real_time"], ex["real_time_clean"]
    drift = float(np.abs(clean.lmp - da.lmp).max())
    ok = (rt.congested == () and abs(rt.lmp_at(net, 4) - 30.0) <= 0.01
          and abs(rt.lmp_at(net, 5) - 30.0) <= 0.01 and drift <= 0.01)
    check(5, ok, f"attacked RT prices {rt.lmp_at(net, 4):.4f}/"
                 f"{rt.lmp_at(net, 5):.4f}, clean RT vs DA drift {drift:.2e}")


def test_06_profit(pjm):
    profit = pjm.stage("expost")["profit"]
    check(6, abs(profit - 1500.0) <= 1.0, f"trade profit {profit:.4f} $/h")


def test_07_payoff_matrix(pjm):
    a = pjm.stage("game")["payoff"].a
    worst = float(np.abs(a - np.array(PAYOFF_TABLE)).max())
    diag = float(np.abs(np.diag(a)).max())
    check(7, worst <= 0.05 and diag == 0.0,
          f"all 36 payoff entries within 0.05 MW (worst {worst:.4f}), "
          f"zero diagonal")


def test_08_no_pure_saddle(pjm):
    a = pjm.stage("game")["payoff"].a
    mixed = pjm.stage("game")["mixed"]
    row_max = float(a.max(axis=1).min())
    col_min = float(a.min(axis=0).max())
    ok = (mixed.pure_saddle is None and find_pure_saddle(a) is None
          and abs(row_max - 3.21) <= 0.05 and col_min == 0.0)
    check(8, ok, f"no saddle; min(row max) {row_max:.4f}, "
                 f"max(col min) {col_min}")


def test_09_mixed_strategies(pjm):
    mixed = pjm.stage("game")["mixed"]
    gap = abs(mixed.defender_value - mixed.attacker_value)
    y_err = float(np.abs(mixed.defender - np.array(DEFENDER_MIX)).max())
    w_err = float(np.abs(mixed.attacker - np.array(ATTACKER_MIX)).max())
    if y_err < 0.02 and w_err < 0.02:
        ok = gap <= 1e-6
        detail = (f"LP values agree (gap {gap:.2e}); strategies within "
                  f"0.02 of the published mix (y {y_err:.4f}, w {w_err:.4f})")
    else:
        # alternative optimum escape hatch: verify the returned strategies
        # really achieve the same game value
        a = pjm.stage("game")["payoff"].a
        v = mixed.value
        ok = (gap <= 1e-6
              and float((mixed.defender @ a).max()) <= v + 1e-6
              and float((a @ mixed.attacker).min()) >= v - 1e-6)
        detail = (f"published mix missed (y {y_err:.4f}, w {w_err:.4f}) but "
                  f"returned strategies verified optimal at value {v:.6f} "
                  f"(alternative optimum recorded)")
    check(9, ok, detail)


def test_10_lp_and_game_oracles():
    rng = np.random.default_rng(20240517)
    worst_lp = 0.0
    for i in range(200):
        c, A, b, lo, hi = _random_problem(rng)
        sense = "min" if i % 2 == 0 else "max"
        sol = solve_lp(LpProblem(sense, c=c, a_ub=A, b_ub=b, lower=lo, upper=hi))
        expect = brute_force_optimum(sense, c, A, b, lo, hi)
        worst_lp = max(worst_lp, abs(sol.objective - expect))
    rng2 = np.random.default_rng(314159)
    worst_game = 0.0
    for _ in range(200):
        a = rng2.uniform(-10, 10, (2, 2))
        worst_game = max(worst_game,
                         abs(solve_mixed(a).value - solve_2x2_reference(a)))
    ok = worst_lp <= 1e-8 and worst_game <= 1e-9
    check(10, ok, f"200 LPs vs vertex enumeration (worst {worst_lp:.2e}), "
                  f"200 2x2 games vs closed form (worst {worst_game:.2e})")


def test_11_estimator_sanity(pjm):
    jac = pjm.jacobian()
    sig = pjm.config.plan.sigmas
    rng = np.random.default_rng(3)
    theta = rng.uniform(-5, 5, 4)
    res = estimate_state(jac, sig, jac.h @ theta)
    recovered = np.array([res.theta[jac.buses.index(b)] for b in jac.state_buses])
    rec_err = float(np.abs(recovered - theta).max())
    gain_err = float(np.abs(estimation_gain(jac, sig) @ jac.h - np.eye(4)).max())
    S = np.eye(len(sig)) - jac.h @ estimation_gain(jac, sig)
    draws = np.random.default_rng(0).normal(0.0, sig, size=(10000, len(sig)))
    cov_emp = np.cov(draws @ S.T, rowvar=False)
    cov_an = residual_covariance(jac, sig)
    d = np.outer(sig, sig)
    rel = float(np.linalg.norm(cov_emp / d - cov_an / d)
                / np.linalg.norm(cov_an / d))
    ok = rec_err <= 1e-9 and gain_err <= 1e-9 and rel <= 0.10
    check(11, ok, f"recovery {rec_err:.2e}, gain identity {gain_err:.2e}, "
                  f"covariance rel err {rel:.3f} over 10k draws")


def test_12_determinism(tmp_path):
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        res = subprocess.run(
            [sys.executable, "-m", "gridgame.cli", "scenario",
             "--config", str(FIXTURES / "pjm5.toml"),
             "--out", str(out), "--seed", "0"],
            capture_output=True, text=True)
        assert res.returncode == 0, res.stderr
        outs.append(out)
    names = sorted(p.name for p in outs[0].iterdir())
    identical = all((outs[0] / n).read_bytes() == (outs[1] / n).read_bytes()
                    for n in names)
    check(12, identical and len(names) >= 6,
          f"{len(names)} report files byte-identical across reruns")
