"""Flow sensitivities and stealth-attack synthesis."""
import numpy as np
import pytest

from gridgame import compute_sensitivity, flow_change, synthesize_attack
from gridgame.attack import AttackSynthesisError
from gridgame.estimation import estimation_gain, estimate_state, detect_bad_data

from conftest import SENSITIVITY_ABS


def test_sensitivity_magnitudes_match_published(pjm):
    # published vector lists z1..z11 (one all-but-zero channel omitted);
    # signs depend on meter orientation, magnitudes do not
    sens = compute_sensitivity(pjm.gain_padded(), pjm.config.network, 4, 5)
    got = np.abs(sens.q[:11])
    assert np.abs(got - np.array(SENSITIVITY_ABS)).max() < 5e-3
    assert abs(sens.q[11]) < 1e-9


def test_sensitivity_groups(pjm):
    # z7, z8, z9 fall on the flow-lowering side for the 4->5 orientation
    sens = compute_sensitivity(pjm.gain_padded(), pjm.config.network, 4, 5)
    for k in (6, 7, 8):
        assert k in sens.group_down
    # the distrusted channels influence nothing and belong to neither group
    for k in (2, 11):
        assert k not in sens.group_up and k not in sens.group_down


def test_sensitivity_degenerate_line(pjm_config):
    # identical gain rows at both endpoints give a null sensitivity
    net = pjm_config.network
    m_padded = np.zeros((5, 12))
    m_padded[net.bus_index(5)] = 0.25
    m_padded[net.bus_index(4)] = 0.25
    sens = compute_sensitivity(m_padded, net, 5, 4)
    assert np.abs(sens.q).max() == 0.0
    assert sens.group_up == () and sens.group_down == ()


def test_orientation_flip_negates_q(pjm):
    a = compute_sensitivity(pjm.gain_padded(), pjm.config.network, 5, 4)
    b = compute_sensitivity(pjm.gain_padded(), pjm.config.network, 4, 5)
    assert np.allclose(a.q, -b.q, atol=1e-15)
    assert a.group_up == b.group_down and a.group_down == b.group_up


def test_published_attack_vector(pjm):
    att = pjm.stage("attack")["attack"]
    z = att.z_a
    assert z[0] == pytest.approx(8.21, abs=0.3)
    assert z[3] == pytest.approx(8.09, abs=0.3)
    others = np.delete(z, [0, 3])
    assert np.abs(others).max() == 0.0


def test_empty_attackable_set(pjm):
    cfg = pjm.config
    att = synthesize_attack(pjm.sensitivity(), pjm.jacobian().h, pjm.gain(),
                            cfg.xi, secure=cfg.plan.secure_set, attackable=(),
                            sigmas=cfg.plan.sigmas, direction=cfg.direction)
    assert np.abs(att.z_a).max() == 0.0
    assert att.flow_change == 0.0


def test_attack_on_secure_channel_rejected(pjm):
    cfg = pjm.config
    with pytest.raises(ValueError):
        synthesize_attack(pjm.sensitivity(), pjm.jacobian().h, pjm.gain(),
                          cfg.xi, secure=cfg.plan.secure_set,
                          attackable=(1,), sigmas=cfg.plan.sigmas)


def test_negative_budget_infeasible(pjm):
    cfg = pjm.config
    with pytest.raises(AttackSynthesisError):
        synthesize_attack(pjm.sensitivity(), pjm.jacobian().h, pjm.gain(),
                          np.full(12, -1.0), secure=cfg.plan.secure_set,
                          attackable=(0,), sigmas=cfg.plan.sigmas)


def test_twobus_attack_against_grid_search(twobus_config):
    """The one-variable LP agrees with brute-force search to 0.02."""
    from gridgame import Pipeline
    pipe = Pipeline(twobus_config)
    cfg = pipe.config
    sens = pipe.sensitivity()
    att = synthesize_attack(sens, pipe.jacobian().h, pipe.gain(), cfg.xi,
                            secure=cfg.plan.secure_set, attackable=(0,),
                            sigmas=cfg.plan.sigmas, direction="increase",
                            z_max=cfg.z_max)
    h, m = pipe.jacobian().h, pipe.gain()
    smap = np.eye(2) - h @ m
    sign = 1.0 if 0 in sens.group_up else -1.0
    best_obj, best_change = 0.0, 0.0
    for step in range(-2000, 2001):
        z = np.array([step * 0.01, 0.0])
        if np.abs(smap @ z).max() <= cfg.xi[0] + 1e-12:
            if sign * z[0] > best_obj:
                best_obj = sign * z[0]
                best_change = float(sens.q @ z)
    assert att.objective == pytest.approx(best_obj, abs=0.02)
    assert att.flow_change == pytest.approx(best_change, abs=0.02)


def test_budget_monotonicity(pjm):
    cfg = pjm.config
    prev = -1.0
    for scale in (0.5, 1.0, 2.0, 4.0):
        att = synthesize_attack(pjm.sensitivity(), pjm.jacobian().h, pjm.gain(),
                                cfg.xi * scale, secure=cfg.plan.secure_set,
                                attackable=(0, 3), sigmas=cfg.plan.sigmas,
                                direction="decrease", z_max=cfg.z_max)
        assert att.objective >= prev - 1e-9
        prev = att.objective


def test_zero_budget_attack(pjm):
    cfg = pjm.config
    att = synthesize_attack(pjm.sensitivity(), pjm.jacobian().h, pjm.gain(),
                            np.zeros(12), secure=cfg.plan.secure_set,
                            attackable=(0, 3), sigmas=cfg.plan.sigmas,
                            direction="decrease", z_max=cfg.z_max)
    assert att.objective >= -1e-9


def test_synthesized_attack_always_stealthy(pjm):
    """Residual-budget feasibility and detector evasion at gamma >= max xi."""
    cfg = pjm.config
    jac = pjm.jacobian()
    z0 = pjm.base_measurements()
    smap = np.eye(cfg.plan.m) - jac.h @ pjm.gain()
    rng = np.random.default_rng(21)
    pairs = [(0, 3), (0, 4), (3, 9), (4, 9), (0,), (9,)]
    for sel in pairs:
        att = synthesize_attack(pjm.sensitivity(), jac.h, pjm.gain(), cfg.xi,
                                secure=cfg.plan.secure_set, attackable=sel,
                                sigmas=cfg.plan.sigmas, direction="decrease",
                                z_max=cfg.z_max)
        normalized = np.abs(smap @ att.z_a) / cfg.plan.sigmas
        assert (normalized <= cfg.xi + 1e-6).all()
        res = estimate_state(jac, cfg.plan.sigmas, z0 + att.z_a)
        assert detect_bad_data(res, float(cfg.xi.max()) + 1e-6)


def test_flow_change_identities(pjm):
    sens = pjm.sensitivity()
    assert flow_change(sens, np.zeros(12)) == 0.0
    # attacks in the column space of H move the estimate by exactly Q' H c
    jac = pjm.jacobian()
    rng = np.random.default_rng(17)
    c = rng.uniform(-2, 2, 4)
    z_a = jac.h @ c
    assert flow_change(sens, z_a) == pytest.approx(float(sens.q @ z_a), abs=1e-12)
