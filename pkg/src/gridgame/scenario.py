"""Scenario configuration and staged pipeline orchestration.

A scenario binds one fixture (network + measurement plan + [scenario]
settings) to the full study: day-ahead clearing, stealth-attack synthesis,
state estimation, ex-post repricing, trade profit, and the measurement
game.  Stages are pure functions of the config; results are cached per run
so composite stages reuse upstream ones.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import estimation, grid
from .attack import compute_sensitivity, synthesize_attack
from .game import GameSpec, build_payoff_matrix, solve_mixed, strategy_marginals
from .grid import FixtureError, GridNetwork
from .market import (congestion_price, solve_day_ahead, solve_real_time,
                     virtual_trade_profit)

STAGES = ("gsf", "dcopf", "attack", "estimate", "expost", "game", "scenario")

STAGE_DEPS = {
    "gsf": (),
    "dcopf": ("gsf",),
    "attack": ("gsf",),
    "estimate": ("gsf", "dcopf", "attack"),
    "expost": ("gsf", "dcopf", "attack", "estimate"),
    "game": ("gsf", "attack"),
    "scenario": ("gsf", "dcopf", "attack", "estimate", "expost", "game"),
}


@dataclass
class ScenarioConfig:
    name: str
    network: GridNetwork
    plan: estimation.MeasurementPlan
    target_line: tuple
    direction: str
    xi: np.ndarray               # per measurement
    z_max: float
    attackable: tuple            # 0-based measurement indices
    n_attack: int
    n_defend: int
    attack_set: tuple            # the single-shot play: channels attacked
    defend_set: tuple            # channels the defender protects that round
    gamma: float                 # BDD threshold actually in effect
    gamma_is_default: bool
    tol_cl: float
    trade_buy_bus: int = None
    trade_sell_bus: int = None
    trade_quantity: float = 0.0
    seed: int = 0
    noise: bool = False

    def describe(self):
        return {
            "fixture": self.name,
            "target_line": list(self.target_line),
            "direction": self.direction,
            "xi": [float(v) for v in self.xi],
            "z_max": self.z_max,
            "attackable": [k + 1 for k in self.attackable],
            "n_attack": self.n_attack,
            "n_defend": self.n_defend,
            "attack_set": [k + 1 for k in self.attack_set],
            "defend_set": [k + 1 for k in self.defend_set],
            "gamma": self.gamma,
            "tol_cl": self.tol_cl,
            "trade": {"buy_bus": self.trade_buy_bus,
                      "sell_bus": self.trade_sell_bus,
                      "quantity": self.trade_quantity},
            "seed": self.seed,
            "noise": self.noise,
        }


def load_scenario(path, seed=None) -> ScenarioConfig:
    """Load a fixture document and validate its [scenario] section."""
    doc = grid.load_fixture(path)
    net = grid.load_network(doc)
    plan = estimation.load_measurements(doc, net)
    sc = doc.get("scenario", {})

    target = tuple(sc.get("target_line", ()))
    if len(target) != 2:
        raise FixtureError("scenario.target_line", "expected [from_bus, to_bus]")
    try:
        net.line_index(*target)
    except KeyError:
        raise FixtureError("scenario.target_line", f"no line {target}")
    direction = sc.get("direction", "increase")
    if direction not in ("increase", "decrease"):
        raise FixtureError("scenario.direction", f"got {direction!r}")

    xi_raw = sc.get("xi", 0.0)
    if isinstance(xi_raw, (int, float)):
        xi = np.full(plan.m, float(xi_raw))
    else:
        xi = np.asarray([float(v) for v in xi_raw])
        if xi.size != plan.m:
            raise FixtureError("scenario.xi",
                               f"{xi.size} entries for {plan.m} measurements")
    if np.any(xi < 0):
        raise FixtureError("scenario.xi", "stealth budget must be >= 0")
    z_max = float(sc.get("z_max", 50.0))
    if z_max < 0:
        raise FixtureError("scenario.z_max", "must be >= 0")

    attackable = tuple(sorted(int(k) - 1 for k in sc.get("attackable", ())))
    secure = set(plan.secure_set)
    for k in attackable:
        if not 0 <= k < plan.m:
            raise FixtureError("scenario.attackable", f"index z{k + 1} out of range")
        if k in secure:
            raise FixtureError("scenario.attackable",
                               f"z{k + 1} is flagged secure in [measurements]")
    n_attack = int(sc.get("n_attack", 1))
    n_defend = int(sc.get("n_defend", 1))
    if attackable and not (1 <= n_attack <= len(attackable)
                           and 1 <= n_defend <= len(attackable)):
        raise FixtureError("scenario", "n_attack/n_defend out of range")

    def _subset(key, default):
        vals = tuple(sorted(int(k) - 1 for k in sc.get(key, default)))
        for k in vals:
            if k not in attackable:
                raise FixtureError(f"scenario.{key}",
                                   f"z{k + 1} is not in the attackable set")
        return vals

    attack_set = _subset("attack_set", [k + 1 for k in attackable])
    defend_set = _subset("defend_set", [])

    jac = estimation.build_jacobian(net, plan)
    gamma = sc.get("gamma")
    gamma_is_default = gamma is None
    if gamma is None:
        gamma = estimation.default_gamma(jac, plan.sigmas)

    return ScenarioConfig(
        name=doc.get("network", {}).get("name", "fixture"),
        network=net, plan=plan, target_line=target, direction=direction,
        xi=xi, z_max=z_max, attackable=attackable,
        n_attack=n_attack, n_defend=n_defend,
        attack_set=attack_set, defend_set=defend_set,
        gamma=float(gamma), gamma_is_default=gamma_is_default,
        tol_cl=float(sc.get("tol_cl", 0.5)),
        trade_buy_bus=sc.get("trade_buy_bus"),
        trade_sell_bus=sc.get("trade_sell_bus"),
        trade_quantity=float(sc.get("trade_quantity", 0.0)),
        seed=int(sc.get("seed", 0) if seed is None else seed),
        noise=bool(sc.get("noise", False)))


@dataclass
class Pipeline:
    """Runs pipeline stages on one scenario, caching intermediate results."""

    config: ScenarioConfig
    _cache: dict = field(default_factory=dict)

    # -- low-level shared pieces ------------------------------------------
    def jacobian(self):
        if "jac" not in self._cache:
            self._cache["jac"] = estimation.build_jacobian(
                self.config.network, self.config.plan)
        return self._cache["jac"]

    def gain(self):
        if "gain" not in self._cache:
            self._cache["gain"] = estimation.estimation_gain(
                self.jacobian(), self.config.plan.sigmas)
        return self._cache["gain"]

    def gain_padded(self):
        return self.jacobian().pad_states(self.gain())

    def sensitivity(self):
        if "sens" not in self._cache:
            self._cache["sens"] = compute_sensitivity(
                self.gain_padded(), self.config.network, *self.config.target_line)
        return self._cache["sens"]

    def measurement_readings(self, dispatch):
        """Noiseless channel readings implied by a generation dispatch."""
        net, plan = self.config.network, self.config.plan
        inj = -net.demand_vector()
        for gi, g in enumerate(net.generators):
            inj[net.bus_index(g.bus)] += dispatch[gi]
        theta, flows, _ = grid.dc_power_flow(net, inj)
        z = np.zeros(plan.m)
        for i, d in enumerate(plan.defs):
            if d.kind == "line_flow":
                k, sign = net.line_index(d.from_bus, d.to_bus)
                z[i] = sign * flows[k]
            else:
                z[i] = inj[net.bus_index(d.bus)]
        return z

    def base_measurements(self):
        if "z0" not in self._cache:
            day_ahead = self.stage("dcopf")["outcome"]
            z0 = self.measurement_readings(day_ahead.dispatch)
            if self.config.noise:
                rng = np.random.default_rng(self.config.seed)
                z0 = z0 + rng.normal(0.0, self.config.plan.sigmas)
            self._cache["z0"] = z0
        return self._cache["z0"]

    # -- stages ------------------------------------------------------------
    def stage(self, name):
        if name not in STAGES:
            raise ValueError(f"unknown stage {name!r}; choose from {STAGES}")
        if name not in self._cache:
            self._cache[name] = getattr(self, f"_stage_{name}")()
        return self._cache[name]

    def _stage_gsf(self):
        gsf = grid.compute_gsf(self.config.network)
        return {"gsf": gsf}

    def _stage_dcopf(self):
        gsf = self.stage("gsf")["gsf"]
        outcome = solve_day_ahead(self.config.network, gsf)
        return {"outcome": outcome}

    def _stage_attack(self):
        cfg = self.config
        effective = tuple(k for k in cfg.attack_set if k not in cfg.defend_set)
        att = synthesize_attack(
            self.sensitivity(), self.jacobian().h, self.gain(),
            cfg.xi, secure=frozenset(cfg.plan.secure_set) | set(cfg.defend_set),
            attackable=effective,
            sigmas=cfg.plan.sigmas, direction=cfg.direction, z_max=cfg.z_max)
        return {"attack": att, "sensitivity": self.sensitivity()}

    def _stage_estimate(self):
        cfg = self.config
        att = self.stage("attack")["attack"]
        z0 = self.base_measurements()
        jac = self.jacobian()
        clean = estimation.estimate_state(jac, cfg.plan.sigmas, z0)
        attacked = estimation.estimate_state(jac, cfg.plan.sigmas, z0 + att.z_a)
        bdd = estimation.detect_bad_data(attacked, cfg.gamma)
        net = self.config.network
        est_flows = np.array([
            estimation.estimated_line_flow(attacked.m_padded, net,
                                           ln.from_bus, ln.to_bus, attacked.z)
            for ln in net.lines])
        clean_flows = np.array([
            estimation.estimated_line_flow(clean.m_padded, net,
                                           ln.from_bus, ln.to_bus, clean.z)
            for ln in net.lines])
        actual = self.stage("dcopf")["outcome"].flows
        return {"clean": clean, "attacked": attacked, "bdd_passed": bdd,
                "estimated_flows": est_flows, "clean_flows": clean_flows,
                "actual_flows": actual}

    def _stage_expost(self):
        cfg = self.config
        gsf = self.stage("gsf")["gsf"]
        day_ahead = self.stage("dcopf")["outcome"]
        est = self.stage("estimate")
        rt_attacked = solve_real_time(cfg.network, gsf, est["estimated_flows"],
                                      day_ahead, tol_cl=cfg.tol_cl)
        rt_clean = solve_real_time(cfg.network, gsf, est["clean_flows"],
                                   day_ahead, tol_cl=cfg.tol_cl)
        profit = None
        if cfg.trade_buy_bus is not None and cfg.trade_sell_bus is not None:
            profit = virtual_trade_profit(
                day_ahead, rt_attacked, cfg.network,
                cfg.trade_buy_bus, cfg.trade_sell_bus, cfg.trade_quantity)
        return {"real_time": rt_attacked, "real_time_clean": rt_clean,
                "profit": profit}

    def _stage_game(self):
        cfg = self.config
        spec = GameSpec(insecure=cfg.attackable, n_attack=cfg.n_attack,
                        n_defend=cfg.n_defend)
        payoff = build_payoff_matrix(
            spec, self.sensitivity(), self.jacobian().h, self.gain(),
            cfg.xi, secure=cfg.plan.secure_set, sigmas=cfg.plan.sigmas,
            direction=cfg.direction, z_max=cfg.z_max)
        mixed = solve_mixed(payoff.a)
        attack_p, defend_p = strategy_marginals(spec, mixed)
        return {"spec": spec, "payoff": payoff, "mixed": mixed,
                "attack_marginals": attack_p, "defend_marginals": defend_p}

    def _stage_scenario(self):
        return {name: self.stage(name) for name in STAGES[:-1]}


def run_stage(config: ScenarioConfig, stage: str):
    """Execute one pipeline stage (dependencies included) and return its
    report records."""
    from .report import stage_report
    pipe = Pipeline(config)
    pipe.stage(stage)
    return stage_report(pipe, stage)


def run_scenario(config: ScenarioConfig):
    """Execute the full pipeline and return the scenario report."""
    from .report import scenario_report
    pipe = Pipeline(config)
    pipe.stage("scenario")
    return scenario_report(pipe)
