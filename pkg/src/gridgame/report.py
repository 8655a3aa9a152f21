"""Report records and their canonical serialization.

Reports are plain dicts of JSON-native values (floats, strings, lists),
serialized with sorted keys and shortest-roundtrip float formatting, so a
given config and seed always produces byte-identical files.  Each figure
or table the study reproduces also gets a flat delimited file.
"""
from __future__ import annotations

import csv
import io
import json

import numpy as np


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.floating, float)):
        return float(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    return value


def to_canonical_json(record) -> str:
    return json.dumps(_jsonable(record), sort_keys=True, indent=2) + "\n"


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _line_label(key):
    return f"L{key[0]}{key[1]}"


def _market_record(outcome, net):
    return {
        "kind": outcome.kind,
        "dispatch": {g.name: float(x) for g, x in zip(net.generators, outcome.dispatch)},
        "load_delta": {f"bus{ld.bus}": float(x) for ld, x in zip(net.loads, outcome.load_delta)},
        "lambda": outcome.lam,
        "mu": {_line_label(ln.key()): float(m) for ln, m in zip(net.lines, outcome.mu)},
        "lmp": {f"bus{b}": float(v) for b, v in zip(net.buses, outcome.lmp)},
        "lmp_energy": outcome.lam,
        "lmp_congestion": {f"bus{b}": float(v) for b, v in zip(net.buses, outcome.lmp_congestion)},
        "congested": [_line_label(k) for k in outcome.congested],
        "flows": {_line_label(ln.key()): float(f) for ln, f in zip(net.lines, outcome.flows)},
        "objective": outcome.objective,
    }


def stage_records(pipe, stage):
    """JSON records for one stage."""
    cfg = pipe.config
    net = cfg.network
    data = pipe.stage(stage)
    if stage == "gsf":
        gsf = data["gsf"]
        return {
            "buses": list(net.buses),
            "reference_bus": net.reference_bus,
            "lines": [_line_label(k) for k in gsf.line_keys],
            "matrix": gsf.matrix,
        }
    if stage == "dcopf":
        return _market_record(data["outcome"], net)
    if stage == "attack":
        att, sens = data["attack"], data["sensitivity"]
        return {
            "target_line": list(cfg.target_line),
            "direction": cfg.direction,
            "sensitivity": sens.q,
            "group_up": [k + 1 for k in sens.group_up],
            "group_down": [k + 1 for k in sens.group_down],
            "attacked": [k + 1 for k in att.attacked],
            "z_a": att.z_a,
            "xi": att.xi,
            "objective": att.objective,
            "flow_change": att.flow_change,
        }
    if stage == "estimate":
        labels = cfg.plan.labels()
        return {
            "theta": {f"bus{b}": float(t) for b, t in
                      zip(net.buses, data["attacked"].theta)},
            "theta_clean": {f"bus{b}": float(t) for b, t in
                            zip(net.buses, data["clean"].theta)},
            "residual": {l: float(r) for l, r in
                         zip(labels, data["attacked"].residual)},
            "normalized_residual": {l: float(r) for l, r in
                                    zip(labels, data["attacked"].normalized_residual)},
            "gamma": cfg.gamma,
            "bdd_passed": data["bdd_passed"],
            "estimated_flows": {_line_label(ln.key()): float(f) for ln, f in
                                zip(net.lines, data["estimated_flows"])},
            "actual_flows": {_line_label(ln.key()): float(f) for ln, f in
                             zip(net.lines, data["actual_flows"])},
        }
    if stage == "expost":
        rec = {
            "real_time": _market_record(data["real_time"], net),
            "real_time_clean": _market_record(data["real_time_clean"], net),
        }
        if data["profit"] is not None:
            rec["profit"] = data["profit"]
        return rec
    if stage == "game":
        payoff, mixed = data["payoff"], data["mixed"]
        return {
            "defender_strategies": list(payoff.row_labels),
            "attacker_strategies": list(payoff.col_labels),
            "payoff": payoff.a,
            "pure_saddle": list(mixed.pure_saddle) if mixed.pure_saddle else None,
            "min_row_max": mixed.min_row_max,
            "max_col_min": mixed.max_col_min,
            "defender_mixed": mixed.defender,
            "attacker_mixed": mixed.attacker,
            "value": mixed.value,
            "attack_marginals": data["attack_marginals"],
            "defend_marginals": data["defend_marginals"],
        }
    if stage == "scenario":
        return scenario_report(pipe)
    raise ValueError(f"unknown stage {stage!r}")


def stage_report(pipe, stage):
    """Records plus flat tables for one stage: {filename: text}."""
    out = {f"{stage}.json": to_canonical_json(stage_records(pipe, stage))}
    out.update(stage_tables(pipe, stage))
    return out


def stage_tables(pipe, stage):
    cfg = pipe.config
    net = cfg.network
    data = pipe.stage(stage)
    tables = {}
    if stage == "gsf":
        gsf = data["gsf"]
        header = ["line"] + [f"bus{b}" for b in net.buses]
        rows = [[_line_label(k)] + [float(v) for v in gsf.matrix[i]]
                for i, k in enumerate(gsf.line_keys)]
        tables["gsf.csv"] = _csv_text(header, rows)
    elif stage == "estimate":
        rows = [[_line_label(ln.key()), float(a), float(e), float(e - a)]
                for ln, a, e in zip(net.lines, data["actual_flows"],
                                    data["estimated_flows"])]
        tables["flow_deltas.csv"] = _csv_text(
            ["line", "actual_mw", "estimated_mw", "delta_mw"], rows)
    elif stage == "expost":
        da = pipe.stage("dcopf")["outcome"]
        rows = [[f"bus{b}", float(da.lmp[i]),
                 float(data["real_time_clean"].lmp[i]),
                 float(data["real_time"].lmp[i])]
                for i, b in enumerate(net.buses)]
        tables["lmp_comparison.csv"] = _csv_text(
            ["bus", "lmp_day_ahead", "lmp_real_time_no_attack",
             "lmp_real_time_attack"], rows)
    elif stage == "game":
        payoff = data["payoff"]
        header = ["defend\\attack"] + list(payoff.col_labels)
        rows = [[payoff.row_labels[i]] + [float(v) for v in payoff.a[i]]
                for i in range(payoff.a.shape[0])]
        tables["payoff_matrix.csv"] = _csv_text(header, rows)
        rows = [[lbl, data["attack_marginals"][lbl], data["defend_marginals"][lbl]]
                for lbl in sorted(data["attack_marginals"],
                                  key=lambda s: int(s[1:]))]
        tables["strategy_probabilities.csv"] = _csv_text(
            ["measurement", "attack_probability", "defend_probability"], rows)
    elif stage == "scenario":
        for dep in ("gsf", "estimate", "expost", "game"):
            tables.update(stage_tables(pipe, dep))
    return tables


def scenario_report(pipe):
    """The full hierarchical scenario record."""
    rec = {"config": pipe.config.describe()}
    for stage in ("gsf", "dcopf", "attack", "estimate", "expost", "game"):
        rec[stage] = stage_records(pipe, stage)
    profit = pipe.stage("expost")["profit"]
    rec["profit"] = profit
    return rec
