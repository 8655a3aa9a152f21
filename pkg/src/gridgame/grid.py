"""Network model, fixture loading, DC power flow and shift-factor computation.

Unit conventions (documented in the fixture schema): line reactances are in
per-unit on the system MVA base, flows and limits in MW, and bus angles in
base-scaled radians so that flow = (theta_i - theta_j) / X holds verbatim.
For the shipped 100 MVA fixtures, physical radians = theta / 100.
"""
from __future__ import annotations

import sys
from dataclasses import dataclass

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class FixtureError(ValueError):
    """Fixture document violates the schema; ``path`` names the bad field."""

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")


@dataclass(frozen=True)
class Line:
    from_bus: int
    to_bus: int
    reactance: float     # per-unit
    limit: float         # MW

    def key(self):
        return (self.from_bus, self.to_bus)


@dataclass(frozen=True)
class Generator:
    name: str
    bus: int
    cost: float          # $/MWh, day-ahead offer
    cost_rt: float       # $/MWh, real-time offer
    g_min: float
    g_max: float
    qualified: bool = True
    delta_min: float = -0.1
    delta_max: float = 0.1


@dataclass(frozen=True)
class Load:
    bus: int
    demand: float        # MW
    dispatchable: bool = False
    delta_min: float = 0.0
    delta_max: float = 0.0


@dataclass(frozen=True)
class GridNetwork:
    buses: tuple
    reference_bus: int
    lines: tuple
    generators: tuple
    loads: tuple

    @property
    def n_buses(self):
        return len(self.buses)

    def bus_index(self, bus):
        try:
            return self.buses.index(bus)
        except ValueError:
            raise KeyError(f"unknown bus {bus}") from None

    def line_index(self, from_bus, to_bus):
        """Index of the line between two buses; sign -1 if stored reversed."""
        for k, ln in enumerate(self.lines):
            if ln.key() == (from_bus, to_bus):
                return k, 1.0
            if ln.key() == (to_bus, from_bus):
                return k, -1.0
        raise KeyError(f"no line between buses {from_bus} and {to_bus}")

    def demand_vector(self):
        d = np.zeros(self.n_buses)
        for ld in self.loads:
            d[self.bus_index(ld.bus)] += ld.demand
        return d

    def total_demand(self):
        return float(sum(ld.demand for ld in self.loads))


@dataclass(frozen=True)
class GsfMatrix:
    """Line-by-bus injection sensitivities, reference bus as slack."""

    matrix: np.ndarray           # (n_lines, n_buses)
    line_keys: tuple             # (from, to) per row
    buses: tuple
    reference_bus: int

    def row(self, from_bus, to_bus):
        for k, key in enumerate(self.line_keys):
            if key == (from_bus, to_bus):
                return self.matrix[k]
            if key == (to_bus, from_bus):
                return -self.matrix[k]
        raise KeyError(f"no line between buses {from_bus} and {to_bus}")


def load_fixture(path):
    """Parse a TOML fixture file into a plain document (dict)."""
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def _require(doc, key, path):
    if key not in doc:
        raise FixtureError(f"{path}.{key}", "missing required field")
    return doc[key]


def load_network(doc) -> GridNetwork:
    """Build and validate a GridNetwork from a parsed fixture document."""
    buses = tuple(_require(doc, "buses", "fixture").get("ids", ()))
    if not buses:
        raise FixtureError("buses.ids", "at least one bus id required")
    if len(set(buses)) != len(buses):
        raise FixtureError("buses.ids", "duplicate bus ids")
    ref = _require(doc.get("network", {}), "reference_bus", "network")
    if ref not in buses:
        raise FixtureError("network.reference_bus", f"bus {ref} not in buses.ids")

    lines = []
    for i, ln in enumerate(doc.get("lines", ())):
        path = f"lines[{i}]"
        fb, tb = _require(ln, "from", path), _require(ln, "to", path)
        x = _require(ln, "reactance", path)
        lim = _require(ln, "limit", path)
        if fb not in buses or tb not in buses:
            raise FixtureError(path, f"endpoints ({fb},{tb}) not in buses.ids")
        if fb == tb:
            raise FixtureError(path, "line endpoints must differ")
        if not x > 0:
            raise FixtureError(f"{path}.reactance", f"must be > 0, got {x}")
        if not lim > 0:
            raise FixtureError(f"{path}.limit", f"must be > 0, got {lim}")
        lines.append(Line(fb, tb, float(x), float(lim)))
    keys = [frozenset(l.key()) for l in lines]
    if len(set(keys)) != len(keys):
        raise FixtureError("lines", "duplicate line between the same bus pair")

    gens = []
    for i, g in enumerate(doc.get("generators", ())):
        path = f"generators[{i}]"
        bus = _require(g, "bus", path)
        if bus not in buses:
            raise FixtureError(f"{path}.bus", f"bus {bus} not in buses.ids")
        gmin, gmax = g.get("g_min", 0.0), _require(g, "g_max", path)
        if gmin > gmax:
            raise FixtureError(path, f"g_min {gmin} > g_max {gmax}")
        gens.append(Generator(
            name=g.get("name", f"G{i+1}"), bus=bus,
            cost=float(_require(g, "cost", path)),
            cost_rt=float(g.get("cost_rt", g["cost"])),
            g_min=float(gmin), g_max=float(gmax),
            qualified=bool(g.get("qualified", True)),
            delta_min=float(g.get("delta_min", -0.1)),
            delta_max=float(g.get("delta_max", 0.1))))

    loads = []
    for i, ld in enumerate(doc.get("loads", ())):
        path = f"loads[{i}]"
        bus = _require(ld, "bus", path)
        if bus not in buses:
            raise FixtureError(f"{path}.bus", f"bus {bus} not in buses.ids")
        loads.append(Load(
            bus=bus, demand=float(_require(ld, "demand", path)),
            dispatchable=bool(ld.get("dispatchable", False)),
            delta_min=float(ld.get("delta_min", 0.0)),
            delta_max=float(ld.get("delta_max", 0.0))))

    net = GridNetwork(buses=buses, reference_bus=ref, lines=tuple(lines),
                      generators=tuple(gens), loads=tuple(loads))
    if not _connected(net):
        raise FixtureError("lines", "line graph does not connect all buses")
    cap = sum(g.g_max for g in gens)
    dem = net.total_demand()
    if gens and cap < dem:
        raise FixtureError("generators", f"total capacity {cap} MW < demand {dem} MW")
    return net


def _connected(net: GridNetwork) -> bool:
    if net.n_buses == 1:
        return True
    adj = {b: set() for b in net.buses}
    for ln in net.lines:
        adj[ln.from_bus].add(ln.to_bus)
        adj[ln.to_bus].add(ln.from_bus)
    seen = {net.buses[0]}
    stack = [net.buses[0]]
    while stack:
        for nb in adj[stack.pop()]:
            if nb not in seen:
                seen.add(nb)
                stack.append(nb)
    return len(seen) == net.n_buses


def susceptance_matrices(net: GridNetwork):
    """Bus susceptance matrix B and line-to-bus flow matrix Bf (MW per rad)."""
    n, L = net.n_buses, len(net.lines)
    B = np.zeros((n, n))
    Bf = np.zeros((L, n))
    for k, ln in enumerate(net.lines):
        i, j = net.bus_index(ln.from_bus), net.bus_index(ln.to_bus)
        b = 1.0 / ln.reactance
        B[i, i] += b
        B[j, j] += b
        B[i, j] -= b
        B[j, i] -= b
        Bf[k, i] = b
        Bf[k, j] = -b
    return B, Bf


def compute_gsf(net: GridNetwork) -> GsfMatrix:
    """Generation shift factors: flow change per MW injected, slack at ref."""
    B, Bf = susceptance_matrices(net)
    keep = [i for i, b in enumerate(net.buses) if b != net.reference_bus]
    Bred = B[np.ix_(keep, keep)]
    try:
        inv = np.linalg.inv(Bred)
    except np.linalg.LinAlgError:
        raise FixtureError("lines", "singular susceptance matrix (disconnected network)")
    G = np.zeros((len(net.lines), net.n_buses))
    G[:, keep] = Bf[:, keep] @ inv
    return GsfMatrix(matrix=G, line_keys=tuple(l.key() for l in net.lines),
                     buses=net.buses, reference_bus=net.reference_bus)


def dc_power_flow(net: GridNetwork, injections):
    """Solve B theta = p with the reference angle fixed at zero.

    ``injections`` is MW per bus (network bus order) and must balance.
    Returns (theta, line flows in MW, line flow keys).
    """
    p = np.asarray(injections, dtype=float)
    if p.size != net.n_buses:
        raise ValueError(f"expected {net.n_buses} injections, got {p.size}")
    if abs(p.sum()) > 1e-6:
        raise ValueError(f"injections must balance; sum = {p.sum():g} MW")
    B, Bf = susceptance_matrices(net)
    keep = [i for i, b in enumerate(net.buses) if b != net.reference_bus]
    theta = np.zeros(net.n_buses)
    theta[keep] = np.linalg.solve(B[np.ix_(keep, keep)], p[keep])
    flows = Bf @ theta
    return theta, flows, tuple(l.key() for l in net.lines)
