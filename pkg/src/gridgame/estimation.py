"""Measurement model, WLS state estimation and the residual threshold test.

The detector and the stealth machinery work on noise-normalized residuals
(r_k / sigma_k); for unit-sigma channels this coincides with the raw MW
residual test.  Channels with very large sigma are carried in the
measurement vector but contribute nothing to the estimate.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import FixtureError, GridNetwork


@dataclass(frozen=True)
class MeasurementDef:
    kind: str                  # "line_flow" | "injection"
    from_bus: int = None       # line_flow endpoints
    to_bus: int = None
    bus: int = None            # injection bus
    sigma: float = 1.0         # MW
    secure: bool = False

    def label(self, index):
        return f"z{index + 1}"

    def describe(self):
        if self.kind == "line_flow":
            return f"flow {self.from_bus}->{self.to_bus}"
        return f"injection bus {self.bus}"


@dataclass(frozen=True)
class MeasurementPlan:
    defs: tuple
    gamma: float = None        # detection threshold; None = derived default

    @property
    def m(self):
        return len(self.defs)

    @property
    def sigmas(self):
        return np.array([d.sigma for d in self.defs])

    @property
    def secure_set(self):
        return tuple(i for i, d in enumerate(self.defs) if d.secure)

    @property
    def insecure_set(self):
        return tuple(i for i, d in enumerate(self.defs) if not d.secure)

    def labels(self):
        return tuple(d.label(i) for i, d in enumerate(self.defs))


def load_measurements(doc, net: GridNetwork) -> MeasurementPlan:
    """Build and validate the measurement plan from a fixture document."""
    defs = []
    for i, mc in enumerate(doc.get("measurements", ())):
        path = f"measurements[{i}]"
        kind = mc.get("kind")
        sigma = float(mc.get("sigma", 1.0))
        if sigma <= 0:
            raise FixtureError(f"{path}.sigma", f"must be > 0, got {sigma}")
        secure = bool(mc.get("secure", False))
        if kind == "line_flow":
            fb, tb = mc.get("from"), mc.get("to")
            try:
                net.line_index(fb, tb)
            except KeyError:
                raise FixtureError(path, f"no line between buses {fb} and {tb}")
            defs.append(MeasurementDef("line_flow", from_bus=fb, to_bus=tb,
                                       sigma=sigma, secure=secure))
        elif kind == "injection":
            bus = mc.get("bus")
            if bus not in net.buses:
                raise FixtureError(f"{path}.bus", f"bus {bus} not in buses.ids")
            defs.append(MeasurementDef("injection", bus=bus, sigma=sigma, secure=secure))
        else:
            raise FixtureError(f"{path}.kind", f"unknown kind {kind!r}")
    if len(defs) < net.n_buses - 1:
        raise FixtureError("measurements",
                           f"{len(defs)} measurements cannot observe "
                           f"{net.n_buses - 1} angles")
    gamma = doc.get("scenario", {}).get("gamma")
    return MeasurementPlan(defs=tuple(defs), gamma=gamma)


@dataclass(frozen=True)
class Jacobian:
    """Measurement matrix over the non-reference bus angles."""

    h: np.ndarray              # (m, n-1)
    state_buses: tuple         # bus id per column
    buses: tuple
    reference_bus: int

    @property
    def n_states(self):
        return len(self.state_buses)

    def pad_states(self, reduced):
        """Insert the reference-bus zero into a state-indexed vector/matrix."""
        full = np.zeros((len(self.buses),) + reduced.shape[1:])
        for c, bus in enumerate(self.state_buses):
            full[self.buses.index(bus)] = reduced[c]
        return full


def _flow_row(net, jac_buses, from_bus, to_bus):
    k, sign = net.line_index(from_bus, to_bus)
    x = net.lines[k].reactance
    row = np.zeros(len(jac_buses))
    if from_bus in jac_buses:
        row[jac_buses.index(from_bus)] += 1.0 / x
    if to_bus in jac_buses:
        row[jac_buses.index(to_bus)] -= 1.0 / x
    return row


def build_jacobian(net: GridNetwork, plan: MeasurementPlan) -> Jacobian:
    """H rows: +-1/X for a line flow; an injection row sums the bus's flows."""
    state_buses = tuple(b for b in net.buses if b != net.reference_bus)
    rows = []
    for d in plan.defs:
        if d.kind == "line_flow":
            rows.append(_flow_row(net, list(state_buses), d.from_bus, d.to_bus))
        else:
            row = np.zeros(len(state_buses))
            for ln in net.lines:
                if ln.from_bus == d.bus:
                    row += _flow_row(net, list(state_buses), d.bus, ln.to_bus)
                elif ln.to_bus == d.bus:
                    row += _flow_row(net, list(state_buses), d.bus, ln.from_bus)
            rows.append(row)
    return Jacobian(h=np.array(rows), state_buses=state_buses,
                    buses=net.buses, reference_bus=net.reference_bus)


class ObservabilityError(RuntimeError):
    """H is rank-deficient: the angles are not observable from the plan."""


@dataclass(frozen=True)
class EstimationResult:
    theta: np.ndarray              # (n,) angles, reference entry 0
    residual: np.ndarray           # (m,) MW
    normalized_residual: np.ndarray
    h: np.ndarray                  # (m, n-1)
    m_matrix: np.ndarray           # (n-1, m) WLS pseudo-inverse
    m_padded: np.ndarray           # (n, m), zero row at the reference bus
    z: np.ndarray
    sigmas: np.ndarray
    buses: tuple
    reference_bus: int
    bdd_passed: bool = None


def estimation_gain(jac: Jacobian, sigmas):
    """M = (H' W H)^-1 H' W with W = diag(1/sigma^2)."""
    H = jac.h
    w = 1.0 / np.asarray(sigmas, dtype=float) ** 2
    G = H.T @ (w[:, None] * H)
    if np.linalg.matrix_rank(G) < H.shape[1]:
        raise ObservabilityError(
            f"measurement matrix rank {np.linalg.matrix_rank(H)} < "
            f"{H.shape[1]} states; angles unobservable")
    return np.linalg.solve(G, H.T * w[None, :])


def estimate_state(jac: Jacobian, sigmas, z) -> EstimationResult:
    """WLS estimate of the bus angles from measurement vector z (MW)."""
    z = np.asarray(z, dtype=float)
    sig = np.asarray(sigmas, dtype=float)
    M = estimation_gain(jac, sig)
    theta_red = M @ z
    residual = z - jac.h @ theta_red
    return EstimationResult(
        theta=jac.pad_states(theta_red),
        residual=residual,
        normalized_residual=residual / sig,
        h=jac.h,
        m_matrix=M,
        m_padded=jac.pad_states(M),
        z=z,
        sigmas=sig,
        buses=jac.buses,
        reference_bus=jac.reference_bus)


def residual_covariance(jac: Jacobian, sigmas):
    """Analytic covariance of the residual vector: (I-HM) Sigma (I-HM)'."""
    sig = np.asarray(sigmas, dtype=float)
    M = estimation_gain(jac, sig)
    S = np.eye(jac.h.shape[0]) - jac.h @ M
    return S @ np.diag(sig ** 2) @ S.T


def default_gamma(jac: Jacobian, sigmas):
    """Three-sigma bound on the largest normalized residual component."""
    cov = residual_covariance(jac, sigmas)
    sig = np.asarray(sigmas, dtype=float)
    return 3.0 * float(np.sqrt(np.diag(cov) / sig ** 2).max())


def detect_bad_data(result: EstimationResult, gamma) -> bool:
    """Threshold test: pass iff max normalized residual magnitude <= gamma."""
    return bool(np.abs(result.normalized_residual).max() <= gamma)


def flow_sensitivity_vector(m_padded, net: GridNetwork, from_bus, to_bus):
    """Q = (M_i - M_j) / X_ij: per-measurement effect on the estimated flow."""
    k, _ = net.line_index(from_bus, to_bus)
    x = net.lines[k].reactance
    ri = m_padded[net.bus_index(from_bus)]
    rj = m_padded[net.bus_index(to_bus)]
    return (ri - rj) / x


def estimated_line_flow(m_padded, net: GridNetwork, from_bus, to_bus, z):
    """Estimated MW flow on a line, from the estimator gain and measurements."""
    q = flow_sensitivity_vector(m_padded, net, from_bus, to_bus)
    return float(q @ np.asarray(z, dtype=float))
