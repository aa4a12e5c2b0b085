"""Key-rate maximization over (mu, t_B) and distance scans.

Grid-then-refine: the objective is evaluated on a log-spaced mu grid times a
linear t_B grid, then the incumbent is polished by coordinate-wise
golden-section passes.  Everything is deterministic; ties resolve to the
smallest mu, then the smallest t_B.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .gains import (
    _data_line_pair,
    _decoy_monitoring_gains,
    _logic_monitoring_gain,
    _mix_pair,
    _nonclassical_monitoring_gains,
    full_gain_set,
)
from .params import ParameterError, SystemParams, Variant, channel_transmittance, total_transmittance
from .security import (
    RatePoint,
    _bit_error_x_kernel,
    _bit_error_z_kernel,
    _bounds_kernel,
    _key_rate_kernel,
    _phase_error_kernel,
    bit_error_x,
    bit_error_z,
    gain_bounds,
    key_rate_cow,
    key_rate_nonclassical,
    phase_error_upper,
    plob_bound,
)

__all__ = ["Protocol", "ScanConfig", "evaluate_point", "optimize_point", "scan"]

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0

FLAG_NO_POSITIVE_RATE = "no_positive_rate"


class Protocol(Enum):
    """Which rate the optimizer maximizes."""

    COW = "cow"
    NONCLASSICAL = "nonclassical"


@dataclass(frozen=True)
class ScanConfig:
    """Distance list, search grids, and refinement settings for a scan.

    ``mu_fixed`` / ``tb_fixed`` pin a coordinate instead of optimizing it.
    """

    L_values: tuple[float, ...]
    mu_min: float = 1e-4
    mu_max: float = 1.0
    n_mu: int = 60
    tb_min: float = 0.01
    tb_max: float = 0.99
    n_tb: int = 49
    refine_iters: int = 3
    protocol: Protocol = Protocol.COW
    mu_fixed: float | None = None
    tb_fixed: float | None = None

    def __post_init__(self) -> None:
        if isinstance(self.L_values, list):
            object.__setattr__(self, "L_values", tuple(self.L_values))
        if isinstance(self.protocol, str):
            object.__setattr__(self, "protocol", Protocol(self.protocol.lower()))
        if len(self.L_values) == 0:
            raise ParameterError("L_values must be nonempty")
        if any(L < 0 for L in self.L_values):
            raise ParameterError("distances must be >= 0")
        if not (0.0 < self.mu_min < self.mu_max):
            raise ParameterError("mu range must satisfy 0 < mu_min < mu_max")
        if not (0.0 < self.tb_min < self.tb_max < 1.0):
            raise ParameterError("t_B range must satisfy 0 < tb_min < tb_max < 1")
        if self.n_mu < 2 or self.n_tb < 2:
            raise ParameterError("grid sizes must be >= 2")
        if self.refine_iters < 0:
            raise ParameterError("refine_iters must be >= 0")
        if self.mu_fixed is not None and not self.mu_fixed > 0:
            raise ParameterError("mu_fixed must be > 0")
        if self.tb_fixed is not None and not (0.0 < self.tb_fixed < 1.0):
            raise ParameterError("tb_fixed must be in (0, 1)")

    def mu_grid(self) -> np.ndarray:
        if self.mu_fixed is not None:
            return np.array([self.mu_fixed])
        return np.geomspace(self.mu_min, self.mu_max, self.n_mu)

    def tb_grid(self) -> np.ndarray:
        if self.tb_fixed is not None:
            return np.array([self.tb_fixed])
        return np.linspace(self.tb_min, self.tb_max, self.n_tb)


def _objective_surface(base: SystemParams, mu, t_b, protocol: Protocol):
    """Key rate of the requested protocol, elementwise over broadcastable mu, t_B."""
    eta = total_transmittance(base)
    p_d, e_a, f_ec = base.p_d, base.e_a, base.f_ec
    active = base.variant is Variant.ACTIVE

    q_correct, q_wrong = _data_line_pair(mu, t_b, eta, p_d, e_a)
    e_z, q_z = _bit_error_z_kernel(q_correct, q_wrong, q_wrong, q_correct)

    q_logic = _logic_monitoring_gain(mu, t_b, eta, p_d, active)
    # The logic pair is symmetric, but the mixing is applied anyway so this
    # path is bit-identical to the scalar one in full_gain_set.
    q_0z_m0, q_0z_m1 = _mix_pair(q_logic, q_logic, e_a)
    q_1z_m0, q_1z_m1 = _mix_pair(q_logic, q_logic, e_a)
    if protocol is Protocol.COW:
        q_aa_m0, q_aa_m1, q_00 = _decoy_monitoring_gains(mu, t_b, eta, p_d, active)
        q_aa_m0, q_aa_m1 = _mix_pair(q_aa_m0, q_aa_m1, e_a)
        q_00_m0, q_00_m1 = _mix_pair(q_00, q_00, e_a)
        upper, lower = _bounds_kernel(q_aa_m0, q_aa_m1, q_00_m0, q_00_m1, mu)
        _, e_phase = _phase_error_kernel(q_0z_m0, q_0z_m1, q_1z_m0, q_1z_m1,
                                         upper, lower, mu)
    else:
        q_0x_m0, q_0x_m1 = _nonclassical_monitoring_gains(mu, t_b, eta, p_d)
        q_0x_m0, q_0x_m1 = _mix_pair(q_0x_m0, q_0x_m1, e_a)
        _, e_phase = _bit_error_x_kernel(q_0z_m0, q_0z_m1, q_1z_m0, q_1z_m1,
                                         q_0x_m0, q_0x_m1, mu)
    return _key_rate_kernel(q_z, e_phase, e_z, f_ec)


def evaluate_point(params: SystemParams, protocol: Protocol = Protocol.COW) -> RatePoint:
    """Full pipeline at one fixed (mu, t_B): gains, error rates, and all rates."""
    gains = full_gain_set(params)
    e_z, q_z = bit_error_z(gains)
    bounds = gain_bounds(gains.Q_aa_M0, gains.Q_aa_M1, gains.Q_00_M0, gains.Q_00_M1, params.mu)
    e_p_u = phase_error_upper(gains, bounds, params.mu)
    e_x = bit_error_x(gains, params.mu)
    r_cow = key_rate_cow(q_z, e_p_u, e_z, params.f_ec)
    r_tilde = key_rate_nonclassical(q_z, e_x, e_z, params.f_ec)
    objective = r_cow if protocol is Protocol.COW else r_tilde
    eta_ch = channel_transmittance(params)
    r_plob = plob_bound(eta_ch) if eta_ch < 1.0 else math.inf
    return RatePoint(
        L_km=params.L_km,
        eta_ch=eta_ch,
        eta_tot=total_transmittance(params),
        mu_opt=params.mu,
        tB_opt=params.t_B,
        Q_z=q_z,
        E_b=e_z,
        E_p_u=e_p_u,
        E_x=e_x,
        R=r_cow,
        R_tilde=r_tilde,
        R_plob=r_plob,
        flag="" if objective > 0.0 else FLAG_NO_POSITIVE_RATE,
    )


def _golden_max(f, lo: float, hi: float, iters: int = 48) -> tuple[float, float]:
    """Deterministic golden-section maximizer of f on [lo, hi]."""
    a, b = lo, hi
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    return (c, fc) if fc >= fd else (d, fd)


def optimize_point(base_params: SystemParams, config: ScanConfig) -> RatePoint:
    """Maximize the configured key rate over (mu, t_B) at base_params' distance.

    Full-grid evaluation first, then ``refine_iters`` rounds of coordinate-wise
    golden-section refinement (log-space for mu) bracketed by the neighboring
    grid cells.  The refined value never falls below the grid incumbent.
    """
    mu_grid = config.mu_grid()
    tb_grid = config.tb_grid()
    mu_mesh, tb_mesh = np.meshgrid(mu_grid, tb_grid, indexing="ij")
    surface = _objective_surface(base_params, mu_mesh, tb_mesh, config.protocol)

    flat_best = int(np.argmax(surface))  # C order: ties resolve to smallest mu, then t_B
    i_mu, i_tb = np.unravel_index(flat_best, surface.shape)
    best_rate = float(surface[i_mu, i_tb])
    best_mu = float(mu_grid[i_mu])
    best_tb = float(tb_grid[i_tb])

    if best_rate > 0.0 and config.refine_iters > 0:
        mu_lo = float(mu_grid[max(i_mu - 1, 0)])
        mu_hi = float(mu_grid[min(i_mu + 1, len(mu_grid) - 1)])
        tb_lo = float(tb_grid[max(i_tb - 1, 0)])
        tb_hi = float(tb_grid[min(i_tb + 1, len(tb_grid) - 1)])
        for _ in range(config.refine_iters):
            if config.mu_fixed is None:
                tb_now = best_tb

                def rate_of_log_mu(log_mu: float) -> float:
                    return float(_objective_surface(
                        base_params, math.exp(log_mu), tb_now, config.protocol))

                log_mu, rate = _golden_max(rate_of_log_mu, math.log(mu_lo), math.log(mu_hi))
                if rate > best_rate:
                    best_rate, best_mu = rate, math.exp(log_mu)
            if config.tb_fixed is None:
                mu_now = best_mu

                def rate_of_tb(t_b: float) -> float:
                    return float(_objective_surface(base_params, mu_now, t_b, config.protocol))

                t_b, rate = _golden_max(rate_of_tb, tb_lo, tb_hi)
                if rate > best_rate:
                    best_rate, best_tb = rate, t_b

    point = evaluate_point(
        replace(base_params, mu=best_mu, t_B=best_tb), config.protocol
    )
    return point


def scan(base_params: SystemParams, config: ScanConfig) -> list[RatePoint]:
    """optimize_point at every distance of the config, in input order.

    Zero-rate points are flagged, never fatal: a scan always spans its full
    distance list.
    """
    points = []
    for L in config.L_values:
        points.append(optimize_point(replace(base_params, L_km=float(L)), config))
    return points
