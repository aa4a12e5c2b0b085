"""Closed-form click probabilities (gains) for every prepared two-pulse sequence.

The monitoring-line expressions are transcribed literally from the threshold
detector model of the interferometric measurement, including the eta-free
exponents inside the ``c5`` factor; no "corrected" physics is substituted.
The data-line model and the misalignment extension are documented here:

* data line: the non-empty pulse arrives with mean photon number
  lambda = t_B * mu * eta_tot, split as lambda*(1 - e_a) into the correct
  time slot and lambda*e_a into the wrong one, with independent dark counts
  and uniform random assignment of double clicks (squashing);
* misalignment on the monitoring line: uniform port cross-talk mixing of
  every (M0, M1) pair, which is exact at e_a = 0 and conserves pair sums.

All kernels accept scalars or numpy arrays and evaluate elementwise, so the
optimizer's grid path and the scalar API produce bit-identical numbers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .params import SystemParams, Variant, total_transmittance

__all__ = [
    "GainSet",
    "MonitoringGains",
    "monitoring_gains_ideal",
    "nonclassical_gains_ideal",
    "apply_misalignment",
    "data_line_gains",
    "full_gain_set",
    "two_detector_squash",
]


# ---------------------------------------------------------------------------
# elementwise kernels (scalar or ndarray inputs)
# ---------------------------------------------------------------------------

def _click_probability(x, p_d):
    """1 - (1 - p_d) * exp(-x); the expm1 form stays exact for tiny x."""
    return -np.expm1(-x) + p_d * np.exp(-x)


def _logic_monitoring_gain(mu, t_b, eta, p_d, active):
    """Gain of a logic sequence (single non-empty pulse) on either monitoring port."""
    half_pulse = (1.0 - t_b) * mu * eta / 2.0
    c1 = (1.0 - p_d) * np.exp(-half_pulse)
    one_minus_c1 = _click_probability(half_pulse, p_d)
    if active:
        return c1 * one_minus_c1
    return (1.0 - p_d) ** 2 * np.exp(-t_b * mu * eta) * c1 * one_minus_c1


def _decoy_monitoring_gains(mu, t_b, eta, p_d, active):
    """Monitoring gains (Q_aa_M0, Q_aa_M1, Q_00) of the two decoy sequences."""
    nu = 2.0 * mu * (1.0 - t_b) * eta
    bright_click = _click_probability(nu, p_d)  # 1 - (1 - p_d) e^{-nu}
    bright = np.exp(-nu)
    if active:
        q_aa_m0 = (1.0 - p_d) * bright_click
        q_aa_m1 = p_d * (1.0 - p_d) * bright
        q_00 = p_d * (1.0 - p_d) * np.ones_like(np.asarray(bright, dtype=float))
        return q_aa_m0, q_aa_m1, q_00
    c5 = (
        -2.0 * np.exp(-2.0 * t_b * mu)
        + 2.0 * np.exp(-t_b * mu - t_b * mu * eta)
        + np.exp(-2.0 * t_b * mu * eta)
    )
    q_aa_m0 = (1.0 - p_d) ** 3 * bright_click * c5
    q_aa_m1 = p_d * (1.0 - p_d) ** 3 * bright * c5
    q_00 = p_d * (1.0 - p_d) ** 3 * np.ones_like(np.asarray(bright, dtype=float))
    return q_aa_m0, q_aa_m1, q_00


def _nonclassical_monitoring_gains(mu, t_b, eta, p_d):
    """Monitoring gains (Q_0x_M0, Q_0x_M1) of the even superposition mode.

    The differences c3 = e^{-tb mu eta} - e^{-tb mu} and c4 - c2 are evaluated
    through expm1 products, which are exact where the naive subtractions
    cancel catastrophically.
    """
    half_pulse = (1.0 - t_b) * mu * eta / 2.0
    c1 = (1.0 - p_d) * np.exp(-half_pulse)
    one_minus_c1 = _click_probability(half_pulse, p_d)
    b = (1.0 - t_b) * mu / 2.0
    c2 = np.exp(b * (1.0 - eta)) + np.exp(-b * (1.0 - eta))
    c3 = np.exp(-t_b * mu) * np.expm1(t_b * mu * (1.0 - eta))
    c4_minus_c2 = np.expm1(b * eta) * np.exp(-b) * np.expm1(b * (2.0 - eta))
    n_plus = 2.0 * (1.0 + np.exp(-mu))
    q_m0 = (2.0 / n_plus) * (1.0 - p_d) ** 3 * one_minus_c1 * (
        np.exp(-(1.0 + t_b) * mu / 2.0) * c2 + np.exp(-half_pulse) * c3
    )
    q_m1 = (2.0 / n_plus) * (1.0 - p_d) ** 2 * c1 * (
        np.exp(-(1.0 + t_b) * mu / 2.0) * (c4_minus_c2 + p_d * c2) + c3 * one_minus_c1
    )
    return q_m0, q_m1


def two_detector_squash(intensity_a, intensity_b, p_d):
    """Click probabilities of a two-detector stage with random double-click assignment.

    Each detector is a threshold detector seeing Poisson light of the given
    mean photon number plus an independent dark count; a double click is
    assigned to either outcome with probability 1/2.
    """
    p_a = _click_probability(np.asarray(intensity_a, dtype=float), p_d)
    p_b = _click_probability(np.asarray(intensity_b, dtype=float), p_d)
    q_a = p_a * (1.0 - p_b) + 0.5 * p_a * p_b
    q_b = p_b * (1.0 - p_a) + 0.5 * p_a * p_b
    return q_a, q_b


def _data_line_pair(mu, t_b, eta, p_d, e_a):
    """(Q_correct, Q_wrong) of the arrival-time measurement for one logic sequence.

    lambda = t_B * mu * eta for both variants: for the active switch t_B is the
    data-line selection probability and the routing normalization cancels in
    the error-rate and key-rate ratios.
    """
    lam = t_b * mu * eta
    return two_detector_squash(lam * (1.0 - e_a), lam * e_a, p_d)


def _mix_pair(m0, m1, e_a):
    """Uniform port cross-talk: each outcome leaks into the other with weight e_a."""
    return (1.0 - e_a) * m0 + e_a * m1, (1.0 - e_a) * m1 + e_a * m0


# ---------------------------------------------------------------------------
# public containers and operations
# ---------------------------------------------------------------------------

def _check_probability(name: str, value: float) -> None:
    if not (0.0 <= value <= 1.0) or not np.isfinite(value):
        raise ValueError(f"{name} must be a probability in [0, 1], got {value!r}")


@dataclass(frozen=True)
class MonitoringGains:
    """Monitoring-line gains of all sequences; the Q_0x pair is optional."""

    Q_0z_M0: float
    Q_0z_M1: float
    Q_1z_M0: float
    Q_1z_M1: float
    Q_aa_M0: float
    Q_aa_M1: float
    Q_00_M0: float
    Q_00_M1: float
    Q_0x_M0: float | None = None
    Q_0x_M1: float | None = None

    def __post_init__(self) -> None:
        for name in ("Q_0z_M0", "Q_0z_M1", "Q_1z_M0", "Q_1z_M1",
                     "Q_aa_M0", "Q_aa_M1", "Q_00_M0", "Q_00_M1"):
            _check_probability(name, getattr(self, name))
        for name in ("Q_0x_M0", "Q_0x_M1"):
            value = getattr(self, name)
            if value is not None:
                _check_probability(name, value)


@dataclass(frozen=True)
class GainSet:
    """Full vector of per-sequence, per-detector click probabilities.

    Data-line slots are labelled semantically: for the sequence w_z the slot
    T_w is the correct one, so Q_0z_T1 and Q_1z_T0 are the error gains.
    """

    Q_0z_T0: float
    Q_0z_T1: float
    Q_1z_T0: float
    Q_1z_T1: float
    Q_0z_M0: float
    Q_0z_M1: float
    Q_1z_M0: float
    Q_1z_M1: float
    Q_aa_M0: float
    Q_aa_M1: float
    Q_00_M0: float
    Q_00_M1: float
    Q_0x_M0: float | None = None
    Q_0x_M1: float | None = None

    def __post_init__(self) -> None:
        for name in ("Q_0z_T0", "Q_0z_T1", "Q_1z_T0", "Q_1z_T1",
                     "Q_0z_M0", "Q_0z_M1", "Q_1z_M0", "Q_1z_M1",
                     "Q_aa_M0", "Q_aa_M1", "Q_00_M0", "Q_00_M1"):
            _check_probability(name, getattr(self, name))
        for name in ("Q_0x_M0", "Q_0x_M1"):
            value = getattr(self, name)
            if value is not None:
                _check_probability(name, value)


def monitoring_gains_ideal(params: SystemParams) -> MonitoringGains:
    """Monitoring-line gains at zero misalignment, dispatching on the variant.

    The loss factor entering every expression is the total transmittance
    (channel times detector efficiency).  The logic-sequence gains are equal
    on both ports by symmetry of a single non-empty pulse.
    """
    eta = total_transmittance(params)
    active = params.variant is Variant.ACTIVE
    q_logic = float(_logic_monitoring_gain(params.mu, params.t_B, eta, params.p_d, active))
    q_aa_m0, q_aa_m1, q_00 = _decoy_monitoring_gains(
        params.mu, params.t_B, eta, params.p_d, active
    )
    return MonitoringGains(
        Q_0z_M0=q_logic, Q_0z_M1=q_logic, Q_1z_M0=q_logic, Q_1z_M1=q_logic,
        Q_aa_M0=float(q_aa_m0), Q_aa_M1=float(q_aa_m1),
        Q_00_M0=float(q_00), Q_00_M1=float(q_00),
    )


def nonclassical_gains_ideal(params: SystemParams) -> tuple[float, float]:
    """(Q_0x_M0, Q_0x_M1) of the even superposition mode at zero misalignment.

    The same closed forms apply to both variants.
    """
    eta = total_transmittance(params)
    q_m0, q_m1 = _nonclassical_monitoring_gains(params.mu, params.t_B, eta, params.p_d)
    return float(q_m0), float(q_m1)


def apply_misalignment(gains: MonitoringGains, e_a: float) -> MonitoringGains:
    """Mix every (M0, M1) pair by the port cross-talk weight e_a.

    The mixing conserves each pair sum and is the identity at e_a = 0.
    """
    if not (0.0 <= e_a < 0.5):
        raise ValueError(f"e_a must be in [0, 0.5), got {e_a!r}")
    q0z = _mix_pair(gains.Q_0z_M0, gains.Q_0z_M1, e_a)
    q1z = _mix_pair(gains.Q_1z_M0, gains.Q_1z_M1, e_a)
    qaa = _mix_pair(gains.Q_aa_M0, gains.Q_aa_M1, e_a)
    q00 = _mix_pair(gains.Q_00_M0, gains.Q_00_M1, e_a)
    q0x: tuple[float | None, float | None] = (None, None)
    if gains.Q_0x_M0 is not None and gains.Q_0x_M1 is not None:
        q0x = _mix_pair(gains.Q_0x_M0, gains.Q_0x_M1, e_a)
    return MonitoringGains(
        Q_0z_M0=q0z[0], Q_0z_M1=q0z[1],
        Q_1z_M0=q1z[0], Q_1z_M1=q1z[1],
        Q_aa_M0=qaa[0], Q_aa_M1=qaa[1],
        Q_00_M0=q00[0], Q_00_M1=q00[1],
        Q_0x_M0=q0x[0], Q_0x_M1=q0x[1],
    )


def data_line_gains(params: SystemParams) -> tuple[float, float, float, float]:
    """(Q_0z_T0, Q_0z_T1, Q_1z_T0, Q_1z_T1) of the arrival-time measurement."""
    eta = total_transmittance(params)
    q_correct, q_wrong = _data_line_pair(params.mu, params.t_B, eta, params.p_d, params.e_a)
    q_correct = float(q_correct)
    q_wrong = float(q_wrong)
    return q_correct, q_wrong, q_wrong, q_correct


def full_gain_set(params: SystemParams, include_nonclassical: bool = True) -> GainSet:
    """Assemble the complete GainSet at the given operating point.

    Monitoring gains are the ideal closed forms with misalignment mixing
    applied; data-line gains carry the wrong-slot leakage directly.
    """
    mon = monitoring_gains_ideal(params)
    if include_nonclassical:
        q0x_m0, q0x_m1 = nonclassical_gains_ideal(params)
        mon = MonitoringGains(
            Q_0z_M0=mon.Q_0z_M0, Q_0z_M1=mon.Q_0z_M1,
            Q_1z_M0=mon.Q_1z_M0, Q_1z_M1=mon.Q_1z_M1,
            Q_aa_M0=mon.Q_aa_M0, Q_aa_M1=mon.Q_aa_M1,
            Q_00_M0=mon.Q_00_M0, Q_00_M1=mon.Q_00_M1,
            Q_0x_M0=q0x_m0, Q_0x_M1=q0x_m1,
        )
    mon = apply_misalignment(mon, params.e_a)
    t0, t1, t2, t3 = data_line_gains(params)
    return GainSet(
        Q_0z_T0=t0, Q_0z_T1=t1, Q_1z_T0=t2, Q_1z_T1=t3,
        Q_0z_M0=mon.Q_0z_M0, Q_0z_M1=mon.Q_0z_M1,
        Q_1z_M0=mon.Q_1z_M0, Q_1z_M1=mon.Q_1z_M1,
        Q_aa_M0=mon.Q_aa_M0, Q_aa_M1=mon.Q_aa_M1,
        Q_00_M0=mon.Q_00_M0, Q_00_M1=mon.Q_00_M1,
        Q_0x_M0=mon.Q_0x_M0, Q_0x_M1=mon.Q_0x_M1,
    )
