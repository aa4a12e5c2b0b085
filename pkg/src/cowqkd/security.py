"""Error rates, the phase-error upper bound, key rates, and reference bounds.

All formulas are implemented once as elementwise kernels (scalar or ndarray)
and exposed through scalar wrappers, so grid-based optimization and single
point evaluation agree bit for bit.  Logarithms are base 2 throughout and
rates are per transmitted pulse pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gains import GainSet

__all__ = [
    "BoundPair",
    "ErrorRates",
    "RatePoint",
    "NoDetectionError",
    "NoMonitoringDetectionError",
    "binary_entropy",
    "bit_error_z",
    "error_rates",
    "gain_bounds",
    "phase_error_upper",
    "phase_error_upper_raw",
    "bit_error_x",
    "bit_error_x_raw",
    "key_rate_cow",
    "key_rate_nonclassical",
    "plob_bound",
    "azuma_deviation",
]


class NoDetectionError(ValueError):
    """All data-line gains vanish: no clicks to build statistics from."""


class NoMonitoringDetectionError(ValueError):
    """All monitoring-line gains vanish: the error-rate ratios are undefined."""


@dataclass(frozen=True)
class BoundPair:
    """Analytic bounds on the unobservable superposition-mode gains.

    ``Q_0x_M1_upper`` is clamped to <= 1 and ``Q_0x_M0_lower`` to >= 0 at
    construction time by :func:`gain_bounds`.
    """

    Q_0x_M1_upper: float
    Q_0x_M0_lower: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.Q_0x_M1_upper <= 1.0):
            raise ValueError(f"Q_0x_M1_upper out of [0, 1]: {self.Q_0x_M1_upper!r}")
        if not (0.0 <= self.Q_0x_M0_lower <= 1.0):
            raise ValueError(f"Q_0x_M0_lower out of [0, 1]: {self.Q_0x_M0_lower!r}")


@dataclass(frozen=True)
class ErrorRates:
    """Bit error rate, phase-error upper bound, and (optionally) the X-basis rate."""

    E_b: float
    E_p_u: float
    E_x: float | None = None

    def __post_init__(self) -> None:
        if not (0.0 <= self.E_b <= 1.0):
            raise ValueError(f"E_b out of [0, 1]: {self.E_b!r}")
        if not (0.0 <= self.E_p_u <= 0.5):
            raise ValueError(f"E_p_u out of [0, 0.5]: {self.E_p_u!r}")
        if self.E_x is not None and not (0.0 <= self.E_x <= 1.0):
            raise ValueError(f"E_x out of [0, 1]: {self.E_x!r}")


@dataclass(frozen=True)
class RatePoint:
    """One distance's result: parameters, gain, error rates, and key rates."""

    L_km: float
    eta_ch: float
    eta_tot: float
    mu_opt: float
    tB_opt: float
    Q_z: float
    E_b: float
    E_p_u: float
    E_x: float
    R: float
    R_tilde: float
    R_plob: float
    flag: str = ""

    def __post_init__(self) -> None:
        if self.R < 0.0 or self.R_tilde < 0.0:
            raise ValueError("key rates must be nonnegative")
        for name in ("L_km", "eta_ch", "eta_tot", "mu_opt", "tB_opt", "Q_z",
                     "E_b", "E_p_u", "E_x", "R", "R_tilde"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        # R_plob alone may be +inf: the capacity reference diverges on a
        # lossless channel (L = 0).
        if math.isnan(self.R_plob) or self.R_plob < 0.0:
            raise ValueError("R_plob must be nonnegative and not NaN")


# ---------------------------------------------------------------------------
# elementwise kernels
# ---------------------------------------------------------------------------

def _entropy_kernel(a):
    """Binary Shannon entropy with h(0) = h(1) = 0 by continuity."""
    a = np.asarray(a, dtype=float)
    inside = (a > 0.0) & (a < 1.0)
    safe = np.where(inside, a, 0.5)
    value = -safe * np.log2(safe) - (1.0 - safe) * np.log2(1.0 - safe)
    return np.where(inside, value, 0.0)


def _n_plus(mu):
    return 2.0 * (1.0 + np.exp(-np.asarray(mu, dtype=float)))


def _n_minus(mu):
    return 2.0 * (1.0 - np.exp(-np.asarray(mu, dtype=float)))


def _bounds_kernel(q_aa_m0, q_aa_m1, q_00_m0, q_00_m1, mu):
    """(upper on Q_0x_M1, lower on Q_0x_M0), clamped to [0, 1] and >= 0."""
    mu = np.asarray(mu, dtype=float)
    n_plus = _n_plus(mu)
    n_minus = _n_minus(mu)
    e_plus_half = np.exp(mu / 2.0)
    e_minus_half = np.exp(-mu / 2.0)
    e_full = np.exp(mu)
    upper = (1.0 / n_plus) * (e_plus_half * np.sqrt(q_aa_m1) + e_minus_half * np.sqrt(q_00_m1)) ** 2 \
        + (n_minus / n_plus) * (e_full * n_minus / 4.0 + e_full * np.sqrt(q_aa_m1) + np.sqrt(q_00_m1))
    lower = (1.0 / n_plus) * (e_plus_half * np.sqrt(q_aa_m0) - e_minus_half * np.sqrt(q_00_m0)) ** 2 \
        - (n_minus / n_plus) * (e_full * np.sqrt(q_aa_m0) + np.sqrt(q_00_m0))
    return np.minimum(upper, 1.0), np.maximum(lower, 0.0)


def _monitoring_denominator(q_0z_m0, q_0z_m1, q_1z_m0, q_1z_m1):
    return 2.0 * (q_0z_m0 + q_0z_m1 + q_1z_m0 + q_1z_m1)


def _phase_error_kernel(q_0z_m0, q_0z_m1, q_1z_m0, q_1z_m1, upper, lower, mu):
    """(pre-clamp, clamped-to-[0, 0.5]) phase-error upper bound.

    The leakage bracket is floored at zero: a lower bound on the constructive
    port gain larger than the observed gain sum cannot buy negative error.
    """
    n_plus = _n_plus(mu)
    denom = _monitoring_denominator(q_0z_m0, q_0z_m1, q_1z_m0, q_1z_m1)
    numer = n_plus * upper + np.maximum(0.0, 2.0 * (q_0z_m0 + q_1z_m0) - n_plus * lower)
    raw = numer / denom
    return raw, np.clip(raw, 0.0, 0.5)


def _bit_error_x_kernel(q_0z_m0, q_0z_m1, q_1z_m0, q_1z_m1, q_0x_m0, q_0x_m1, mu):
    """(pre-clamp, clamped-to-[0, 1]) X-basis bit error rate from the true gains."""
    n_plus = _n_plus(mu)
    denom = _monitoring_denominator(q_0z_m0, q_0z_m1, q_1z_m0, q_1z_m1)
    numer = n_plus * q_0x_m1 + (2.0 * (q_0z_m0 + q_1z_m0) - n_plus * q_0x_m0)
    raw = numer / denom
    return raw, np.clip(raw, 0.0, 1.0)


def _bit_error_z_kernel(q_0z_t0, q_0z_t1, q_1z_t0, q_1z_t1):
    """(E_z, Q_z) from the four data-line gains."""
    total = q_0z_t0 + q_0z_t1 + q_1z_t0 + q_1z_t1
    return (q_0z_t1 + q_1z_t0) / total, total / 2.0


def _key_rate_kernel(q_z, e_phase, e_bit, f_ec):
    return np.maximum(0.0, q_z * (1.0 - _entropy_kernel(e_phase) - f_ec * _entropy_kernel(e_bit)))


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------

def binary_entropy(a: float) -> float:
    """h(a) = -a log2 a - (1-a) log2(1-a), with h(0) = h(1) = 0."""
    arr = np.asarray(a, dtype=float)
    if np.any(arr < 0.0) or np.any(arr > 1.0):
        raise ValueError(f"binary_entropy argument must be in [0, 1], got {a!r}")
    result = _entropy_kernel(arr)
    return float(result) if np.ndim(a) == 0 else result


def bit_error_z(gains: GainSet) -> tuple[float, float]:
    """(E_z, Q_z): data-line bit error rate and sifted gain.

    E_z is the wrong-slot fraction of all data-line clicks; Q_z is half the
    sum of the four data-line gains.
    """
    total = gains.Q_0z_T0 + gains.Q_0z_T1 + gains.Q_1z_T0 + gains.Q_1z_T1
    if total <= 0.0:
        raise NoDetectionError("all data-line gains are zero")
    e_z, q_z = _bit_error_z_kernel(gains.Q_0z_T0, gains.Q_0z_T1, gains.Q_1z_T0, gains.Q_1z_T1)
    return float(e_z), float(q_z)


def gain_bounds(q_aa_m0: float, q_aa_m1: float, q_00_m0: float, q_00_m1: float,
                mu: float) -> BoundPair:
    """Cauchy-inequality bounds on the superposition-mode gains.

    Built from the observed decoy-sequence gains; the upper bound is clamped
    to 1 and the lower bound to 0.
    """
    for name, value in (("q_aa_m0", q_aa_m0), ("q_aa_m1", q_aa_m1),
                        ("q_00_m0", q_00_m0), ("q_00_m1", q_00_m1)):
        if not (0.0 <= value <= 1.0):
            raise ValueError(f"{name} must be in [0, 1], got {value!r}")
    if not mu > 0.0:
        raise ValueError(f"mu must be > 0, got {mu!r}")
    upper, lower = _bounds_kernel(q_aa_m0, q_aa_m1, q_00_m0, q_00_m1, mu)
    return BoundPair(Q_0x_M1_upper=float(upper), Q_0x_M0_lower=float(lower))


def _require_monitoring(gains: GainSet) -> None:
    denom = _monitoring_denominator(gains.Q_0z_M0, gains.Q_0z_M1, gains.Q_1z_M0, gains.Q_1z_M1)
    if denom <= 0.0:
        raise NoMonitoringDetectionError("all logic-sequence monitoring gains are zero")


def phase_error_upper(gains: GainSet, bounds: BoundPair, mu: float) -> float:
    """Phase-error upper bound, clamped to [0, 0.5].

    A pre-clamp value above 0.5 means the bound is trivial and the key rate
    is zero; the raw value is available via :func:`phase_error_upper_raw`.
    """
    _require_monitoring(gains)
    _, clamped = _phase_error_kernel(
        gains.Q_0z_M0, gains.Q_0z_M1, gains.Q_1z_M0, gains.Q_1z_M1,
        bounds.Q_0x_M1_upper, bounds.Q_0x_M0_lower, mu,
    )
    return float(clamped)


def phase_error_upper_raw(gains: GainSet, bounds: BoundPair, mu: float) -> float:
    """Pre-clamp value of :func:`phase_error_upper` (diagnostic)."""
    _require_monitoring(gains)
    raw, _ = _phase_error_kernel(
        gains.Q_0z_M0, gains.Q_0z_M1, gains.Q_1z_M0, gains.Q_1z_M1,
        bounds.Q_0x_M1_upper, bounds.Q_0x_M0_lower, mu,
    )
    return float(raw)


def bit_error_x(gains: GainSet, mu: float) -> float:
    """X-basis bit error rate from the true superposition-mode gains, in [0, 1]."""
    if gains.Q_0x_M0 is None or gains.Q_0x_M1 is None:
        raise ValueError("GainSet carries no Q_0x gains")
    _require_monitoring(gains)
    _, clamped = _bit_error_x_kernel(
        gains.Q_0z_M0, gains.Q_0z_M1, gains.Q_1z_M0, gains.Q_1z_M1,
        gains.Q_0x_M0, gains.Q_0x_M1, mu,
    )
    return float(clamped)


def bit_error_x_raw(gains: GainSet, mu: float) -> float:
    """Pre-clamp value of :func:`bit_error_x` (diagnostic)."""
    if gains.Q_0x_M0 is None or gains.Q_0x_M1 is None:
        raise ValueError("GainSet carries no Q_0x gains")
    _require_monitoring(gains)
    raw, _ = _bit_error_x_kernel(
        gains.Q_0z_M0, gains.Q_0z_M1, gains.Q_1z_M0, gains.Q_1z_M1,
        gains.Q_0x_M0, gains.Q_0x_M1, mu,
    )
    return float(raw)


def error_rates(gains: GainSet, bounds: BoundPair, mu: float) -> ErrorRates:
    """All error rates of one GainSet in a single call.

    E_x is filled only when the GainSet carries the superposition-mode gains.
    """
    e_b, _ = bit_error_z(gains)
    e_p_u = phase_error_upper(gains, bounds, mu)
    e_x = None
    if gains.Q_0x_M0 is not None and gains.Q_0x_M1 is not None:
        e_x = bit_error_x(gains, mu)
    return ErrorRates(E_b=e_b, E_p_u=e_p_u, E_x=e_x)


def key_rate_cow(q_z: float, e_p_u: float, e_b: float, f_ec: float) -> float:
    """R = max(0, Q_z * (1 - h(E_p_u) - f_ec * h(E_b))), per pulse pair."""
    return float(_key_rate_kernel(q_z, e_p_u, e_b, f_ec))


def key_rate_nonclassical(q_z: float, e_x: float, e_z: float, f_ec: float) -> float:
    """Same rate formula with the X-basis error in place of the phase-error bound."""
    return float(_key_rate_kernel(q_z, e_x, e_z, f_ec))


def plob_bound(eta_ch: float) -> float:
    """Repeaterless secret-key capacity -log2(1 - eta) of a lossy channel."""
    if not (0.0 <= eta_ch < 1.0):
        raise ValueError(f"eta_ch must be in [0, 1), got {eta_ch!r}")
    return -math.log2(1.0 - eta_ch)


def azuma_deviation(K: float, fail_prob: float) -> float:
    """Concentration radius eps with failure probability 2 * exp(-K * eps^2 / 2).

    Inverts the martingale tail bound: eps = sqrt(2 * ln(2 / fail_prob) / K).
    Arguments up to fail_prob < 2 are accepted so the inversion identity
    stays total; values >= 1 make the tail statement vacuous.
    """
    if not K >= 1:
        raise ValueError(f"K must be >= 1, got {K!r}")
    if not (0.0 < fail_prob < 2.0):
        raise ValueError(f"fail_prob must be in (0, 2), got {fail_prob!r}")
    return math.sqrt(2.0 * math.log(2.0 / fail_prob) / K)
