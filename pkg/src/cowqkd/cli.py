"""Command-line frontend: scans, point evaluations, oracle verification.

Exit codes: 0 success, 1 configuration error, 2 I/O error, 3 verification
failure.  Scan output is CSV with nine-significant-digit floats and is byte
identical across runs for identical configuration and seed.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass, replace

from .gains import full_gain_set
from .optimize import Protocol, ScanConfig, optimize_point, scan
from .params import ParameterError, SystemParams, channel_transmittance, total_transmittance
from .oracle import MIN_SAMPLES, VerificationReport, run_verification
from .security import (
    azuma_deviation,
    bit_error_x,
    bit_error_x_raw,
    bit_error_z,
    gain_bounds,
    key_rate_cow,
    key_rate_nonclassical,
    phase_error_upper,
    phase_error_upper_raw,
    plob_bound,
)

__all__ = ["main", "app", "RunConfig", "parse_distance_range", "parse_config_file"]

CSV_HEADER = "L_km,eta_ch,eta_tot,mu_opt,tB_opt,Qz,Eb,Ep_u,R,R_tilde,R_plob,flag"

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_IO = 2
EXIT_VERIFY = 3


class ConfigError(ValueError):
    """Bad flag, config-file entry, or parameter combination."""


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

_DEFAULTS = {
    "pd": 1e-8,
    "eta_d": 0.8,
    "ea": 0.0,
    "f": 1.1,
    "mu": None,
    "tb": None,
    "variant": "passive",
    "atten": 0.2,
    "L": None,
    "protocol": "cow",
    "out": None,
    "seed": 1,
    "samples": 10_000_000,
}

_FLOAT_KEYS = {"pd", "eta_d", "ea", "f", "mu", "tb", "atten"}
_INT_KEYS = {"seed", "samples"}


@dataclass(frozen=True)
class RunConfig:
    """Resolved settings of one invocation (defaults < config file < flags)."""

    subcommand: str
    pd: float
    eta_d: float
    ea: float
    f: float
    mu: float | None
    tb: float | None
    variant: str
    atten: float
    L: tuple[float, ...] | None
    protocol: str
    out: str | None
    seed: int
    samples: int
    K: float | None = None
    fail_prob: float | None = None


def parse_distance_range(text: str) -> tuple[float, ...]:
    """Parse "start:stop:step" (inclusive of both ends when step divides the
    span) or a single distance."""
    try:
        if ":" not in text:
            return (float(text),)
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError
        start, stop, step = (float(p) for p in parts)
    except ValueError:
        raise ConfigError(f"bad distance range {text!r}; expected start:stop:step") from None
    if step <= 0:
        raise ConfigError(f"distance step must be > 0, got {step}")
    if stop < start:
        raise ConfigError(f"distance range must have stop >= start, got {text!r}")
    count = int(math.floor((stop - start) / step + 1e-9))
    return tuple(start + i * step for i in range(count + 1))


def parse_config_file(path: str) -> dict[str, str]:
    """Flat ``key = value`` lines; '#' starts a comment; unknown keys rejected."""
    entries: dict[str, str] = {}
    with open(path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in _DEFAULTS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            entries[key] = value
    return entries


def _coerce(key: str, value):
    if value is None:
        return value
    try:
        if key in _FLOAT_KEYS:
            return float(value)
        if key in _INT_KEYS:
            return int(float(value))
    except (TypeError, ValueError):
        raise ConfigError(f"bad value for {key!r}: {value!r}") from None
    return value


def _resolve(args: argparse.Namespace) -> RunConfig:
    settings = dict(_DEFAULTS)
    config_path = getattr(args, "config", None)
    if config_path:
        try:
            file_entries = parse_config_file(config_path)
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from None
        for key, value in file_entries.items():
            settings[key] = _coerce(key, value)
    for key in settings:
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            settings[key] = _coerce(key, flag_value)
    distances = settings["L"]
    if isinstance(distances, str):
        distances = parse_distance_range(distances)
    return RunConfig(
        subcommand=args.cmd,
        pd=settings["pd"], eta_d=settings["eta_d"], ea=settings["ea"], f=settings["f"],
        mu=settings["mu"], tb=settings["tb"], variant=str(settings["variant"]).lower(),
        atten=settings["atten"], L=distances, protocol=str(settings["protocol"]).lower(),
        out=settings["out"], seed=int(settings["seed"]), samples=int(settings["samples"]),
        K=getattr(args, "K", None), fail_prob=getattr(args, "fail_prob", None),
    )


def _base_params(cfg: RunConfig, L_km: float, require_mu_tb: bool) -> SystemParams:
    if require_mu_tb and (cfg.mu is None or cfg.tb is None):
        raise ConfigError("--mu and --tb are required for this command")
    return SystemParams(
        L_km=L_km,
        p_d=cfg.pd,
        eta_d=cfg.eta_d,
        e_a=cfg.ea,
        f_ec=cfg.f,
        mu=cfg.mu if cfg.mu is not None else 0.1,
        t_B=cfg.tb if cfg.tb is not None else 0.5,
        variant=cfg.variant,
        atten_db_per_km=cfg.atten,
    )


def _scan_config(cfg: RunConfig) -> ScanConfig:
    if cfg.L is None:
        raise ConfigError("--L is required (a distance or start:stop:step)")
    try:
        protocol = Protocol(cfg.protocol)
    except ValueError:
        raise ConfigError(f"protocol must be 'cow' or 'nonclassical', got {cfg.protocol!r}") from None
    return ScanConfig(
        L_values=cfg.L,
        protocol=protocol,
        mu_fixed=cfg.mu,
        tb_fixed=cfg.tb,
    )


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------

def _fmt9(value: float) -> str:
    return format(float(value), ".9g")


def _plob_or_inf(params: SystemParams) -> float:
    eta_ch = channel_transmittance(params)
    return plob_bound(eta_ch) if eta_ch < 1.0 else math.inf


def format_rate_point_csv(point) -> str:
    values = (point.L_km, point.eta_ch, point.eta_tot, point.mu_opt, point.tB_opt,
              point.Q_z, point.E_b, point.E_p_u, point.R, point.R_tilde, point.R_plob)
    return ",".join(_fmt9(v) for v in values) + f",{point.flag}"


def _emit(lines: list[str], out_path: str | None) -> None:
    text = "\n".join(lines) + "\n"
    if out_path is None:
        sys.stdout.write(text)
    else:
        with open(out_path, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)


def _point_report_lines(params: SystemParams) -> list[str]:
    """Labelled key=value dump of every gain, error rate, and rate.

    Values are printed with repr so they round-trip to the exact library
    results.
    """
    gains = full_gain_set(params)
    e_z, q_z = bit_error_z(gains)
    bounds = gain_bounds(gains.Q_aa_M0, gains.Q_aa_M1, gains.Q_00_M0, gains.Q_00_M1, params.mu)
    ep_raw = phase_error_upper_raw(gains, bounds, params.mu)
    ep = phase_error_upper(gains, bounds, params.mu)
    ex_raw = bit_error_x_raw(gains, params.mu)
    ex = bit_error_x(gains, params.mu)
    lines = [
        f"L_km={params.L_km!r}",
        f"eta_ch={channel_transmittance(params)!r}",
        f"eta_tot={total_transmittance(params)!r}",
        f"mu={params.mu!r}",
        f"t_B={params.t_B!r}",
        f"variant={params.variant.value}",
    ]
    for name in ("Q_0z_T0", "Q_0z_T1", "Q_1z_T0", "Q_1z_T1",
                 "Q_0z_M0", "Q_0z_M1", "Q_1z_M0", "Q_1z_M1",
                 "Q_aa_M0", "Q_aa_M1", "Q_00_M0", "Q_00_M1",
                 "Q_0x_M0", "Q_0x_M1"):
        lines.append(f"{name}={getattr(gains, name)!r}")
    lines += [
        f"Q_0x_M1_upper={bounds.Q_0x_M1_upper!r}",
        f"Q_0x_M0_lower={bounds.Q_0x_M0_lower!r}",
        f"Qz={q_z!r}",
        f"Eb={e_z!r}",
        f"Ep_u_raw={ep_raw!r}",
        f"Ep_u={ep!r}",
        f"bound_trivial={'true' if ep_raw > 0.5 else 'false'}",
        f"Ex_raw={ex_raw!r}",
        f"Ex={ex!r}",
        f"R={key_rate_cow(q_z, ep, e_z, params.f_ec)!r}",
        f"R_tilde={key_rate_nonclassical(q_z, ex, e_z, params.f_ec)!r}",
        f"R_plob={_plob_or_inf(params)!r}",
    ]
    return lines


def _verification_report_lines(report: VerificationReport) -> list[str]:
    lines = [f"verify: seed={report.seed} samples={report.n_samples}"]
    n_checks = 0
    n_passed = 0
    for case in report.cases:
        p = case.params
        lines.append(
            f"case {case.label}: L={p.L_km:g} pd={p.p_d:g} eta_d={p.eta_d:g} "
            f"ea={p.e_a:g} mu={p.mu:g} tB={p.t_B:g} variant={p.variant.value}"
        )
        for check in case.checks:
            n_checks += 1
            n_passed += check.passed
            lines.append(
                f"  {check.name:9s} estimate={check.estimate:.6e} "
                f"expected={check.expected:.6e} z={check.z_score:+.2f} "
                f"{'PASS' if check.passed else 'FAIL'}"
            )
        lines.append("  closed-form gain ratios (informational):")
        for entry in case.ratios:
            lines.append(
                f"  {entry.name:9s} oracle={entry.oracle:.6e} "
                f"closed_form={entry.closed_form:.6e} ratio={entry.ratio:.4f}"
            )
    status = "PASS" if report.passed else "FAIL"
    lines.append(f"result: {status} ({n_passed}/{n_checks} checks within 4 sigma)")
    return lines


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_scan(cfg: RunConfig) -> int:
    base = _base_params(cfg, L_km=0.0, require_mu_tb=False)
    points = scan(base, _scan_config(cfg))
    lines = [CSV_HEADER] + [format_rate_point_csv(p) for p in points]
    _emit(lines, cfg.out)
    return EXIT_OK


def _cmd_point(cfg: RunConfig) -> int:
    if cfg.L is None or len(cfg.L) != 1:
        raise ConfigError("point requires a single --L distance")
    params = _base_params(cfg, L_km=cfg.L[0], require_mu_tb=True)
    _emit(_point_report_lines(params), cfg.out)
    return EXIT_OK


def _cmd_optimize(cfg: RunConfig) -> int:
    if cfg.L is None or len(cfg.L) != 1:
        raise ConfigError("optimize requires a single --L distance")
    base = _base_params(cfg, L_km=cfg.L[0], require_mu_tb=False)
    point = optimize_point(base, _scan_config(cfg))
    optimal = replace(base, mu=point.mu_opt, t_B=point.tB_opt)
    lines = [f"mu_opt={point.mu_opt!r}", f"tB_opt={point.tB_opt!r}",
             f"flag={point.flag}"] + _point_report_lines(optimal)
    _emit(lines, cfg.out)
    return EXIT_OK


def _cmd_verify(cfg: RunConfig) -> int:
    if cfg.samples < MIN_SAMPLES:
        sys.stderr.write(f"warning: insufficient samples (minimum {MIN_SAMPLES})\n")
        return EXIT_CONFIG
    report = run_verification(cfg.samples, cfg.seed)
    _emit(_verification_report_lines(report), cfg.out)
    if not report.passed:
        for label, check in report.failures():
            sys.stderr.write(
                f"verification failure in case {label}: {check.name} "
                f"z={check.z_score:+.2f} estimate={check.estimate:.6e} "
                f"expected={check.expected:.6e}\n"
            )
        return EXIT_VERIFY
    return EXIT_OK


def _cmd_finite_size(cfg: RunConfig) -> int:
    if cfg.K is None or cfg.fail_prob is None:
        raise ConfigError("finite-size requires --K and --fail-prob")
    try:
        epsilon = azuma_deviation(cfg.K, cfg.fail_prob)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    _emit([f"K={cfg.K!r}", f"fail_prob={cfg.fail_prob!r}", f"epsilon={epsilon!r}"], cfg.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing and entry point
# ---------------------------------------------------------------------------

def _add_parameter_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--pd", type=float, help="dark-count probability per detector per slot")
    parser.add_argument("--eta-d", dest="eta_d", type=float, help="detector efficiency")
    parser.add_argument("--ea", type=float, help="misalignment error")
    parser.add_argument("--f", type=float, help="error-correction efficiency")
    parser.add_argument("--mu", type=float, help="mean photon number of a non-empty pulse")
    parser.add_argument("--tb", type=float, help="data-line routing coefficient")
    parser.add_argument("--variant", choices=("passive", "active"), help="basis-choice variant")
    parser.add_argument("--atten", type=float, help="fiber attenuation in dB/km")
    parser.add_argument("--config", help="flat key = value configuration file")
    parser.add_argument("--out", help="output path (default: stdout)")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cowqkd",
        description="Asymptotic secret-key rates for coherent-one-way QKD.",
    )
    sub = parser.add_subparsers(dest="cmd", required=True)

    p_scan = sub.add_parser("scan", help="optimize the key rate over a distance range, emit CSV")
    _add_parameter_flags(p_scan)
    p_scan.add_argument("--L", help="distance range start:stop:step in km")
    p_scan.add_argument("--protocol", choices=("cow", "nonclassical"),
                        help="rate to maximize")

    p_point = sub.add_parser("point", help="evaluate one (L, mu, t_B) without optimization")
    _add_parameter_flags(p_point)
    p_point.add_argument("--L", help="distance in km")

    p_opt = sub.add_parser("optimize", help="optimize a single distance, print the full report")
    _add_parameter_flags(p_opt)
    p_opt.add_argument("--L", help="distance in km")
    p_opt.add_argument("--protocol", choices=("cow", "nonclassical"),
                       help="rate to maximize")

    p_verify = sub.add_parser("verify", help="run the Monte-Carlo oracle comparisons")
    _add_parameter_flags(p_verify)
    p_verify.add_argument("--seed", type=int, help="oracle seed")
    p_verify.add_argument("--samples", type=float, help="samples per estimated gain")

    p_fs = sub.add_parser("finite-size", help="concentration deviation for K rounds")
    p_fs.add_argument("--K", type=float, help="number of rounds")
    p_fs.add_argument("--fail-prob", dest="fail_prob", type=float, help="failure probability")
    p_fs.add_argument("--out", help="output path (default: stdout)")

    return parser


_COMMANDS = {
    "scan": _cmd_scan,
    "point": _cmd_point,
    "optimize": _cmd_optimize,
    "verify": _cmd_verify,
    "finite-size": _cmd_finite_size,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    try:
        cfg = _resolve(args)
        return _COMMANDS[args.cmd](cfg)
    except (ConfigError, ParameterError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_CONFIG
    except OSError as exc:
        sys.stderr.write(f"I/O error: {exc}\n")
        return EXIT_IO


def app() -> None:
    sys.exit(main())
