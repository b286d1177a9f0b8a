"""Command-line front end: sweeps, verification, recursions, noise
predictions, and shot emulation, emitting CSV/JSON artifacts.

Exit codes: 0 success, 1 usage error, 2 validation failure, 3 verification
failure. All randomness flows from --seed; Monte-Carlo backends and the
emulator refuse to run without one. Output files are written to a
temporary path and renamed, so a failed run never leaves a partial file;
reruns with the same configuration and seed are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .calibration import (
    load_calibration,
    predict_combined,
    predict_fidelity_ico,
    predict_fidelity_mdd,
)
from .channels import (
    KrausChannel,
    MeasurementDirection,
    projective_measurement_channel,
    recovery_rate,
)
from .ensembles import (
    RngStream,
    clifford_group_1q,
    haar_batch,
    pauli_group_1q,
    verify_2design,
    weingarten_moment,
)
from .iterative import RecursionSpec, iterate
from .linalg import DensityMatrix
from .schemes import analytic_curves, run_combined, run_ico, run_mdd, run_original
from .shots import ShotPlan, run_emulated_experiment
from .twirl import (
    TwirlBackend,
    asymptotic_residual,
    clifford_exact_equals_analytic,
    twirl_output,
)

__all__ = ["main", "SWEEP_COLUMNS", "ITERATE_COLUMNS", "PREDICT_COLUMNS", "read_rows"]

SWEEP_COLUMNS = (
    "scheme",
    "backend",
    "theta_rad",
    "rx2",
    "p_est",
    "sigma_c_x",
    "sigma_a_x",
    "p_succ",
    "fidelity",
    "fidelity_analytic",
    "ci_low",
    "ci_high",
    "shots",
    "seed",
)

ITERATE_COLUMNS = (
    "variant",
    "d_t",
    "d_tb",
    "p0",
    "x",
    "step",
    "p",
    "p_success",
    "fp1",
    "fp1_stable",
    "fp2",
    "fp2_stable",
    "discriminant",
)

PREDICT_COLUMNS = (
    "scheme",
    "theta_rad",
    "rx2",
    "expectation",
    "expectation_aux",
    "p_succ",
    "fidelity",
    "fidelity_noiseless",
)


class UsageError(Exception):
    pass


class ValidationFailure(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse default exits 2; usage errors are 1
        raise UsageError(message)


# ---------------------------------------------------------------------------
# Serialization

def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def _atomic_write_text(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8", newline="\n")
    os.replace(tmp, path)


def write_rows(path: Path, columns, rows, fmt: str, config: dict) -> None:
    if fmt == "csv":
        lines = [",".join(columns)]
        for row in rows:
            lines.append(",".join(_fmt(row.get(c)) for c in columns))
        _atomic_write_text(path, "\n".join(lines) + "\n")
    else:
        payload = {
            "version": __version__,
            "config": config,
            "columns": list(columns),
            "rows": [{c: row.get(c) for c in columns} for row in rows],
        }
        _atomic_write_text(path, json.dumps(payload, indent=2) + "\n")


def read_rows(path) -> tuple[list[str], list[dict[str, str]]]:
    """Parse a CSV emitted by this tool back into header + string rows."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise ValueError(f"{path}: empty file")
    header = lines[0].split(",")
    rows = []
    for line in lines[1:]:
        parts = line.split(",")
        if len(parts) != len(header):
            raise ValueError(f"{path}: row width {len(parts)} != header {len(header)}")
        rows.append(dict(zip(header, parts)))
    return header, rows


# ---------------------------------------------------------------------------
# Configuration handling: optional key=value file, flags win.

_INT_KEYS = {"theta_points", "shots", "seed", "dt", "dtb", "steps", "haar_samples"}
_FLOAT_KEYS = {"p0", "x", "theta", "flip0", "flip1"}


def _load_config_file(path: str) -> dict:
    out = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationFailure(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key = key.strip().replace("-", "_")
        value = value.strip()
        if key in _INT_KEYS:
            out[key] = int(value)
        elif key in _FLOAT_KEYS:
            out[key] = float(value)
        else:
            out[key] = value
    return out


class _Config:
    """Flag values with config-file fallback; explicit flags always win."""

    def __init__(self, args: argparse.Namespace):
        self._args = vars(args)
        self._file = (
            _load_config_file(self._args["config"]) if self._args.get("config") else {}
        )

    def get(self, name: str, default=None):
        value = self._args.get(name)
        if value is not None:
            return value
        return self._file.get(name, default)

    def require(self, name: str, why: str):
        value = self.get(name)
        if value is None:
            raise ValidationFailure(f"--{name.replace('_', '-')} is required {why}")
        return value

    def echo(self) -> dict:
        merged = dict(self._file)
        merged.update({k: v for k, v in self._args.items() if v is not None and k != "func"})
        # The output/config paths are environment, not configuration: a rerun
        # into a different file must still be byte-identical.
        for key in ("config", "out"):
            merged.pop(key, None)
        return {k: v for k, v in sorted(merged.items())}


def _parse_backend(cfg: _Config) -> TwirlBackend:
    spec = cfg.get("backend", "clifford")
    if spec == "analytic":
        return TwirlBackend.analytic()
    if spec == "clifford":
        return TwirlBackend.clifford_exact()
    if spec.startswith("haar:"):
        try:
            samples = int(spec.split(":", 1)[1])
        except ValueError:
            raise ValidationFailure(f"bad backend spec {spec!r}")
        seed = cfg.require("seed", "for the Monte-Carlo backend (no hidden entropy)")
        return TwirlBackend.haar_mc(samples, RngStream(int(seed)))
    raise ValidationFailure(f"unknown backend {spec!r}; use analytic|clifford|haar:N")


def _theta_grid(cfg: _Config) -> np.ndarray:
    n = int(cfg.get("theta_points", 50))
    if n < 2:
        raise ValidationFailure("need at least 2 sweep points")
    return np.linspace(0.0, np.pi, n)


def _out_path(cfg: _Config) -> Path:
    return Path(cfg.require("out", "to name the output file"))


# ---------------------------------------------------------------------------
# Commands

def cmd_scheme_sweep(cfg: _Config) -> int:
    scheme = cfg.require("scheme", "to choose the sweep")
    if scheme not in ("original", "ico", "mdd", "combined"):
        raise ValidationFailure(f"unknown scheme {scheme!r}")
    backend = _parse_backend(cfg)
    seed = cfg.get("seed")
    zero = DensityMatrix.pure([1, 0])
    rows = []
    for theta in _theta_grid(cfg):
        r = MeasurementDirection.from_angle(theta)
        ch = projective_measurement_channel(r)
        if scheme == "original":
            rep = run_original(ch, zero, None, backend)
        elif scheme == "ico":
            rep = run_ico(ch, zero, backend, direction=r)
        elif scheme == "mdd":
            rep = run_mdd(r, zero, backend)
        else:
            rep = run_combined(r, zero, backend)
        curves = analytic_curves(scheme, theta)
        rows.append(
            {
                "scheme": scheme,
                "backend": backend.label(),
                "theta_rad": float(theta),
                "rx2": float(np.sin(theta) ** 2),
                "p_est": rep.recovery_rate,
                "sigma_c_x": rep.sigma_c_x,
                "sigma_a_x": rep.sigma_a_x,
                "p_succ": rep.success_probability,
                "fidelity": rep.fidelity,
                "fidelity_analytic": curves.fidelity,
                "ci_low": None,
                "ci_high": None,
                "shots": 0,
                "seed": seed,
            }
        )
    write_rows(_out_path(cfg), SWEEP_COLUMNS, rows, cfg.get("format", "csv"), cfg.echo())
    return 0


def cmd_twirl(cfg: _Config) -> int:
    backend = _parse_backend(cfg)
    dtb = int(cfg.get("dtb", 2))
    theta = float(cfg.get("theta", 0.0))
    r = MeasurementDirection.from_angle(theta)
    if dtb == 2:
        ch = projective_measurement_channel(r)
    else:
        from .linalg import SystemLayout

        if dtb % 2:
            raise ValidationFailure("composite dimension must be even (qubit target)")
        lay = SystemLayout.of(target=2, bath=dtb // 2)
        ch = projective_measurement_channel(r, lay, "target")
    rho = DensityMatrix.basis_state(dtb)
    result = twirl_output(ch, rho, backend)
    exact = twirl_output(ch, rho, TwirlBackend.analytic())
    deviation = float(np.max(np.abs(result.output.matrix - exact.output.matrix)))
    payload = {
        "version": __version__,
        "config": cfg.echo(),
        "dtb": dtb,
        "theta": theta,
        "backend": backend.label(),
        "recovery_rate": result.recovery_rate,
        "samples_used": result.samples_used,
        "max_deviation_from_analytic": deviation,
        "output_state": [
            [[float(z.real), float(z.imag)] for z in row] for row in result.output.matrix
        ],
    }
    _atomic_write_text(_out_path(cfg), json.dumps(payload, indent=2) + "\n")
    return 0


def cmd_iterate(cfg: _Config) -> int:
    variant = cfg.require("variant", "to choose the recursion")
    spec = RecursionSpec(
        variant=variant,
        p0=float(cfg.require("p0", "as the starting rate")),
        d_t=int(cfg.get("dt", 2)),
        d_tb=int(cfg.get("dtb", 2)),
        steps=int(cfg.get("steps", 10)),
        noise_keep=float(cfg.get("x", 1.0)),
    )
    trace = iterate(spec)
    fps = list(trace.fixed_points) + [None, None]
    rows = []
    for n, p in enumerate(trace.rates):
        success = None
        if trace.success_probabilities is not None and n >= 1:
            success = trace.success_probabilities[n - 1]
        rows.append(
            {
                "variant": spec.variant,
                "d_t": spec.d_t,
                "d_tb": spec.d_tb,
                "p0": spec.p0,
                "x": spec.noise_keep,
                "step": n,
                "p": p,
                "p_success": success,
                "fp1": fps[0].value if fps[0] else None,
                "fp1_stable": fps[0].stable if fps[0] else None,
                "fp2": fps[1].value if fps[1] else None,
                "fp2_stable": fps[1].stable if fps[1] else None,
                "discriminant": trace.discriminant,
            }
        )
    write_rows(_out_path(cfg), ITERATE_COLUMNS, rows, cfg.get("format", "csv"), cfg.echo())
    return 0


def cmd_predict_noisy(cfg: _Config) -> int:
    scheme = cfg.require("scheme", "to choose the predictor")
    cal = load_calibration(cfg.require("calibration", "to locate the calibration file"))
    if cal.scheme != scheme:
        raise ValidationFailure(
            f"calibration file is for {cal.scheme!r}, requested {scheme!r}"
        )
    predictor = {
        "ico": predict_fidelity_ico,
        "mdd": predict_fidelity_mdd,
        "combined": predict_combined,
    }.get(scheme)
    if predictor is None:
        raise ValidationFailure(f"no noise predictor for scheme {scheme!r}")
    rows = []
    for theta in _theta_grid(cfg):
        pred = predictor(float(theta), cal)
        curves = analytic_curves(scheme, float(theta))
        rows.append(
            {
                "scheme": scheme,
                "theta_rad": float(theta),
                "rx2": float(np.sin(theta) ** 2),
                "expectation": pred.expectation,
                "expectation_aux": pred.expectation_aux,
                "p_succ": pred.success,
                "fidelity": pred.fidelity,
                "fidelity_noiseless": curves.fidelity,
            }
        )
    write_rows(_out_path(cfg), PREDICT_COLUMNS, rows, cfg.get("format", "csv"), cfg.echo())
    return 0


def cmd_emulate(cfg: _Config) -> int:
    scheme = cfg.require("scheme", "to choose the emulated experiment")
    seed = int(cfg.require("seed", "for the shot sampler (no hidden entropy)"))
    shots = int(cfg.get("shots", 1000))
    flips = None
    if cfg.get("flip0") is not None or cfg.get("flip1") is not None:
        flips = (float(cfg.get("flip0", 0.0) or 0.0), float(cfg.get("flip1", 0.0) or 0.0))
    plan = ShotPlan(
        shots=shots,
        thetas=tuple(_theta_grid(cfg)),
        rng=RngStream(seed),
        readout_flips=flips,
    )
    rows = []
    for point in run_emulated_experiment(scheme, plan):
        rows.append(
            {
                "scheme": scheme,
                "backend": "clifford",
                "theta_rad": point.theta,
                "rx2": point.rx2,
                "p_est": point.recovery_rate,
                "sigma_c_x": point.sigma_c_x,
                "sigma_a_x": point.sigma_a_x,
                "p_succ": point.success,
                "fidelity": point.fidelity,
                "fidelity_analytic": point.analytic.fidelity,
                "ci_low": point.fidelity_ci[0],
                "ci_high": point.fidelity_ci[1],
                "shots": shots,
                "seed": seed,
            }
        )
    write_rows(_out_path(cfg), SWEEP_COLUMNS, rows, cfg.get("format", "csv"), cfg.echo())
    return 0


def cmd_verify(cfg: _Config) -> int:
    checks = []

    ensemble_name = cfg.get("ensemble", "clifford")
    if ensemble_name == "clifford":
        ensemble = clifford_group_1q()
    elif ensemble_name == "pauli":
        ensemble = pauli_group_1q()
    else:
        raise ValidationFailure(f"unknown ensemble {ensemble_name!r}")
    report = verify_2design(ensemble)
    checks.append(
        {
            "check": f"2design-exactness[{ensemble_name}]",
            "value": report.max_deviation,
            "tolerance": report.tolerance,
            "status": "pass" if report.passed else "fail",
        }
    )

    n = int(cfg.get("haar_samples", 100_000))
    seed = cfg.get("seed", 20_240_000)
    us = haar_batch(2, n, RngStream(int(seed)))
    estimate = float(np.mean(np.abs(us[:, 0, 0]) ** 4))
    want = weingarten_moment(0, 0, 0, 0, 0, 0, 0, 0, dim=2)
    # std of |U00|^4 is ~0.3; 5 sigma of the mean as statistical tolerance
    stat_tol = 5 * 0.3 / np.sqrt(n)
    if n < 1000:
        status = "inconclusive"
    else:
        status = "pass" if abs(estimate - want) < stat_tol else "fail"
    checks.append(
        {
            "check": "haar-second-moment-mc",
            "value": abs(estimate - want),
            "tolerance": stat_tol,
            "status": status,
        }
    )

    probes = [
        projective_measurement_channel(MeasurementDirection.from_angle(t))
        for t in (0.0, 0.7, np.pi / 2)
    ]
    probes.append(
        KrausChannel(
            2,
            (
                np.array([[1, 0], [0, np.sqrt(0.7)]], dtype=complex),
                np.array([[0, np.sqrt(0.3)], [0, 0]], dtype=complex),
            ),
        )
    )
    worst = max(clifford_exact_equals_analytic(ch) for ch in probes)
    checks.append(
        {
            "check": "group-average-equals-analytic-twirl",
            "value": worst,
            "tolerance": 1e-12,
            "status": "pass" if worst < 1e-12 else "fail",
        }
    )

    residuals = []
    ok = True
    for nq in (1, 2, 3):
        dim = 2**nq
        r = MeasurementDirection.from_angle(0.9)
        if nq == 1:
            ch = projective_measurement_channel(r)
        else:
            from .linalg import SystemLayout

            ch = projective_measurement_channel(
                r, SystemLayout.of(target=2, bath=dim // 2), "target"
            )
        res = asymptotic_residual(ch, DensityMatrix.basis_state(dim))
        residuals.append(res.residual)
        ok = ok and res.residual <= res.bound
    ok = ok and residuals[0] > residuals[1] > residuals[2]
    checks.append(
        {
            "check": "coherent-block-residual-bounds",
            "value": residuals[-1],
            "tolerance": None,
            "status": "pass" if ok else "fail",
        }
    )

    payload = {"version": __version__, "config": cfg.echo(), "checks": checks}
    out = cfg.get("out")
    text = json.dumps(payload, indent=2) + "\n"
    if out:
        _atomic_write_text(Path(out), text)
    else:
        sys.stdout.write(text)
    return 3 if any(c["status"] == "fail" for c in checks) else 0


# ---------------------------------------------------------------------------

def build_parser() -> _Parser:
    parser = _Parser(prog="scrambling-recovery", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="key=value config file; flags win")
        p.add_argument("--out", help="output path")
        p.add_argument("--format", choices=("csv", "json"), help="output format")
        p.add_argument("--seed", type=int, help="master seed for all randomness")

    p = sub.add_parser("scheme-sweep", help="sweep a scheme over the angle grid")
    add_common(p)
    p.add_argument("--scheme", choices=("original", "ico", "mdd", "combined"))
    p.add_argument("--backend", help="analytic | clifford | haar:N")
    p.add_argument("--theta-points", type=int, dest="theta_points")
    p.set_defaults(func=cmd_scheme_sweep)

    p = sub.add_parser("twirl", help="twirl one projective perturbation")
    add_common(p)
    p.add_argument("--backend", help="analytic | clifford | haar:N")
    p.add_argument("--dtb", type=int, help="composite dimension")
    p.add_argument("--theta", type=float, help="measurement angle")
    p.set_defaults(func=cmd_twirl)

    p = sub.add_parser("iterate", help="run a recovery-rate recursion")
    add_common(p)
    p.add_argument("--variant", choices=("plain", "plain-noisy", "ico", "eico", "eico-noisy"))
    p.add_argument("--p0", type=float)
    p.add_argument("--dt", type=int)
    p.add_argument("--dtb", type=int)
    p.add_argument("--x", type=float, help="noise keep rate")
    p.add_argument("--steps", type=int)
    p.set_defaults(func=cmd_iterate)

    p = sub.add_parser("verify", help="run the built-in verification suite")
    add_common(p)
    p.add_argument("--ensemble", choices=("clifford", "pauli"))
    p.add_argument("--haar-samples", type=int, dest="haar_samples")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("predict-noisy", help="noise-calibrated theory curves")
    add_common(p)
    p.add_argument("--scheme", choices=("ico", "mdd", "combined"))
    p.add_argument("--calibration", help="calibration file path")
    p.add_argument("--theta-points", type=int, dest="theta_points")
    p.set_defaults(func=cmd_predict_noisy)

    p = sub.add_parser("emulate", help="finite-shot emulation of a sweep")
    add_common(p)
    p.add_argument("--scheme", choices=("original", "ico", "mdd", "combined"))
    p.add_argument("--shots", type=int, help="shots per circuit instance")
    p.add_argument("--theta-points", type=int, dest="theta_points")
    p.add_argument("--flip0", type=float, help="P(read 1 | true 0) per qubit")
    p.add_argument("--flip1", type=float, help="P(read 0 | true 1) per qubit")
    p.set_defaults(func=cmd_emulate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = _Config(args)
        return args.func(cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (ValidationFailure, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
