"""Noise prediction from calibration runs with the perturbation removed.

With no perturbation the twirl is the identity channel, so a run of the
bare circuit measures the error channel itself: the x expectations of the
control/auxiliary qubit prepared in |+> and |->, and the post-selected
target fidelities. Those few numbers parameterize an affine model that
predicts every noisy observable of the real schemes, replacing a full
process tomography (which would need d^4 - d^2 parameters).

Model assumptions, carried as-is: the error channel is Hermitian (the bare
circuit is time-reversal symmetric), and the group-averaged cross
polarization of the target error vanishes. Both hold exactly for
depolarizing noise, which is what :func:`synthesize_calibration` generates;
measured records from other noise are ingested without clamping, and any
resulting out-of-range prediction is left visible to the caller.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

__all__ = [
    "CalibrationRecord",
    "NoisyPrediction",
    "predict_expectation",
    "predict_fidelity_ico",
    "predict_fidelity_mdd",
    "predict_combined",
    "save_calibration",
    "load_calibration",
    "synthesize_calibration",
]


def _check_range(name: str, value: float | None, lo: float, hi: float) -> None:
    if value is not None and not lo <= value <= hi:
        raise ValueError(f"{name} = {value} outside [{lo}, {hi}]")


@dataclass(frozen=True)
class CalibrationRecord:
    """Noise quantities measured with the perturbation absent.

    ``sigma_plus``/``sigma_minus`` are the x expectations of the scheme's
    recorded qubit (control for the switch schemes, auxiliary for the
    direction scheme) prepared in |+> and |->. ``f_plus``/``f_minus`` are
    the post-selected target fidelities for those preparations. The
    combined scheme additionally carries the auxiliary pair and the four
    target fidelities ``f_pp .. f_mm`` indexed as (control state,
    auxiliary state).
    """

    scheme: str
    sigma_plus: float
    sigma_minus: float
    f_plus: float | None = None
    f_minus: float | None = None
    sigma_a_plus: float | None = None
    sigma_a_minus: float | None = None
    f_pp: float | None = None
    f_pm: float | None = None
    f_mp: float | None = None
    f_mm: float | None = None

    def __post_init__(self):
        if self.scheme not in ("ico", "mdd", "combined"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        _check_range("sigma_plus", self.sigma_plus, -1, 1)
        _check_range("sigma_minus", self.sigma_minus, -1, 1)
        for name in ("f_plus", "f_minus", "f_pp", "f_pm", "f_mp", "f_mm"):
            _check_range(name, getattr(self, name), 0, 1)
        _check_range("sigma_a_plus", self.sigma_a_plus, -1, 1)
        _check_range("sigma_a_minus", self.sigma_a_minus, -1, 1)
        if self.scheme in ("ico", "mdd"):
            if self.f_plus is None or self.f_minus is None:
                raise ValueError(f"{self.scheme} calibration needs f_plus and f_minus")
        if self.scheme == "combined":
            needed = ("sigma_a_plus", "sigma_a_minus", "f_pp", "f_pm", "f_mp", "f_mm")
            missing = [n for n in needed if getattr(self, n) is None]
            if missing:
                raise ValueError(f"combined calibration missing {missing}")

    @classmethod
    def perfect(cls, scheme: str) -> "CalibrationRecord":
        if scheme == "combined":
            return cls(
                scheme,
                1.0,
                -1.0,
                sigma_a_plus=1.0,
                sigma_a_minus=-1.0,
                f_pp=1.0,
                f_pm=1.0,
                f_mp=1.0,
                f_mm=1.0,
            )
        return cls(scheme, 1.0, -1.0, f_plus=1.0, f_minus=1.0)


@dataclass(frozen=True)
class NoisyPrediction:
    theta: float
    expectation: float
    success: float
    fidelity: float
    expectation_aux: float | None = None


def predict_expectation(theory: float, cal: CalibrationRecord) -> float:
    """Affine correction of a noiseless expectation value:
    (s+ + s-)/2 + ((s+ - s-)/2) * theory."""
    if not -1.0 <= theory <= 1.0:
        raise ValueError("theory expectation must lie in [-1, 1]")
    mean = (cal.sigma_plus + cal.sigma_minus) / 2
    half_diff = (cal.sigma_plus - cal.sigma_minus) / 2
    return mean + half_diff * theory


def predict_fidelity_ico(theta: float, cal: CalibrationRecord) -> NoisyPrediction:
    """Noisy switch-scheme curve at sweep angle ``theta``.

    Built from the branch fidelities F0 = F/3 + 1/3 and
    F1 = ((2 - rx^2)/3) F + rx^2/6; under perfect calibration it collapses
    to (7 + cos^2 theta)/10.
    """
    rx2 = float(np.sin(theta) ** 2)
    sp, sm = cal.sigma_plus, cal.sigma_minus
    fp, fm = cal.f_plus, cal.f_minus
    f0p, f0m = fp / 3 + 1 / 3, fm / 3 + 1 / 3
    f1p = (2 - rx2) / 3 * fp + rx2 / 6
    f1m = (2 - rx2) / 3 * fm + rx2 / 6
    denom = 2 + (sp + sm) + (2 / 3) * (sp - sm)
    fid = ((1 + sp) * (f0p + f1p) + (1 + sm) * (f0m - f1m)) / denom
    expectation = predict_expectation(2 / 3, cal)
    return NoisyPrediction(theta, expectation, (1 + expectation) / 2, fid)


def predict_fidelity_mdd(theta: float, cal: CalibrationRecord) -> NoisyPrediction:
    """Noisy direction-scheme curve; perfect calibration collapses to
    2/(3 (1 + sin^2 theta)) + 1/3."""
    rx2 = float(np.sin(theta) ** 2)
    sp, sm = cal.sigma_plus, cal.sigma_minus
    fp, fm = cal.f_plus, cal.f_minus
    f0p, f0m = fp / 3 + 1 / 3, fm / 3 + 1 / 3
    f1p = (2 - rx2) / 3 * fp + (2 * rx2 - 1) / 3
    f1m = (2 - rx2) / 3 * fm + (2 * rx2 - 1) / 3
    denom = 2 + (sp + sm) + rx2 * (sp - sm)
    fid = ((1 + sp) * (f0p + f1p) + (1 + sm) * (f0m - f1m)) / denom
    expectation = predict_expectation(rx2, cal)
    return NoisyPrediction(theta, expectation, (1 + expectation) / 2, fid)


def predict_combined(theta: float, cal: CalibrationRecord) -> NoisyPrediction:
    """Noisy combined-scheme success probability and fidelity.

    The control expectation carries theory value 2/3 and the auxiliary one
    sin^2 theta, each corrected with its own calibration pair. (The control
    and auxiliary roles are fixed by which qubit records which quantity;
    they are not interchangeable.)
    """
    if cal.scheme != "combined":
        raise ValueError("combined prediction needs a combined calibration record")
    rx2 = float(np.sin(theta) ** 2)
    cp, cm = cal.sigma_plus, cal.sigma_minus
    ap, am = cal.sigma_a_plus, cal.sigma_a_minus
    fpp, fpm, fmp, fmm = cal.f_pp, cal.f_pm, cal.f_mp, cal.f_mm

    def branch_fidelities(f_cplus: float, f_cminus: float) -> tuple[float, float]:
        # f_cplus/f_cminus: target fidelity with control prepared +/-, at a
        # fixed auxiliary preparation.
        f0 = (
            ((1 + cp) * (1 + f_cplus) + (1 + cm) * (1 + f_cminus)) / 12
            + (2 - rx2) / 12 * ((1 + cp) * f_cplus - (1 + cm) * f_cminus)
            + rx2 / 24 * (cp - cm)
        )
        f1 = (
            (2 - rx2) / 12 * ((1 + cp) * f_cplus + (1 + cm) * f_cminus)
            + (2 * rx2 - 1) / 12 * (2 + cp + cm)
            + ((1 + cp) * f_cplus - (1 + cm) * f_cminus) / 12
            + rx2 / 24 * (cp - cm)
        )
        return f0, f1

    f0_ap, f1_ap = branch_fidelities(fpp, fmp)
    f0_am, f1_am = branch_fidelities(fpm, fmm)

    p_pp = (2 + ap + am) / 16 * (2 + cp + cm + (2 / 3) * (cp - cm)) + (
        ap - am
    ) / 16 * ((2 + cp + cm) * rx2 + (rx2 + 1) / 3 * (cp - cm))
    fid = (
        (1 + ap) * f0_ap + (1 + am) * f0_am + (1 + ap) * f1_ap - (1 + am) * f1_am
    ) / (4 * p_pp)

    sigma_c = predict_expectation(2 / 3, cal)
    mean_a = (ap + am) / 2
    sigma_a = mean_a + (ap - am) / 2 * rx2
    return NoisyPrediction(theta, sigma_c, p_pp, fid, expectation_aux=sigma_a)


# ---------------------------------------------------------------------------
# File format: flat "key = value" lines, hand-editable and diff-friendly.

def save_calibration(cal: CalibrationRecord, path) -> None:
    lines = []
    for f in fields(cal):
        value = getattr(cal, f.name)
        if value is None:
            continue
        rendered = value if isinstance(value, str) else repr(float(value))
        lines.append(f"{f.name} = {rendered}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_calibration(path) -> CalibrationRecord:
    known = {f.name for f in fields(CalibrationRecord)}
    values: dict[str, object] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, text = line.partition("=")
        key = key.strip()
        text = text.strip()
        if key not in known:
            raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
        if key == "scheme":
            values[key] = text
        else:
            try:
                values[key] = float(text)
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: bad number {text!r}") from exc
    if "scheme" not in values:
        raise ValueError(f"{path}: missing 'scheme' key")
    return CalibrationRecord(**values)


def synthesize_calibration(
    scheme: str,
    control_error: float = 0.0,
    aux_error: float = 0.0,
    target_error: float = 0.0,
) -> CalibrationRecord:
    """Record produced by depolarizing noise of the given rates per qubit.

    A depolarizing channel of rate e contracts the recorded qubit's x
    expectation to +-(1 - e) and sends the target fidelity to
    (1 + (1 - e))/2. Zero rates give the perfect record.
    """
    for name, value in (
        ("control_error", control_error),
        ("aux_error", aux_error),
        ("target_error", target_error),
    ):
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"{name} must lie in [0, 1]")
    keep_t = 1 - target_error
    f_target = (1 + keep_t) / 2
    if scheme == "ico":
        keep = 1 - control_error
        return CalibrationRecord("ico", keep, -keep, f_plus=f_target, f_minus=f_target)
    if scheme == "mdd":
        keep = 1 - aux_error
        return CalibrationRecord("mdd", keep, -keep, f_plus=f_target, f_minus=f_target)
    if scheme == "combined":
        keep_c = 1 - control_error
        keep_a = 1 - aux_error
        return CalibrationRecord(
            "combined",
            keep_c,
            -keep_c,
            sigma_a_plus=keep_a,
            sigma_a_minus=-keep_a,
            f_pp=f_target,
            f_pm=f_target,
            f_mp=f_target,
            f_mm=f_target,
        )
    raise ValueError(f"unknown scheme {scheme!r}")
