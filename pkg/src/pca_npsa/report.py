"""Run reports: a versioned JSON record of one CLI invocation.

``REPORT_SCHEMA`` is the published JSON Schema for these records.
"""

from __future__ import annotations

import math

import numpy as np

from .demod import DemodCoefficients, ErrorStats, phase_error
from .oracle import lsq_demodulate
from .pipeline import PcaDemodulation
from .spectral import ftf

SCHEMA_ID = "pca-npsa/run-report"
SCHEMA_VERSION = 1

_num = {"type": "number"}
_num_or_null = {"type": ["number", "null"]}

_error_stats = {
    "type": "object",
    "required": ["rms", "max_abs", "piston", "conjugated", "n_valid", "reference"],
    "properties": {
        "rms": _num,
        "max_abs": _num,
        "piston": _num,
        "conjugated": {"type": "boolean"},
        "n_valid": {"type": "integer", "minimum": 1},
        "reference": {"enum": ["truth", "oracle"]},
    },
    "additionalProperties": False,
}

_row = {
    "type": "object",
    "required": ["method", "detuning_ratio", "g_snr", "r_h", "phase_error"],
    "properties": {
        "method": {"enum": ["plain", "corrected", "oracle"]},
        "rho": _num_or_null,
        "orientation": {"enum": ["as-is", "conjugated", None]},
        "coefficients": {
            "type": ["array", "null"],
            "items": {"type": "array", "items": _num, "minItems": 2, "maxItems": 2},
        },
        "detuning_ratio": _num_or_null,
        "g_snr": _num_or_null,
        "r_h": _num_or_null,
        "r_h_tail_bound": _num_or_null,
        "phase_error": {"oneOf": [{"type": "null"}, _error_stats]},
    },
    "additionalProperties": False,
}

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "$id": SCHEMA_ID,
    "type": "object",
    "required": ["schema", "schema_version", "command", "input", "steps", "rows"],
    "properties": {
        "schema": {"const": SCHEMA_ID},
        "schema_version": {"const": SCHEMA_VERSION},
        "command": {"enum": ["demod", "analyze", "compare"]},
        "input": {
            "type": "object",
            "required": ["path", "sha256", "frames", "height", "width"],
            "properties": {
                "path": {"type": "string"},
                "sha256": {"type": "string", "pattern": "^[0-9a-f]{64}$"},
                "frames": {"type": "integer", "minimum": 1},
                "height": {"type": "integer", "minimum": 1},
                "width": {"type": "integer", "minimum": 1},
            },
        },
        "steps": {"type": ["array", "null"], "items": _num},
        "steps_source": {"enum": ["file", "cli", None]},
        "eigenvalues": {"type": "array", "items": _num},
        "rho": _num,
        "rho_measured": _num,
        "rho_swapped": {"type": "boolean"},
        "rows": {"type": "array", "items": _row, "minItems": 1},
        "checks": {"type": "object", "additionalProperties": {"type": "boolean"}},
        "outputs": {"type": "object", "additionalProperties": {"type": "string"}},
    },
    "additionalProperties": False,
}


def _finite(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def error_dict(stats: ErrorStats, reference: str) -> dict:
    return {
        "rms": stats.rms,
        "max_abs": stats.max_abs,
        "piston": stats.piston,
        "conjugated": bool(stats.conjugated),
        "n_valid": stats.n_valid,
        "reference": reference,
    }


def coefficient_row(method: str, coeffs: DemodCoefficients, steps, k_max: int = 50) -> dict:
    row = {
        "method": method,
        "rho": coeffs.rho,
        "orientation": coeffs.orientation,
        "coefficients": [[float(z.real), float(z.imag)] for z in coeffs.c],
        "detuning_ratio": None,
        "g_snr": None,
        "r_h": None,
        "r_h_tail_bound": None,
        "phase_error": None,
    }
    if steps is not None:
        rep = ftf(coeffs, steps, omega=np.zeros(1), k_max=k_max)
        row.update(
            detuning_ratio=_finite(rep.detuning_ratio),
            g_snr=_finite(rep.g_snr),
            r_h=_finite(rep.r_h),
            r_h_tail_bound=_finite(rep.r_h_tail_bound),
        )
    return row


def base_report(command: str, input_info: dict, steps, steps_source, result: PcaDemodulation | None) -> dict:
    rep = {
        "schema": SCHEMA_ID,
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "input": input_info,
        "steps": None if steps is None else [float(t) for t in np.asarray(steps)],
        "steps_source": steps_source,
        "rows": [],
        "checks": {},
        "outputs": {},
    }
    if result is not None:
        rep.update(
            eigenvalues=[float(v) for v in result.basis.eigenvalues],
            rho=float(result.rho),
            rho_measured=float(result.rho_measured),
            rho_swapped=bool(result.corrected.swapped),
        )
    return rep


def comparison_rows(stack, result: PcaDemodulation, steps, k_max: int = 50) -> tuple[list, dict]:
    """Plain, corrected and least-squares rows side by side.

    Phase errors are measured against the embedded truth when the stack has
    one, otherwise against the least-squares oracle (which needs steps).
    """
    oracle_phase = lsq_demodulate(stack, steps).phi_hat if steps is not None else None
    if stack.truth is not None:
        reference, ref_phase = "truth", stack.truth
    elif oracle_phase is not None:
        reference, ref_phase = "oracle", oracle_phase
    else:
        reference, ref_phase = None, None

    rows = []
    for method in ("plain", "corrected"):
        row = coefficient_row(method, result.coefficients(method), steps, k_max)
        if ref_phase is not None:
            row["phase_error"] = error_dict(phase_error(result.phase(method), ref_phase), reference)
        rows.append(row)
    if oracle_phase is not None:
        row = {
            "method": "oracle",
            "rho": None,
            "orientation": None,
            "coefficients": None,
            "detuning_ratio": None,
            "g_snr": None,
            "r_h": None,
            "r_h_tail_bound": None,
            "phase_error": None,
        }
        if reference == "truth":
            row["phase_error"] = error_dict(phase_error(oracle_phase, ref_phase), reference)
        rows.append(row)

    checks = {}
    if steps is not None:
        plain, corr = rows[0], rows[1]
        checks["plain_g_snr_ge_corrected"] = bool(plain["g_snr"] >= corr["g_snr"])
        checks["plain_r_h_ge_corrected"] = bool(plain["r_h"] >= corr["r_h"])
    return rows, checks


def flatten(report: dict, prefix: str = "") -> list[tuple[str, object]]:
    """Key/value pairs for the CSV rendering of a report."""
    out = []
    if isinstance(report, dict):
        for k in sorted(report):
            out.extend(flatten(report[k], f"{prefix}{k}."))
    elif isinstance(report, list):
        for i, v in enumerate(report):
            out.extend(flatten(v, f"{prefix}{i}."))
    else:
        out.append((prefix[:-1], "" if report is None else report))
    return out
