"""Frequency transfer function of a demodulation filter and its figures of merit.

A coefficient set c_n paired with known steps theta_n is a linear quadrature
filter with FTF

    H(omega) = sum_n c_n exp(-1j * theta_n * omega).

Applied as A = sum_n c_n I_n to fringes a + b cos(phi + theta_n), the output is

    A = a H(0) + (b/2) [exp(-1j phi) H(+1) + exp(+1j phi) H(-1)],

so a filter passing omega = +1 carries the phase as -phi.  Every quantity
below is evaluated by direct summation at the requested frequencies, never by
interpolation of the plotting grid.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .demod import DemodCoefficients, as_coefficients
from .errors import DegenerateDataError, InvalidInputError
from .fringe_synth import as_theta

DEFAULT_K_MAX = 50
DEFAULT_OMEGA_MAX = 3.5
DEFAULT_OMEGA_STEP = 0.005


def frequency_grid(omega_max: float = DEFAULT_OMEGA_MAX, step: float = DEFAULT_OMEGA_STEP) -> np.ndarray:
    if omega_max <= 0 or step <= 0:
        raise InvalidInputError("omega range and step must be positive")
    n = int(round(omega_max / step))
    return np.arange(-n, n + 1) * step


def transfer(coeffs, steps, omega) -> np.ndarray:
    """H(omega) for scalar or array ``omega``."""
    c = as_coefficients(coeffs)
    theta = as_theta(steps)
    if c.size != theta.size:
        raise InvalidInputError(f"{c.size} coefficients for {theta.size} steps")
    omega = np.asarray(omega, dtype=np.float64)
    H = np.exp(-1j * np.multiply.outer(omega, theta)) @ c
    return H


class HarmonicRobustness(NamedTuple):
    value: float
    tail_bound: float  # upper bound on the denominator terms dropped beyond k_max


@dataclass(frozen=True)
class FtfReport:
    omega: np.ndarray
    H: np.ndarray
    H_minus1: complex
    H_0: complex
    H_plus1: complex
    detuning_ratio: float
    g_snr: float
    r_h: float
    r_h_tail_bound: float
    k_max: int

    @property
    def H_normalized(self) -> np.ndarray:
        """H scaled so |H(+1)| = 1, for comparison with published plots."""
        return self.H / abs(self.H_plus1)

    @property
    def detuning(self) -> complex:
        """Complex H(-1)/H(+1)."""
        return self.H_minus1 / self.H_plus1

    def scalars(self) -> dict:
        def cx(z):
            return {"re": float(z.real), "im": float(z.imag), "abs": float(abs(z))}

        return {
            "H_minus1": cx(self.H_minus1),
            "H_0": cx(self.H_0),
            "H_plus1": cx(self.H_plus1),
            "detuning_ratio": self.detuning_ratio,
            "g_snr": self.g_snr,
            "r_h": self.r_h,
            "r_h_tail_bound": self.r_h_tail_bound,
            "k_max": self.k_max,
            "omega_min": float(self.omega[0]),
            "omega_max": float(self.omega[-1]),
            "omega_points": int(self.omega.size),
        }


def ftf(coeffs, steps, omega=None, k_max: int = DEFAULT_K_MAX) -> FtfReport:
    omega = frequency_grid() if omega is None else np.asarray(omega, dtype=np.float64)
    H = transfer(coeffs, steps, omega)
    hm, h0, hp = (complex(h) for h in transfer(coeffs, steps, [-1.0, 0.0, 1.0]))
    if abs(hp) > 0:
        ratio = abs(hm) / abs(hp)
        rh = harmonic_robustness(coeffs, steps, k_max)
    else:
        ratio = np.nan
        rh = HarmonicRobustness(np.nan, np.nan)
    for arr in (omega, H):
        arr.setflags(write=False)
    return FtfReport(
        omega=omega,
        H=H,
        H_minus1=hm,
        H_0=h0,
        H_plus1=hp,
        detuning_ratio=float(ratio),
        g_snr=snr_gain(coeffs, steps),
        r_h=rh.value,
        r_h_tail_bound=rh.tail_bound,
        k_max=k_max,
    )


@dataclass(frozen=True)
class QuadratureDiagnostics:
    rejects_conjugate: bool
    rejects_background: bool
    passes_signal: bool
    conjugate_ratio: float
    background_ratio: float
    signal_abs: float

    @property
    def ok(self) -> bool:
        return self.rejects_conjugate and self.rejects_background and self.passes_signal


def quadrature_check(report: FtfReport, tol: float = 1e-3) -> QuadratureDiagnostics:
    """Test H(-1) = 0, H(0) = 0 and H(+1) != 0, relative to |H(+1)|."""
    h1 = abs(report.H_plus1)
    if h1 == 0:
        raise DegenerateDataError("no quadrature response: H(+1) = 0")
    conj = abs(report.H_minus1) / h1
    dc = abs(report.H_0) / h1
    return QuadratureDiagnostics(conj <= tol, dc <= tol, h1 > tol, conj, dc, h1)


def detuning_ratio(report: FtfReport) -> float:
    if abs(report.H_plus1) == 0:
        raise DegenerateDataError("no quadrature response: H(+1) = 0")
    return abs(report.H_minus1) / abs(report.H_plus1)


def snr_gain(coeffs, steps) -> float:
    """|H(1)|^2 / sum |c_n|^2, bounded by N (Cauchy-Schwarz)."""
    c = as_coefficients(coeffs)
    energy = float(np.sum(np.abs(c) ** 2))
    if energy == 0:
        raise InvalidInputError("all coefficients are zero")
    return float(abs(transfer(c, steps, 1.0)) ** 2 / energy)


def _inverse_square_tail(k_max: int) -> float:
    # sum_{k > k_max} 1/k^2
    k = np.arange(1, k_max + 1)
    return max(np.pi**2 / 6 - float(np.sum(1.0 / k[::-1] ** 2)), 0.0)


def harmonic_robustness(coeffs, steps, k_max: int = DEFAULT_K_MAX) -> HarmonicRobustness:
    """Quadrature power over 1/k^2-weighted leakage of harmonics 2..k_max.

    Harmonic amplitudes are taken as b_k = 1/k.  The infinite sum is cut at
    ``k_max``; ``tail_bound`` bounds the dropped part of the denominator by
    (sum|c_n|)^2 * sum_{k>k_max} 2/k^2.
    """
    if k_max < 2:
        raise InvalidInputError("k_max must be >= 2")
    c = as_coefficients(coeffs)
    h1 = abs(transfer(c, steps, 1.0)) ** 2
    if h1 == 0:
        raise DegenerateDataError("no quadrature response: H(+1) = 0")
    k = np.arange(2, k_max + 1, dtype=np.float64)
    leak = np.sum((np.abs(transfer(c, steps, k)) ** 2 + np.abs(transfer(c, steps, -k)) ** 2) / k**2)
    tail = float(np.sum(np.abs(c)) ** 2 * 2 * _inverse_square_tail(k_max))
    return HarmonicRobustness(float(h1 / leak), tail)


def harmonic_leakage_power(coeffs, steps, k: int, b_k: float, b: float = 1.0) -> float:
    """Mean |A|^2 contributed by one harmonic of relative amplitude b_k.

    Exact when the cross term at 2k*phi averages out over the scene.
    """
    Hk = transfer(coeffs, steps, [float(k), -float(k)])
    return float((b * b_k / 2) ** 2 * np.sum(np.abs(Hk) ** 2))


def orient(coeffs: DemodCoefficients, steps) -> DemodCoefficients:
    """Conjugate the taps if needed so that |H(+1)| >= |H(-1)|."""
    hm, hp = np.abs(transfer(coeffs, steps, [-1.0, 1.0]))
    return coeffs.conjugate() if hp < hm else coeffs


def predict_detuning_field(report: FtfReport, encoded_phase) -> np.ndarray:
    """Pointwise detuning error arg(1 + (H(-1)/H(1)) exp(-2j psi)).

    ``encoded_phase`` is the phase psi the analytic signal actually carries.
    With taps applied as sum c_n I_n and |H(+1)| >= |H(-1)| that is -phi
    for a scene phase phi.  The prediction is defined up to a constant
    (piston) offset.
    """
    if abs(report.H_plus1) == 0:
        raise DegenerateDataError("no quadrature response: H(+1) = 0")
    r = report.H_minus1 / report.H_plus1
    return np.angle(1 + r * np.exp(-2j * np.asarray(encoded_phase, dtype=np.float64)))
