"""Reference paths used to validate the PCA demodulator.

None of these feed back into the PCA pipeline itself.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .demod import MAG_EPS, as_coefficients, demodulate, wrap
from .errors import DegenerateDataError, InvalidInputError
from .fringe_synth import NoiseSpec, Scene, as_theta, sample_fringes
from .spectral import transfer

MAX_CONDITION = 1e12


@dataclass(frozen=True)
class LsqResult:
    a_hat: np.ndarray
    b_hat: np.ndarray
    phi_hat: np.ndarray
    condition: float


def _inverse_3x3(M):
    # adjugate / determinant
    a, b, c = M[0]
    d, e, f = M[1]
    g, h, i = M[2]
    cof = np.array(
        [
            [e * i - f * h, -(b * i - c * h), b * f - c * e],
            [-(d * i - f * g), a * i - c * g, -(a * f - c * d)],
            [d * h - e * g, -(a * h - b * g), a * e - b * d],
        ]
    )
    det = a * cof[0, 0] + b * cof[1, 0] + c * cof[2, 0]
    return cof / det, det


def lsq_demodulate(stack, steps) -> LsqResult:
    """Per-pixel least squares fit of I_n = a + p cos(theta_n) + q sin(theta_n).

    With I_n = a + b cos(phi + theta_n) the fit gives p = b cos(phi) and
    q = -b sin(phi).  The normal matrix depends only on the steps, so it is
    inverted once and its condition number reported.  Pixels with no fitted
    modulation get a NaN phase.
    """
    frames = np.asarray(getattr(stack, "frames", stack), dtype=np.float64)
    theta = as_theta(steps)
    if theta.size != frames.shape[0]:
        raise InvalidInputError(f"{theta.size} steps for {frames.shape[0]} frames")
    if theta.size < 3:
        raise InvalidInputError("least squares fit needs >= 3 frames")
    X = np.column_stack([np.ones_like(theta), np.cos(theta), np.sin(theta)])
    M = X.T @ X
    ev = np.linalg.eigvalsh(M)
    cond = float(ev[-1] / ev[0]) if ev[0] > 0 else np.inf
    if not cond < MAX_CONDITION:
        raise DegenerateDataError(f"singular normal matrix (condition number {cond:.3e})")
    Minv, _ = _inverse_3x3(M)
    a, p, q = np.tensordot(Minv @ X.T, frames, axes=1)
    b = np.hypot(p, q)
    phi = np.arctan2(-q, p)
    phi = np.where(phi <= -np.pi, np.pi, phi)
    # phase is undefined where the fringes have no modulation
    top = b.max()
    phi = np.where(b > MAG_EPS * top, phi, np.nan) if top > 0 else np.full_like(b, np.nan)
    return LsqResult(a, b, phi, cond)


def _quadrature_power(A, phi):
    # power of the e^{-i phi} and e^{+i phi} components; take whichever dominates
    minus = np.mean(A * np.exp(1j * phi))
    plus = np.mean(A * np.exp(-1j * phi))
    return max(abs(minus), abs(plus)) ** 2


def empirical_snr_gain(
    scene: Scene,
    steps,
    coeffs,
    eta: float,
    trials: int = 200,
    seed: int = 0,
) -> float:
    """Monte-Carlo SNR gain of a filter under white Gaussian noise.

    Signal power is the squared amplitude of the quadrature component of the
    noiseless output (projected onto the known scene phase); noise power is
    the per-pixel mean of |A_noisy - A_clean|^2 over ``trials`` independent
    realisations.  Both are referred to a single raw frame, whose quadrature
    amplitude is b/2 and whose noise variance is ``eta``.
    """
    if not eta > 0:
        raise InvalidInputError("empirical SNR needs eta > 0")
    if trials < 50:
        raise InvalidInputError("use at least 50 trials")
    c = as_coefficients(coeffs)
    clean = sample_fringes(scene, steps)
    A0 = demodulate(clean, c)
    signal = _quadrature_power(A0, scene.phase)

    acc = 0.0
    for t in range(trials):
        trial_seed = int(np.random.SeedSequence([seed, t]).generate_state(1)[0])
        noisy = sample_fringes(scene, steps, noise=NoiseSpec(eta, trial_seed))
        acc += np.mean(np.abs(demodulate(noisy, c) - A0) ** 2)
    noise = acc / trials

    reference = (np.mean(scene.modulation) / 2) ** 2 / eta
    return float(signal / noise / reference)


@dataclass(frozen=True)
class StepEstimate:
    theta: np.ndarray
    center: complex
    radius: float
    fit_residual: float  # rms radial misfit relative to the radius
    surrogate: bool = True


def estimate_steps(coeffs, rho: float | None = None) -> StepEstimate:
    """Recover phase steps (up to a common offset and sign) from PCA taps.

    For coefficients rho*x + 1j*y built on the two principal loadings x, y,
    the points x_n/rho + 1j*y_n are an affine image of exp(1j*theta_n): a
    circle whose centre is shifted by the mean of exp(1j*theta_m).  An
    algebraic circle fit through those points yields theta_n as the angle
    about the fitted centre, referenced to frame 0.  Exact for well-corrected
    noiseless data; with uncorrected taps the points lie on an ellipse and the
    estimate is biased.

    The sign is chosen so the taps pass omega = +1 rather than -1 under the
    estimated steps.
    """
    c = as_coefficients(coeffs)
    if rho is None:
        rho = getattr(coeffs, "rho", 1.0)
    if c.size < 3:
        raise InvalidInputError("need >= 3 coefficients")
    if not rho > 0:
        raise InvalidInputError("rho must be positive")
    scale = np.max(np.abs(c))
    if scale == 0 or np.any(np.abs(c) <= 1e-12 * scale):
        raise DegenerateDataError("a coefficient is ~0; steps cannot be estimated")

    u = c.real / rho**2 + 1j * c.imag
    x, y = u.real, u.imag
    G = np.column_stack([2 * x, 2 * y, np.ones_like(x)])
    sol, _, rank, _ = np.linalg.lstsq(G, x * x + y * y, rcond=None)
    if rank < 3:
        raise DegenerateDataError("loading points are collinear; no circle fit")
    center = complex(sol[0], sol[1])
    radius = float(np.sqrt(max(sol[2] + abs(center) ** 2, 0.0)))
    d = u - center
    if radius == 0 or np.any(np.abs(d) <= 1e-12 * radius):
        raise DegenerateDataError("a loading point sits on the fitted centre")

    ang = np.angle(d)
    theta = np.asarray(wrap(ang - ang[0]), dtype=np.float64)
    hm, hp = np.abs(transfer(c, theta, [-1.0, 1.0]))
    if hp < hm:
        theta = np.asarray(wrap(-theta), dtype=np.float64)
    residual = float(np.sqrt(np.mean((np.abs(d) - radius) ** 2)) / radius)
    return StepEstimate(theta, center, radius, residual)
