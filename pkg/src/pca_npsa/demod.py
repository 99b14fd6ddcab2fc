"""Plain and Lissajous-corrected PCA demodulation.

The analytic signal is A = sum_n c_n I_n with c_n = rho [v0]_n + 1j [v1]_n
(rho = 1 for the plain formula).  Plain PCA yields an axis-aligned Lissajous
ellipse; rescaling the real channel by rho = sum|Im A| / sum|Re A| turns it
into a circle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDataError, InvalidInputError
from .pca_core import DEGENERACY_RATIO, PcaBasis

MAG_EPS = 1e-12


@dataclass(frozen=True)
class DemodCoefficients:
    """Complex taps of a linear demodulation filter.

    ``orientation`` is ``"conjugated"`` when all taps were conjugated to put
    the quadrature response on omega = +1; ``swapped`` records that the
    roles of v0 and v1 were exchanged because the measured ratio exceeded 1.
    """

    c: np.ndarray
    kind: str = "plain"
    rho: float = 1.0
    orientation: str = "as-is"
    swapped: bool = False

    def __post_init__(self):
        c = np.array(self.c, dtype=np.complex128).ravel()
        c.setflags(write=False)
        object.__setattr__(self, "c", c)
        if self.kind not in ("plain", "corrected", "custom"):
            raise InvalidInputError(f"unknown coefficient kind {self.kind!r}")
        if self.orientation not in ("as-is", "conjugated"):
            raise InvalidInputError(f"unknown orientation {self.orientation!r}")

    def __len__(self):
        return self.c.size

    def conjugate(self) -> "DemodCoefficients":
        flipped = "as-is" if self.orientation == "conjugated" else "conjugated"
        return DemodCoefficients(np.conj(self.c), self.kind, self.rho, flipped, self.swapped)


@dataclass(frozen=True)
class ErrorStats:
    rms: float
    max_abs: float
    piston: float
    conjugated: bool
    n_valid: int
    field: np.ndarray  # wrapped residual, NaN where excluded


def as_coefficients(coeffs) -> np.ndarray:
    if isinstance(coeffs, DemodCoefficients):
        return coeffs.c
    return np.asarray(coeffs, dtype=np.complex128).ravel()


def _check_basis(basis: PcaBasis):
    w = basis.eigenvalues
    if basis.eigenvectors.shape[1] < 2 or not w[0] > 0 or w[1] <= DEGENERACY_RATIO * w[0]:
        raise DegenerateDataError("degenerate second component")


def plain_coefficients(basis: PcaBasis) -> DemodCoefficients:
    _check_basis(basis)
    return DemodCoefficients(basis.v0 + 1j * basis.v1, kind="plain", rho=1.0)


def corrected_coefficients(basis: PcaBasis, rho: float) -> DemodCoefficients:
    """Shrink the major Lissajous axis by ``rho``.

    A ratio above one means the imaginary channel is the major axis; the
    eigenvector roles are then swapped and ``1/rho`` applied instead, so the
    stored ratio always lies in (0, 1].
    """
    _check_basis(basis)
    if not np.isfinite(rho) or rho <= 0:
        raise InvalidInputError(f"correction ratio must be positive, got {rho}")
    if rho > 1:
        r = 1.0 / rho
        return DemodCoefficients(r * basis.v1 + 1j * basis.v0, kind="corrected", rho=r, swapped=True)
    return DemodCoefficients(rho * basis.v0 + 1j * basis.v1, kind="corrected", rho=float(rho))


def demodulate(stack, coeffs) -> np.ndarray:
    """A(x, y) = sum_n c_n I_n(x, y), taps applied without conjugation."""
    frames = getattr(stack, "frames", stack)
    frames = np.asarray(frames, dtype=np.float64)
    c = as_coefficients(coeffs)
    if c.size != frames.shape[0]:
        raise InvalidInputError(f"{c.size} coefficients for {frames.shape[0]} frames")
    return np.tensordot(c, frames, axes=1)


def correction_ratio(A: np.ndarray) -> float:
    A = np.asarray(A)
    re = np.sum(np.abs(A.real))
    if re == 0:
        raise DegenerateDataError("degenerate real axis: sum |Re A| is zero")
    return float(np.sum(np.abs(A.imag)) / re)


def lissajous(A: np.ndarray, max_points: int = 4096) -> np.ndarray:
    """Row-major, fixed-stride subsample of (Re A, Im A) as an (M, 2) array."""
    flat = np.asarray(A).ravel()
    if max_points < 1:
        raise InvalidInputError("max_points must be >= 1")
    stride = max(1, -(-flat.size // max_points))
    pts = flat[::stride]
    return np.column_stack([pts.real, pts.imag])


def wrap(x):
    """Wrap angles into (-pi, pi]."""
    w = np.angle(np.exp(1j * np.asarray(x)))
    return np.where(w <= -np.pi, np.pi, w)


def valid_mask(A: np.ndarray) -> np.ndarray:
    mag = np.abs(A)
    top = mag.max() if mag.size else 0.0
    if top == 0:
        raise DegenerateDataError("analytic signal is zero everywhere")
    return mag >= MAG_EPS * top


def phase(A: np.ndarray) -> np.ndarray:
    """arg A in (-pi, pi]; pixels with |A| below 1e-12 max|A| come back NaN."""
    A = np.asarray(A, dtype=np.complex128)
    ok = valid_mask(A)
    ph = np.angle(A)
    ph = np.where(ph <= -np.pi, np.pi, ph)
    return np.where(ok, ph, np.nan)


def _piston_fit(diff):
    piston = float(np.angle(np.sum(np.exp(1j * diff))))
    err = wrap(diff - piston)
    return piston, err


def phase_error(est: np.ndarray, truth: np.ndarray) -> ErrorStats:
    """Wrapped error after piston removal, resolving a global sign flip.

    Both ``est`` and ``-est`` are tried against ``truth``; the one with the
    smaller RMS wins and ``conjugated`` records which. NaN pixels in ``est``
    are excluded.
    """
    est = np.asarray(est, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if est.shape != truth.shape:
        raise InvalidInputError(f"shape mismatch {est.shape} vs {truth.shape}")
    ok = np.isfinite(est) & np.isfinite(truth)
    n = int(ok.sum())
    if n == 0:
        raise DegenerateDataError("no valid pixels to compare")

    best = None
    for conj, sign in ((False, 1.0), (True, -1.0)):
        piston, err = _piston_fit(sign * est[ok] - truth[ok])
        rms = float(np.sqrt(np.mean(err**2)))
        if best is None or rms < best[0]:
            best = (rms, conj, piston, err)
    rms, conj, piston, err = best
    field = np.full(est.shape, np.nan)
    field[ok] = err
    return ErrorStats(
        rms=rms,
        max_abs=float(np.max(np.abs(err))),
        piston=piston,
        conjugated=conj,
        n_valid=n,
        field=field,
    )
