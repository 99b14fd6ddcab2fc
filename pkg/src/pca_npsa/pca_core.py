"""Background, inter-frame covariance and its eigen-decomposition.

Frames are never vectorised into a data matrix of images; the covariance is
accumulated entry by entry over the pixel grid.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DegenerateDataError, InvalidInputError
from .fringe_synth import FringeStack

DEGENERACY_RATIO = 1e-9
# frames equal up to rounding leave only round-off variance; compare against the signal power
ROUNDOFF_RATIO = 1e-20
JACOBI_TOL = 1e-14
JACOBI_MAX_SWEEPS = 100


@dataclass(frozen=True)
class PcaBasis:
    background: np.ndarray
    covariance: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns, aligned with eigenvalues
    sweeps: int = 0

    @property
    def v0(self) -> np.ndarray:
        return self.eigenvectors[:, 0]

    @property
    def v1(self) -> np.ndarray:
        return self.eigenvectors[:, 1]

    @property
    def n_frames(self) -> int:
        return self.covariance.shape[0]


def _frames(stack) -> np.ndarray:
    return stack.frames if isinstance(stack, FringeStack) else np.asarray(stack, dtype=np.float64)


def estimate_background(stack) -> np.ndarray:
    frames = _frames(stack)
    if frames.ndim != 3 or frames.shape[0] == 0:
        raise InvalidInputError("cannot estimate the background of an empty stack")
    return frames.sum(axis=0) / frames.shape[0]


def covariance(stack, background: np.ndarray, threads: int = 1) -> np.ndarray:
    """C[m, n] = mean over pixels of (I_m - bg)(I_n - bg).

    Each entry is one pairwise-summed reduction over the contiguous pixel
    axis, so the result does not depend on ``threads``.
    """
    frames = _frames(stack)
    background = np.asarray(background, dtype=np.float64)
    if background.shape != frames.shape[1:]:
        raise InvalidInputError(f"background {background.shape} does not match frames {frames.shape[1:]}")
    n = frames.shape[0]
    dev = np.ascontiguousarray((frames - background).reshape(n, -1))
    npix = dev.shape[1]
    pairs = [(m, k) for m in range(n) for k in range(m, n)]

    def entry(p):
        m, k = p
        return np.sum(dev[m] * dev[k]) / npix

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            values = list(pool.map(entry, pairs))
    else:
        values = [entry(p) for p in pairs]

    C = np.empty((n, n))
    for (m, k), v in zip(pairs, values):
        C[m, k] = C[k, m] = v
    return C


def _apply_sign_convention(V: np.ndarray) -> np.ndarray:
    # largest-magnitude entry non-negative; ties (to rounding) go to the lowest index
    V = V.copy()
    for j in range(V.shape[1]):
        mag = np.abs(V[:, j])
        i = int(np.flatnonzero(mag >= mag.max() * (1 - 1e-12))[0])
        if V[i, j] < 0:
            V[:, j] = -V[:, j]
    return V


def symmetric_eig(C: np.ndarray, tol: float = JACOBI_TOL, max_sweeps: int = JACOBI_MAX_SWEEPS):
    """Cyclic Jacobi eigen-decomposition of a real symmetric matrix.

    Returns ``(eigenvalues, eigenvectors, sweeps)`` with eigenvalues sorted in
    descending order (stable, so exact ties keep solver order) and the
    eigenvectors as sign-normalised columns.

    Raises
    ------
    InvalidInputError
        If ``C`` is not square or not symmetric to 1e-12 relative.
    ConvergenceError
        If the off-diagonal norm has not dropped below ``tol * ||C||_F``
        after ``max_sweeps`` sweeps.
    """
    A = np.array(C, dtype=np.float64, copy=True)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidInputError(f"expected a square matrix, got shape {A.shape}")
    scale = np.max(np.abs(A)) if A.size else 0.0
    if np.max(np.abs(A - A.T), initial=0.0) > 1e-12 * max(scale, np.finfo(float).tiny):
        raise InvalidInputError("matrix is not symmetric")
    A = 0.5 * (A + A.T)
    n = A.shape[0]
    V = np.eye(n)
    target = tol * np.linalg.norm(A)

    def off_norm(M):
        return np.linalg.norm(M - np.diag(np.diag(M)))

    sweeps = 0
    while off_norm(A) > target:
        if sweeps >= max_sweeps:
            raise ConvergenceError(f"Jacobi did not converge after {sweeps} sweeps", sweeps=sweeps)
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                # rotation angle from the stable tangent formula
                tau = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = np.copysign(1.0, tau) / (abs(tau) + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                rp, rq = A[p, :].copy(), A[q, :].copy()
                A[p, :] = c * rp - s * rq
                A[q, :] = s * rp + c * rq
                cp, cq = A[:, p].copy(), A[:, q].copy()
                A[:, p] = c * cp - s * cq
                A[:, q] = s * cp + c * cq
                A[p, q] = A[q, p] = 0.0
                vp, vq = V[:, p].copy(), V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq

    w = np.diag(A).copy()
    order = np.argsort(-w, kind="stable")
    return w[order], _apply_sign_convention(V[:, order]), sweeps


def pca_basis(stack, threads: int = 1) -> PcaBasis:
    frames = _frames(stack)
    if frames.shape[0] < 3:
        raise InvalidInputError(f"PCA demodulation needs >= 3 frames, got {frames.shape[0]}")
    bg = estimate_background(frames)
    C = covariance(frames, bg, threads=threads)
    w, V, sweeps = symmetric_eig(C)
    power = float(np.mean(frames * frames))
    if not w[0] > ROUNDOFF_RATIO * power or w[1] <= DEGENERACY_RATIO * w[0]:
        raise DegenerateDataError(
            f"degenerate second component (lambda_0={w[0]:.3e}, lambda_1={w[1]:.3e})"
        )
    for arr in (bg, C, w, V):
        arr.setflags(write=False)
    return PcaBasis(bg, C, w, V, sweeps)
