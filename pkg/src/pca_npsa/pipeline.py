"""End-to-end PCA demodulation of a stack, plain and corrected."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .demod import (
    DemodCoefficients,
    corrected_coefficients,
    correction_ratio,
    demodulate,
    phase,
    plain_coefficients,
)
from .fringe_synth import FringeStack
from .pca_core import PcaBasis, pca_basis
from .spectral import orient


@dataclass(frozen=True)
class PcaDemodulation:
    basis: PcaBasis
    plain: DemodCoefficients
    corrected: DemodCoefficients
    rho_measured: float  # sum|Im| / sum|Re| of the plain field, before axis ordering
    analytic_plain: np.ndarray
    analytic_corrected: np.ndarray

    @property
    def rho(self) -> float:
        return self.corrected.rho

    def coefficients(self, mode: str) -> DemodCoefficients:
        return {"plain": self.plain, "corrected": self.corrected}[mode]

    def analytic(self, mode: str) -> np.ndarray:
        return {"plain": self.analytic_plain, "corrected": self.analytic_corrected}[mode]

    def phase(self, mode: str) -> np.ndarray:
        return phase(self.analytic(mode))


def run_pca(stack: FringeStack, steps=None, threads: int = 1) -> PcaDemodulation:
    """Plain PCA, rho from the whole plain field, then the corrected filter.

    When steps are known (passed here or stored on the stack) both coefficient
    sets are oriented so |H(+1)| >= |H(-1)|.
    """
    steps = stack.steps if steps is None else steps
    basis = pca_basis(stack, threads=threads)
    plain = plain_coefficients(basis)
    rho = correction_ratio(demodulate(stack, plain))
    corrected = corrected_coefficients(basis, rho)
    if steps is not None:
        plain = orient(plain, steps)
        corrected = orient(corrected, steps)
    return PcaDemodulation(
        basis=basis,
        plain=plain,
        corrected=corrected,
        rho_measured=rho,
        analytic_plain=demodulate(stack, plain),
        analytic_corrected=demodulate(stack, corrected),
    )
