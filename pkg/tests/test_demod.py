import numpy as np
import pytest
from conftest import CANONICAL, STEP_SETS, stack

from pca_npsa import (
    PAPER3_STEPS,
    DegenerateDataError,
    DemodCoefficients,
    InvalidInputError,
    PcaBasis,
    corrected_coefficients,
    correction_ratio,
    demodulate,
    lissajous,
    pca_basis,
    phase,
    phase_error,
    plain_coefficients,
    run_pca,
)
from pca_npsa.demod import wrap


def toy_basis(v0, v1, w=(2.0, 1.0, 0.0)):
    V = np.column_stack([v0, v1, np.cross(v0, v1)])
    return PcaBasis(np.zeros((1, 1)), np.diag(w), np.array(w), V)


E0, E1 = np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0])


def ellipse_axis_ratio(points):
    """Least-squares axis-aligned ellipse x^2/p^2 + y^2/q^2 = 1; returns q/p."""
    M = points**2
    alpha, beta = np.linalg.lstsq(M, np.ones(len(points)), rcond=None)[0]
    return float(np.sqrt(alpha / beta))


class TestCoefficients:
    def test_plain_direct(self):
        c = plain_coefficients(toy_basis(E0, E1))
        np.testing.assert_array_equal(c.c, [1, 1j, 0])
        assert c.kind == "plain" and c.rho == 1.0

    def test_corrected_direct(self):
        c = corrected_coefficients(toy_basis(E0, E1), 0.5)
        np.testing.assert_array_equal(c.c, [0.5, 1j, 0])
        assert c.kind == "corrected" and c.rho == 0.5 and not c.swapped

    def test_rho_one_matches_plain(self, paper3_stack):
        b = pca_basis(paper3_stack)
        np.testing.assert_array_equal(corrected_coefficients(b, 1.0).c, plain_coefficients(b).c)

    def test_rho_above_one_swaps(self):
        c = corrected_coefficients(toy_basis(E0, E1), 2.0)
        np.testing.assert_array_equal(c.c, [1j, 0.5, 0])
        assert c.swapped and c.rho == 0.5

    def test_from_two_by_two_eigenvectors(self):
        # eigenvectors of [[2,1],[1,2]] under the sign rule, substituted by hand
        r = 1 / np.sqrt(2)
        V = np.array([[r, r], [r, -r]])
        b = PcaBasis(np.zeros((1, 1)), np.array([[2.0, 1.0], [1.0, 2.0]]), np.array([3.0, 1.0]), V)
        np.testing.assert_allclose(plain_coefficients(b).c, [r + 1j * r, r - 1j * r], atol=1e-15)

    @pytest.mark.parametrize("rho", [0.0, -0.3, np.nan])
    def test_bad_rho(self, rho):
        with pytest.raises(InvalidInputError):
            corrected_coefficients(toy_basis(E0, E1), rho)

    def test_degenerate_basis(self):
        with pytest.raises(DegenerateDataError):
            plain_coefficients(toy_basis(E0, E1, w=(1.0, 0.0, 0.0)))

    def test_conjugate_flips_orientation(self):
        c = DemodCoefficients([1, 1j, 0])
        assert c.conjugate().orientation == "conjugated"
        assert c.conjugate().conjugate().orientation == "as-is"
        np.testing.assert_array_equal(c.conjugate().c, [1, -1j, 0])


class TestDemodulate:
    def test_identity_filter(self):
        frames = np.random.default_rng(0).normal(size=(1, 4, 5))
        A = demodulate(frames, [1.0])
        np.testing.assert_array_equal(A.real, frames[0])
        assert np.all(A.imag == 0)

    def test_cancellation(self):
        F = np.random.default_rng(1).normal(size=(4, 5))
        assert np.all(demodulate(np.stack([F, F]), [1, -1]) == 0)

    def test_uniform_three_step(self):
        phi = np.linspace(-3, 3, 50)
        theta = 2 * np.pi * np.arange(3) / 3
        frames = np.stack([2 * np.cos(phi + t) for t in theta])
        A = demodulate(frames, np.exp(1j * theta))
        np.testing.assert_allclose(np.abs(A), 3.0, atol=1e-12)
        # taps e^{+i theta} pass the e^{-i(phi + theta)} half, so arg A = -phi
        assert phase_error(np.angle(A), phi).rms < 1e-12
        np.testing.assert_allclose(wrap(np.angle(A) + phi), 0.0, atol=1e-12)

    def test_length_mismatch(self, paper3_stack):
        with pytest.raises(InvalidInputError):
            demodulate(paper3_stack, [1, 1j])


class TestCorrectionRatio:
    def test_equal_magnitudes(self):
        A = np.array([1 + 1j, -2 + 2j, 0.5 - 0.5j])
        assert correction_ratio(A) == 1.0

    def test_dense_ellipse(self):
        phi = 2 * np.pi * np.arange(200000) / 200000
        assert correction_ratio(2 * np.cos(phi) + 1j * np.sin(phi)) == pytest.approx(0.5, rel=1e-6)

    def test_degenerate_real_axis(self):
        with pytest.raises(DegenerateDataError, match="degenerate real axis"):
            correction_ratio(np.array([1j, 2j]))

    def test_paper3_value(self, paper3_stack):
        assert abs(run_pca(paper3_stack).rho - 0.432) <= 0.05


class TestLissajous:
    def test_constant(self):
        pts = lissajous(np.full((10, 10), 1 + 0j), 16)
        assert np.all(pts == [1.0, 0.0])

    def test_unit_circle(self):
        pts = lissajous(np.exp(1j * np.linspace(0, 3 * np.pi, 1000)), 100)
        np.testing.assert_allclose(np.hypot(pts[:, 0], pts[:, 1]), 1.0, atol=1e-12)

    def test_stride_and_order(self):
        A = np.arange(100).reshape(10, 10) + 0j
        pts = lissajous(A, 30)
        np.testing.assert_array_equal(pts[:, 0], np.arange(0, 100, 4))
        assert len(lissajous(A, 1000)) == 100

    def test_plain_axis_ratio_matches_rho(self, paper3_stack):
        res = run_pca(paper3_stack)
        ratio = ellipse_axis_ratio(lissajous(res.analytic_plain, 20000))
        assert ratio == pytest.approx(res.rho, rel=0.02)

    @pytest.mark.parametrize("name", CANONICAL)
    @pytest.mark.parametrize("steps", ["paper3", "paper9"])
    def test_corrected_is_circle(self, name, steps):
        # canonical 256^2; the pupil-limited sphere converges as 1/size
        res = run_pca(stack(name, STEP_SETS[steps], 256))
        A = res.analytic_corrected
        pts = lissajous(A[np.abs(A) > 1e-6 * np.abs(A).max()], 20000)
        assert ellipse_axis_ratio(pts) == pytest.approx(1.0, abs=0.02)


class TestPhase:
    def test_examples(self):
        ph = phase(np.array([1 + 1j, -1 + 0j, 0j]))
        assert ph[0] == pytest.approx(np.pi / 4)
        assert ph[1] == np.pi
        assert np.isnan(ph[2])

    def test_negative_zero_imag_branch(self):
        assert phase(np.array([complex(-1.0, -0.0)]))[0] == np.pi

    def test_all_zero(self):
        with pytest.raises(DegenerateDataError):
            phase(np.zeros(4, complex))

    def test_scale_invariance(self, paper9_stack):
        res = run_pca(paper9_stack)
        scaled = run_pca(paper9_stack.__class__(paper9_stack.frames * 7.5, paper9_stack.steps))
        np.testing.assert_allclose(scaled.phase("corrected"), res.phase("corrected"), atol=1e-9)
        np.testing.assert_allclose(np.abs(scaled.analytic_corrected), 7.5 * np.abs(res.analytic_corrected), rtol=1e-9)


class TestPhaseError:
    truth = np.linspace(-2.5, 2.5, 64).reshape(8, 8)

    def test_identity(self):
        e = phase_error(self.truth, self.truth)
        assert e.rms == 0 and e.piston == 0 and not e.conjugated

    def test_pure_piston(self):
        e = phase_error(wrap(self.truth + 1.3), self.truth)
        assert e.rms < 1e-12 and e.piston == pytest.approx(1.3, abs=1e-12)

    def test_sign_flip(self):
        e = phase_error(wrap(-self.truth + 0.2), self.truth)
        assert e.rms < 1e-12 and e.conjugated

    def test_invalid_pixels_excluded(self):
        est = self.truth.copy()
        est[0, :] = np.nan
        e = phase_error(est, self.truth)
        assert e.n_valid == 56 and e.rms == 0

    def test_bounds(self):
        rng = np.random.default_rng(5)
        e = phase_error(rng.uniform(-np.pi, np.pi, (16, 16)), self.truth.repeat(2, 0).repeat(2, 1))
        assert 0 <= e.rms <= e.max_abs <= np.pi

    def test_no_valid(self):
        with pytest.raises(DegenerateDataError):
            phase_error(np.full((2, 2), np.nan), np.zeros((2, 2)))

    def test_shape_mismatch(self):
        with pytest.raises(InvalidInputError):
            phase_error(np.zeros((2, 2)), np.zeros((3, 3)))


class TestCorrectionEfficacy:
    def test_plain_paper3_is_wrong(self, paper3_stack):
        res = run_pca(paper3_stack)
        assert phase_error(res.phase("plain"), paper3_stack.truth).rms > 0.05

    @pytest.mark.parametrize("name", CANONICAL)
    @pytest.mark.parametrize("steps", sorted(STEP_SETS))
    def test_corrected_under_0p01(self, name, steps):
        st_ = stack(name, STEP_SETS[steps], 256)
        res = run_pca(st_)
        assert phase_error(res.phase("corrected"), st_.truth).rms < 0.01

    @pytest.mark.parametrize("name", CANONICAL)
    @pytest.mark.parametrize("steps", ["paper3", "paper9", "rand03", "rand11"])
    def test_rho_in_unit_interval(self, name, steps):
        res = run_pca(stack(name, STEP_SETS[steps], 128))
        assert 0 < res.rho <= 1
