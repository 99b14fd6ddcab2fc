import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pca_npsa import (
    PAPER3_STEPS,
    FringeStack,
    HarmonicSpec,
    InvalidInputError,
    NoiseSpec,
    PhaseSteps,
    Scene,
    make_scene,
    sample_fringes,
)
from pca_npsa.fringe_synth import count_distinct_mod_2pi, parse_scene_name, quantize, uniform_steps


def flat_scene(a=1.0, b=1.0, phi=0.0, shape=(4, 4)):
    return Scene(np.full(shape, a), np.full(shape, b), np.full(shape, phi))


class TestMakeScene:
    def test_tilt_direct_construction(self):
        sc = make_scene("tilt", 256, fringes=8, background=1.0, modulation=1.0)
        x = np.arange(256)
        np.testing.assert_allclose(sc.phase, np.broadcast_to(2 * np.pi * 8 * x / 256, (256, 256)), rtol=0, atol=1e-12)
        assert np.all(sc.background == 1) and np.all(sc.modulation == 1)

    def test_zero_fringes_is_flat(self):
        sc = make_scene("tilt", 64, fringes=0)
        assert np.all(sc.phase == 0)

    def test_sphere_formula(self):
        sc = make_scene("sphere", 128, fringes=4)
        c, R = 63.5, 64.0
        # pixel (0, 63) has r^2 = 63.5^2 + 0.5^2; exactly 4 cycles at the rim radius
        r2 = 63.5**2 + 0.5**2
        assert sc.phase[0, 63] == pytest.approx(2 * np.pi * 4 * r2 / R**2, abs=1e-12)
        assert sc.phase.min() == pytest.approx(2 * np.pi * 4 * 0.5 / R**2, abs=1e-12)
        lit = sc.modulation > 0
        assert sc.phase[lit].max() <= 2 * np.pi * 4
        assert sc.phase[0, 0] == pytest.approx(2 * np.pi * 4 * 2 * c**2 / R**2, abs=1e-9)

    def test_sphere_pupil_covers_phase_evenly(self):
        sc = make_scene("sphere-4", 256)
        w = sc.modulation**2
        for k in (1, 2):
            assert abs(np.sum(w * np.exp(1j * k * sc.phase)) / w.sum()) < 1e-3

    def test_sphere_default_pupil(self):
        sc = make_scene("sphere-4", 64)
        assert sc.modulation[0, 0] == 0 and sc.modulation[32, 32] == 1
        assert np.all(make_scene("sphere-4", 64, aperture=False).modulation == 1)

    def test_peaks_range_and_smoothness(self):
        sc = make_scene("peaks", 128)
        assert np.ptp(sc.phase) == pytest.approx(2 * np.pi * 12, abs=1e-9)
        assert np.max(np.abs(np.diff(sc.phase, axis=1))) < np.pi

    def test_rectangular(self):
        sc = make_scene("tilt", 32, 16, fringes=2)
        assert sc.shape == (16, 32)

    @pytest.mark.parametrize("w,h", [(0, 5), (1, 1), (-3, 4), (5, 1)])
    def test_bad_dimensions(self, w, h):
        with pytest.raises(InvalidInputError):
            make_scene("tilt", w, h)

    def test_negative_modulation(self):
        with pytest.raises(InvalidInputError):
            make_scene("tilt", 8, modulation=-1.0)

    def test_unknown_kind(self):
        with pytest.raises(InvalidInputError):
            make_scene("donut", 8)

    def test_scene_names(self):
        assert parse_scene_name("tilt-8") == ("tilt", 8.0)
        assert parse_scene_name("sphere-2.5") == ("sphere", 2.5)
        assert parse_scene_name("peaks") == ("peaks", 12.0)
        with pytest.raises(InvalidInputError):
            parse_scene_name("tilt-x")


class TestPhaseSteps:
    def test_needs_three(self):
        with pytest.raises(InvalidInputError, match=">= 3 steps"):
            PhaseSteps([0.0])

    def test_needs_three_distinct_mod_2pi(self):
        with pytest.raises(InvalidInputError, match="distinct"):
            PhaseSteps([0.0, 2 * np.pi, 1.0])

    def test_distinct_count(self):
        assert count_distinct_mod_2pi([0, 2 * np.pi, 4 * np.pi]) == 1
        assert count_distinct_mod_2pi(PAPER3_STEPS) == 3

    def test_presets(self):
        assert tuple(PhaseSteps.preset("paper3").theta) == (0.0, 1.49, 5.13)
        assert len(PhaseSteps.preset("paper9")) == 9
        with pytest.raises(InvalidInputError):
            PhaseSteps.preset("paper4")

    def test_harmonic_spec_validation(self):
        with pytest.raises(InvalidInputError):
            HarmonicSpec(((1, 0.5),))
        with pytest.raises(InvalidInputError):
            HarmonicSpec(((2, 0.5), (2, 0.1)))
        assert HarmonicSpec.inverse_k(3).terms == ((2, 0.5), (3, 1 / 3))


class TestSampleFringes:
    def test_in_phase(self):
        st_ = sample_fringes(flat_scene(), [0.0, 1.0, 2.0])
        np.testing.assert_array_equal(st_.frames[0], 2.0)

    def test_anti_phase(self):
        st_ = sample_fringes(flat_scene(), [np.pi, 1.0, 2.0])
        np.testing.assert_allclose(st_.frames[0], 0.0, atol=1e-15)

    def test_second_harmonic(self):
        st_ = sample_fringes(flat_scene(), [0.0, 1.0, 2.0], harmonics=[(2, 0.5)])
        np.testing.assert_array_equal(st_.frames[0], 2.5)

    def test_stores_ground_truth(self, tilt8):
        st_ = sample_fringes(tilt8, PAPER3_STEPS)
        assert tuple(st_.steps.theta) == PAPER3_STEPS
        assert st_.truth is not None and np.array_equal(st_.truth, tilt8.phase)

    def test_noiseless_deterministic(self, tilt8):
        a = sample_fringes(tilt8, PAPER3_STEPS, [(3, 0.1)])
        b = sample_fringes(tilt8, PAPER3_STEPS, [(3, 0.1)])
        assert a.frames.tobytes() == b.frames.tobytes()

    def test_seeded_noise(self):
        sc = make_scene("tilt", 32)
        a = sample_fringes(sc, PAPER3_STEPS, noise=NoiseSpec(0.1, 7))
        b = sample_fringes(sc, PAPER3_STEPS, noise=NoiseSpec(0.1, 7))
        c = sample_fringes(sc, PAPER3_STEPS, noise=NoiseSpec(0.1, 8))
        assert a.frames.tobytes() == b.frames.tobytes()
        assert not np.array_equal(a.frames, c.frames)
        assert a.frames.shape == c.frames.shape and np.array_equal(a.steps.theta, c.steps.theta)
        assert {k: v for k, v in a.metadata.items() if k != "noise_seed"} == {
            k: v for k, v in c.metadata.items() if k != "noise_seed"
        }

    def test_threads_bit_identical(self):
        sc = make_scene("peaks", 48)
        a = sample_fringes(sc, np.arange(7) * 0.9, noise=NoiseSpec(0.2, 3), threads=1)
        b = sample_fringes(sc, np.arange(7) * 0.9, noise=NoiseSpec(0.2, 3), threads=4)
        assert a.frames.tobytes() == b.frames.tobytes()

    def test_noise_variance(self):
        sc = flat_scene(shape=(128, 128))
        st_ = sample_fringes(sc, PAPER3_STEPS, noise=NoiseSpec(0.25, 1))
        clean = sample_fringes(sc, PAPER3_STEPS)
        resid = st_.frames - clean.frames
        assert np.var(resid) == pytest.approx(0.25, rel=0.02)
        # independent across frames
        assert abs(np.corrcoef(resid[0].ravel(), resid[1].ravel())[0, 1]) < 0.02

    def test_negative_eta(self):
        with pytest.raises(InvalidInputError):
            NoiseSpec(-1.0)

    @pytest.mark.parametrize("n", [2, 3, 4, 7])
    def test_uniform_mean_is_background(self, n):
        # discrete orthogonality: sum_n cos(phi + 2 pi n / N) = 0 for N >= 2
        sc = make_scene("peaks", 32, background=3.0, modulation=2.0)
        frames = [sc.background + sc.modulation * np.cos(sc.phase + t) for t in uniform_steps(n)]
        np.testing.assert_allclose(np.mean(frames, axis=0), 3.0, atol=1e-12)
        if n >= 3:
            np.testing.assert_allclose(sample_fringes(sc, uniform_steps(n)).frames.mean(axis=0), 3.0, atol=1e-12)

    def test_quantize(self, paper3_stack):
        q = quantize(paper3_stack, 8)
        assert q.frames.min() == 0 and q.frames.max() == 255
        assert np.all(q.frames == np.round(q.frames))
        assert q.metadata["quantize_bits"] == 8

    def test_stack_validation(self):
        with pytest.raises(InvalidInputError):
            FringeStack(np.zeros((3, 4, 4)), steps=[0.0, 1.0, 2.0, 3.0])
        with pytest.raises(InvalidInputError):
            FringeStack(np.zeros((4, 4)))


@settings(max_examples=60, deadline=None)
@given(
    a=st.floats(-2, 2),
    b=st.floats(0, 3),
    phi=st.floats(-10, 10),
    harm=st.lists(st.tuples(st.integers(2, 6), st.floats(-0.5, 0.5)), max_size=3, unique_by=lambda t: t[0]),
)
def test_intensity_envelope(a, b, phi, harm):
    sc = flat_scene(a, b, phi, shape=(1, 1))
    sweep = np.linspace(0, 2 * np.pi, 721)
    spec = HarmonicSpec(tuple(harm))
    bound = b * (1 + spec.total_amplitude)
    vals = [a + b * np.cos(phi + t) + sum(b * bk * np.cos(k * phi + k * t) for k, bk in spec.terms) for t in sweep]
    st_ = sample_fringes(sc, sweep[:5] + [0, 0.1, 0.2, 0.3, 0.4], spec)
    assert min(vals) >= a - bound - 1e-12 and max(vals) <= a + bound + 1e-12
    assert np.all(st_.frames >= a - bound - 1e-12) and np.all(st_.frames <= a + bound + 1e-12)
