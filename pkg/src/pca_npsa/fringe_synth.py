"""Synthetic scenes and nonuniformly phase-shifted fringe stacks.

Frames follow the temporal fringe model

    I_n = a + b cos(phi + theta_n) + sum_k b b_k cos(k phi + k theta_n) + noise

with the temporal carrier fixed at one radian per unit time, so only the
phase steps theta_n matter.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidInputError

OMEGA0 = 1.0

PAPER3_STEPS = (0.0, 1.49, 5.13)
PAPER9_STEPS = (0.0, 1.13, 2.49, 1.52, 3.55, 3.78, 6.2, 6.42, 8.74)
STEP_PRESETS = {"paper3": PAPER3_STEPS, "paper9": PAPER9_STEPS}

SCENE_KINDS = ("tilt", "sphere", "peaks")
# name -> (kind, fringe count)
CANONICAL_SCENES = {
    "tilt-8": ("tilt", 8.0),
    "sphere-4": ("sphere", 4.0),
    "peaks": ("peaks", 12.0),
}
PEAKS_RELIEF = 0.25  # peaks surface weight relative to the unit tilt carrier


def _frozen(arr, dtype=np.float64):
    out = np.array(arr, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


def count_distinct_mod_2pi(theta, tol: float = 1e-9) -> int:
    """Number of distinct angles once folded onto the circle."""
    t = np.sort(np.mod(np.asarray(theta, dtype=float), 2 * np.pi))
    if t.size == 0:
        return 0
    gaps = np.diff(t)
    distinct = 1 + int(np.count_nonzero(gaps > tol))
    # first and last may coincide across the 0/2pi seam
    if distinct > 1 and (t[0] + 2 * np.pi - t[-1]) <= tol:
        distinct -= 1
    return distinct


@dataclass(frozen=True)
class Scene:
    background: np.ndarray
    modulation: np.ndarray
    phase: np.ndarray
    kind: str = "custom"
    fringes: float = 0.0

    def __post_init__(self):
        shapes = {np.shape(self.background), np.shape(self.modulation), np.shape(self.phase)}
        if len(shapes) != 1 or len(next(iter(shapes))) != 2:
            raise InvalidInputError(f"scene fields must be 2-D with identical shapes, got {shapes}")
        if np.any(np.asarray(self.modulation) < 0):
            raise InvalidInputError("modulation must be non-negative")
        object.__setattr__(self, "background", _frozen(self.background))
        object.__setattr__(self, "modulation", _frozen(self.modulation))
        object.__setattr__(self, "phase", _frozen(self.phase))

    @property
    def shape(self) -> tuple[int, int]:
        return self.phase.shape

    @property
    def height(self) -> int:
        return self.phase.shape[0]

    @property
    def width(self) -> int:
        return self.phase.shape[1]


@dataclass(frozen=True)
class PhaseSteps:
    """Ordered phase steps in radians; at least three distinct values mod 2pi."""

    theta: np.ndarray

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=np.float64).ravel()
        if theta.size < 3:
            raise InvalidInputError(f"need >= 3 steps, got {theta.size}")
        if not np.all(np.isfinite(theta)):
            raise InvalidInputError("steps must be finite")
        if count_distinct_mod_2pi(theta) < 3:
            raise InvalidInputError("need at least 3 distinct steps modulo 2*pi")
        object.__setattr__(self, "theta", _frozen(theta))

    def __len__(self):
        return self.theta.size

    def __array__(self, dtype=None, copy=None):
        return self.theta if dtype is None else self.theta.astype(dtype)

    @classmethod
    def preset(cls, name: str) -> "PhaseSteps":
        try:
            return cls(np.array(STEP_PRESETS[name]))
        except KeyError:
            raise InvalidInputError(f"unknown step preset {name!r}; choose from {sorted(STEP_PRESETS)}") from None


def as_theta(steps) -> np.ndarray:
    """Plain float array view of a PhaseSteps or any sequence of radians."""
    if isinstance(steps, PhaseSteps):
        return steps.theta
    return np.asarray(steps, dtype=np.float64).ravel()


@dataclass(frozen=True)
class HarmonicSpec:
    """Harmonic orders k >= 2 and their amplitudes relative to the modulation."""

    terms: tuple[tuple[int, float], ...] = ()

    def __post_init__(self):
        terms = tuple((int(k), float(bk)) for k, bk in self.terms)
        orders = [k for k, _ in terms]
        if any(k < 2 for k in orders):
            raise InvalidInputError("harmonic orders must be >= 2")
        if len(set(orders)) != len(orders):
            raise InvalidInputError("harmonic orders must be distinct")
        object.__setattr__(self, "terms", terms)

    @classmethod
    def inverse_k(cls, k_max: int) -> "HarmonicSpec":
        """The b_k = 1/k profile assumed by the harmonic-robustness metric."""
        return cls(tuple((k, 1.0 / k) for k in range(2, k_max + 1)))

    @property
    def total_amplitude(self) -> float:
        return float(sum(abs(bk) for _, bk in self.terms))


@dataclass(frozen=True)
class NoiseSpec:
    eta: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not np.isfinite(self.eta) or self.eta < 0:
            raise InvalidInputError(f"noise variance must be >= 0, got {self.eta}")


@dataclass(frozen=True)
class FringeStack:
    """N co-registered frames, optionally with the steps and phase that made them."""

    frames: np.ndarray
    steps: PhaseSteps | None = None
    truth: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=np.float64)
        if frames.ndim != 3 or frames.shape[0] < 1:
            raise InvalidInputError(f"frames must have shape (N, H, W), got {frames.shape}")
        object.__setattr__(self, "frames", _frozen(frames))
        steps = self.steps
        if steps is not None:
            if not isinstance(steps, PhaseSteps):
                steps = PhaseSteps(steps)
            if len(steps) != frames.shape[0]:
                raise InvalidInputError(f"{len(steps)} steps for {frames.shape[0]} frames")
            object.__setattr__(self, "steps", steps)
        if self.truth is not None:
            if np.shape(self.truth) != frames.shape[1:]:
                raise InvalidInputError("truth phase must match frame dimensions")
            object.__setattr__(self, "truth", _frozen(self.truth))
        object.__setattr__(self, "metadata", dict(self.metadata))

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.frames.shape[1:]

    def with_steps(self, steps) -> "FringeStack":
        return FringeStack(self.frames, steps, self.truth, self.metadata)


def parse_scene_name(name: str) -> tuple[str, float]:
    """Resolve ``"tilt-8"``, ``"sphere-4"``, ``"peaks"`` or ``"<kind>-<fringes>"``."""
    if name in CANONICAL_SCENES:
        return CANONICAL_SCENES[name]
    kind, sep, count = name.partition("-")
    if kind not in SCENE_KINDS:
        raise InvalidInputError(f"unknown scene {name!r}; kinds are {SCENE_KINDS}")
    if not sep:
        return CANONICAL_SCENES.get(kind, (kind, 8.0))
    try:
        return kind, float(count)
    except ValueError:
        raise InvalidInputError(f"bad fringe count in scene name {name!r}") from None


def _peaks(x, y):
    return (
        3 * (1 - x) ** 2 * np.exp(-(x**2) - (y + 1) ** 2)
        - 10 * (x / 5 - x**3 - y**5) * np.exp(-(x**2) - y**2)
        - np.exp(-((x + 1) ** 2) - y**2) / 3
    )


def make_scene(
    kind: str = "tilt",
    width: int = 256,
    height: int | None = None,
    fringes: float = 8.0,
    background=1.0,
    modulation=1.0,
    aperture: bool | None = None,
) -> Scene:
    """Build a scene whose phase spans ``fringes`` full 2pi cycles.

    kind
        ``tilt``: phase 2*pi*F*x/width along columns.
        ``sphere``: 2*pi*F*(r/R)**2 about the image centre, R being the
        radius of the inscribed pupil, so F whole cycles fit from centre to
        rim.  Corners outside the pupil exceed 2*pi*F.
        ``peaks``: the classic three-lobe surface on [-3, 3]^2 riding on a
        unit tilt carrier (relief weight ``PEAKS_RELIEF``), scaled the same way.
    background, modulation
        Scalars or arrays of shape (height, width).
    aperture
        Multiply the modulation by the inscribed circular pupil.  Defaults to
        on for ``sphere`` only: over a disk r**2 is uniformly distributed, so
        the wrapped phase covers the circle evenly, which the plain-PCA axis
        correction relies on.
    """
    if kind in CANONICAL_SCENES:
        kind, fringes = CANONICAL_SCENES[kind]
    height = width if height is None else height
    if int(width) != width or int(height) != height or width < 2 or height < 2:
        raise InvalidInputError(f"scene dimensions must be integers >= 2, got {height}x{width}")
    if fringes < 0:
        raise InvalidInputError("fringe count must be >= 0")
    width, height = int(width), int(height)
    shape = (height, width)
    if np.any(np.asarray(modulation) < 0):
        raise InvalidInputError("modulation must be non-negative")

    y, x = np.mgrid[0:height, 0:width].astype(np.float64)
    r2 = (x - (width - 1) / 2) ** 2 + (y - (height - 1) / 2) ** 2
    pupil_r2 = (min(width, height) / 2) ** 2
    span = 2 * np.pi * fringes
    if kind == "tilt":
        phi = span * x / width
    elif kind == "sphere":
        # integer cycles at the rim keep the pupil's phase coverage uniform
        phi = span * r2 / pupil_r2
    elif kind == "peaks":
        relief = _peaks(6 * x / (width - 1) - 3, 6 * y / (height - 1) - 3)
        surf = x / width + PEAKS_RELIEF * (relief - relief.min()) / np.ptp(relief)
        phi = span * (surf - surf.min()) / np.ptp(surf)
    else:
        raise InvalidInputError(f"unknown scene kind {kind!r}; choose from {SCENE_KINDS}")

    a = np.broadcast_to(np.asarray(background, dtype=np.float64), shape)
    b = np.broadcast_to(np.asarray(modulation, dtype=np.float64), shape)
    if aperture if aperture is not None else kind == "sphere":
        b = b * (r2 <= pupil_r2)
    return Scene(a, b, phi, kind=kind, fringes=float(fringes))


def _frame(scene: Scene, theta_n: float, n: int, harmonics: HarmonicSpec, noise: NoiseSpec):
    a, b, phi = scene.background, scene.modulation, scene.phase
    frame = a + b * np.cos(phi + theta_n)
    for k, bk in harmonics.terms:
        frame = frame + b * bk * np.cos(k * phi + k * theta_n)
    if noise.eta > 0:
        # one stream per (seed, frame); row-major draw order fixes the pixel mapping
        rng = np.random.default_rng(np.random.SeedSequence([noise.seed, n]))
        frame = frame + np.sqrt(noise.eta) * rng.standard_normal(scene.shape)
    return frame


def sample_fringes(
    scene: Scene,
    steps,
    harmonics: HarmonicSpec | Iterable = (),
    noise: NoiseSpec | None = None,
    threads: int = 1,
) -> FringeStack:
    if not isinstance(steps, PhaseSteps):
        steps = PhaseSteps(steps)
    if not isinstance(harmonics, HarmonicSpec):
        harmonics = HarmonicSpec(tuple(harmonics))
    noise = noise or NoiseSpec()

    jobs = [(float(t) * OMEGA0, n) for n, t in enumerate(steps.theta)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            frames = list(pool.map(lambda j: _frame(scene, j[0], j[1], harmonics, noise), jobs))
    else:
        frames = [_frame(scene, t, n, harmonics, noise) for t, n in jobs]

    metadata = {
        "scene": scene.kind,
        "fringes": scene.fringes,
        "noise_eta": noise.eta,
        "noise_seed": noise.seed,
        "noise_model": "iid-gaussian-per-pixel-per-frame",
        "harmonics": [list(t) for t in harmonics.terms],
    }
    return FringeStack(np.stack(frames), steps, scene.phase, metadata)


def quantize(stack: FringeStack, bits: int = 8) -> FringeStack:
    """Map the stack's global intensity range onto 2**bits integer levels."""
    if bits < 1 or bits > 16:
        raise InvalidInputError("quantization depth must be 1..16 bits")
    f = stack.frames
    lo, hi = float(f.min()), float(f.max())
    levels = 2**bits - 1
    q = np.zeros_like(f) if hi == lo else np.round((f - lo) / (hi - lo) * levels)
    meta = dict(stack.metadata, quantize_bits=bits)
    return FringeStack(q, stack.steps, stack.truth, meta)


def uniform_steps(n: int) -> np.ndarray:
    return 2 * np.pi * np.arange(n) / n


def as_step_list(values: Sequence[float] | str) -> np.ndarray:
    """Parse ``"0,1.49,5.13"`` (or pass through a sequence) into an array."""
    if isinstance(values, str):
        try:
            values = [float(v) for v in values.replace(" ", "").split(",") if v]
        except ValueError:
            raise InvalidInputError(f"cannot parse steps {values!r}") from None
    return np.asarray(values, dtype=np.float64)
