"""Command-line entry point: ``npsa {synth,demod,analyze,compare}``.

Exit codes: 0 success, 2 bad input, 3 degenerate data, 4 I/O.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import fileio
from .demod import lissajous
from .errors import InvalidInputError, NpsaError, StackFormatError
from .fringe_synth import (
    STEP_PRESETS,
    HarmonicSpec,
    NoiseSpec,
    PhaseSteps,
    as_step_list,
    make_scene,
    parse_scene_name,
    quantize,
    sample_fringes,
)
from .pipeline import run_pca
from .report import base_report, comparison_rows, flatten
from .spectral import DEFAULT_K_MAX, DEFAULT_OMEGA_MAX, DEFAULT_OMEGA_STEP, frequency_grid, ftf

log = logging.getLogger("pca_npsa")

EXIT_OK, EXIT_INPUT, EXIT_DEGENERATE, EXIT_IO = 0, 2, 3, 4

CONFIG_KEYS = {
    "scene", "size", "width", "height", "fringes", "preset", "steps", "harmonics",
    "eta", "seed", "quantize", "background", "modulation", "output",
}


def read_config(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment. Unknown keys are errors."""
    cfg = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().lower().replace("-", "_")
        if not sep:
            raise InvalidInputError(f"{path}:{lineno}: expected key = value")
        if key not in CONFIG_KEYS:
            raise InvalidInputError(f"{path}:{lineno}: unknown config key {key!r}")
        cfg[key] = value.strip()
    return cfg


def parse_harmonics(items) -> HarmonicSpec:
    terms = []
    for item in items or ():
        for part in str(item).split(","):
            part = part.strip()
            if not part:
                continue
            k, sep, bk = part.partition(":")
            if not sep:
                raise InvalidInputError(f"harmonic must be K:AMPLITUDE, got {part!r}")
            try:
                terms.append((int(k), float(bk)))
            except ValueError:
                raise InvalidInputError(f"bad harmonic term {part!r}") from None
    return HarmonicSpec(tuple(terms))


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _input_info(path, stack) -> dict:
    n, h, w = stack.frames.shape
    return {"path": str(path), "sha256": fileio.file_digest(path), "frames": n, "height": h, "width": w}


def _resolve_steps(stack, cli_steps, required: bool):
    if cli_steps:
        steps = PhaseSteps(as_step_list(cli_steps))
        if len(steps) != stack.n_frames:
            raise InvalidInputError(f"{len(steps)} steps given for {stack.n_frames} frames")
        return steps, "cli"
    if stack.steps is not None:
        return stack.steps, "file"
    if required:
        raise InvalidInputError("steps required for FTF: the stack has none and --steps was not given")
    return None, None


def _emit_report(args, out: Path, name: str, report: dict) -> Path:
    if args.format == "csv":
        path = out / f"{name}.csv"
        report["outputs"]["report"] = path.name
        fileio.write_csv(path, ["key", "value"], flatten(report))
    else:
        path = out / f"{name}.json"
        report["outputs"]["report"] = path.name
        fileio.write_json(path, report)
    return path


def cmd_synth(args) -> int:
    cfg = read_config(args.config) if args.config else {}

    def pick(name, default=None):
        value = getattr(args, name, None)
        return value if value is not None else cfg.get(name, default)

    kind, fringes = parse_scene_name(pick("scene", "tilt-8"))
    if pick("fringes") is not None:
        fringes = float(pick("fringes"))
    size = int(pick("size", 256))
    width = int(pick("width", size))
    height = int(pick("height", width))
    scene = make_scene(
        kind,
        width,
        height,
        fringes,
        background=float(pick("background", 1.0)),
        modulation=float(pick("modulation", 1.0)),
    )

    preset, steps = pick("preset"), pick("steps")
    if preset is not None and steps is not None:
        raise InvalidInputError("give either --preset or --steps, not both")
    if steps is not None:
        steps = PhaseSteps(as_step_list(steps))
    else:
        steps = PhaseSteps.preset(preset or "paper3")

    harmonics = parse_harmonics(args.harmonic if args.harmonic else ([cfg["harmonics"]] if "harmonics" in cfg else []))
    seed = int(pick("seed", 0))
    noise = NoiseSpec(float(pick("eta", 0.0)), seed)
    stack = sample_fringes(scene, steps, harmonics, noise, threads=args.threads)
    bits = pick("quantize")
    if bits is not None:
        stack = quantize(stack, int(bits))

    output = pick("output")
    path = Path(output) if output else _out_dir(args) / "stack.npsa"
    path.parent.mkdir(parents=True, exist_ok=True)
    fileio.write_stack(path, stack)
    log.info("wrote %s (%d frames, %dx%d)", path, stack.n_frames, height, width)
    print(path)
    return EXIT_OK


def cmd_demod(args) -> int:
    stack = fileio.read_stack(args.stack)
    steps, source = _resolve_steps(stack, args.steps, required=False)
    result = run_pca(stack, steps, threads=args.threads)
    out = _out_dir(args)
    mode = args.mode
    A = result.analytic(mode)
    ph = result.phase(mode)

    report = base_report("demod", _input_info(args.stack, stack), None if steps is None else steps.theta, source, result)
    rows, checks = comparison_rows(stack, result, None if steps is None else steps.theta)
    report["rows"] = [r for r in rows if r["method"] == mode]
    outputs = report["outputs"]
    outputs["phase"] = fileio.write_phase_binary(out / f"phase_{mode}.f64", ph).name
    outputs["preview"] = fileio.write_pgm(out / f"phase_{mode}.pgm", ph).name
    outputs["lissajous"] = fileio.write_lissajous_csv(out / f"lissajous_{mode}.csv", lissajous(A, args.max_points)).name
    outputs["covariance"] = fileio.write_matrix_csv(out / "covariance.csv", result.basis.covariance).name
    eig = np.column_stack([result.basis.eigenvalues, result.basis.eigenvectors.T])
    outputs["eigenpairs"] = fileio.write_csv(
        out / "eigenpairs.csv",
        ["eigenvalue"] + [f"v{j}" for j in range(eig.shape[1] - 1)],
        ([float(v) for v in row] for row in eig),
    ).name
    print(_emit_report(args, out, f"demod_{mode}", report))
    return EXIT_OK


def cmd_analyze(args) -> int:
    stack = fileio.read_stack(args.stack)
    steps, source = _resolve_steps(stack, args.steps, required=True)
    result = run_pca(stack, steps, threads=args.threads)
    out = _out_dir(args)
    grid = frequency_grid(args.omega_max, args.omega_step)
    modes = ("plain", "corrected") if args.mode == "both" else (args.mode,)

    report = base_report("analyze", _input_info(args.stack, stack), steps.theta, source, result)
    rows, checks = comparison_rows(stack.with_steps(steps), result, steps.theta, args.k_max)
    report["rows"] = [r for r in rows if r["method"] in modes]
    report["checks"] = checks if len(modes) == 2 else {}
    for mode in modes:
        rep = ftf(result.coefficients(mode), steps, grid, k_max=args.k_max)
        name = f"spectrum_{mode}.csv"
        fileio.write_spectrum_csv(out / name, rep.omega, rep.H)
        report["outputs"][f"spectrum_{mode}"] = name
        ftf_json = dict(rep.scalars(), mode=mode, normalized_by="|H(+1)|")
        fileio.write_json(out / f"ftf_{mode}.json", ftf_json)
        report["outputs"][f"ftf_{mode}"] = f"ftf_{mode}.json"
    print(_emit_report(args, out, "analyze", report))
    return EXIT_OK


def cmd_compare(args) -> int:
    stack = fileio.read_stack(args.stack)
    steps, source = _resolve_steps(stack, args.steps, required=True)
    stack = stack.with_steps(steps)
    result = run_pca(stack, steps, threads=args.threads)
    out = _out_dir(args)
    report = base_report("compare", _input_info(args.stack, stack), steps.theta, source, result)
    report["rows"], report["checks"] = comparison_rows(stack, result, steps.theta, args.k_max)
    for name, ok in report["checks"].items():
        if not ok:
            log.warning("check failed: %s", name)
    print(_emit_report(args, out, "compare", report))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="noise seed (synth)")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--out-dir", default=".")
    common.add_argument("--format", choices=("csv", "json"), default="json", help="report format")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="npsa", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common], help="synthesise a fringe stack")
    p.add_argument("--config", help="key = value config file; flags override it")
    p.add_argument("--scene", help="tilt-8, sphere-4, peaks or <kind>-<fringes>")
    p.add_argument("--size", type=int)
    p.add_argument("--width", type=int)
    p.add_argument("--height", type=int)
    p.add_argument("--fringes", type=float)
    p.add_argument("--preset", choices=sorted(STEP_PRESETS))
    p.add_argument("--steps", help="comma-separated phase steps in radians")
    p.add_argument("--harmonic", action="append", help="K:AMPLITUDE, repeatable")
    p.add_argument("--eta", type=float, help="AWGN variance per pixel per frame")
    p.add_argument("--quantize", type=int, choices=(8,), help="quantise intensities to 8 bits")
    p.add_argument("--background", type=float)
    p.add_argument("--modulation", type=float)
    p.add_argument("-o", "--output", help="output stack path (default OUT_DIR/stack.npsa)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("demod", parents=[common], help="PCA-demodulate a stack")
    p.add_argument("stack")
    p.add_argument("--mode", choices=("plain", "corrected"), default="corrected")
    p.add_argument("--steps", help="override/supply phase steps")
    p.add_argument("--max-points", type=int, default=4096, help="Lissajous subsample size")
    p.set_defaults(func=cmd_demod)

    p = sub.add_parser("analyze", parents=[common], help="FTF, SNR gain and harmonic robustness")
    p.add_argument("stack")
    p.add_argument("--mode", choices=("plain", "corrected", "both"), default="both")
    p.add_argument("--steps")
    p.add_argument("--omega-max", type=float, default=DEFAULT_OMEGA_MAX)
    p.add_argument("--omega-step", type=float, default=DEFAULT_OMEGA_STEP)
    p.add_argument("--k-max", type=int, default=DEFAULT_K_MAX)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("compare", parents=[common], help="plain vs corrected vs least squares")
    p.add_argument("stack")
    p.add_argument("--steps")
    p.add_argument("--k-max", type=int, default=DEFAULT_K_MAX)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args)
    except NpsaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
