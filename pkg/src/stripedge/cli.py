"""Command-line interface.

Subcommands::

    detect-static      smooth once, then place strips
    detect-update      re-smooth after every n_max strips
    validate-identity  energy identity on random strips of an image
    validate-expansion measured vs predicted energy change on a smooth field
    validate-tensor    polarization tensor entries of a thin strip

Lengths (``--eps``, ``--delta``) are given in pixels and converted with
``--h``.
"""
from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import detector, validation
from .functional import Params, write_trace
from .geometry import write_strips
from .grid import Grid, SolverConfig, SolverError
from .image_io import ImageFormatError, load_image, quantize, save_field, save_mask, save_pgm

DEFAULTS_NOTE = (
    "Defaults: alpha=8, beta=150, eps=3 and delta=2 pixels, kappa=0.1, "
    "intensity scale 255 (8-bit gray values)."
)


class _Stage(Exception):
    def __init__(self, stage: str, exc: Exception):
        super().__init__(f"{stage}: {exc}")


def _positive(kind):
    def parse(text):
        value = kind(text)
        if not value > 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return value
    return parse


def _kappa(text):
    value = float(text)
    if not 0 < value < 1:
        raise argparse.ArgumentTypeError(f"kappa must lie in the open interval (0,1), got {text}")
    return value


def _float_list(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _add_solver(p):
    p.add_argument("--cg-tol", type=_positive(float), default=1e-10,
                   help="relative CG residual (default: %(default)g)")
    p.add_argument("--cg-maxit", type=_positive(int), default=None,
                   help="CG iteration cap (default: 10 x node count)")


def _add_model(p, with_nmax: bool):
    p.add_argument("input", help="grayscale PGM or PNG image")
    p.add_argument("-o", "--output", default=".", help="output directory (default: %(default)s)")
    p.add_argument("--alpha", type=_positive(float), default=8.0,
                   help="smoothing weight (default: %(default)g)")
    p.add_argument("--beta", type=_positive(float), default=150.0,
                   help="edge-length weight (default: %(default)g)")
    p.add_argument("--eps", type=_positive(float), default=3.0,
                   help="strip half-length in pixels (default: %(default)g, i.e. 3h)")
    p.add_argument("--delta", type=_positive(float), default=2.0,
                   help="exclusion half-width in pixels, < eps (default: %(default)g, i.e. 2h)")
    p.add_argument("--kappa", type=_kappa, default=0.1,
                   help="diffusivity on edges, in (0,1) (default: %(default)g)")
    p.add_argument("--h", type=_positive(float), default=1.0,
                   help="pixel spacing (default: %(default)g)")
    p.add_argument("--intensity-scale", type=_positive(float), default=255.0,
                   help="factor applied to [0,1] intensities before solving (default: %(default)g)")
    if with_nmax:
        p.add_argument("--nmax", type=_positive(int), default=None,
                       help="strips per re-solve (default: about ten re-solves)")
    _add_solver(p)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stripedge", description=__doc__.split("\n")[0],
                                     epilog=DEFAULTS_NOTE)
    sub = parser.add_subparsers(dest="command", required=True)

    _add_model(sub.add_parser("detect-static", help="smooth once, then place strips",
                              epilog=DEFAULTS_NOTE), with_nmax=False)
    _add_model(sub.add_parser("detect-update", help="re-smooth every n_max strips",
                              epilog=DEFAULTS_NOTE), with_nmax=True)

    p = sub.add_parser("validate-identity", help="energy identity on random strips",
                       epilog=DEFAULTS_NOTE)
    _add_model(p, with_nmax=False)
    p.add_argument("--trials", type=_positive(int), default=20)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("validate-expansion",
                       help="measured vs predicted energy change for f = sin(pi x) sin(pi y)")
    p.add_argument("-o", "--output", default=".")
    p.add_argument("--alpha", type=_positive(float), default=0.1)
    p.add_argument("--kappa", type=_kappa, default=0.5)
    p.add_argument("--eps", type=_float_list, default=[0.05, 0.025, 0.0125],
                   help="comma-separated strip half-lengths (default: 0.05,0.025,0.0125)")
    p.add_argument("--point", type=_float_list, default=[0.5, 0.25], help="strip centre x,y")
    p.add_argument("--tangent", type=_float_list, default=[1.0, 0.0], help="strip tangent")
    p.add_argument("--cells", type=_positive(int), default=2,
                   help="elements across the strip half-width (default: %(default)s)")
    _add_solver(p)

    p = sub.add_parser("validate-tensor", help="polarization tensor of a strip")
    p.add_argument("-o", "--output", default=".")
    p.add_argument("--n", type=_positive(int), default=512, help="elements per side of the unit square")
    p.add_argument("--kappa", type=_kappa, default=0.1)
    p.add_argument("--eps", type=_float_list, default=None,
                   help="comma-separated half-lengths (default: 0.2,0.1,sqrt(1/n), "
                        "keeping those with eps^2 >= 1/n)")
    p.add_argument("--cg-tol", type=_positive(float), default=1e-8)
    p.add_argument("--cg-maxit", type=_positive(int), default=None)
    return parser


def _solver(args) -> SolverConfig:
    return SolverConfig(cg_tol=args.cg_tol, cg_maxit=args.cg_maxit)


def _params(args, parser, n_max=None) -> Params:
    if not args.delta < args.eps:
        parser.error(f"--delta must be smaller than --eps (0 < delta < eps), got "
                     f"delta={args.delta}, eps={args.eps}")
    return Params(alpha=args.alpha, beta=args.beta, eps=args.eps * args.h,
                  kappa=args.kappa, delta=args.delta * args.h, n_max=n_max)


def _load(args):
    try:
        return load_image(args.input, h=args.h)
    except (OSError, ImageFormatError, ValueError) as exc:
        raise _Stage("loading image", exc) from exc


def _outdir(path: str) -> str:
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise _Stage("creating output directory", exc) from exc
    return path


def _run_detect(args, parser) -> None:
    image = _load(args)
    if args.command == "detect-update":
        n_max = detector.choose_nmax(image.width, image.height, args.eps * args.h, args.h,
                                     override=args.nmax)
        params = _params(args, parser, n_max)
        run = detector.detect_updating
    else:
        params = _params(args, parser)
        run = detector.detect_static
    try:
        result = run(image, params, _solver(args), intensity_scale=args.intensity_scale)
    except SolverError as exc:
        raise _Stage("solving the smoothing PDE", exc) from exc
    except ValueError as exc:
        raise _Stage("detection", exc) from exc

    out = _outdir(args.output)
    try:
        mask = result.edges.raster
        save_mask(mask, mask.shape, os.path.join(out, "edges.pgm"))
        save_field(result.smoothed_pixels(), os.path.join(out, "smooth.pgm"))
        overlay = quantize(image.data)
        overlay[mask] = 255
        save_pgm(overlay, os.path.join(out, "overlay.pgm"))
        write_strips(result.strips, os.path.join(out, "strips.txt"))
        write_trace(result.trace, os.path.join(out, "trace.csv"))
    except OSError as exc:
        raise _Stage("writing outputs", exc) from exc
    print(f"{len(result.strips)} strips, {result.n_solves} PDE solve(s); outputs in {out}")


def _run_identity(args, parser) -> None:
    image = _load(args)
    params = _params(args, parser)
    try:
        trials = validation.random_identity_trials(
            image, params, args.trials, args.seed, _solver(args), args.intensity_scale)
    except (SolverError, ValueError) as exc:
        raise _Stage("energy identity check", exc) from exc
    out = _outdir(args.output)
    try:
        validation.write_identity_csv(trials, os.path.join(out, "identity.csv"))
    except OSError as exc:
        raise _Stage("writing outputs", exc) from exc
    worst = max(t.residual for t in trials)
    print(f"{len(trials)} trials, max relative residual {worst:.3e}")


def _run_expansion(args, parser) -> None:
    if len(args.point) != 2 or len(args.tangent) != 2:
        parser.error("--point and --tangent take two comma-separated numbers")
    tx, ty = args.tangent
    norm = math.hypot(tx, ty)
    if norm == 0:
        parser.error("--tangent must be non-zero")

    def f(x, y):
        return np.sin(np.pi * x) * np.sin(np.pi * y)

    try:
        report = validation.verify_expansion(
            f, tuple(args.point), (tx / norm, ty / norm), args.eps, args.alpha, args.kappa,
            _solver(args), cells_per_halfwidth=args.cells)
    except (SolverError, ValueError) as exc:
        raise _Stage("expansion check", exc) from exc
    out = _outdir(args.output)
    try:
        report.to_csv(os.path.join(out, "expansion.csv"))
    except OSError as exc:
        raise _Stage("writing outputs", exc) from exc
    print(report.table())


def _run_tensor(args, parser) -> None:
    grid = Grid.uniform(args.n, args.n, 1.0 / args.n)
    eps_list = args.eps
    if eps_list is None:
        # the thinnest representable strip has eps^2 = h
        eps_list = [e for e in (0.2, 0.1) if e * e >= grid.h] + [math.sqrt(grid.h)]
    estimates = []
    try:
        for eps in eps_list:
            estimates.append(validation.polarization_tensor(eps, args.kappa, grid, _solver(args)))
    except (SolverError, ValueError) as exc:
        raise _Stage("polarization estimate", exc) from exc
    out = _outdir(args.output)
    try:
        validation.write_tensor_csv(estimates, os.path.join(out, "tensor.csv"))
    except OSError as exc:
        raise _Stage("writing outputs", exc) from exc
    print(f"{'eps':>10} {'M tau.tau':>10} {'M n.n':>10}   (limits 1, {1 / args.kappa:g})")
    for e in estimates:
        print(f"{e.eps:10.5g} {e.m_tt:10.4f} {e.m_nn:10.4f}")


_COMMANDS = {
    "detect-static": _run_detect,
    "detect-update": _run_detect,
    "validate-identity": _run_identity,
    "validate-expansion": _run_expansion,
    "validate-tensor": _run_tensor,
}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        _COMMANDS[args.command](args, parser)
    except SystemExit as exc:
        return int(exc.code or 0)
    except _Stage as exc:
        print(f"stripedge: error: {exc}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run())
